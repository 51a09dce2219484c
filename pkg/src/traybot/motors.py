"""Actuator models: the geared DC drive of the base and the 90-degree arm stepper."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .drive_logic import (
    STEP_ANGLES,
    DriveCommand,
    NotAStepAngle,
    StepDirection,
    StepperPhase,
    phase_for_angle,
)

# Slack for float clocks built from repeated dt additions.
TIME_EPS = 1e-9


class InvalidTimestep(ValueError):
    pass


class NegativeSpeed(ValueError):
    pass


class RateLimited(Exception):
    """The stepper was asked to move before its minimum step interval elapsed."""


@dataclass(frozen=True)
class DcMotorModel:
    target_speed: float = 100.0  # mm/s at full drive, after gearing
    time_constant: float = 0.5  # s, first-order velocity lag
    efficiency: float = 0.775  # brushed motors run 75-80 %
    drag_constant: float = 0.05  # N, stand-in load so energy is nonzero

    def __post_init__(self):
        if not self.target_speed > 0:
            raise ValueError(f"target_speed must be positive, got {self.target_speed}")
        if not self.time_constant >= 0:
            raise ValueError(f"time_constant must be >= 0, got {self.time_constant}")
        if not 0 < self.efficiency <= 1:
            raise ValueError(f"efficiency must be in (0, 1], got {self.efficiency}")
        if not self.drag_constant >= 0:
            raise ValueError(f"drag_constant must be >= 0, got {self.drag_constant}")

    def target_velocity(self, command: DriveCommand) -> float:
        if command is DriveCommand.FORWARD:
            return self.target_speed
        if command is DriveCommand.REVERSE:
            return -self.target_speed
        return 0.0


@dataclass(frozen=True)
class DcMotorState:
    velocity: float = 0.0  # mm/s, positive is forward


@dataclass(frozen=True)
class StepperModel:
    max_step_rate: float = 2.0  # steps/s
    rated_power: float = 10.0  # W
    holding_torque: float = 5.0  # N*m
    step_angle: int = 90

    def __post_init__(self):
        if self.step_angle != 90:
            raise ValueError("the arm stepper is full-step only: step_angle must be 90")
        for name in ("max_step_rate", "rated_power", "holding_torque"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def step_period(self) -> float:
        return 1.0 / self.max_step_rate

    @property
    def step_energy(self) -> float:
        """Joules drawn per step: rated power over one step period."""
        return self.rated_power * self.step_period


@dataclass(frozen=True)
class EnergyLedger:
    base_motor: float = 0.0
    stepper: float = 0.0
    gripper_coil: float = 0.0

    @property
    def total(self) -> float:
        return self.base_motor + self.stepper + self.gripper_coil

    def add(self, base_motor=0.0, stepper=0.0, gripper_coil=0.0) -> EnergyLedger:
        if base_motor < 0 or stepper < 0 or gripper_coil < 0:
            raise ValueError("energy increments must be non-negative")
        return EnergyLedger(
            self.base_motor + base_motor,
            self.stepper + stepper,
            self.gripper_coil + gripper_coil,
        )


def dc_tick(
    state: DcMotorState, model: DcMotorModel, command: DriveCommand, dt: float
) -> tuple[DcMotorState, float, float]:
    """Advance the base motor by `dt` seconds.

    Uses the exact solution of the first-order lag, so the result does not
    depend on how an interval is split into ticks. Returns the new state,
    the displacement in mm and the electrical energy in J.
    """
    if not dt > 0:
        raise InvalidTimestep(f"dt must be positive, got {dt}")
    v0 = state.velocity
    vt = model.target_velocity(command)
    tau = model.time_constant
    if tau == 0:
        v1 = vt
        displacement = vt * dt
    else:
        decay = math.exp(-dt / tau)
        v1 = vt + (v0 - vt) * decay
        # integral of vt + (v0 - vt) * exp(-t / tau) over [0, dt]
        displacement = vt * dt + (v0 - vt) * tau * -math.expm1(-dt / tau)
    work = abs(displacement) / 1000.0 * model.drag_constant
    return DcMotorState(v1), displacement, work / model.efficiency


def torque_available(model: StepperModel, omega: float) -> float:
    """Constant-power torque curve P = omega * T, capped at the holding torque."""
    if omega < 0:
        raise NegativeSpeed(f"omega must be >= 0, got {omega}")
    if omega == 0:
        return model.holding_torque
    return min(model.rated_power / omega, model.holding_torque)


def stepper_step(
    current_angle: int,
    direction: StepDirection,
    last_step_time: float,
    now: float,
    model: StepperModel,
) -> tuple[int, StepperPhase]:
    if current_angle not in STEP_ANGLES:
        raise NotAStepAngle(f"{current_angle!r} is not one of {STEP_ANGLES}")
    if now - last_step_time < model.step_period - TIME_EPS:
        raise RateLimited(
            f"only {now - last_step_time:.6f} s since last step, need {model.step_period:.6f} s"
        )
    new_angle = (current_angle + model.step_angle * direction.sign) % 360
    return new_angle, phase_for_angle(new_angle)
