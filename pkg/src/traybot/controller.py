"""Mission controller for one pick, bake and return cycle.

Written the way firmware would be: a total function from (state, sensor
frame) to (state, raw actuator levels). Abnormal conditions become Fault
states, never exceptions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .drive_logic import (
    DriveCommand,
    HBridgeInput,
    StepDirection,
    decode_hbridge,
    encode_drive,
)
from .plant import SensorFrame, StationId


class MissionState(Enum):
    IDLE = "Idle"
    ALIGN_ARM_TO_TABLE = "AlignArmToTable"
    PICK_FROM_TABLE = "PickFromTable"
    TRANSPORT_TO_FURNACE = "TransportToFurnace"
    ALIGN_ARM_TO_FURNACE = "AlignArmToFurnace"
    PLACE_IN_FURNACE = "PlaceInFurnace"
    WAIT_BAKE = "WaitBake"
    RETRIEVE_FROM_FURNACE = "RetrieveFromFurnace"
    TRANSPORT_TO_TABLE = "TransportToTable"
    ALIGN_ARM_TO_TABLE_RETURN = "AlignArmToTableReturn"
    PLACE_ON_TABLE = "PlaceOnTable"
    DONE = "Done"
    FAULT = "Fault"


class FaultReason(Enum):
    TIMEOUT = "Timeout"
    PICK_FAILED = "PickFailed"
    DROPPED_TRAY = "DroppedTray"


S = MissionState

# The happy path, in order. Every other edge leads to FAULT.
MISSION_CHAIN = (
    S.IDLE,
    S.ALIGN_ARM_TO_TABLE,
    S.PICK_FROM_TABLE,
    S.TRANSPORT_TO_FURNACE,
    S.ALIGN_ARM_TO_FURNACE,
    S.PLACE_IN_FURNACE,
    S.WAIT_BAKE,
    S.RETRIEVE_FROM_FURNACE,
    S.TRANSPORT_TO_TABLE,
    S.ALIGN_ARM_TO_TABLE_RETURN,
    S.PLACE_ON_TABLE,
    S.DONE,
)
_NEXT = dict(zip(MISSION_CHAIN, MISSION_CHAIN[1:]))

# States in which the coil is driven: a tray is held or being acquired.
ENERGIZED_STATES = frozenset(
    {
        S.PICK_FROM_TABLE,
        S.TRANSPORT_TO_FURNACE,
        S.ALIGN_ARM_TO_FURNACE,
        S.RETRIEVE_FROM_FURNACE,
        S.TRANSPORT_TO_TABLE,
        S.ALIGN_ARM_TO_TABLE_RETURN,
    }
)
_PICK_STATES = frozenset({S.PICK_FROM_TABLE, S.RETRIEVE_FROM_FURNACE})
_NO_WATCHDOG = frozenset({S.IDLE, S.DONE, S.FAULT})

STOP = encode_drive(DriveCommand.STOP)


@dataclass(frozen=True)
class ActuatorCommand:
    hbridge: HBridgeInput = STOP
    step_request: StepDirection | None = None
    gripper_volts: float = 0.0


QUIET = ActuatorCommand()


@dataclass(frozen=True)
class ControllerConfig:
    pick_station: StationId = StationId.TABLE
    place_station: StationId = StationId.FURNACE_PORT
    table_angle: int = 90
    furnace_angle: int = 270
    watchdog_ticks: int = 3000
    gripper_volts: float = 12.0
    angle_tolerance: float = 1.0
    # per-phase limits; phases not listed fall back to watchdog_ticks
    phase_watchdog: dict = field(default_factory=dict)

    def __post_init__(self):
        limits = [self.watchdog_ticks, *self.phase_watchdog.values()]
        if not all(isinstance(n, int) and n > 0 for n in limits):
            raise ValueError(f"watchdog limits must be positive integers, got {limits}")

    def watchdog_for(self, mission: MissionState) -> int:
        return self.phase_watchdog.get(mission, self.watchdog_ticks)


@dataclass(frozen=True)
class ControllerState:
    mission: MissionState = S.IDLE
    phase_ticks: int = 0  # ticks spent in the current phase, for the watchdog
    fault: FaultReason | None = None


def _arm_at(angle: float, target: int, tol: float) -> bool:
    d = abs(angle - target) % 360
    return min(d, 360 - d) <= tol


def align_step(arm_angle: float, target: int, tol: float) -> StepDirection | None:
    """Next corrective step toward `target`, or None when already there.

    When the nearest step position is the target but the gears left it off
    by some slack, step away once; the following tick steps back.
    """
    nearest = round(arm_angle / 90) * 90 % 360
    if nearest == target:
        if _arm_at(arm_angle, target, tol):
            return None
        return StepDirection.COUNTERCLOCKWISE
    # ties (half a turn) go clockwise
    if (target - nearest) % 360 <= 180:
        return StepDirection.CLOCKWISE
    return StepDirection.COUNTERCLOCKWISE


def _phase_complete(mission: MissionState, frame: SensorFrame, config: ControllerConfig) -> bool:
    tol = config.angle_tolerance
    if mission is S.IDLE:
        return frame.start
    if mission is S.ALIGN_ARM_TO_TABLE or mission is S.ALIGN_ARM_TO_TABLE_RETURN:
        return _arm_at(frame.arm_angle, config.table_angle, tol)
    if mission is S.ALIGN_ARM_TO_FURNACE:
        return _arm_at(frame.arm_angle, config.furnace_angle, tol)
    if mission in _PICK_STATES:
        return frame.holding
    if mission is S.PLACE_IN_FURNACE or mission is S.PLACE_ON_TABLE:
        return not frame.holding
    if mission is S.TRANSPORT_TO_FURNACE:
        return frame.at_station.get(config.place_station.value, False)
    if mission is S.TRANSPORT_TO_TABLE:
        return frame.at_station.get(config.pick_station.value, False)
    if mission is S.WAIT_BAKE:
        return frame.furnace_done
    return False


def _output(mission: MissionState, frame: SensorFrame, config: ControllerConfig) -> ActuatorCommand:
    volts = config.gripper_volts if mission in ENERGIZED_STATES else 0.0
    if mission is S.ALIGN_ARM_TO_TABLE or mission is S.ALIGN_ARM_TO_TABLE_RETURN:
        step = align_step(frame.arm_angle, config.table_angle, config.angle_tolerance)
        return ActuatorCommand(STOP, step, volts)
    if mission is S.ALIGN_ARM_TO_FURNACE:
        step = align_step(frame.arm_angle, config.furnace_angle, config.angle_tolerance)
        return ActuatorCommand(STOP, step, volts)
    if mission is S.TRANSPORT_TO_FURNACE:
        return ActuatorCommand(encode_drive(DriveCommand.FORWARD), None, volts)
    if mission is S.TRANSPORT_TO_TABLE:
        return ActuatorCommand(encode_drive(DriveCommand.REVERSE), None, volts)
    if volts:
        return ActuatorCommand(STOP, None, volts)
    return QUIET


def controller_tick(
    state: ControllerState, frame: SensorFrame, config: ControllerConfig
) -> tuple[ControllerState, ActuatorCommand]:
    mission = state.mission
    if mission is S.DONE or mission is S.FAULT:
        return state, QUIET
    if frame.tray_dropped and mission is not S.IDLE:
        return ControllerState(S.FAULT, 0, FaultReason.DROPPED_TRAY), QUIET

    if _phase_complete(mission, frame, config):
        new = ControllerState(_NEXT[mission])
    else:
        ticks = state.phase_ticks + 1
        if mission not in _NO_WATCHDOG and ticks > config.watchdog_for(mission):
            reason = FaultReason.PICK_FAILED if mission in _PICK_STATES else FaultReason.TIMEOUT
            return ControllerState(S.FAULT, 0, reason), QUIET
        new = ControllerState(mission, ticks)
    return new, _output(new.mission, frame, config)


def mission_trace(
    initial: ControllerState, frames: Iterable[SensorFrame], config: ControllerConfig
) -> list[tuple[ControllerState, ActuatorCommand]]:
    out = []
    state = initial
    for frame in frames:
        state, command = controller_tick(state, frame, config)
        out.append((state, command))
    return out


def check_command(mission: MissionState, command: ActuatorCommand, config: ControllerConfig) -> list[str]:
    """Interlock and coil-discipline checks on one emitted command."""
    problems = []
    a, b = int(command.hbridge.a), int(command.hbridge.b)
    if (a, b) == (1, 1):
        problems.append("emitted shoot-through (1, 1) on the H-bridge")
    if command.step_request is not None and decode_hbridge(command.hbridge) is not DriveCommand.STOP:
        problems.append("arm step requested while the base is driven")
    want = config.gripper_volts if mission in ENERGIZED_STATES else 0.0
    if command.gripper_volts != want:
        problems.append(f"coil at {command.gripper_volts} V in {mission.value}")
    return problems
