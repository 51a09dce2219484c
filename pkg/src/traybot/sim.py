"""Fixed-step loop wiring the mission controller to the plant."""

from __future__ import annotations

from dataclasses import dataclass, field

from .controller import (
    ActuatorCommand,
    ControllerState,
    MissionState,
    check_command,
    controller_tick,
)
from .plant import SensorFrame, World, check_transition, check_world, plant_tick, sense
from .scenario import Scenario
from .trace import TraceEvent

ENERGY_SAMPLE_EVERY = 100

EXIT_CODES = {"Done": 0, "Fault": 1, "TickLimit": 2}


class InvariantViolation(AssertionError):
    def __init__(self, tick: int, problems: list[str]):
        super().__init__(f"tick {tick}: " + "; ".join(problems))
        self.tick = tick
        self.problems = problems


@dataclass(frozen=True)
class Outcome:
    kind: str  # Done, Fault or TickLimit
    reason: str | None = None

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.kind]

    def __str__(self) -> str:
        return f"{self.kind}({self.reason})" if self.reason else self.kind


@dataclass
class RunResult:
    outcome: Outcome
    world: World
    ticks: int
    events: list[TraceEvent] = field(default_factory=list)
    frames: list[SensorFrame] = field(default_factory=list)
    decisions: list[tuple[ControllerState, ActuatorCommand]] = field(default_factory=list)

    def state_path(self) -> list[str]:
        path = [MissionState.IDLE.value]
        path += [e.payload["to"] for e in self.events if e.kind == "StateChange"]
        return path


def command_payload(cmd: ActuatorCommand) -> dict:
    return {
        "hbridge": {"a": int(cmd.hbridge.a), "b": int(cmd.hbridge.b)},
        "step": cmd.step_request.value if cmd.step_request else None,
        "gripper_volts": float(cmd.gripper_volts),
    }


def run(scenario: Scenario, *, check_invariants: bool = False) -> RunResult:
    """Simulate one mission until Done, Fault or the tick limit."""
    world = scenario.initial_world()
    config = scenario.controller_config()
    state = ControllerState()
    dt = scenario.dt
    result = RunResult(Outcome("TickLimit"), world, 0)
    events = result.events
    last_cmd = None

    if check_invariants:
        problems = check_world(world)
        if problems:
            raise InvariantViolation(-1, problems)

    for tick in range(scenario.max_ticks):
        clock = world.clock
        frame = sense(world)
        new_state, cmd = controller_tick(state, frame, config)
        result.frames.append(frame)
        result.decisions.append((new_state, cmd))

        if new_state.mission is not state.mission:
            events.append(TraceEvent(tick, clock, "StateChange",
                                     {"from": state.mission.value, "to": new_state.mission.value}))
            if new_state.fault is not None:
                events.append(TraceEvent(tick, clock, "Fault", {"reason": new_state.fault.value}))
        if cmd != last_cmd:
            events.append(TraceEvent(tick, clock, "Command", command_payload(cmd)))
            last_cmd = cmd

        new_world = plant_tick(world, cmd, dt)
        for ev in new_world.events:
            events.append(TraceEvent(tick, clock, ev.kind, dict(ev.payload)))
        if tick % ENERGY_SAMPLE_EVERY == 0:
            ledger = new_world.ledger
            events.append(TraceEvent(tick, clock, "EnergySample", {
                "total_j": ledger.total,
                "base_motor_j": ledger.base_motor,
                "stepper_j": ledger.stepper,
                "gripper_coil_j": ledger.gripper_coil,
            }))

        if check_invariants:
            problems = (
                check_world(new_world)
                + check_transition(world, cmd, new_world)
                + check_command(new_state.mission, cmd, config)
            )
            if problems:
                raise InvariantViolation(tick, problems)

        world, state = new_world, new_state
        result.ticks = tick + 1
        if state.mission is MissionState.DONE:
            result.outcome = Outcome("Done")
            break
        if state.mission is MissionState.FAULT:
            result.outcome = Outcome("Fault", state.fault.value)
            break

    result.world = world
    return result
