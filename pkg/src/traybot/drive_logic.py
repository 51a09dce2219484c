"""Logic-level codecs for the base H-bridge and the arm stepper driver.

Everything here is a pure function over immutable values. The controller
emits these line patterns and the plant decodes them, so both truth tables
sit on the simulated controller-to-plant wire.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum

# Gate inputs of the 4049/4050 buffers tolerate up to +15 V (inclusive).
BUFFER_MAX_VOLTS = 15.0

STEP_ANGLES = (0, 90, 180, 270)


class NotAStepAngle(ValueError):
    pass


class InvalidPhase(ValueError):
    pass


class LogicLevel(IntEnum):
    LOW = 0
    HIGH = 1


class DriveCommand(Enum):
    FORWARD = "Forward"
    REVERSE = "Reverse"
    STOP = "Stop"


class StepDirection(Enum):
    CLOCKWISE = "CW"
    COUNTERCLOCKWISE = "CCW"

    @property
    def sign(self) -> int:
        return 1 if self is StepDirection.CLOCKWISE else -1


@dataclass(frozen=True)
class HBridgeInput:
    a: LogicLevel
    b: LogicLevel

    def __post_init__(self):
        # LogicLevel(2) raises ValueError, so only 0/1 get through.
        object.__setattr__(self, "a", LogicLevel(self.a))
        object.__setattr__(self, "b", LogicLevel(self.b))


@dataclass(frozen=True)
class StepperPhase:
    x: LogicLevel
    x_bar: LogicLevel
    y: LogicLevel
    y_bar: LogicLevel

    def __post_init__(self):
        for name in ("x", "x_bar", "y", "y_bar"):
            object.__setattr__(self, name, LogicLevel(getattr(self, name)))
        if self.x == self.x_bar or self.y == self.y_bar:
            raise InvalidPhase(
                f"lines must be complementary, got {self.lines()}"
            )

    def lines(self) -> tuple[int, int, int, int]:
        return (int(self.x), int(self.x_bar), int(self.y), int(self.y_bar))


class OverVoltage(Exception):
    """A buffer input above 15 V. Returned by the guard, raised by the plant."""

    def __init__(self, volts: float):
        super().__init__(f"{volts} V exceeds the {BUFFER_MAX_VOLTS} V buffer input limit")
        self.volts = volts

    def __eq__(self, other):
        return isinstance(other, OverVoltage) and other.volts == self.volts

    def __hash__(self):
        return hash(self.volts)


# Truth tables, in row order.
HBRIDGE_TABLE: tuple[tuple[int, int, DriveCommand], ...] = (
    (1, 0, DriveCommand.FORWARD),
    (0, 1, DriveCommand.REVERSE),
    (1, 1, DriveCommand.STOP),
    (0, 0, DriveCommand.STOP),
)

STEPPER_TABLE: tuple[tuple[tuple[int, int, int, int], int], ...] = (
    ((0, 1, 0, 1), 0),
    ((1, 0, 0, 1), 90),
    ((1, 0, 1, 0), 180),
    ((0, 1, 1, 0), 270),
)

_DECODE = {(a, b): cmd for a, b, cmd in HBRIDGE_TABLE}
_ENCODE = {
    DriveCommand.FORWARD: HBridgeInput(LogicLevel.HIGH, LogicLevel.LOW),
    DriveCommand.REVERSE: HBridgeInput(LogicLevel.LOW, LogicLevel.HIGH),
    # (1, 1) also means Stop but shorts a real bridge; never emitted.
    DriveCommand.STOP: HBridgeInput(LogicLevel.LOW, LogicLevel.LOW),
}
_PHASE_BY_ANGLE = {angle: StepperPhase(*lines) for lines, angle in STEPPER_TABLE}
_ANGLE_BY_LINES = {lines: angle for lines, angle in STEPPER_TABLE}


def decode_hbridge(inp: HBridgeInput) -> DriveCommand:
    return _DECODE[(int(inp.a), int(inp.b))]


def encode_drive(command: DriveCommand) -> HBridgeInput:
    return _ENCODE[command]


def phase_for_angle(angle) -> StepperPhase:
    try:
        return _PHASE_BY_ANGLE[angle]
    except (KeyError, TypeError):
        raise NotAStepAngle(f"{angle!r} is not one of {STEP_ANGLES}") from None


def angle_for_phase(phase: StepperPhase) -> int:
    return _ANGLE_BY_LINES[phase.lines()]


def phase_from_lines(x: int, x_bar: int, y: int, y_bar: int) -> StepperPhase:
    """Decode four raw wire levels, rejecting anything that is not a table row."""
    try:
        phase = StepperPhase(x, x_bar, y, y_bar)
    except ValueError as exc:
        raise InvalidPhase(f"{(x, x_bar, y, y_bar)} is not a stepper table row") from exc
    return phase


def next_phase(current: StepperPhase, direction: StepDirection) -> StepperPhase:
    angle = angle_for_phase(current)
    return _PHASE_BY_ANGLE[(angle + 90 * direction.sign) % 360]


def check_buffer_voltage(volts: float) -> OverVoltage | None:
    """Return None if `volts` is within the buffer's input rating, else the violation."""
    if volts < 0:
        raise ValueError(f"buffer voltage must be non-negative, got {volts}")
    if volts > BUFFER_MAX_VOLTS:
        return OverVoltage(volts)
    return None


def format_tables() -> str:
    lines = ["H-bridge", "A  B  FUNCTION"]
    for a, b, cmd in HBRIDGE_TABLE:
        lines.append(f"{a}  {b}  {cmd.value}")
    lines += ["", "Stepper", "X  X'  Y  Y'  ANGLE"]
    for (x, xb, y, yb), angle in STEPPER_TABLE:
        lines.append(f"{x}  {xb}   {y}  {yb}   {angle}")
    return "\n".join(lines)


def self_test() -> list[str]:
    """Exercise both codecs against the tables; return a list of failures."""
    failures = []
    for a, b, cmd in HBRIDGE_TABLE:
        got = decode_hbridge(HBridgeInput(a, b))
        if got is not cmd:
            failures.append(f"decode_hbridge({a}, {b}) = {got.value}, want {cmd.value}")
    for cmd in DriveCommand:
        enc = encode_drive(cmd)
        if decode_hbridge(enc) is not cmd:
            failures.append(f"encode/decode round trip broken for {cmd.value}")
        if (enc.a, enc.b) == (1, 1):
            failures.append(f"{cmd.value} encodes as shoot-through (1, 1)")
    for lines, angle in STEPPER_TABLE:
        phase = phase_for_angle(angle)
        if phase.lines() != lines:
            failures.append(f"phase_for_angle({angle}) = {phase.lines()}, want {lines}")
        if angle_for_phase(phase) != angle:
            failures.append(f"angle_for_phase({lines}) != {angle}")
        for direction in StepDirection:
            back = next_phase(next_phase(phase, direction), _reverse(direction))
            if back != phase:
                failures.append(f"step {direction.value} is not reversible at {angle}")
    return failures


def _reverse(direction: StepDirection) -> StepDirection:
    if direction is StepDirection.CLOCKWISE:
        return StepDirection.COUNTERCLOCKWISE
    return StepDirection.CLOCKWISE
