"""Scenario files: flat ``key = value`` lines with dotted keys and ``#`` comments.

Every key has a default, so an empty file is a complete scenario. Unknown
keys are rejected to catch typos. Trays are declared as
``trays.<id>.mass_g`` / ``trays.<id>.location``; declaring any tray replaces
the default single 150 g tray.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

from .controller import ControllerConfig, MissionState
from .drive_logic import STEP_ANGLES, check_buffer_voltage
from .motors import TIME_EPS, DcMotorModel, StepperModel
from .plant import (
    BacklashConfig,
    Place,
    PlantConfig,
    Station,
    StationId,
    Tray,
    World,
    new_world,
)
from .rng import MASK64


class ConfigError(ValueError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


DEFAULTS: dict[str, object] = {
    "dt": 0.1,
    "max_ticks": 20000,
    "bake_duration": 30.0,
    "arm.start_angle_deg": 0,
    "base.target_speed_mm_s": 100.0,
    "base.time_constant_s": 0.0,
    "base.efficiency": 0.775,
    "base.drag_constant_n": 0.05,
    "stepper.max_step_rate": 2.0,
    "stepper.rated_power_w": 10.0,
    "stepper.holding_torque_nm": 5.0,
    "gripper.coil_volts": 12.0,
    "gripper.coil_resistance_ohm": 24.0,
    "gripper.payload_limit_g": 200.0,
    "stations.table.position_mm": 0.0,
    "stations.table.arm_angle_deg": 90,
    "stations.table.tolerance_mm": 5.0,
    "stations.furnace_port.position_mm": 1000.0,
    "stations.furnace_port.arm_angle_deg": 270,
    "stations.furnace_port.tolerance_mm": 5.0,
    "furnace.opening_in": 12.0,
    "backlash.enabled": False,
    "backlash.seed": 0,
    "backlash.probability": 0.7,
    "backlash.offset_deg": 5.0,
    "robot.length_in": 21.0,
    "robot.height_in": 17.0,
    "robot.width_in": 10.0,
    # unset: each phase gets 10x its expected duration
    "controller.watchdog_ticks": None,
}

WATCHDOG_FACTOR = 10

DEFAULT_TRAYS = (Tray("tray1", 150.0, Place.TABLE),)


@dataclass(frozen=True)
class RobotDimensions:
    length_in: float = 21.0
    height_in: float = 17.0
    width_in: float = 10.0


@dataclass(frozen=True)
class Scenario:
    dt: float = 0.1
    max_ticks: int = 20000
    bake_duration: float = 30.0
    start_arm_angle: int = 0
    dc_motor: DcMotorModel = DcMotorModel(time_constant=0.0)
    stepper: StepperModel = StepperModel()
    stations: tuple[Station, ...] = PlantConfig().stations
    trays: tuple[Tray, ...] = DEFAULT_TRAYS
    coil_volts: float = 12.0
    coil_resistance: float = 24.0
    payload_limit_g: float = 200.0
    furnace_opening_in: float = 12.0
    backlash: BacklashConfig = BacklashConfig()
    robot: RobotDimensions = RobotDimensions()
    watchdog_ticks: int | None = None

    def station(self, station_id: StationId) -> Station:
        return next(st for st in self.stations if st.id is station_id)

    def plant_config(self) -> PlantConfig:
        return PlantConfig(
            stations=self.stations,
            dc_motor=self.dc_motor,
            stepper=self.stepper,
            bake_duration=self.bake_duration,
            payload_limit_g=self.payload_limit_g,
            coil_volts=self.coil_volts,
            coil_resistance=self.coil_resistance,
            backlash=self.backlash,
        )

    def controller_config(self) -> ControllerConfig:
        return ControllerConfig(
            table_angle=self.station(StationId.TABLE).arm_angle,
            furnace_angle=self.station(StationId.FURNACE_PORT).arm_angle,
            gripper_volts=self.coil_volts,
            **self._watchdogs(),
        )

    def expected_phase_ticks(self) -> dict[MissionState, int]:
        """Fault-free duration of each timed phase, in ticks, for this scenario."""
        dt = self.dt
        step_ticks = math.ceil(self.stepper.step_period / dt - TIME_EPS)
        table = self.station(StationId.TABLE)
        port = self.station(StationId.FURNACE_PORT)

        # each backlash miss costs a step away and a step back
        retry_ticks = 0
        p = self.backlash.probability
        if self.backlash.enabled and p > 0:
            retry_ticks = math.ceil((1 - p) / p * 2 * step_ticks)

        def align(start: int, target: int) -> int:
            steps = min((target - start) % 360, (start - target) % 360) // 90
            return 1 + max(steps - 1, 0) * step_ticks + retry_ticks

        distance = abs(port.base_position - table.base_position)
        settle = 5 * self.dc_motor.time_constant
        travel = math.ceil((distance / self.dc_motor.target_speed + settle) / dt - TIME_EPS) + 1
        return {
            MissionState.ALIGN_ARM_TO_TABLE: align(self.start_arm_angle, table.arm_angle),
            MissionState.PICK_FROM_TABLE: 1,
            MissionState.TRANSPORT_TO_FURNACE: travel,
            MissionState.ALIGN_ARM_TO_FURNACE: align(table.arm_angle, port.arm_angle),
            MissionState.PLACE_IN_FURNACE: 1,
            MissionState.WAIT_BAKE: math.ceil(self.bake_duration / dt - TIME_EPS) + 1,
            MissionState.RETRIEVE_FROM_FURNACE: 1,
            MissionState.TRANSPORT_TO_TABLE: travel,
            MissionState.ALIGN_ARM_TO_TABLE_RETURN: align(port.arm_angle, table.arm_angle),
            MissionState.PLACE_ON_TABLE: 1,
        }

    def _watchdogs(self) -> dict:
        if self.watchdog_ticks is not None:
            return {"watchdog_ticks": self.watchdog_ticks}
        phases = {m: WATCHDOG_FACTOR * n for m, n in self.expected_phase_ticks().items()}
        return {"watchdog_ticks": max(phases.values()), "phase_watchdog": phases}

    def initial_world(self) -> World:
        return new_world(self.plant_config(), self.trays, arm_angle=self.start_arm_angle)

    def with_seed(self, seed: int) -> Scenario:
        _check_seed("backlash.seed", seed)
        return dataclasses.replace(self, backlash=dataclasses.replace(self.backlash, seed=seed))


def _parse_value(raw: str) -> object:
    text = raw.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_document(text: str) -> dict[str, object]:
    """Split a scenario document into a flat {dotted.key: value} mapping."""
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}", "expected 'key = value'")
        if key in values:
            raise ConfigError(key, f"duplicate key (line {lineno})")
        values[key] = _parse_value(raw)
    return values


def _coerce(key: str, value: object, default: object) -> object:
    if default is None or (isinstance(default, int) and not isinstance(default, bool)):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, "must be an integer")
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(key, "must be true or false")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, "must be a number")
    return float(value)


def _check_seed(key: str, seed: int) -> None:
    if not 0 <= seed <= MASK64:
        raise ConfigError(key, "must be an unsigned 64-bit integer")


def _positive(values: dict, key: str) -> None:
    if not values[key] > 0:
        raise ConfigError(key, "must be positive")


def _trays(tray_values: dict[str, dict[str, object]]) -> tuple[Tray, ...]:
    trays = []
    for tray_id in sorted(tray_values):
        fields = tray_values[tray_id]
        prefix = f"trays.{tray_id}"
        unknown = set(fields) - {"mass_g", "location"}
        if unknown:
            raise ConfigError(f"{prefix}.{sorted(unknown)[0]}", "unknown key")
        if "mass_g" not in fields:
            raise ConfigError(f"{prefix}.mass_g", "required")
        mass = _coerce(f"{prefix}.mass_g", fields["mass_g"], 0.0)
        if not mass > 0:
            raise ConfigError(f"{prefix}.mass_g", "must be positive")
        location = str(fields.get("location", "table"))
        if location not in ("table", "furnace"):
            raise ConfigError(f"{prefix}.location", "must be 'table' or 'furnace'")
        trays.append(Tray(tray_id, mass, Place(location)))
    if sum(t.location is Place.FURNACE for t in trays) > 1:
        raise ConfigError("trays", "at most one tray can start in the furnace")
    return tuple(trays)


def load_scenario(text: str) -> Scenario:
    raw = parse_document(text)
    values = dict(DEFAULTS)
    tray_values: dict[str, dict[str, object]] = {}
    for key, value in raw.items():
        if key.startswith("trays."):
            parts = key.split(".")
            if len(parts) != 3 or not parts[1]:
                raise ConfigError(key, "tray keys look like trays.<id>.mass_g")
            tray_values.setdefault(parts[1], {})[parts[2]] = value
        elif key in DEFAULTS:
            values[key] = _coerce(key, value, DEFAULTS[key])
        elif key.startswith("stations."):
            raise ConfigError(key, "stations are 'table' and 'furnace_port' only")
        else:
            raise ConfigError(key, "unknown key")

    if values["controller.watchdog_ticks"] is not None:
        _positive(values, "controller.watchdog_ticks")
    for key in ("dt", "max_ticks", "bake_duration",
                "gripper.coil_resistance_ohm", "gripper.payload_limit_g",
                "robot.length_in", "robot.height_in", "robot.width_in"):
        _positive(values, key)
    if values["arm.start_angle_deg"] not in STEP_ANGLES:
        raise ConfigError("arm.start_angle_deg", f"must be one of {STEP_ANGLES}")
    coil = values["gripper.coil_volts"]
    if coil < 0:
        raise ConfigError("gripper.coil_volts", "must be non-negative")
    if check_buffer_voltage(coil) is not None:
        raise ConfigError("gripper.coil_volts", "exceeds the 15 V buffer input limit")
    if not values["furnace.opening_in"] > values["robot.width_in"]:
        raise ConfigError("furnace.opening_in", "must exceed the robot width")
    if not 0 <= values["backlash.probability"] <= 1:
        raise ConfigError("backlash.probability", "must be within [0, 1]")
    if values["backlash.offset_deg"] < 0:
        raise ConfigError("backlash.offset_deg", "must be non-negative")
    _check_seed("backlash.seed", values["backlash.seed"])

    stations = []
    for sid in StationId:
        prefix = f"stations.{sid.value}"
        angle = values[f"{prefix}.arm_angle_deg"]
        if angle not in STEP_ANGLES:
            raise ConfigError(f"{prefix}.arm_angle_deg", f"must be one of {STEP_ANGLES}")
        if values[f"{prefix}.tolerance_mm"] < 0:
            raise ConfigError(f"{prefix}.tolerance_mm", "must be non-negative")
        stations.append(
            Station(sid, values[f"{prefix}.position_mm"], angle, values[f"{prefix}.tolerance_mm"])
        )
    table, port = stations
    if abs(port.base_position - table.base_position) <= table.tolerance + port.tolerance:
        raise ConfigError("stations.furnace_port.position_mm", "overlaps the table station")

    model_fields = {
        "base.target_speed_mm_s": "target_speed",
        "base.time_constant_s": "time_constant",
        "base.efficiency": "efficiency",
        "base.drag_constant_n": "drag_constant",
    }
    for key, attr in model_fields.items():
        try:
            DcMotorModel(**{attr: values[key]})
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from None
    dc_motor = DcMotorModel(*(values[k] for k in model_fields))
    for key in ("stepper.max_step_rate", "stepper.rated_power_w", "stepper.holding_torque_nm"):
        _positive(values, key)
    stepper = StepperModel(
        values["stepper.max_step_rate"],
        values["stepper.rated_power_w"],
        values["stepper.holding_torque_nm"],
    )

    return Scenario(
        dt=values["dt"],
        max_ticks=values["max_ticks"],
        bake_duration=values["bake_duration"],
        start_arm_angle=values["arm.start_angle_deg"],
        dc_motor=dc_motor,
        stepper=stepper,
        stations=tuple(stations),
        trays=_trays(tray_values) if tray_values else DEFAULT_TRAYS,
        coil_volts=coil,
        coil_resistance=values["gripper.coil_resistance_ohm"],
        payload_limit_g=values["gripper.payload_limit_g"],
        furnace_opening_in=values["furnace.opening_in"],
        backlash=BacklashConfig(
            values["backlash.enabled"],
            values["backlash.probability"],
            values["backlash.offset_deg"],
            values["backlash.seed"],
        ),
        robot=RobotDimensions(
            values["robot.length_in"], values["robot.height_in"], values["robot.width_in"]
        ),
        watchdog_ticks=values["controller.watchdog_ticks"],
    )


def load_scenario_file(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), exc.strerror or "unreadable") from None
    return load_scenario(text)
