"""The simulated world: base on a linear track, one-joint arm, electromagnet, furnace.

A `World` is an immutable value. `plant_tick` consumes the raw logic levels
emitted by the controller and returns the next world, together with the plant
events (picks, releases, bake completions, drops) that happened in that tick.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

from . import rng
from .drive_logic import (
    STEP_ANGLES,
    DriveCommand,
    check_buffer_voltage,
    decode_hbridge,
)
from .motors import (
    TIME_EPS,
    DcMotorModel,
    DcMotorState,
    EnergyLedger,
    InvalidTimestep,
    RateLimited,
    StepperModel,
    dc_tick,
    stepper_step,
)

if TYPE_CHECKING:
    from .controller import ActuatorCommand


class StationId(Enum):
    TABLE = "table"
    FURNACE_PORT = "furnace_port"


class Place(Enum):
    TABLE = "table"
    FURNACE = "furnace"
    GRIPPER = "gripper"
    DROPPED = "dropped"


class BakeState(Enum):
    UNBAKED = "Unbaked"
    BAKING = "Baking"
    BAKED = "Baked"


_BAKE_ORDER = {BakeState.UNBAKED: 0, BakeState.BAKING: 1, BakeState.BAKED: 2}


class PickResult(Enum):
    OK = "ok"
    OVERLOAD = "overload"
    NOTHING_THERE = "nothing_there"
    # furnace door stays latched until the bake finishes
    STILL_BAKING = "still_baking"


@dataclass(frozen=True)
class Station:
    id: StationId
    base_position: float  # mm along the track
    arm_angle: int  # degrees, one of the four step angles
    tolerance: float = 5.0  # mm

    def __post_init__(self):
        if self.arm_angle not in STEP_ANGLES:
            raise ValueError(f"station {self.id.value}: arm angle {self.arm_angle} is not a step angle")
        if not self.tolerance >= 0:
            raise ValueError(f"station {self.id.value}: tolerance must be >= 0")


@dataclass(frozen=True)
class BacklashConfig:
    enabled: bool = False
    probability: float = 0.7  # chance a positioning lands exactly
    offset_deg: float = 5.0
    seed: int = 0


@dataclass(frozen=True)
class PlantConfig:
    stations: tuple[Station, ...] = (
        Station(StationId.TABLE, 0.0, 90),
        Station(StationId.FURNACE_PORT, 1000.0, 270),
    )
    dc_motor: DcMotorModel = DcMotorModel()
    stepper: StepperModel = StepperModel()
    bake_duration: float = 30.0  # s
    payload_limit_g: float = 200.0
    coil_volts: float = 12.0
    coil_resistance: float = 24.0  # ohm
    angle_tolerance: float = 1.0  # degrees, for pose matching
    backlash: BacklashConfig = BacklashConfig()

    def station(self, station_id: StationId) -> Station:
        for st in self.stations:
            if st.id is station_id:
                return st
        raise KeyError(station_id)


@dataclass(frozen=True)
class Tray:
    id: str
    mass_g: float
    location: Place
    bake: BakeState = BakeState.UNBAKED
    bake_elapsed: float = 0.0  # s spent in the furnace


@dataclass(frozen=True)
class BaseState:
    position: float = 0.0  # mm
    motor: DcMotorState = DcMotorState()


@dataclass(frozen=True)
class GripperState:
    coil_volts: float = 0.0
    holding: str | None = None


@dataclass(frozen=True)
class FurnaceState:
    bake_duration: float
    occupant: str | None = None
    done_signal: bool = False


@dataclass(frozen=True)
class PlantEvent:
    kind: str  # Pick, Release, BakeDone, DroppedTray
    payload: dict


@dataclass(frozen=True)
class World:
    config: PlantConfig
    base: BaseState
    arm_angle: int  # logical step angle, always quantized
    arm_offset: float  # gear backlash on top of the logical angle
    last_step_time: float
    gripper: GripperState
    furnace: FurnaceState
    trays: tuple[Tray, ...]
    ledger: EnergyLedger = EnergyLedger()
    clock: float = 0.0
    rng_state: int = 0
    start_signal: bool = True
    events: tuple[PlantEvent, ...] = ()

    def tray(self, tray_id: str) -> Tray:
        for t in self.trays:
            if t.id == tray_id:
                return t
        raise KeyError(tray_id)

    @property
    def actual_arm_angle(self) -> float:
        return (self.arm_angle + self.arm_offset) % 360


@dataclass(frozen=True)
class SensorFrame:
    at_station: dict = field(default_factory=dict)  # station id value -> bool
    arm_angle: float = 0.0
    holding: bool = False
    furnace_done: bool = False
    clock: float = 0.0
    start: bool = False
    tray_dropped: bool = False


def new_world(
    config: PlantConfig = PlantConfig(),
    trays: tuple[Tray, ...] = (Tray("tray1", 150.0, Place.TABLE),),
    *,
    arm_angle: int = 0,
    position: float | None = None,
    start_signal: bool = True,
) -> World:
    if arm_angle not in STEP_ANGLES:
        raise ValueError(f"initial arm angle {arm_angle} is not a step angle")
    if len({t.id for t in trays}) != len(trays):
        raise ValueError("tray ids must be unique")
    in_furnace = [t for t in trays if t.location is Place.FURNACE]
    if len(in_furnace) > 1:
        raise ValueError("the furnace holds a single tray")
    if any(t.location not in (Place.TABLE, Place.FURNACE) for t in trays):
        raise ValueError("trays start on the table or in the furnace")
    trays = tuple(
        dataclasses.replace(t, bake=BakeState.BAKING)
        if t.location is Place.FURNACE and t.bake is BakeState.UNBAKED
        else t
        for t in trays
    )
    if position is None:
        position = config.station(StationId.TABLE).base_position
    occupant = in_furnace[0].id if in_furnace else None
    world = World(
        config=config,
        base=BaseState(position),
        arm_angle=arm_angle,
        arm_offset=0.0,
        last_step_time=float("-inf"),
        gripper=GripperState(),
        furnace=FurnaceState(config.bake_duration, occupant),
        trays=trays,
        rng_state=config.backlash.seed,
        start_signal=start_signal,
    )
    return dataclasses.replace(world, furnace=_furnace_signal(world.furnace, trays))


def _angle_close(a: float, b: float, tol: float) -> bool:
    d = abs(a - b) % 360
    return min(d, 360 - d) <= tol


def _at(world: World, station: Station) -> bool:
    return abs(world.base.position - station.base_position) <= station.tolerance


def matching_station(world: World) -> Station | None:
    """The station whose position and arm angle both match the current pose."""
    for st in world.config.stations:
        if _at(world, st) and _angle_close(
            world.actual_arm_angle, st.arm_angle, world.config.angle_tolerance
        ):
            return st
    return None


def sense(world: World) -> SensorFrame:
    cfg = world.config
    return SensorFrame(
        at_station={st.id.value: _at(world, st) for st in cfg.stations},
        arm_angle=world.actual_arm_angle,
        holding=world.gripper.holding is not None,
        furnace_done=world.furnace.done_signal,
        clock=world.clock,
        start=world.start_signal,
        tray_dropped=any(t.location is Place.DROPPED for t in world.trays),
    )


def apply_backlash(
    requested_angle: int, rng_state: int, backlash: BacklashConfig
) -> tuple[float, int]:
    """Draw the gear slack for one positioning; return (offset_deg, new_rng_state).

    One uniform draw u per positioning: u < probability lands exactly, the
    rest of the unit interval is split evenly between +offset and -offset.
    """
    if requested_angle not in STEP_ANGLES:
        raise ValueError(f"{requested_angle} is not a step angle")
    if not backlash.enabled:
        return 0.0, rng_state
    rng_state, u = rng.next_unit(rng_state)
    p = backlash.probability
    if u < p:
        return 0.0, rng_state
    if u < p + (1.0 - p) / 2:
        return backlash.offset_deg, rng_state
    return -backlash.offset_deg, rng_state


def _replace_tray(trays: tuple[Tray, ...], new: Tray) -> tuple[Tray, ...]:
    return tuple(new if t.id == new.id else t for t in trays)


def _furnace_signal(furnace: FurnaceState, trays: tuple[Tray, ...]) -> FurnaceState:
    done = False
    if furnace.occupant is not None:
        for t in trays:
            if t.id == furnace.occupant:
                done = t.bake is BakeState.BAKED
    if done == furnace.done_signal:
        return furnace
    return dataclasses.replace(furnace, done_signal=done)


def _capture(world: World, volts: float, report_failure: bool) -> tuple[World, PickResult]:
    """Energize the coil at `volts` and try to pull a tray at the current pose."""
    gripper = GripperState(volts, None)
    station = matching_station(world)
    candidate = None
    if station is None:
        result = PickResult.NOTHING_THERE
    elif station.id is StationId.TABLE:
        on_table = [t for t in world.trays if t.location is Place.TABLE]
        candidate = on_table[0] if on_table else None
        result = PickResult.OK if candidate else PickResult.NOTHING_THERE
    else:
        occ = world.furnace.occupant
        candidate = world.tray(occ) if occ is not None else None
        if candidate is None:
            result = PickResult.NOTHING_THERE
        elif candidate.bake is BakeState.BAKING:
            result = PickResult.STILL_BAKING
        else:
            result = PickResult.OK
    if result is PickResult.OK and candidate.mass_g > world.config.payload_limit_g:
        result = PickResult.OVERLOAD

    if result is not PickResult.OK:
        events = world.events
        if report_failure:
            payload = {"tray": candidate.id if candidate else None, "result": result.value}
            events += (PlantEvent("Pick", payload),)
        return dataclasses.replace(world, gripper=gripper, events=events), result

    furnace = world.furnace
    if candidate.location is Place.FURNACE:
        furnace = FurnaceState(furnace.bake_duration)
    trays = _replace_tray(world.trays, dataclasses.replace(candidate, location=Place.GRIPPER))
    event = PlantEvent(
        "Pick", {"tray": candidate.id, "result": "ok", "from": candidate.location.value}
    )
    return (
        dataclasses.replace(
            world,
            gripper=GripperState(volts, candidate.id),
            furnace=furnace,
            trays=trays,
            events=world.events + (event,),
        ),
        PickResult.OK,
    )


def _release(world: World) -> World:
    if world.gripper.holding is None:
        if world.gripper.coil_volts == 0:
            return world
        return dataclasses.replace(world, gripper=GripperState())
    tray = world.tray(world.gripper.holding)
    station = matching_station(world)
    furnace = world.furnace
    if station is None:
        dest = Place.DROPPED
    elif station.id is StationId.TABLE:
        dest = Place.TABLE
    elif furnace.occupant is None:
        dest = Place.FURNACE
    else:
        dest = Place.DROPPED

    bake = tray.bake
    if dest is Place.FURNACE:
        furnace = dataclasses.replace(furnace, occupant=tray.id)
        if bake is BakeState.UNBAKED:
            bake = BakeState.BAKING
    trays = _replace_tray(world.trays, dataclasses.replace(tray, location=dest, bake=bake))
    if dest is Place.DROPPED:
        event = PlantEvent(
            "DroppedTray",
            {
                "tray": tray.id,
                "position_mm": world.base.position,
                "arm_angle": world.actual_arm_angle,
            },
        )
    else:
        event = PlantEvent("Release", {"tray": tray.id, "to": dest.value})
    return dataclasses.replace(
        world,
        gripper=GripperState(),
        furnace=_furnace_signal(furnace, trays),
        trays=trays,
        events=world.events + (event,),
    )


def gripper_energize(world: World) -> tuple[World, PickResult]:
    """Put the nominal coil voltage on the gripper and try to pick at the current pose.

    On OVERLOAD the coil stays energized and the tray stays where it is; on
    NOTHING_THERE the coil is energized with nothing to attract.
    """
    if world.gripper.holding is not None:
        raise ValueError(f"gripper already holds {world.gripper.holding}")
    return _capture(dataclasses.replace(world, events=()), world.config.coil_volts, True)


def gripper_release(world: World) -> World:
    return _release(dataclasses.replace(world, events=()))


def plant_tick(world: World, actuators: ActuatorCommand, dt: float) -> World:
    if not dt > 0:
        raise InvalidTimestep(f"dt must be positive, got {dt}")
    volts = actuators.gripper_volts
    violation = check_buffer_voltage(volts)
    if violation is not None:
        raise violation
    cfg = world.config
    ledger = world.ledger

    motor, displacement, base_energy = dc_tick(
        world.base.motor, cfg.dc_motor, decode_hbridge(actuators.hbridge), dt
    )
    base = BaseState(world.base.position + displacement, motor)

    arm_angle, arm_offset = world.arm_angle, world.arm_offset
    last_step, rng_state = world.last_step_time, world.rng_state
    step_energy = 0.0
    if actuators.step_request is not None:
        try:
            arm_angle, _ = stepper_step(
                arm_angle, actuators.step_request, last_step, world.clock, cfg.stepper
            )
        except RateLimited:
            pass
        else:
            last_step = world.clock
            arm_offset, rng_state = apply_backlash(arm_angle, rng_state, cfg.backlash)
            step_energy = cfg.stepper.step_energy

    events: tuple[PlantEvent, ...] = ()
    trays = world.trays
    furnace = world.furnace
    if furnace.occupant is not None:
        tray = world.tray(furnace.occupant)
        if tray.bake is BakeState.BAKING:
            elapsed = tray.bake_elapsed + dt
            bake = BakeState.BAKING
            if elapsed >= furnace.bake_duration - TIME_EPS:
                bake = BakeState.BAKED
                events += (PlantEvent("BakeDone", {"tray": tray.id}),)
            trays = _replace_tray(trays, dataclasses.replace(tray, bake=bake, bake_elapsed=elapsed))
            furnace = _furnace_signal(furnace, trays)

    world = dataclasses.replace(
        world,
        base=base,
        arm_angle=arm_angle,
        arm_offset=arm_offset,
        last_step_time=last_step,
        rng_state=rng_state,
        trays=trays,
        furnace=furnace,
        events=events,
    )

    if volts > 0:
        if world.gripper.holding is None:
            rising = world.gripper.coil_volts == 0
            world, _ = _capture(world, volts, report_failure=rising)
        elif volts != world.gripper.coil_volts:
            world = dataclasses.replace(world, gripper=GripperState(volts, world.gripper.holding))
    else:
        world = _release(world)

    coil_energy = volts * volts / cfg.coil_resistance * dt
    return dataclasses.replace(
        world,
        ledger=ledger.add(base_energy, step_energy, coil_energy),
        clock=world.clock + dt,
    )


def check_world(world: World) -> list[str]:
    """Static invariants of a single world. Returns human-readable violations."""
    problems = []
    holding = world.gripper.holding
    in_gripper = [t.id for t in world.trays if t.location is Place.GRIPPER]
    in_furnace = [t.id for t in world.trays if t.location is Place.FURNACE]
    if in_gripper != ([holding] if holding else []):
        problems.append(f"gripper holds {holding!r} but trays located there: {in_gripper}")
    occupant = world.furnace.occupant
    if in_furnace != ([occupant] if occupant else []):
        problems.append(f"furnace occupant {occupant!r} but trays located there: {in_furnace}")
    if holding is not None and not world.gripper.coil_volts > 0:
        problems.append("holding a tray with a de-energized coil")
    for t in world.trays:
        if t.bake is BakeState.BAKING and t.location is not Place.FURNACE:
            problems.append(f"tray {t.id} is baking outside the furnace")
    want_done = occupant is not None and world.tray(occupant).bake is BakeState.BAKED
    if world.furnace.done_signal != want_done:
        problems.append("furnace done signal disagrees with occupant bake state")
    if world.arm_angle not in STEP_ANGLES:
        problems.append(f"arm angle {world.arm_angle} is not quantized")
    return problems


def check_transition(prev: World, actuators: ActuatorCommand, new: World) -> list[str]:
    """Invariants that relate two consecutive worlds."""
    problems = []
    if not new.clock >= prev.clock:
        problems.append("clock went backwards")
    if [t.id for t in prev.trays] != [t.id for t in new.trays]:
        problems.append("tray set changed")
    for old_t, new_t in zip(prev.trays, new.trays):
        if _BAKE_ORDER[new_t.bake] < _BAKE_ORDER[old_t.bake]:
            problems.append(f"tray {new_t.id} bake regressed {old_t.bake.value} -> {new_t.bake.value}")
        if new_t.bake_elapsed < old_t.bake_elapsed:
            problems.append(f"tray {new_t.id} bake time decreased")
        if new_t.bake_elapsed > old_t.bake_elapsed and old_t.location is not Place.FURNACE:
            problems.append(f"tray {new_t.id} baked outside the furnace")
    if new.arm_angle != prev.arm_angle and actuators.step_request is None:
        problems.append("arm moved without a step request")
    if (
        decode_hbridge(actuators.hbridge) is DriveCommand.STOP
        and prev.base.motor.velocity == 0
        and new.base.position != prev.base.position
    ):
        problems.append("base moved while stopped")
    a, b = prev.ledger, new.ledger
    if new.ledger.total < prev.ledger.total or (
        b.base_motor < a.base_motor or b.stepper < a.stepper or b.gripper_coil < a.gripper_coil
    ):
        problems.append("energy ledger decreased")
    return problems

