import pytest

from traybot.controller import MissionState
from traybot.plant import Place, StationId
from traybot.scenario import DEFAULTS, ConfigError, Scenario, load_scenario, load_scenario_file


def test_empty_document_is_all_defaults():
    s = load_scenario("")
    assert s == Scenario()
    assert s.dt == 0.1 and s.bake_duration == 30.0
    assert s.dc_motor.target_speed == 100 and s.dc_motor.time_constant == 0
    assert s.dc_motor.efficiency == 0.775
    assert s.stepper.max_step_rate == 2 and s.stepper.rated_power == 10
    assert s.stepper.holding_torque == 5
    assert s.station(StationId.TABLE).base_position == 0
    assert s.station(StationId.TABLE).arm_angle == 90
    assert s.station(StationId.FURNACE_PORT).base_position == 1000
    assert s.station(StationId.FURNACE_PORT).arm_angle == 270
    assert (s.robot.length_in, s.robot.height_in, s.robot.width_in) == (21, 17, 10)
    assert [(t.id, t.mass_g, t.location) for t in s.trays] == [("tray1", 150.0, Place.TABLE)]
    assert not s.backlash.enabled and s.backlash.probability == 0.7


def test_shipped_default_file_matches_builtin_defaults(repo_root):
    assert load_scenario_file(repo_root / "scenarios" / "default.scenario") == Scenario()


@pytest.mark.parametrize(
    "text,field",
    [
        ("dt = 0", "dt"),
        ("dt = -1", "dt"),
        ("max_ticks = 0", "max_ticks"),
        ("max_ticks = 1.5", "max_ticks"),
        ("bake_durration = 30", "bake_durration"),
        ("stations.oven.position_mm = 3", "stations.oven.position_mm"),
        ("stations.table.arm_angle_deg = 45", "stations.table.arm_angle_deg"),
        ("gripper.coil_volts = 16", "gripper.coil_volts"),
        ("base.efficiency = 1.2", "base.efficiency"),
        ("base.time_constant_s = -1", "base.time_constant_s"),
        ("backlash.enabled = yes", "backlash.enabled"),
        ("backlash.seed = -1", "backlash.seed"),
        ("backlash.probability = 2", "backlash.probability"),
        ("furnace.opening_in = 9", "furnace.opening_in"),
        ("trays.a.mass_g = 0", "trays.a.mass_g"),
        ("trays.a.location = shelf\ntrays.a.mass_g = 100", "trays.a.location"),
        ("trays.a.colour = red\ntrays.a.mass_g = 100", "trays.a.colour"),
        ("trays.a.location = table", "trays.a.mass_g"),
        ("stations.furnace_port.position_mm = 6", "stations.furnace_port.position_mm"),
        ("controller.watchdog_ticks = 0", "controller.watchdog_ticks"),
        ("dt = 0.1\ndt = 0.2", "dt"),
        ("just some words", "line 1"),
    ],
)
def test_config_errors_name_the_field(text, field):
    with pytest.raises(ConfigError) as exc:
        load_scenario(text)
    assert exc.value.field == field


def test_dt_zero_reason():
    with pytest.raises(ConfigError) as exc:
        load_scenario("dt = 0")
    assert (exc.value.field, exc.value.reason) == ("dt", "must be positive")


def test_override_bake_duration():
    assert load_scenario("bake_duration = 30").bake_duration == 30.0
    assert load_scenario("bake_duration = 12.5").bake_duration == 12.5


def test_comments_blank_lines_and_quotes():
    s = load_scenario(
        "# header\n\n  trays.x.mass_g = 80   # light\ntrays.x.location = 'table'\n"
        "backlash.enabled = TRUE\n"
    )
    assert [(t.id, t.mass_g) for t in s.trays] == [("x", 80.0)]
    assert s.backlash.enabled


def test_every_default_key_is_accepted():
    text = "\n".join(f"{k} = {str(v).lower()}" for k, v in DEFAULTS.items() if v is not None)
    assert load_scenario(text) == Scenario()


def test_watchdogs_are_ten_times_expected_phase_ticks():
    s = load_scenario("")
    expected = s.expected_phase_ticks()
    # 1000 mm at 100 mm/s in 0.1 s ticks, plus the arrival tick
    assert expected[MissionState.TRANSPORT_TO_FURNACE] == 101
    # two steps 5 ticks apart, plus the confirming tick
    assert expected[MissionState.ALIGN_ARM_TO_FURNACE] == 6
    assert expected[MissionState.WAIT_BAKE] == 301
    cfg = s.controller_config()
    assert all(cfg.phase_watchdog[m] == 10 * n for m, n in expected.items())


def test_explicit_watchdog_applies_to_every_phase():
    cfg = load_scenario("controller.watchdog_ticks = 77").controller_config()
    assert cfg.phase_watchdog == {} and cfg.watchdog_for(MissionState.PICK_FROM_TABLE) == 77


def test_with_seed():
    assert load_scenario("").with_seed(5).backlash.seed == 5
    with pytest.raises(ConfigError):
        load_scenario("").with_seed(2**64)


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario_file(tmp_path / "nope.scenario")
