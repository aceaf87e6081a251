import math
from pathlib import Path

import pytest

from hybridbf.lib import scenario as sc
from hybridbf.lib.exceptions import ConfigError
from hybridbf.lib.rf_network import BandTag

ROOT = Path(__file__).resolve().parents[3]
ETC = ROOT / "hybridbf" / "etc"
SAMPLES = ROOT / "data" / "samples"

MINIMAL = """\
geometry:
  n_antennas: 64
rf:
  n_rf: 32
groups:
  - center_angle_deg: -45
    n_users: 4
    n_beams: 10
  - center_angle_deg: 0
    n_users: 4
    n_beams: 12
  - center_angle_deg: 45
    n_users: 4
    n_beams: 10
"""


def test_minimal_scenario_defaults():
    cfg = sc.parse_config(MINIMAL)
    assert cfg.geometry.n_antennas == 64
    assert cfg.geometry.spacing_wavelengths == 0.5
    assert cfg.geometry.angle_reference == "endfire"
    assert cfg.n_rf_values == (32,)
    assert cfg.n_users == 12
    assert [g.n_beams for g in cfg.groups] == [10, 12, 10]
    assert all(g.angular_spread_deg == 15.0 for g in cfg.groups)
    assert cfg.loss_profile.band_tag is BandTag.SUB5GHZ
    assert cfg.realizations == 1000
    assert cfg.master_seed == 1
    assert cfg.rho_grid_db == (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    assert cfg.architectures == sc.ALL_ARCHITECTURES
    assert cfg.fc_phase_design == "dft"
    assert not cfg.joint_zf


def test_sample_and_etc_scenarios_load():
    broadside = MINIMAL.replace("  n_antennas: 64\n", "  n_antennas: 64\n  angle_reference: broadside\n")
    assert sc.load_config(SAMPLES / "n64_minimal.yml") == sc.parse_config(broadside)
    three_groups = sc.load_config(ETC / "n64_three_groups.yml")
    assert three_groups.rho_grid_db == sc.DEFAULT_RHO_GRID_DB
    assert three_groups.geometry.angle_reference == "broadside"
    rf_sweep = sc.load_config(ETC / "n128_rf_sweep.yml")
    assert rf_sweep.n_rf_values == (32, 64)
    assert not rf_sweep.explicit_beams
    assert rf_sweep.geometry.angle_reference == "broadside"
    assert rf_sweep.power.bandwidth_hz == 2e7
    assert math.isclose(rf_sweep.power.pa_output_w, 39.8107, rel_tol=1e-5)
    quick = sc.load_config(SAMPLES / "quick_broadside.yml")
    assert quick.geometry.angle_reference == "broadside"


@pytest.mark.parametrize("literal", ["2e7", "2.0e7", "2.0E7", "2.0e+7", "20000000"])
def test_exponent_without_sign_is_a_number(literal):
    cfg = sc.parse_config(MINIMAL + f"power:\n  bandwidth_hz: {literal}\n")
    assert cfg.power.bandwidth_hz == 2e7


def test_non_numeric_text_is_still_rejected():
    with pytest.raises(ConfigError) as info:
        sc.parse_config(MINIMAL + "power:\n  bandwidth_hz: 2e7Hz\n")
    assert info.value.field == "power.bandwidth_hz"
    assert info.value.line == 16


def test_infeasible_beam_budget():
    text = MINIMAL.replace("n_beams: 10", "n_beams: 20").replace("n_beams: 12", "n_beams: 20")
    with pytest.raises(ConfigError) as info:
        sc.parse_config(text)
    assert info.value.field == "groups"
    assert info.value.line == 5


def test_error_is_attributed_to_field_and_line():
    text = MINIMAL.replace("n_beams: 12", "n_beams: 2")
    with pytest.raises(ConfigError) as info:
        sc.parse_config(text)
    assert info.value.field == "groups[1].n_beams"
    assert info.value.line == 11
    assert "línea 11" in str(info.value)


def test_unknown_key_rejected():
    text = MINIMAL.replace("  n_antennas: 64\n", "  n_antennas: 64\n  n_elements: 64\n")
    with pytest.raises(ConfigError) as info:
        sc.parse_config(text)
    assert info.value.field == "geometry.n_elements"
    assert info.value.line == 3
    with pytest.raises(ConfigError):
        sc.parse_config(MINIMAL + "extra: 1\n")


@pytest.mark.parametrize("bad, field", [
    ("  n_antennas: 64\n", "geometry.n_antennas"),
    ("  n_rf: 32\n", "rf.n_rf"),
])
def test_missing_required_fields(bad, field):
    with pytest.raises(ConfigError) as info:
        sc.parse_config(MINIMAL.replace(bad, ""))
    assert info.value.field == field


def test_type_errors():
    with pytest.raises(ConfigError) as info:
        sc.parse_config(MINIMAL.replace("n_rf: 32", "n_rf: true"))
    assert info.value.field == "rf.n_rf"
    with pytest.raises(ConfigError):
        sc.parse_config(MINIMAL.replace("n_rf: 32", "n_rf: 32.5"))
    with pytest.raises(ConfigError):
        sc.parse_config(MINIMAL + "sweep:\n  architectures: [hybrid]\n")


def test_butler_requires_power_of_two():
    text = MINIMAL.replace("n_antennas: 64", "n_antennas: 48")
    with pytest.raises(ConfigError) as info:
        sc.parse_config(text)
    assert info.value.field == "geometry.n_antennas"
    # sin series Butler, N = 48 es válido
    ok = sc.parse_config(text + "sweep:\n  architectures: [fully_digital, fc_ideal]\n")
    assert ok.geometry.n_antennas == 48


def test_rf_chain_bounds():
    with pytest.raises(ConfigError):
        sc.parse_config(MINIMAL.replace("n_rf: 32", "n_rf: 128"))
    with pytest.raises(ConfigError):
        # varios N_RF con b_g fijos
        sc.parse_config(MINIMAL.replace("n_rf: 32", "n_rf: [32, 64]"))


def test_power_section():
    cfg = sc.parse_config(MINIMAL + "power:\n  pa_output_dbm: 46\n")
    assert math.isclose(cfg.power.pa_output_w, 39.8107, rel_tol=1e-5)
    with pytest.raises(ConfigError) as info:
        sc.parse_config(MINIMAL + "power:\n  pa_output_w: 40\n  pa_output_dbm: 46\n")
    assert info.value.field == "power.pa_output_dbm"
    with pytest.raises(ConfigError):
        sc.parse_config(MINIMAL + "power:\n  pa_efficiency: 2.0\n")


def test_invalid_documents():
    with pytest.raises(ConfigError):
        sc.parse_config("")
    with pytest.raises(ConfigError) as info:
        sc.parse_config("geometry:\n  n_antennas: [64\n")
    assert info.value.line is not None
    with pytest.raises(ConfigError):
        sc.parse_config("- 1\n- 2\n")


def test_round_trip_is_identity():
    cfg = sc.parse_config(MINIMAL)
    assert sc.parse_config(sc.serialize_config(cfg)) == cfg
    custom = MINIMAL.replace("  n_rf: 32\n", "  n_rf: 32\n  loss_profile:\n"
                             "    divider_combiner_db: 0.4\n    hybrid_coupler_db: 0.2\n"
                             "    variable_phase_shifter_db: 1.5\n    fixed_phase_shifter_db: 0.3\n"
                             "  fc_phase_design: array_response\n")
    custom += ("precoding:\n  joint_zf: true\npower:\n  pa_output_dbm: 46\n"
               "sweep:\n  rho_db: {start: -10, stop: 20, step: 2.5}\n  realizations: 10\n  master_seed: 99\n")
    cfg2 = sc.parse_config(custom)
    assert cfg2.loss_profile.band_tag is BandTag.CUSTOM
    assert len(cfg2.rho_grid_db) == 13
    assert sc.parse_config(sc.serialize_config(cfg2)) == cfg2
    auto = sc.load_config(ETC / "n128_rf_sweep.yml")
    assert sc.parse_config(sc.serialize_config(auto)) == auto


def test_overrides_are_validated():
    cfg = sc.parse_config(MINIMAL)
    other = cfg.with_overrides(master_seed=7, realizations=5)
    assert (other.master_seed, other.realizations) == (7, 5)
    assert cfg.with_overrides() is cfg
    with pytest.raises(ConfigError):
        cfg.with_overrides(realizations=0)


def test_architecture_properties():
    assert sc.Architecture.FC_REALISTIC.realistic
    assert not sc.Architecture.BUTLER_IDEAL.realistic
    assert sc.Architecture("butler_ideal").rf_architecture.value == "butler"
    assert sc.Architecture.FULLY_DIGITAL.rf_architecture.value == "identity"
