import numpy as np
import pytest

from dswave.core import Grid
from dswave.errors import ParseError, ValidationError
from dswave.raster import write_csv_grid, write_esri_ascii
from dswave.scenarios import (
    PRESETS,
    barenblatt_profile,
    build_problem,
    check_config,
    config_from_dict,
    load_config,
    preset_config,
)

CONFIGS = __import__("pathlib").Path(__file__).resolve().parents[1] / "configs"


def test_minimal_config_uses_defaults():
    cfg = config_from_dict({"name": "m"})
    assert cfg.parameters.gamma == 0.5 and cfg.grid.cells == [32, 32]
    assert check_config(cfg) == []


def test_unknown_key_is_a_parse_error():
    with pytest.raises(ParseError, match="ghamma"):
        config_from_dict({"parameters": {"ghamma": 0.5}})
    with pytest.raises(ParseError):
        config_from_dict({"colour": "red"})
    with pytest.raises(ParseError):
        config_from_dict({"stepping": {"T": "long"}})


def test_out_of_range_gamma_is_a_validation_error():
    with pytest.raises(ValidationError, match=r"gamma ∉ \(0,1\)"):
        config_from_dict({"parameters": {"gamma": 1.2}})


def test_validation_lists_every_violation():
    with pytest.raises(ValidationError) as info:
        config_from_dict({"boundary": "Periodic", "stepping": {"scheme": "RK4"}})
    assert len(info.value.violations) == 2


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_shipped_configs_match_presets(name):
    cfg = load_config(CONFIGS / f"{name}.toml")
    ref = preset_config(name)
    assert cfg.to_dict() | {"outputs": None} == ref.to_dict() | {"outputs": None}
    assert cfg.resolve(cfg.outputs.dir).parent.name == "out"


def test_load_config_errors(tmp_path):
    with pytest.raises(ParseError):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("name = [")
    with pytest.raises(ParseError):
        load_config(bad)


def test_file_fields_resolve_relative_to_config(tmp_path):
    grid = Grid((4, 4), (1.0, 1.0))
    z = np.arange(16.0).reshape(4, 4) / 16
    write_esri_ascii(tmp_path / "z.asc", grid, z)
    write_csv_grid(tmp_path / "v0.csv", np.full((4, 4), 0.5))
    (tmp_path / "s.toml").write_text(
        'name = "f"\n[grid]\ncells = [4, 4]\n'
        '[topography]\npreset = "file"\nfile = "z.asc"\n'
        '[initial]\npreset = "file"\nfile = "v0.csv"\n'
    )
    problem = build_problem(load_config(tmp_path / "s.toml"))
    np.testing.assert_array_equal(problem.z.values, z)
    assert np.all(problem.v0.values == 0.5)


def test_missing_file_reference(tmp_path):
    with pytest.raises(ValidationError, match="does not exist"):
        config_from_dict({"topography": {"preset": "file", "file": "nope.asc"}}, base_dir=str(tmp_path))


def test_lake_at_rest_initial_state_is_flat():
    p = build_problem(preset_config("lake_at_rest"))
    u = p.v0.values + p.z.values
    assert np.ptp(u) == 0.0 and p.v0.values.min() >= 0


def test_barenblatt_profile_support_and_mass():
    x = np.linspace(-6, 6, 200_001)
    u = barenblatt_profile(x, 1.0)
    assert u[np.abs(x) > np.sqrt(6)].max() == 0.0
    # mass of t^(-1/3) (1 - x^2 / (6 t^(2/3)))_+ is (4/3) sqrt(6)
    assert np.sum(u) * (x[1] - x[0]) == pytest.approx(4 / 3 * np.sqrt(6), rel=1e-6)
