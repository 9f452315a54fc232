import math

import pytest

from src.config import Sampling, Scenario
from src.errors import ParseError, ValidationError
from src.parsing import config_to_dict, format_config, load_config, parse_config
from src.presets import list_presets, load_preset, preset_path


def test_minimal_config_gets_defaults():
    cfg = parse_config('scenario = "two_slit"\n')
    assert cfg.scenario == Scenario.TWO_SLIT
    assert cfg.seed == 0
    assert cfg.model == {"d": 1.0, "sigma0": 0.1}
    assert cfg.ensemble.n_traj == 200
    assert cfg.ensemble.sampling == Sampling.DENSITY_WEIGHTED
    assert cfg.integrator.t_end is None
    assert math.isinf(cfg.integrator.max_step)
    assert cfg.grid is None


def test_optional_model_keys_stay_absent():
    cfg = parse_config('scenario = "counter_propagating"\n')
    assert "v" not in cfg.model
    assert cfg.model["weight_left"] == 0.5


def test_full_config():
    text = """
scenario = "talbot"
seed = 9
output_dir = "out/talbot"

[constants]
hbar = 1.0
mass = 2.0

[model]
d = 2.0
sigma0 = 0.2
nmax = 12

[grid]
x_min = -1.0
x_max = 1.0
nx = 101
t_min = 0.0
t_max = 1.0
nt = 11

[ensemble]
n_traj = 30
sampling = "uniform_support"
support = [-0.9, 0.9]

[integrator]
rtol = 1e-9
n_save = 11
t_end = 0.5
"""
    cfg = parse_config(text)
    assert cfg.constants.mass == 2.0
    assert cfg.model["nmax"] == 12
    assert cfg.grid.nx == 101
    spec = cfg.ensemble_spec
    assert spec.sampling == Sampling.UNIFORM_SUPPORT
    assert spec.support == (-0.9, 0.9)
    assert spec.seed == 9
    built = cfg.integrator.build(default_end=3.0)
    assert built.save_times[-1] == 0.5
    assert len(built.save_times) == 11


def test_invalid_toml_reports_line():
    with pytest.raises(ParseError) as err:
        parse_config('scenario = "two_slit"\nseed = \n')
    assert err.value.line == 2


def test_unknown_key_suggests_a_fix():
    with pytest.raises(ValidationError) as err:
        parse_config('scenario = "two_slit"\n[model]\nsigma = 0.1\n')
    assert err.value.key == "sigma"
    assert err.value.line == 3
    assert err.value.suggestion == "sigma0"
    assert "did you mean 'sigma0'" in str(err.value)


def test_unknown_scenario_suggests_a_fix():
    with pytest.raises(ValidationError) as err:
        parse_config('scenario = "two_slits"\n')
    assert err.value.suggestion == "two_slit"


def test_unknown_integrator_method_suggests_a_fix():
    with pytest.raises(ValidationError) as err:
        parse_config('scenario = "two_slit"\n[integrator]\nmethod = "RK54"\n')
    assert err.value.key == "method"
    assert err.value.line == 3
    assert err.value.suggestion == "RK45"

    cfg = parse_config('scenario = "two_slit"\n[integrator]\nmethod = "DOP853"\n')
    assert cfg.integrator.method == "DOP853"


def test_missing_scenario():
    with pytest.raises(ValidationError) as err:
        parse_config("seed = 1\n")
    assert err.value.key == "scenario"


@pytest.mark.parametrize("text, key", [
    ('scenario = "two_slit"\n[model]\nd = -1.0\n', "d"),
    ('scenario = "two_slit"\n[model]\nd = "wide"\n', "d"),
    ('scenario = "two_slit"\n[ensemble]\nn_traj = 0\n', "n_traj"),
    ('scenario = "two_slit"\n[integrator]\nrtol = 0.0\n', "rtol"),
    ('scenario = "fractal"\n[model]\nL = 1.0\nw = 2.0\n', "w"),
    ('scenario = "harmonic_two_level"\n[model]\nlevels = [0, 1, 2]\n', "weights"),
    ('scenario = "two_slit"\n[grid]\nx_min = 0.0\n', "x_max"),
])
def test_out_of_domain_values(text, key):
    with pytest.raises(ValidationError) as err:
        parse_config(text)
    assert err.value.key == key


def test_format_round_trip():
    cfg = parse_config('scenario = "nslit_ladder"\nseed = 4\n[ensemble]\nsupport = [-1.0, 1.0]\n')
    again = parse_config(format_config(cfg))
    assert again == cfg
    assert config_to_dict(again)["model"]["compare_slits"] == [3, 11, 51]


def test_overrides(tmp_path):
    path = tmp_path / "cfg.toml"
    path.write_text('scenario = "toymodel"\nseed = 2\n', encoding="utf-8")
    cfg = load_config(str(path)).with_overrides(seed=5, output_dir=str(tmp_path / "out"))
    assert cfg.seed == 5
    assert cfg.output_dir == str(tmp_path / "out")
    assert cfg.with_overrides() is cfg


def test_every_preset_parses():
    names = [name for name, _ in list_presets()]
    assert "two_slit" in names and "talbot" in names and "fractal" in names
    for name, description in list_presets():
        assert description
        load_preset(name)


def test_unknown_preset():
    with pytest.raises(ValidationError):
        preset_path("no_such_preset")
