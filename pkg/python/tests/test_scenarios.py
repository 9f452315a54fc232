import json
import os

import pandas as pd
import pytest

from src.app import main
from src.artifacts import load_manifest
from src.config import ExitCode
from src.parsing import parse_config
from src.presets import list_presets, load_preset
from src.scenarios import CheckBook, run_scenario


def _config(tmp_path, text):
    return parse_config(text).with_overrides(output_dir=str(tmp_path))


def _statuses(book):
    return {name: result["status"] for name, result in book.results.items()}


def test_check_book():
    book = CheckBook()
    book.at_most("small", 0.1, 0.2)
    book.at_least("large", 0.1, 0.2)
    book.skip("later", "not configured")
    assert _statuses(book) == {"small": "pass", "large": "fail", "later": "skip"}
    assert book.failed == ("large",)


def test_toymodel_scenario(tmp_path):
    cfg = _config(tmp_path, 'scenario = "toymodel"\n[model]\nnt = 51\n')
    manifest, book = run_scenario(cfg)
    assert not book.failed
    assert set(manifest.names()) == {"toymodel.csv", "potential.csv", "checks.json"}
    df = pd.read_csv(tmp_path / "toymodel.csv")
    assert list(df.columns) == ["preset", "t", "x_min", "width", "V0"]
    assert len(df) == 4 * 51
    with open(tmp_path / "checks.json", encoding="utf-8") as f:
        assert json.load(f)["regime_ordering"]["status"] == "pass"


def test_runs_are_deterministic(tmp_path):
    text = 'scenario = "toymodel"\nseed = 4\n[model]\nnt = 21\n'
    first, _ = run_scenario(_config(tmp_path / "a", text))
    second, _ = run_scenario(_config(tmp_path / "b", text))
    assert [r.sha256 for r in first.artifacts] == [r.sha256 for r in second.artifacts]


def test_box_diffraction_scenario(tmp_path):
    cfg = _config(tmp_path, 'scenario = "box_diffraction"\n[model]\nsigma0 = 0.05\n')
    manifest, book = run_scenario(cfg)
    statuses = _statuses(book)
    assert statuses["recurrence_full"] == "pass"
    assert statuses["wall_nodes"] == "pass"
    assert statuses["carpet_symmetry"] == "pass"
    assert not book.failed
    assert "carpet.csv" in manifest.names()
    assert load_manifest(str(tmp_path)).verify() == []


def test_two_slit_scenario(tmp_path):
    text = """
scenario = "two_slit"
seed = 2

[ensemble]
n_traj = 24

[integrator]
n_save = 41
"""
    manifest, book = run_scenario(_config(tmp_path, text))
    statuses = _statuses(book)
    assert statuses["non_crossing"] == "pass"
    assert statuses["mirror_confinement"] == "pass"
    assert statuses["initial_velocity_zero"] == "pass"
    assert statuses["two_wave_equivalence"] == "pass"
    assert statuses["carpet_symmetry"] == "pass"
    trajectories = pd.read_csv(tmp_path / "trajectories.csv")
    assert trajectories.shape == (41, 25)
    assert trajectories.columns[0] == "t"


def test_cli_presets_and_validate(tmp_path, capsys):
    assert main(["presets", "list"]) == ExitCode.OK
    assert "two_slit" in capsys.readouterr().out

    good = tmp_path / "good.toml"
    good.write_text('scenario = "toymodel"\n', encoding="utf-8")
    assert main(["validate", str(good)]) == ExitCode.OK

    bad = tmp_path / "bad.toml"
    bad.write_text('scenario = "toymodel"\n[model]\nsigma = 1.0\n', encoding="utf-8")
    assert main(["validate", str(bad)]) == ExitCode.CONFIG_ERROR
    assert main(["validate", str(tmp_path / "missing.toml")]) == ExitCode.CONFIG_ERROR


def test_cli_run(tmp_path):
    cfg = tmp_path / "toy.toml"
    cfg.write_text('scenario = "toymodel"\n[model]\nnt = 11\n', encoding="utf-8")
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out), "--seed", "3"]) == ExitCode.OK
    assert os.path.exists(out / "manifest.json")
    assert os.path.exists(out / "toymodel.plot.toml")
    assert load_manifest(str(out)).seed == 3


def test_cli_unknown_target():
    assert main(["run", "no_such_preset"]) == ExitCode.CONFIG_ERROR


@pytest.mark.parametrize("name", [name for name, _ in list_presets()])
def test_bundled_preset_passes_every_check(tmp_path, name):
    cfg = load_preset(name).with_overrides(output_dir=str(tmp_path))
    manifest, book = run_scenario(cfg)
    assert book.failed == ()
    assert "checks.json" in manifest.names()
    assert load_manifest(str(tmp_path)).verify() == []
