import json
import math
import os
import sys

import numpy as np
import pandas as pd
import pytest

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from src.artifacts import ArtifactWriter, dumps_json, json_safe, load_manifest, sha256_file
from src.config import Scenario
from src.errors import MissingArtifact
from src.render import emit_plots, plot_script_name, print_run_summary


def _write_run(out_dir):
    writer = ArtifactWriter(str(out_dir))
    writer.csv("trajectories.csv", pd.DataFrame({"t": [0.0, 0.5], "path_00000": [1.0 / 3.0, 0.25]}))
    writer.json("checks.json", {"non_crossing": {"status": "pass", "value": 0, "threshold": 0, "detail": ""}})
    return writer.finish(Scenario.TWO_SLIT.value, "1.0.0", 3, {"scenario": "two_slit"}, 0.25)


def test_json_safe_handles_numpy_and_non_finite():
    doc = json_safe({"a": np.float64(math.inf), "b": [np.int64(2), -math.inf, math.nan], "c": (1, 2)})
    assert doc == {"a": "inf", "b": [2, "-inf", "nan"], "c": [1, 2]}
    text = dumps_json({"z": 1, "a": np.array([0.5])})
    assert text.index('"a"') < text.index('"z"')
    assert text.endswith("\n")


def test_csv_uses_full_precision(tmp_path):
    _write_run(tmp_path)
    lines = (tmp_path / "trajectories.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t,path_00000"
    assert lines[1] == "0.0000000000000000e+00,3.3333333333333331e-01"


def test_manifest_round_trip(tmp_path):
    manifest = _write_run(tmp_path)
    assert manifest.names() == ["trajectories.csv", "checks.json"]
    assert manifest.verify() == []
    loaded = load_manifest(str(tmp_path))
    assert loaded == manifest
    record = loaded.artifacts[0]
    assert record.sha256 == sha256_file(str(tmp_path / "trajectories.csv"))

    (tmp_path / "checks.json").write_text("{}", encoding="utf-8")
    assert loaded.verify() == ["checks.json"]


def test_missing_manifest(tmp_path):
    with pytest.raises(MissingArtifact):
        load_manifest(str(tmp_path))


def test_runs_are_byte_identical(tmp_path):
    first = _write_run(tmp_path / "a")
    second = _write_run(tmp_path / "b")
    assert [a.sha256 for a in first.artifacts] == [b.sha256 for b in second.artifacts]


def test_emit_plots(tmp_path):
    manifest = _write_run(tmp_path)
    written = emit_plots(manifest)
    assert written == [os.path.join(str(tmp_path), "trajectories.plot.toml")]
    with open(written[0], "rb") as f:
        script = tomllib.load(f)
    assert script["data"] == "trajectories.csv"
    assert script["scenario"] == "two_slit"
    assert plot_script_name("ladder.csv") == "ladder.plot.toml"


def test_emit_plots_rejects_missing_artifacts(tmp_path):
    manifest = _write_run(tmp_path)
    os.remove(tmp_path / "trajectories.csv")
    with pytest.raises(MissingArtifact):
        emit_plots(manifest)

    empty = ArtifactWriter(str(tmp_path / "empty")).finish("two_slit", "1.0.0", 0, {}, 0.0)
    with pytest.raises(MissingArtifact):
        emit_plots(empty)


def test_run_summary(tmp_path, capsys):
    manifest = _write_run(tmp_path)
    checks = {
        "non_crossing": {"status": "pass"},
        "transport": {"status": "fail"},
        "spikes": {"status": "skip"},
    }
    print_run_summary(manifest, checks)
    out = capsys.readouterr().out
    assert "qflow run: two_slit (seed 3)" in out
    assert "pass=1 fail=1 skip=1" in out
    assert "FAIL : transport" in out


def test_checks_json_is_valid_json(tmp_path):
    _write_run(tmp_path)
    with open(tmp_path / "checks.json", encoding="utf-8") as f:
        assert json.load(f)["non_crossing"]["status"] == "pass"
