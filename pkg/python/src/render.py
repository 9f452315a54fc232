from typing import Any, Dict, List
import logging
import os

import tomli_w

try:
    from .artifacts import RunManifest
    from .config import CheckStatus
    from .errors import MissingArtifact
except ImportError:
    from src.artifacts import RunManifest
    from src.config import CheckStatus
    from src.errors import MissingArtifact

logger = logging.getLogger(__name__)

# Declarative layouts: one plot script per data artifact.
# Each panel names the columns to draw; "columns = '*'" means every column but x.
PLOT_LAYOUTS: Dict[str, Dict[str, Any]] = {
    "carpet.csv": {
        "title": "Probability density carpet",
        "kind": "heatmap",
        "panels": [{"x": "header", "y": "t", "z": "values", "xlabel": "x", "ylabel": "t", "zlabel": "rho"}],
    },
    "trajectories.csv": {
        "title": "Bohmian trajectories",
        "kind": "lines",
        "panels": [{"x": "t", "columns": "*", "xlabel": "t", "ylabel": "x"}],
    },
    "ladder.csv": {
        "title": "Far-field density and quantized momentum",
        "kind": "lines",
        "panels": [
            {"x": "x", "columns": ["density"], "xlabel": "x", "ylabel": "rho"},
            {"x": "x", "columns": ["p_normalized"], "xlabel": "x", "ylabel": "p / (2 pi hbar / d)"},
        ],
    },
    "plateaus.csv": {
        "title": "Plateau fraction against slit count",
        "kind": "points",
        "panels": [{"x": "n_slits", "columns": ["plateau_fraction"], "xlabel": "N", "ylabel": "fraction"}],
    },
    "scaling.csv": {
        "title": "Density length scaling",
        "kind": "loglog",
        "panels": [{"x": "K", "columns": ["L"], "xlabel": "K", "ylabel": "L"}],
    },
    "trajectory_scaling.csv": {
        "title": "Trajectory length scaling",
        "kind": "loglog",
        "panels": [{"x": "N", "columns": ["L"], "xlabel": "N", "ylabel": "L"}],
    },
    "toymodel.csv": {
        "title": "Effective well width and depth",
        "kind": "lines",
        "group_by": "preset",
        "panels": [
            {"x": "t", "columns": ["width"], "xlabel": "t", "ylabel": "well width -x_min"},
            {"x": "t", "columns": ["V0"], "xlabel": "t", "ylabel": "V0"},
        ],
    },
    "potential.csv": {
        "title": "Effective potential profile",
        "kind": "steps",
        "group_by": "preset",
        "panels": [{"x": "x", "columns": ["V"], "xlabel": "x", "ylabel": "V"}],
    },
}


def plot_script_name(artifact: str) -> str:
    return os.path.splitext(artifact)[0] + ".plot.toml"


def emit_plots(manifest: RunManifest) -> List[str]:
    """Write a declarative plot script next to every plottable artifact.

    Args:
        manifest: Finished run manifest

    Returns:
        Paths of the scripts written

    Raises:
        MissingArtifact: if the manifest is empty or lists a file that is gone
    """
    if not manifest.artifacts:
        logger.error("Manifest lists no artifacts; nothing to plot")
        raise MissingArtifact("manifest lists no artifacts")

    written = []
    for name in manifest.names():
        path = manifest.path(name)
        if not os.path.exists(path):
            logger.error(f"Artifact {name} listed in manifest but missing from {manifest.out_dir}")
            raise MissingArtifact(f"{path} does not exist")
        layout = PLOT_LAYOUTS.get(name)
        if layout is None:
            continue
        script = {"data": name, "scenario": manifest.scenario, **layout}
        out = manifest.path(plot_script_name(name))
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write(tomli_w.dumps(script))
        written.append(out)

    logger.info(f"Wrote {len(written)} plot script(s)")
    return written


def print_run_summary(manifest: RunManifest, checks: Dict[str, Dict[str, Any]]) -> None:
    """Print a human-readable run summary (scenario, timing, check outcomes)."""
    failed = sorted(k for k, v in checks.items() if v["status"] == CheckStatus.FAIL.value)
    skipped = sorted(k for k, v in checks.items() if v["status"] == CheckStatus.SKIP.value)
    passed = len(checks) - len(failed) - len(skipped)

    print("------------------------------------------------------------")
    print(f"qflow run: {manifest.scenario} (seed {manifest.seed})")
    print(
        f"finished in {manifest.duration_s:.1f} s | artifacts={len(manifest.artifacts)} | "
        f"pass={passed} fail={len(failed)} skip={len(skipped)}"
    )
    if failed:
        failed_str = ", ".join(failed[:12]) + (", ..." if len(failed) > 12 else "")
        print(f"  FAIL : {failed_str}")
    if skipped:
        skipped_str = ", ".join(skipped[:12]) + (", ..." if len(skipped) > 12 else "")
        print(f"  SKIP : {skipped_str}")
    print(f"  OUT  : {manifest.out_dir}")
    print("------------------------------------------------------------")
