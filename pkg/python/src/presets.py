from typing import List, Tuple
import glob
import logging
import os

try:
    from .config import PRESETS_DIR
    from .errors import ValidationError
    from .parsing import ScenarioConfig, parse_config
except ImportError:
    from src.config import PRESETS_DIR
    from src.errors import ValidationError
    from src.parsing import ScenarioConfig, parse_config

logger = logging.getLogger(__name__)


def _description(path: str) -> str:
    """First comment line of a preset file, without the '#'."""
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line.startswith("#"):
                return line.lstrip("#").strip()
            if line:
                break
    return ""


def list_presets(presets_dir: str = PRESETS_DIR) -> List[Tuple[str, str]]:
    """(name, description) for every preset, sorted by name."""
    paths = sorted(glob.glob(os.path.join(presets_dir, "*.toml")))
    presets = [(os.path.splitext(os.path.basename(p))[0], _description(p)) for p in paths]
    logger.debug(f"Found {len(presets)} presets in {presets_dir}")
    return presets


def preset_path(name: str, presets_dir: str = PRESETS_DIR) -> str:
    path = os.path.join(presets_dir, f"{name}.toml")
    if not os.path.exists(path):
        known = ", ".join(n for n, _ in list_presets(presets_dir))
        raise ValidationError(f"no preset named '{name}' (known: {known})", key="preset")
    return path


def load_preset(name: str, presets_dir: str = PRESETS_DIR) -> ScenarioConfig:
    path = preset_path(name, presets_dir)
    logger.info(f"Loading preset {name} from {path}")
    with open(path, encoding="utf-8") as f:
        return parse_config(f.read())
