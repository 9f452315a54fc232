from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Tuple
import hashlib
import json
import logging
import math
import os

import numpy as np
import pandas as pd

try:
    from .config import CSV_FLOAT_FORMAT
    from .errors import MissingArtifact
except ImportError:
    from src.config import CSV_FLOAT_FORMAT
    from src.errors import MissingArtifact

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def sha256_file(path: str) -> str:
    """Hex SHA-256 digest of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def json_safe(obj: Any) -> Any:
    """Convert numpy values, enums and tuples to JSON types.

    Non-finite floats become the strings "inf", "-inf" and "nan".
    """
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [json_safe(v) for v in obj.tolist()]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return obj


def dumps_json(obj: Any) -> str:
    return json.dumps(json_safe(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


@dataclass(frozen=True)
class ArtifactRecord:
    name: str
    sha256: str
    size: int


@dataclass(frozen=True)
class RunManifest:
    out_dir: str
    scenario: str
    version: str
    seed: int
    config: Dict[str, Any]
    artifacts: Tuple[ArtifactRecord, ...]
    duration_s: float

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def names(self) -> List[str]:
        return [a.name for a in self.artifacts]

    def verify(self) -> List[str]:
        """Names of artifacts that are missing or no longer match their digest."""
        bad = []
        for record in self.artifacts:
            p = self.path(record.name)
            if not os.path.exists(p) or sha256_file(p) != record.sha256:
                bad.append(record.name)
        return bad

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "version": self.version,
            "seed": self.seed,
            "config": self.config,
            "artifacts": [{"name": a.name, "sha256": a.sha256, "bytes": a.size} for a in self.artifacts],
            "duration_s": self.duration_s,
        }


class ArtifactWriter:
    """Writes run artifacts into one directory and keeps their digests."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self._records: List[ArtifactRecord] = []
        os.makedirs(out_dir, exist_ok=True)

    def _record(self, name: str) -> str:
        path = os.path.join(self.out_dir, name)
        record = ArtifactRecord(name=name, sha256=sha256_file(path), size=os.path.getsize(path))
        self._records = [r for r in self._records if r.name != name] + [record]
        logger.debug(f"Wrote {path} ({record.size} bytes, sha256={record.sha256[:12]})")
        return path

    def csv(self, name: str, df: pd.DataFrame) -> str:
        path = os.path.join(self.out_dir, name)
        df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        return self._record(name)

    def json(self, name: str, obj: Any) -> str:
        return self.text(name, dumps_json(obj))

    def text(self, name: str, content: str) -> str:
        path = os.path.join(self.out_dir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(content)
        return self._record(name)

    @property
    def records(self) -> Tuple[ArtifactRecord, ...]:
        return tuple(self._records)

    def finish(self, scenario: str, version: str, seed: int, config: Dict[str, Any], duration_s: float) -> RunManifest:
        """Write manifest.json listing every artifact written so far."""
        manifest = RunManifest(
            out_dir=self.out_dir,
            scenario=scenario,
            version=version,
            seed=seed,
            config=config,
            artifacts=self.records,
            duration_s=duration_s,
        )
        path = os.path.join(self.out_dir, MANIFEST_NAME)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(dumps_json(manifest.to_dict()))
        logger.info(f"Wrote {len(manifest.artifacts)} artifacts and manifest to {self.out_dir}")
        return manifest


def load_manifest(out_dir: str) -> RunManifest:
    """Read manifest.json back from a run directory.

    Raises:
        MissingArtifact: if there is no manifest
    """
    path = os.path.join(out_dir, MANIFEST_NAME)
    if not os.path.exists(path):
        logger.error(f"No manifest in {out_dir}")
        raise MissingArtifact(f"{path} does not exist")
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    return RunManifest(
        out_dir=out_dir,
        scenario=doc["scenario"],
        version=doc["version"],
        seed=doc["seed"],
        config=doc["config"],
        artifacts=tuple(ArtifactRecord(a["name"], a["sha256"], a["bytes"]) for a in doc["artifacts"]),
        duration_s=doc["duration_s"],
    )
