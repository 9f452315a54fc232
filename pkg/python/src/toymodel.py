"""Effective time-dependent well: hard wall at x = 0 preceded by an attractive square well.

A packet approaching the wall from x < 0 interferes with its own
reflection; the well [x_min(t), 0] and depth V0(t) reproduce the
resulting resonance.
"""

from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple
import logging
import math

import numpy as np
import pandas as pd

try:
    from .config import SINGULARITY_EPS
    from .errors import DomainError, SingularityError
    from .wavemodel import PhysicalConstants, spreading_ratio
except ImportError:
    from src.config import SINGULARITY_EPS
    from src.errors import DomainError, SingularityError
    from src.wavemodel import PhysicalConstants, spreading_ratio

logger = logging.getLogger(__name__)

# Illustrative packet speeds in units of the spreading rate hbar/2m sigma0
PRESET_SPEEDS: Dict[str, float] = {
    "young": 0.5,
    "slow": 2.0,
    "intermediate": 10.0,
    "fast": 44.0,
}
PRESET_DISTANCE = 10.0


@dataclass(frozen=True)
class ToyParams:
    p: float
    sigma0: float
    x0: float
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        if not (np.isfinite(self.sigma0) and self.sigma0 > 0):
            raise DomainError(f"sigma0 must be positive, got {self.sigma0!r}")


@dataclass(frozen=True)
class WellGeometry:
    x_min: float
    V0: float

    @property
    def width(self) -> float:
        return -self.x_min


def toy_preset(name: str, sigma0: float = 1.0, c: PhysicalConstants = PhysicalConstants()) -> ToyParams:
    """Packet PRESET_DISTANCE widths left of the wall, moving at a preset speed ratio."""
    try:
        ratio = PRESET_SPEEDS[name]
    except KeyError:
        raise DomainError(f"unknown toy preset {name!r}; choose from {sorted(PRESET_SPEEDS)}") from None
    v_s = c.hbar / (2.0 * c.mass * sigma0)
    return ToyParams(p=c.mass * ratio * v_s, sigma0=sigma0, x0=-PRESET_DISTANCE * sigma0, constants=c)


def _dimensionless_time(params: ToyParams, t: float) -> float:
    c = params.constants
    return c.hbar * t / (2.0 * c.mass * params.sigma0 ** 2)


def x_min_forms(params: ToyParams, t: float) -> Tuple[float, float]:
    """Well edge from both closed forms.

    The first form uses the packet's distance from the wall,
    s_t = -x0 - p t/m, over sigma_t^2; the second is written with the
    starting position only.

    Raises:
        SingularityError: if either denominator vanishes
    """
    c = params.constants
    tau = _dimensionless_time(params, t)
    sigma_t = params.sigma0 * spreading_ratio(params.sigma0, t, c)
    distance = -params.x0 - params.p * t / c.mass

    first = 2.0 * params.p / c.hbar + tau * distance / sigma_t ** 2
    second = 2.0 * params.p * params.sigma0 ** 2 / c.hbar - tau * params.x0
    if abs(first) < SINGULARITY_EPS or abs(second) < SINGULARITY_EPS:
        raise SingularityError(f"well edge is singular at t={t} (denominators {first:.3e}, {second:.3e})")
    return -math.pi / first, -math.pi * sigma_t ** 2 / second


def well_geometry(params: ToyParams, t: float) -> WellGeometry:
    """x_min(t) (signed, the well is [x_min, 0]) and the depth V0 = 2 hbar^2 / m x_min^2."""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    _, x_min = x_min_forms(params, t)
    c = params.constants
    return WellGeometry(x_min=x_min, V0=2.0 * c.hbar ** 2 / (c.mass * x_min ** 2))


def potential_profile(params: ToyParams, x, t: float):
    """0 left of the well, -V0 inside [x_min, 0], +inf right of the wall."""
    geom = well_geometry(params, t)
    xs = np.asarray(x, dtype=float)
    values = np.where(xs > 0, np.inf, np.where(xs >= geom.x_min, -geom.V0, 0.0))
    return float(values) if values.ndim == 0 else values


def well_history(params: ToyParams, times: Sequence[float]) -> pd.DataFrame:
    """Table of (t, x_min, width, V0) over times.

    x_min is the signed well edge (<= 0, the wall sits at x = 0); width =
    -x_min is the positive well size, pi hbar / 2p at t = 0.
    """
    rows = []
    for t in times:
        geom = well_geometry(params, float(t))
        rows.append({"t": float(t), "x_min": geom.x_min, "width": geom.width, "V0": geom.V0})
    df = pd.DataFrame(rows, columns=["t", "x_min", "width", "V0"])
    logger.debug(f"Well history: width {df['width'].min():.4g}..{df['width'].max():.4g}")
    return df
