"""Space-time density carpets, recurrence checks and far-field momentum ladders."""

from dataclasses import dataclass
from typing import Optional, Tuple, Union
import logging
import math

import numpy as np

try:
    from .config import (
        FAR_FIELD_ORDER_SEPARATION,
        FAR_FIELD_SPREAD,
        LADDER_DENSITY_FLOOR,
        LADDER_SPIKE_THRESHOLD,
        PLATEAU_TOLERANCE,
        Normalization,
    )
    from .errors import DomainError
    from .wavemodel import (
        BoxSpec,
        ModelSpec,
        PhysicalConstants,
        TalbotSpec,
        box_revival_period,
        eval_model,
        model_period,
        talbot_scales,
    )
    from .workers import parallel_map
except ImportError:
    from src.config import (
        FAR_FIELD_ORDER_SEPARATION,
        FAR_FIELD_SPREAD,
        LADDER_DENSITY_FLOOR,
        LADDER_SPIKE_THRESHOLD,
        PLATEAU_TOLERANCE,
        Normalization,
    )
    from src.errors import DomainError
    from src.wavemodel import (
        BoxSpec,
        ModelSpec,
        PhysicalConstants,
        TalbotSpec,
        box_revival_period,
        eval_model,
        model_period,
        talbot_scales,
    )
    from src.workers import parallel_map

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridSpec:
    x_range: Tuple[float, float]
    nx: int
    t_range: Tuple[float, float]
    nt: int

    def __post_init__(self):
        object.__setattr__(self, "x_range", (float(self.x_range[0]), float(self.x_range[1])))
        object.__setattr__(self, "t_range", (float(self.t_range[0]), float(self.t_range[1])))
        if not self.x_range[0] < self.x_range[1]:
            raise DomainError(f"x_range must be increasing, got {self.x_range}")
        if not self.t_range[0] < self.t_range[1]:
            raise DomainError(f"t_range must be increasing, got {self.t_range}")
        if self.nx < 2 or self.nt < 2:
            raise DomainError(f"grid needs nx, nt >= 2, got nx={self.nx}, nt={self.nt}")

    def x_values(self) -> np.ndarray:
        return np.linspace(self.x_range[0], self.x_range[1], self.nx)

    def t_values(self) -> np.ndarray:
        return np.linspace(self.t_range[0], self.t_range[1], self.nt)

    def refined(self) -> "GridSpec":
        """Same ranges with both steps halved."""
        return GridSpec(self.x_range, 2 * self.nx - 1, self.t_range, 2 * self.nt - 1)


@dataclass(frozen=True)
class CarpetField:
    grid: GridSpec
    values: np.ndarray
    normalization: Normalization = Normalization.RAW


def normalize_rows(values: np.ndarray) -> np.ndarray:
    """Scale each row to a maximum of exactly 1; all-zero rows stay zero."""
    values = np.asarray(values, dtype=float)
    peaks = values.max(axis=1, keepdims=True)
    safe = np.where(peaks > 0, peaks, 1.0)
    return values / safe


def density_carpet(
    model: ModelSpec,
    grid: GridSpec,
    norm: Normalization,
    c: PhysicalConstants,
) -> CarpetField:
    """rho(x, t) on the grid, one row per time."""
    x = grid.x_values()

    def _row(t: float) -> np.ndarray:
        return np.abs(eval_model(model, c, x, float(t)).psi) ** 2

    rows = parallel_map(_row, list(grid.t_values()))
    values = np.vstack(rows)
    norm = Normalization(norm)
    if norm == Normalization.PER_ROW_MAX:
        values = normalize_rows(values)
    logger.debug(f"Sampled {grid.nt}x{grid.nx} carpet ({norm.value})")
    return CarpetField(grid=grid, values=values, normalization=norm)


@dataclass(frozen=True)
class RecurrenceReport:
    period: float
    full_period_mismatch: float
    half_shift_mismatch: Optional[float] = None


def recurrence_report(
    model: Union[TalbotSpec, BoxSpec],
    c: PhysicalConstants,
    base_times: Tuple[float, ...] = (0.0, 0.137),
    nx: int = 801,
) -> RecurrenceReport:
    """Sup-norm density mismatch between t and t + period.

    For Talbot models the period is the Talbot time and the half-period
    comparison rho(x + d/2, t + tau/2) vs rho(x, t) is included; for box
    states it follows from the populated modes (box_revival_period).
    base_times are fractions of the period.
    """
    if isinstance(model, TalbotSpec):
        period = talbot_scales(model.d, c).tau_T
        x = np.linspace(-0.5 * model.d, 0.5 * model.d, nx)
    elif isinstance(model, BoxSpec):
        period = box_revival_period(model, c)
        left, right = model.well
        x = np.linspace(left, right, nx)
    else:
        raise DomainError(f"recurrences are defined for Talbot and box models, not {type(model).__name__}")

    def rho(xs, t):
        return np.abs(eval_model(model, c, xs, t).psi) ** 2

    full = 0.0
    half = 0.0 if isinstance(model, TalbotSpec) else None
    for fraction in base_times:
        t = fraction * period
        base = rho(x, t)
        full = max(full, float(np.max(np.abs(rho(x, t + period) - base))))
        if half is not None:
            shifted = rho(x + 0.5 * model.d, t + 0.5 * period)
            half = max(half, float(np.max(np.abs(shifted - base))))
    logger.info(f"Recurrence mismatch at period {period:.6g}: {full:.3e}" +
                (f", half-shift {half:.3e}" if half is not None else ""))
    return RecurrenceReport(period=period, full_period_mismatch=full, half_shift_mismatch=half)


# ---------------------------------------------------------------------------
# Far field
# ---------------------------------------------------------------------------

def far_field_time(d: float, sigma0: float, n_slits: int, c: PhysicalConstants) -> float:
    """Time by which the slit packets have spread past FAR_FIELD_SPREAD periods
    and neighbouring diffraction orders have separated by
    FAR_FIELD_ORDER_SEPARATION widths of the whole grating."""
    target = FAR_FIELD_SPREAD * d / sigma0
    spread_time = 2.0 * c.mass * sigma0 ** 2 / c.hbar * math.sqrt(max(target * target - 1.0, 0.0))
    separation_time = FAR_FIELD_ORDER_SEPARATION * n_slits * c.mass * d * d / (2.0 * math.pi * c.hbar)
    return max(spread_time, separation_time)


def order_spacing(d: float, t: float, c: PhysicalConstants) -> float:
    """Distance between neighbouring diffraction orders at time t."""
    return 2.0 * math.pi * c.hbar * t / (c.mass * d)


def ladder_grid(d: float, t_far: float, c: PhysicalConstants, orders: int = 3, nx: int = 4001) -> np.ndarray:
    half = (orders + 0.5) * order_spacing(d, t_far, c)
    return np.linspace(-half, half, nx)


@dataclass(frozen=True)
class MomentumLadder:
    x: np.ndarray
    p_normalized: np.ndarray
    density: np.ndarray
    skipped: np.ndarray

    @property
    def skipped_count(self) -> int:
        return int(np.count_nonzero(self.skipped))


def momentum_ladder(
    model: ModelSpec,
    x_grid,
    t_far: float,
    c: PhysicalConstants,
    *,
    period: Optional[float] = None,
    floor: float = LADDER_DENSITY_FLOOR,
) -> MomentumLadder:
    """Bohmian momentum m v(x, t_far) in units of 2 pi hbar / d.

    Points whose density is below floor times the row maximum are skipped
    (NaN momentum, flagged in .skipped).
    """
    d = period if period is not None else model_period(model)
    if d is None:
        raise DomainError("momentum ladder needs a grating period; pass period= for this model")
    x = np.asarray(x_grid, dtype=float)
    w = eval_model(model, c, x, t_far)
    rho = np.abs(w.psi) ** 2
    skipped = rho < floor * rho.max()
    with np.errstate(divide="ignore", invalid="ignore"):
        v = (c.hbar / c.mass) * np.imag(np.conj(w.psi) * w.dpsi) / rho
    p_norm = np.where(skipped, np.nan, c.mass * v / (2.0 * math.pi * c.hbar / d))
    if skipped.any():
        logger.debug(f"Ladder skipped {int(skipped.sum())}/{x.size} low-density points")
    return MomentumLadder(x=x, p_normalized=p_norm, density=rho, skipped=skipped)


def plateau_fraction(ladder: MomentumLadder, tol: float = PLATEAU_TOLERANCE) -> float:
    """Share of non-skipped points within tol of an integer momentum."""
    p = ladder.p_normalized[~ladder.skipped]
    if p.size == 0:
        return 0.0
    return float(np.mean(np.abs(p - np.round(p)) <= tol))


def ladder_spikes(ladder: MomentumLadder, threshold: float = LADDER_SPIKE_THRESHOLD) -> np.ndarray:
    """Indices of local extrema that stand out from the linear momentum trend."""
    keep = ~ladder.skipped
    x = ladder.x[keep]
    p = ladder.p_normalized[keep]
    if p.size < 3:
        return np.array([], dtype=int)
    slope, intercept = np.polyfit(x, p, 1)
    deviation = np.abs(p - (slope * x + intercept))
    inner = deviation[1:-1]
    peaks = np.nonzero((inner >= deviation[:-2]) & (inner >= deviation[2:]) & (inner > threshold))[0] + 1
    return np.nonzero(keep)[0][peaks]


def density_minima(density: np.ndarray) -> np.ndarray:
    inner = density[1:-1]
    return np.nonzero((inner <= density[:-2]) & (inner <= density[2:]))[0] + 1
