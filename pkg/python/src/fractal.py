"""Length-scaling estimates of the fractal dimension of truncated box states."""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple
import logging
import math
import warnings

import numpy as np
from scipy.fft import dst
from scipy.stats import linregress

try:
    from .config import (
        FIT_DROP_FRACTION,
        FRACTAL_POINTS_PER_MODE,
        LENGTH_CONVERGENCE,
        MIN_FIT_POINTS,
        BoxMode,
    )
    from .errors import ConvergenceWarning, DomainError, NodeError
    from .trajectories import IntegratorConfig, integrate
    from .wavemodel import BoxSpec, PhysicalConstants, box_energies, truncated
    from .workers import parallel_map
except ImportError:
    from src.config import (
        FIT_DROP_FRACTION,
        FRACTAL_POINTS_PER_MODE,
        LENGTH_CONVERGENCE,
        MIN_FIT_POINTS,
        BoxMode,
    )
    from src.errors import ConvergenceWarning, DomainError, NodeError
    from src.trajectories import IntegratorConfig, integrate
    from src.wavemodel import BoxSpec, PhysicalConstants, box_energies, truncated
    from src.workers import parallel_map

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScalingSeries:
    entries: Tuple[Tuple[int, float], ...]

    def __post_init__(self):
        entries = tuple((int(k), float(length)) for k, length in self.entries)
        object.__setattr__(self, "entries", entries)
        ks = [k for k, _ in entries]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise DomainError("scaling series K values must be strictly increasing")
        if any(not length > 0 for _, length in entries):
            raise DomainError("scaling series lengths must be positive")

    @property
    def K(self) -> np.ndarray:
        return np.array([k for k, _ in self.entries], dtype=float)

    @property
    def L(self) -> np.ndarray:
        return np.array([length for _, length in self.entries])


@dataclass(frozen=True)
class DimensionEstimate:
    D_f: float
    slope_stderr: float
    r_squared: float
    n_points: int


def curve_length(x, y) -> float:
    """Euclidean length of the polyline through (x[i], y[i]).

    Raises:
        DomainError: on fewer than 2 points or x not strictly increasing
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or x.shape != y.shape:
        raise DomainError("curve_length needs at least two (x, y) samples of equal shape")
    dx = np.diff(x)
    if np.any(dx <= 0):
        raise DomainError("curve_length needs strictly increasing x")
    return float(np.sum(np.hypot(dx, np.diff(y))))


def _sine_amplitudes(spec: BoxSpec, t: float, c: PhysicalConstants) -> np.ndarray:
    """Time-evolved coefficients re-indexed onto sin(m pi (x - left)/d), m = 1, 2, ..."""
    coeffs = np.asarray(spec.coefficients) * np.exp(-1j * box_energies(spec, c) * t / c.hbar)
    if spec.mode == BoxMode.EXPLICIT_COEFFICIENTS:
        return coeffs
    # cos((2n+1) pi x/d) on [-d/2, d/2] is (-1)^n sin((2n+1) pi (x + d/2)/d)
    n = np.arange(len(coeffs))
    amplitudes = np.zeros(2 * len(coeffs), dtype=complex)
    amplitudes[2 * n] = np.where(n % 2 == 0, 1.0, -1.0) * coeffs
    return amplitudes


def highest_sine_mode(spec: BoxSpec) -> int:
    k = len(spec.coefficients)
    return k if spec.mode == BoxMode.EXPLICIT_COEFFICIENTS else 2 * k - 1


def sample_box_density(spec: BoxSpec, t: float, nx: int, c: PhysicalConstants) -> Tuple[np.ndarray, np.ndarray]:
    """rho(x, t) on nx equally spaced points spanning the well, walls included.

    The mode sum is synthesized with a type-I discrete sine transform.
    """
    amplitudes = _sine_amplitudes(spec, t, c)
    interior = nx - 2
    if interior < len(amplitudes):
        raise DomainError(f"nx={nx} cannot resolve {len(amplitudes)} well modes")
    padded = np.zeros(interior, dtype=complex)
    padded[:len(amplitudes)] = amplitudes

    psi = np.zeros(nx, dtype=complex)
    scale = 0.5 * math.sqrt(2.0 / spec.d)
    psi[1:-1] = scale * (dst(padded.real, type=1) + 1j * dst(padded.imag, type=1))
    left, _ = spec.well
    x = left + np.arange(nx) * spec.d / (nx - 1)
    return x, np.abs(psi) ** 2


def _length_at(spec: BoxSpec, t: float, nx: int, c: PhysicalConstants) -> float:
    x, rho = sample_box_density(spec, t, nx, c)
    return curve_length(x, rho)


def density_length_series(
    base: BoxSpec,
    K_values: Sequence[int],
    t: float,
    c: PhysicalConstants,
    nx: Optional[int] = None,
) -> ScalingSeries:
    """Curve length of rho(., t) for each K-term truncation of base.

    nx defaults to FRACTAL_POINTS_PER_MODE points per highest mode. A
    ConvergenceWarning is issued when doubling the resolution changes the
    largest-K length by more than LENGTH_CONVERGENCE.
    """
    ks = [int(k) for k in K_values]
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise DomainError("K_values must be strictly increasing")
    truncations = [truncated(base, k) for k in ks]
    if nx is None:
        nx = FRACTAL_POINTS_PER_MODE * highest_sine_mode(truncations[-1]) + 1

    lengths = parallel_map(lambda spec: _length_at(spec, t, nx, c), truncations)

    finer = _length_at(truncations[-1], t, 2 * nx - 1, c)
    change = abs(finer - lengths[-1]) / lengths[-1]
    if change > LENGTH_CONVERGENCE:
        msg = f"density length at K={ks[-1]} changed {change:.2%} when doubling nx={nx}"
        logger.warning(msg)
        warnings.warn(msg, ConvergenceWarning)
    logger.info(f"Density length series over K={ks[0]}..{ks[-1]} (nx={nx}, resolution change {change:.2e})")
    return ScalingSeries(tuple(zip(ks, lengths)))


def fractal_dimension(s: ScalingSeries, drop_fraction: float = FIT_DROP_FRACTION) -> DimensionEstimate:
    """D_f = 1 + slope of log L against log K over the large-K part of the series.

    Raises:
        DomainError: with fewer than MIN_FIT_POINTS entries
    """
    n = len(s.entries)
    if n < MIN_FIT_POINTS:
        raise DomainError(f"fractal fit needs at least {MIN_FIT_POINTS} points, got {n}")
    drop = min(int(math.floor(drop_fraction * n)), n - MIN_FIT_POINTS)
    log_k = np.log(s.K[drop:])
    log_l = np.log(s.L[drop:])
    slope, intercept, r_value, p_value, std_err = linregress(log_k, log_l)
    return DimensionEstimate(
        D_f=1.0 + float(slope),
        slope_stderr=float(std_err),
        r_squared=float(r_value) ** 2,
        n_points=n - drop,
    )


def trajectory_save_count(N: int, requested: int) -> int:
    """Saved points needed to follow the fastest mode beat of an N-term state."""
    return max(requested, FRACTAL_POINTS_PER_MODE * math.ceil(N * N / 8) + 1)


def trajectory_length_series(
    base: BoxSpec,
    x0: float,
    N_values: Sequence[int],
    t_span: Tuple[float, float],
    cfg: IntegratorConfig,
    c: PhysicalConstants,
) -> ScalingSeries:
    """Length of the streamline from x0 under each N-term truncation of base.

    Lengths are measured in the (t / span, x / d) plane.

    Raises:
        NodeError: if any streamline runs into a node
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise DomainError(f"t_span must be increasing, got {t_span}")
    left, right = base.well
    if not left < x0 < right:
        raise DomainError(f"x0={x0} is not inside the well [{left}, {right}]")
    ns = [int(n) for n in N_values]
    span = t1 - t0

    def _one(N: int) -> float:
        n_save = trajectory_save_count(N, len(cfg.save_times))
        times = tuple(float(t) for t in np.linspace(t0, t1, n_save))
        run_cfg = IntegratorConfig(times, cfg.rtol, cfg.atol, cfg.max_step, cfg.density_floor, cfg.method)
        traj = integrate(truncated(base, N), x0, run_cfg, c)
        if not traj.completed:
            raise NodeError(f"trajectory from x0={x0} hit a node for N={N}")
        return curve_length((traj.times - t0) / span, traj.positions / base.d)

    lengths = parallel_map(_one, ns)
    logger.info(f"Trajectory length series from x0={x0:g} over N={ns[0]}..{ns[-1]}")
    return ScalingSeries(tuple(zip(ns, lengths)))
