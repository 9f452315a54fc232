"""Bohmian trajectory ensembles: sampling, integration and path diagnostics."""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.integrate import solve_ivp, trapezoid

try:
    from .config import (
        CDF_POINTS,
        DENSITY_FLOOR_ABSOLUTE,
        ENSEMBLE_BATCH_SIZE,
        INTEGRATOR_ATOL,
        INTEGRATOR_METHOD,
        INTEGRATOR_RTOL,
        NODE_ABORT_LIMIT,
        TRAJECTORY_DENSITY_FLOOR,
        PathStatus,
        Sampling,
    )
    from .errors import ArityError, DomainError, NodeError
    from .wavemodel import (
        GaussianSpec,
        ModelSpec,
        PhysicalConstants,
        SuperpositionSpec,
        TalbotSpec,
        eval_model,
        model_support,
        spreading_ratio,
        talbot_terms,
    )
    from .workers import parallel_map
except ImportError:
    from src.config import (
        CDF_POINTS,
        DENSITY_FLOOR_ABSOLUTE,
        ENSEMBLE_BATCH_SIZE,
        INTEGRATOR_ATOL,
        INTEGRATOR_METHOD,
        INTEGRATOR_RTOL,
        NODE_ABORT_LIMIT,
        TRAJECTORY_DENSITY_FLOOR,
        PathStatus,
        Sampling,
    )
    from src.errors import ArityError, DomainError, NodeError
    from src.wavemodel import (
        GaussianSpec,
        ModelSpec,
        PhysicalConstants,
        SuperpositionSpec,
        TalbotSpec,
        eval_model,
        model_support,
        spreading_ratio,
        talbot_terms,
    )
    from src.workers import parallel_map

logger = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class IntegratorConfig:
    save_times: Tuple[float, ...]
    rtol: float = INTEGRATOR_RTOL
    atol: float = INTEGRATOR_ATOL
    max_step: float = math.inf
    density_floor: float = TRAJECTORY_DENSITY_FLOOR
    method: str = INTEGRATOR_METHOD

    def __post_init__(self):
        times = tuple(float(t) for t in self.save_times)
        object.__setattr__(self, "save_times", times)
        if not times:
            raise DomainError("save_times must not be empty")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DomainError("save_times must be strictly increasing")
        for name in ("rtol", "atol", "max_step", "density_floor"):
            value = getattr(self, name)
            if not value > 0:
                raise DomainError(f"{name} must be positive, got {value!r}")

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self.save_times)

    def tightened(self, factor: float = 0.5) -> "IntegratorConfig":
        return IntegratorConfig(
            self.save_times, self.rtol * factor, self.atol * factor,
            self.max_step, self.density_floor, self.method,
        )


def uniform_times(t_end: float, n_save: int, t_start: float = 0.0) -> Tuple[float, ...]:
    return tuple(float(t) for t in np.linspace(t_start, t_end, n_save))


@dataclass(frozen=True)
class EnsembleSpec:
    n_traj: int
    sampling: Sampling = Sampling.DENSITY_WEIGHTED
    support: Optional[Tuple[float, float]] = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sampling", Sampling(self.sampling))
        if self.n_traj < 1:
            raise DomainError(f"n_traj must be >= 1, got {self.n_traj}")
        if self.support is not None:
            lo, hi = self.support
            object.__setattr__(self, "support", (float(lo), float(hi)))
            if not lo < hi:
                raise DomainError(f"support must satisfy xmin < xmax, got {self.support}")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    positions: np.ndarray
    status: PathStatus = PathStatus.COMPLETED

    @property
    def completed(self) -> bool:
        return self.status == PathStatus.COMPLETED


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Paths on a shared time grid; row i of paths starts at x0[i]."""

    times: np.ndarray
    x0: np.ndarray
    paths: np.ndarray
    flags: Tuple[PathStatus, ...] = field(default_factory=tuple)

    @property
    def n_traj(self) -> int:
        return len(self.x0)

    @property
    def completed_mask(self) -> np.ndarray:
        return np.array([f == PathStatus.COMPLETED for f in self.flags], dtype=bool)

    @property
    def abort_count(self) -> int:
        return int(np.count_nonzero(~self.completed_mask))

    @property
    def abort_fraction(self) -> float:
        return self.abort_count / self.n_traj

    def trajectory(self, i: int) -> Trajectory:
        return Trajectory(self.times, self.paths[i], self.flags[i])


# ---------------------------------------------------------------------------
# Velocity field
# ---------------------------------------------------------------------------

def velocity_at(model: ModelSpec, x, t: float, c: PhysicalConstants, floor: float = DENSITY_FLOOR_ABSOLUTE):
    """Guidance velocity (hbar/m) Im(psi'/psi).

    Raises:
        NodeError: if the density is below floor
    """
    w = eval_model(model, c, x, t)
    rho = np.abs(w.psi) ** 2
    if np.any(rho < floor):
        raise NodeError(f"velocity undefined: density {np.min(rho):.3e} below floor at t={t}")
    return (c.hbar / c.mass) * np.imag(w.dpsi / w.psi)


def velocity_double_sum(spec: TalbotSpec, x, t: float, c: PhysicalConstants):
    """Talbot velocity as the ratio of double sums over pairs of diffraction orders."""
    _, p, w, omega = talbot_terms(spec, c)
    theta = np.multiply.outer(np.asarray(x, dtype=float), p / c.hbar) - omega * t
    diff = theta[..., np.newaxis, :] - theta[..., :, np.newaxis]
    pair_weights = np.outer(w, w)
    cosines = pair_weights * np.cos(diff)
    numerator = np.sum(cosines * p, axis=(-2, -1))
    denominator = c.mass * np.sum(cosines, axis=(-2, -1))
    if np.any(np.abs(denominator) < DENSITY_FLOOR_ABSOLUTE):
        raise NodeError("Talbot double sum hit a density node")
    return numerator / denominator


def _velocity_field(model: ModelSpec, c: PhysicalConstants):
    def velocity(t, y):
        w = eval_model(model, c, y, t)
        rho = np.maximum(np.abs(w.psi) ** 2, _TINY)
        return (c.hbar / c.mass) * np.imag(np.conj(w.psi) * w.dpsi) / rho

    return velocity


def closed_form_gaussian_path(spec: GaussianSpec, x_init, t, c: PhysicalConstants):
    """Exact free-Gaussian streamline x(t) - x_t = (x(0) - x0) sigma_t/sigma0."""
    ratio = np.hypot(1.0, c.hbar * np.asarray(t) / (2.0 * c.mass * spec.sigma0 ** 2))
    return spec.x0 + spec.v * np.asarray(t) + (np.asarray(x_init) - spec.x0) * ratio


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------

def _solve(model: ModelSpec, y0: np.ndarray, cfg: IntegratorConfig, c: PhysicalConstants, rho_ref: float):
    """Integrate a vector of starting points together; returns (positions, solver status)."""
    times = cfg.times
    out = np.full((len(y0), len(times)), np.nan)
    out[:, 0] = y0
    if len(times) == 1:
        return out, 0

    velocity = _velocity_field(model, c)
    floor = cfg.density_floor

    def node_event(t, y):
        w = eval_model(model, c, y, t)
        return float(np.min(np.abs(w.psi) ** 2)) / rho_ref - floor

    node_event.terminal = True
    node_event.direction = -1

    sol = solve_ivp(
        velocity,
        (times[0], times[-1]),
        y0,
        method=cfg.method,
        t_eval=times,
        rtol=cfg.rtol,
        atol=cfg.atol,
        max_step=cfg.max_step,
        events=node_event,
    )
    if sol.status == -1:
        logger.warning(f"Integrator failed for {len(y0)} path(s): {sol.message}")
    n_done = sol.y.shape[1]
    out[:, :n_done] = sol.y
    return out, sol.status


def _start_density(model: ModelSpec, x0, t0: float, c: PhysicalConstants) -> np.ndarray:
    return np.abs(eval_model(model, c, np.atleast_1d(np.asarray(x0, dtype=float)), t0).psi) ** 2


def integrate(
    model: ModelSpec,
    x0: float,
    cfg: IntegratorConfig,
    c: PhysicalConstants,
    rho_ref: Optional[float] = None,
) -> Trajectory:
    """Integrate one streamline dx/dt = v(x, t) from x0 at save_times[0].

    The density floor is relative to rho_ref (default: the starting density).
    A path that falls below it stops there; later positions are NaN and the
    trajectory is flagged NODE_ABORT.

    Raises:
        NodeError: if the starting point is already below the floor
    """
    t0 = cfg.save_times[0]
    rho0 = float(_start_density(model, x0, t0, c)[0])
    ref = rho0 if rho_ref is None else rho_ref
    if rho0 < DENSITY_FLOOR_ABSOLUTE or rho0 < cfg.density_floor * ref:
        raise NodeError(f"starting point x0={x0} lies on a density node (rho={rho0:.3e})")

    positions, status = _solve(model, np.array([float(x0)]), cfg, c, ref)
    flag = PathStatus.COMPLETED if status == 0 else PathStatus.NODE_ABORT
    if flag == PathStatus.NODE_ABORT:
        logger.debug(f"Path from x0={x0:.6g} aborted near a node")
    return Trajectory(cfg.times, positions[0], flag)


def _integrate_batch(model: ModelSpec, batch: np.ndarray, cfg: IntegratorConfig, c: PhysicalConstants,
                     rho_ref: float) -> Tuple[np.ndarray, list]:
    start = _start_density(model, batch, cfg.save_times[0], c)
    if np.all(start >= cfg.density_floor * rho_ref):
        positions, status = _solve(model, batch, cfg, c, rho_ref)
        if status == 0:
            return positions, [PathStatus.COMPLETED] * len(batch)

    # One bad path stops the whole vector solve, so redo this batch path by path
    logger.debug(f"Batch of {len(batch)} paths hit a node; integrating individually")
    rows, flags = [], []
    for x0 in batch:
        try:
            traj = integrate(model, float(x0), cfg, c, rho_ref)
            rows.append(traj.positions)
            flags.append(traj.status)
        except NodeError:
            row = np.full(len(cfg.save_times), np.nan)
            row[0] = x0
            rows.append(row)
            flags.append(PathStatus.NODE_ABORT)
    return np.vstack(rows), flags


def reference_density(model: ModelSpec, t: float, c: PhysicalConstants,
                      support: Optional[Tuple[float, float]] = None) -> float:
    lo, hi = support or model_support(model, c, t)
    x = np.linspace(lo, hi, CDF_POINTS)
    return float(np.max(np.abs(eval_model(model, c, x, t).psi) ** 2))


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_initial(spec: EnsembleSpec, model: ModelSpec, t0: float, c: PhysicalConstants) -> np.ndarray:
    """Starting positions for an ensemble, fully determined by spec.seed.

    DENSITY_WEIGHTED inverts the piecewise-linear CDF of rho(., t0) tabulated
    on CDF_POINTS cells of the support; path i draws from its own generator
    seeded with (seed, i). UNIFORM_SUPPORT spaces points evenly, endpoints
    included.

    Raises:
        DomainError: if the support holds (almost) no probability
    """
    lo, hi = spec.support or model_support(model, c, t0)
    n = spec.n_traj

    if spec.sampling == Sampling.UNIFORM_SUPPORT:
        if n == 1:
            return np.array([0.5 * (lo + hi)])
        return np.linspace(lo, hi, n)

    edges = np.linspace(lo, hi, CDF_POINTS + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    pdf = np.abs(eval_model(model, c, mids, t0).psi) ** 2
    cell_mass = pdf * np.diff(edges)
    mass = float(np.sum(cell_mass))
    if mass < 1e-12:
        raise DomainError(f"support [{lo}, {hi}] holds probability {mass:.3e}; nothing to sample")
    cdf = np.concatenate(([0.0], np.cumsum(cell_mass))) / mass

    u = np.array([np.random.default_rng([spec.seed, i]).random() for i in range(n)])
    return np.interp(u, cdf, edges)


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------

def run_ensemble(
    model: ModelSpec,
    spec: EnsembleSpec,
    cfg: IntegratorConfig,
    c: PhysicalConstants,
    x0: Optional[np.ndarray] = None,
) -> TrajectoryEnsemble:
    """Sample (unless x0 is given) and integrate an ensemble on the shared save_times.

    Paths are integrated in fixed batches of ENSEMBLE_BATCH_SIZE, so the
    result does not depend on which worker finishes first.
    """
    t0 = cfg.save_times[0]
    starts = sample_initial(spec, model, t0, c) if x0 is None else np.asarray(x0, dtype=float)
    rho_ref = reference_density(model, t0, c, spec.support)

    batches = [starts[i:i + ENSEMBLE_BATCH_SIZE] for i in range(0, len(starts), ENSEMBLE_BATCH_SIZE)]
    logger.info(f"Integrating {len(starts)} paths in {len(batches)} batch(es) to t={cfg.save_times[-1]:g}")
    results = parallel_map(lambda b: _integrate_batch(model, b, cfg, c, rho_ref), batches)

    paths = np.vstack([r[0] for r in results])
    flags = tuple(f for r in results for f in r[1])
    ensemble = TrajectoryEnsemble(times=cfg.times, x0=starts, paths=paths, flags=flags)

    if ensemble.abort_count:
        level = logging.WARNING if ensemble.abort_fraction > NODE_ABORT_LIMIT else logging.INFO
        logger.log(level, f"{ensemble.abort_count}/{ensemble.n_traj} paths aborted at density nodes")
    return ensemble


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrderingReport:
    violations: int
    first_pair: Optional[Tuple[int, int]] = None
    first_time: Optional[float] = None

    @property
    def ok(self) -> bool:
        return self.violations == 0


def ordering_check(e: TrajectoryEnsemble) -> OrderingReport:
    """Check that the order of starting positions survives at every saved time.

    Aborted (NaN) positions are left out of the comparison at the times
    where they are missing.
    """
    order = np.argsort(e.x0, kind="stable")
    violations = 0
    first_pair = None
    first_time = None
    for k, t in enumerate(e.times):
        column = e.paths[order, k]
        alive = ~np.isnan(column)
        idx = order[alive]
        values = column[alive]
        bad = np.nonzero(np.diff(values) < 0)[0]
        if bad.size:
            violations += int(bad.size)
            if first_pair is None:
                first_pair = (int(idx[bad[0]]), int(idx[bad[0] + 1]))
                first_time = float(t)
    return OrderingReport(violations, first_pair, first_time)


def mirror_confinement(e: TrajectoryEnsemble, line: float = 0.0) -> int:
    """Number of paths that ever change side of x = line."""
    start_side = np.sign(e.x0 - line)
    sides = np.sign(e.paths - line)
    changed = (sides != start_side[:, np.newaxis]) & ~np.isnan(e.paths)
    return int(np.count_nonzero(np.any(changed, axis=1)))


def channeling_check(e: TrajectoryEnsemble, d: float, tol: float = 1e-9) -> int:
    """Number of paths that leave the grating unit cell they start in."""
    cell = np.round(e.x0 / d)
    lower = (cell - 0.5) * d - tol * d
    upper = (cell + 0.5) * d + tol * d
    outside = ((e.paths < lower[:, np.newaxis]) | (e.paths > upper[:, np.newaxis])) & ~np.isnan(e.paths)
    return int(np.count_nonzero(np.any(outside, axis=1)))


def tolerance_convergence(model: ModelSpec, x0, cfg: IntegratorConfig, c: PhysicalConstants) -> float:
    """Largest change of the saved positions when rtol and atol are halved.

    Measured in units of atol + rtol * max|x| over paths that complete in
    both runs; NaN when none does.
    """
    starts = np.atleast_1d(np.asarray(x0, dtype=float))
    spec = EnsembleSpec(len(starts))
    loose = run_ensemble(model, spec, cfg, c, x0=starts)
    tight = run_ensemble(model, spec, cfg.tightened(), c, x0=starts)
    keep = loose.completed_mask & tight.completed_mask
    if not keep.any():
        return math.nan
    change = float(np.max(np.abs(loose.paths[keep] - tight.paths[keep])))
    scale = cfg.atol + cfg.rtol * float(np.max(np.abs(loose.paths[keep])))
    logger.debug(f"Halving tolerances moved {int(keep.sum())} paths by at most {change:.3e}")
    return change / scale


def density_histogram_deviation(
    positions: np.ndarray,
    model: ModelSpec,
    t: float,
    c: PhysicalConstants,
    bins: int = 50,
    support: Optional[Tuple[float, float]] = None,
) -> float:
    """Sup-norm gap between the ensemble histogram and rho(., t), both as probability per bin."""
    positions = np.asarray(positions, dtype=float)
    positions = positions[~np.isnan(positions)]
    if positions.size == 0:
        raise DomainError("no finite positions to histogram")
    lo, hi = support or (float(positions.min()), float(positions.max()))
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(positions, bins=edges)
    observed = counts / positions.size

    expected = np.empty(bins)
    for k in range(bins):
        x = np.linspace(edges[k], edges[k + 1], 65)
        expected[k] = trapezoid(np.abs(eval_model(model, c, x, t).psi) ** 2, x)
    expected /= expected.sum()
    return float(np.max(np.abs(observed - expected)))


@dataclass(frozen=True)
class ExchangeReport:
    line: float
    left_count: int
    right_count: int
    left_final_velocity: float
    right_final_velocity: float
    left_to_right: int
    right_to_left: int
    left_final_spread: float
    right_final_spread: float
    left_initial_spread: float
    right_initial_spread: float

    @property
    def migrations(self) -> int:
        return self.left_to_right + self.right_to_left


def exchange_diagnostics(e: TrajectoryEnsemble, model: SuperpositionSpec, c: PhysicalConstants) -> ExchangeReport:
    """Per-side summary of a two-packet ensemble at its last saved time.

    Paths are classified by the side of the symmetry line they start on.
    The line is the midpoint of the packet centers, moving with their mean
    velocity (x = 0 for symmetric setups).

    Raises:
        ArityError: unless the model has exactly two components
    """
    if not isinstance(model, SuperpositionSpec) or len(model.components) != 2:
        n = len(model.components) if isinstance(model, SuperpositionSpec) else 1
        raise ArityError(f"exchange diagnostics need exactly two packets, got {n}")

    a, b = model.components
    t_start, t_end = float(e.times[0]), float(e.times[-1])
    mid_velocity = 0.5 * (a.v + b.v)
    line_start = 0.5 * (a.x0 + b.x0) + mid_velocity * t_start
    line_end = 0.5 * (a.x0 + b.x0) + mid_velocity * t_end

    done = e.completed_mask
    final = e.paths[:, -1]
    left = (e.x0 < line_start) & done
    right = (e.x0 >= line_start) & done

    def _mean_velocity(mask):
        if not np.any(mask):
            return math.nan
        v = _velocity_field(model, c)(t_end, final[mask])
        return float(np.mean(v))

    def _spread(values):
        return float(np.std(values)) if values.size > 1 else math.nan

    return ExchangeReport(
        line=line_end,
        left_count=int(np.count_nonzero(left)),
        right_count=int(np.count_nonzero(right)),
        left_final_velocity=_mean_velocity(left),
        right_final_velocity=_mean_velocity(right),
        left_to_right=int(np.count_nonzero(final[left] >= line_end)),
        right_to_left=int(np.count_nonzero(final[right] < line_end)),
        left_final_spread=_spread(final[left]),
        right_final_spread=_spread(final[right]),
        left_initial_spread=_spread(e.x0[left]),
        right_initial_spread=_spread(e.x0[right]),
    )


def packet_width(spec: GaussianSpec, t: float, c: PhysicalConstants) -> float:
    """sigma_t of one component, the width its density has at time t."""
    return spec.sigma0 * spreading_ratio(spec.sigma0, t, c)
