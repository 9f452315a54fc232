"""Closed-form wave functions and their first two spatial derivatives.

Every model is an immutable spec; evaluation is a pure function of
(spec, constants, x, t) and is vectorized over x.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np
from scipy.integrate import trapezoid

try:
    from .config import BOX_SIGMA_LIMIT, DEFAULT_HBAR, DEFAULT_MASS, SERIES_TAIL, BoxMode
    from .errors import ArityError, DomainError, OverflowGuard
except ImportError:
    from src.config import BOX_SIGMA_LIMIT, DEFAULT_HBAR, DEFAULT_MASS, SERIES_TAIL, BoxMode
    from src.errors import ArityError, DomainError, OverflowGuard

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-10

# Width growth allowed while counter-propagating packets swap sides
CRITICAL_SPREAD_FACTOR = 2.2


def _positive(name: str, value: float) -> None:
    if not (np.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = DEFAULT_HBAR
    mass: float = DEFAULT_MASS

    def __post_init__(self):
        _positive("hbar", self.hbar)
        _positive("mass", self.mass)


@dataclass(frozen=True)
class WaveSample:
    """psi and its first two x-derivatives (scalars or equally shaped arrays)."""

    psi: complex
    dpsi: complex
    d2psi: complex

    def __add__(self, other: "WaveSample") -> "WaveSample":
        return WaveSample(self.psi + other.psi, self.dpsi + other.dpsi, self.d2psi + other.d2psi)

    def scaled(self, factor: complex) -> "WaveSample":
        return WaveSample(factor * self.psi, factor * self.dpsi, factor * self.d2psi)


@dataclass(frozen=True)
class GaussianSpec:
    x0: float
    v: float
    sigma0: float
    weight: complex = 1.0 + 0.0j

    def __post_init__(self):
        _positive("sigma0", self.sigma0)
        if not np.isfinite(abs(complex(self.weight))):
            raise DomainError(f"weight must be finite, got {self.weight!r}")


@dataclass(frozen=True)
class SuperpositionSpec:
    components: Tuple[GaussianSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise DomainError("a superposition needs at least one component")


@dataclass(frozen=True)
class TalbotSpec:
    d: float
    sigma0: float
    nmax: Optional[int] = None

    def __post_init__(self):
        _positive("d", self.d)
        _positive("sigma0", self.sigma0)
        if self.nmax is not None and self.nmax < 0:
            raise DomainError(f"nmax must be >= 0, got {self.nmax}")

    @property
    def resolved_nmax(self) -> int:
        return self.nmax if self.nmax is not None else talbot_nmax(self.d, self.sigma0)


@dataclass(frozen=True)
class BoxSpec:
    """Bound superposition in an infinite well of width d.

    GAUSSIAN_IN_WELL uses the symmetric modes cos(p_n x/hbar) on [-d/2, d/2]
    with p_n = (2n+1) pi hbar/d. EXPLICIT_COEFFICIENTS uses the sine modes
    sin((n+1) pi x/d) on [0, d]; coefficients[k] belongs to mode k+1.
    """

    d: float
    coefficients: Tuple[complex, ...]
    mode: BoxMode = BoxMode.EXPLICIT_COEFFICIENTS

    def __post_init__(self):
        _positive("d", self.d)
        coeffs = tuple(complex(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "mode", BoxMode(self.mode))
        if not coeffs:
            raise DomainError("a box state needs at least one coefficient")
        total = sum(abs(c) ** 2 for c in coeffs)
        if abs(total - 1.0) > NORM_TOLERANCE:
            raise DomainError(f"box coefficients must satisfy sum |c|^2 = 1, got {total:.15g}")

    @property
    def well(self) -> Tuple[float, float]:
        if self.mode == BoxMode.GAUSSIAN_IN_WELL:
            return (-0.5 * self.d, 0.5 * self.d)
        return (0.0, self.d)

    @property
    def wavenumbers(self) -> np.ndarray:
        n = np.arange(len(self.coefficients))
        if self.mode == BoxMode.GAUSSIAN_IN_WELL:
            return (2 * n + 1) * np.pi / self.d
        return (n + 1) * np.pi / self.d


@dataclass(frozen=True)
class HarmonicSpec:
    omega: float
    levels: Tuple[Tuple[int, complex], ...]

    def __post_init__(self):
        _positive("omega", self.omega)
        levels = tuple((int(n), complex(c)) for n, c in self.levels)
        object.__setattr__(self, "levels", levels)
        indices = [n for n, _ in levels]
        if not levels:
            raise DomainError("a harmonic state needs at least one level")
        if min(indices) < 0 or len(set(indices)) != len(indices):
            raise DomainError(f"level indices must be distinct and >= 0, got {indices}")
        total = sum(abs(c) ** 2 for _, c in levels)
        if abs(total - 1.0) > NORM_TOLERANCE:
            raise DomainError(f"level weights must satisfy sum |c|^2 = 1, got {total:.15g}")


@dataclass(frozen=True)
class PlaneWaveSpec:
    p: float
    amplitude: complex = 1.0 + 0.0j


@dataclass(frozen=True)
class GlobalPhaseSpec:
    """base multiplied by exp(i(alpha + cubic * t**3))."""

    base: "ModelSpec"
    alpha: float = 0.0
    cubic: float = 0.0


ModelSpec = Union[
    GaussianSpec, SuperpositionSpec, TalbotSpec, BoxSpec, HarmonicSpec, PlaneWaveSpec, GlobalPhaseSpec
]


class CriticalSpeed(NamedTuple):
    v: float
    v_over_vs: float


class TalbotScales(NamedTuple):
    z_T: Optional[float]
    tau_T: float


def _as_x(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _finish(x, psi, dpsi, d2psi) -> WaveSample:
    if np.ndim(x) == 0:
        return WaveSample(complex(psi), complex(dpsi), complex(d2psi))
    return WaveSample(psi, dpsi, d2psi)


def _check_time(t: float) -> None:
    if t < 0:
        raise DomainError(f"evaluation time must be >= 0, got {t}")


# ---------------------------------------------------------------------------
# Gaussian packets
# ---------------------------------------------------------------------------

def complex_width(sigma0: float, t: float, c: PhysicalConstants) -> complex:
    """sigma0 * (1 + i hbar t / 2 m sigma0^2)."""
    return sigma0 * (1.0 + 1j * c.hbar * t / (2.0 * c.mass * sigma0 ** 2))


def spreading_ratio(sigma0: float, t: float, c: PhysicalConstants) -> float:
    """sigma_t / sigma0 = sqrt(1 + (hbar t / 2 m sigma0^2)^2)."""
    _positive("sigma0", sigma0)
    _check_time(t)
    return float(np.hypot(1.0, c.hbar * t / (2.0 * c.mass * sigma0 ** 2)))


def eval_gaussian(spec: GaussianSpec, c: PhysicalConstants, x, t: float) -> WaveSample:
    """Free Gaussian packet with complex width, moving at spec.v.

    Args:
        spec: packet parameters (center x0, speed v, width sigma0, weight)
        c: physical constants
        x: position or array of positions
        t: time (>= 0)

    Returns:
        WaveSample with psi, dpsi/dx, d2psi/dx2
    """
    _check_time(t)
    xs = _as_x(x)
    p = c.mass * spec.v
    width = complex_width(spec.sigma0, t, c)
    center = spec.x0 + spec.v * t
    energy = p * p / (2.0 * c.mass)

    a = 1.0 / (4.0 * spec.sigma0 * width)
    k = p / c.hbar
    u = xs - center
    prefactor = (2.0 * np.pi) ** -0.25 / np.sqrt(width)

    psi = complex(spec.weight) * prefactor * np.exp(-a * u * u + 1j * k * u + 1j * energy * t / c.hbar)
    g = -2.0 * a * u + 1j * k
    return _finish(x, psi, psi * g, psi * (g * g - 2.0 * a))


def normalized_superposition(components: Sequence[GaussianSpec], c: PhysicalConstants) -> SuperpositionSpec:
    """Rescale all weights so the superposition has unit norm (ratios kept)."""
    raw = SuperpositionSpec(tuple(components))
    norm = model_norm(raw, c, 0.0)
    if norm <= 0:
        raise DomainError("superposition has zero norm")
    scale = 1.0 / math.sqrt(norm)
    return SuperpositionSpec(tuple(
        GaussianSpec(g.x0, g.v, g.sigma0, complex(g.weight) * scale) for g in components
    ))


def slit_array(n_slits: int, d: float, sigma0: float, c: PhysicalConstants) -> SuperpositionSpec:
    """N equal Gaussian slits spaced d apart, centered on x = 0."""
    if n_slits < 1:
        raise DomainError(f"n_slits must be >= 1, got {n_slits}")
    _positive("d", d)
    offset = 0.5 * (n_slits - 1)
    return normalized_superposition(
        [GaussianSpec((k - offset) * d, 0.0, sigma0) for k in range(n_slits)], c
    )


def counter_propagating(
    d: float,
    v: float,
    sigma_left: float,
    sigma_right: float,
    c: PhysicalConstants,
    weight_left: float = 0.5,
    weight_right: float = 0.5,
) -> SuperpositionSpec:
    """Two packets at -d/2 and +d/2 moving towards each other at speed v.

    weight_left/right are the target probabilities of each packet.
    """
    if weight_left <= 0 or weight_right <= 0:
        raise DomainError("packet weights must be positive")
    return normalized_superposition(
        [
            GaussianSpec(-0.5 * d, abs(v), sigma_left, math.sqrt(weight_left)),
            GaussianSpec(0.5 * d, -abs(v), sigma_right, math.sqrt(weight_right)),
        ],
        c,
    )


def critical_speed(d: float, sigma0: float, c: PhysicalConstants) -> CriticalSpeed:
    """Speed at which packets swap sides while growing only about 10% wider."""
    _positive("d", d)
    _positive("sigma0", sigma0)
    v = CRITICAL_SPREAD_FACTOR * c.hbar * d / (2.0 * c.mass * sigma0 ** 2)
    return CriticalSpeed(v=v, v_over_vs=CRITICAL_SPREAD_FACTOR * d / sigma0)


# ---------------------------------------------------------------------------
# Talbot grating
# ---------------------------------------------------------------------------

def talbot_nmax(d: float, sigma0: float, tail: float = SERIES_TAIL) -> int:
    """Smallest |n| whose Gaussian weight exp(-sigma0^2 p_n^2/hbar^2) is below tail."""
    limit = math.sqrt(math.log(1.0 / tail)) * d / (2.0 * math.pi * sigma0)
    return int(math.floor(limit)) + 1


def talbot_scales(d: float, c: PhysicalConstants, wavelength: Optional[float] = None) -> TalbotScales:
    """Talbot distance (when a wavelength is given) and Talbot time m d^2 / pi hbar."""
    _positive("d", d)
    z_t = None
    if wavelength is not None:
        _positive("wavelength", wavelength)
        z_t = d * d / wavelength
    return TalbotScales(z_T=z_t, tau_T=c.mass * d * d / (math.pi * c.hbar))


def talbot_terms(spec: TalbotSpec, c: PhysicalConstants) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Series indices, momenta, unit-cell normalized weights and frequencies.

    Terms are ordered by |n| ascending (0, 1, -1, 2, -2, ...).
    """
    nmax = spec.resolved_nmax
    n = np.array([0] + [s * k for k in range(1, nmax + 1) for s in (1, -1)], dtype=float)
    p = 2.0 * np.pi * n * c.hbar / spec.d
    omega = p * p / (2.0 * c.mass * c.hbar)
    prefactor = math.sqrt(1.0 / spec.d) * (8.0 * math.pi * spec.sigma0 ** 2 / spec.d ** 2) ** 0.25
    w = prefactor * np.exp(-(spec.sigma0 * p / c.hbar) ** 2)
    # exact unit-cell integral of |psi|^2 by orthogonality of the plane waves
    cell_norm = spec.d * float(np.sum(w * w))
    return n, p, w / math.sqrt(cell_norm), omega


def eval_talbot(spec: TalbotSpec, c: PhysicalConstants, x, t: float) -> WaveSample:
    _, p, w, omega = talbot_terms(spec, c)
    xs = _as_x(x)
    k = p / c.hbar
    phase = np.exp(1j * (np.multiply.outer(xs, k) - omega * t))
    terms = phase * w
    psi = terms.sum(axis=-1)
    dpsi = (terms * (1j * k)).sum(axis=-1)
    d2psi = (terms * (-k * k)).sum(axis=-1)
    return _finish(x, psi, dpsi, d2psi)


# ---------------------------------------------------------------------------
# Infinite well
# ---------------------------------------------------------------------------

def recurrence_time(d: float, c: PhysicalConstants) -> float:
    """Density revival period m d^2 / 2 pi hbar of the odd-parity well modes."""
    _positive("d", d)
    return c.mass * d * d / (2.0 * math.pi * c.hbar)


def box_revival_period(spec: BoxSpec, c: PhysicalConstants) -> float:
    """Shortest density revival period of a box state.

    Populated modes with sine index j have E_j proportional to j^2, so the
    density repeats after 4 m d^2 / (pi hbar g) with g the gcd of the
    j^2 differences. Odd-only states have g >= 8 and revive within
    recurrence_time; a single mode is stationary and gets the full period.
    """
    j = np.rint(spec.wavenumbers * spec.d / math.pi).astype(np.int64)
    populated = j[np.abs(np.asarray(spec.coefficients)) > 0]
    g = int(np.gcd.reduce(populated * populated - populated[0] ** 2))
    full = 4.0 * c.mass * spec.d * spec.d / (math.pi * c.hbar)
    return full / g if g > 0 else full


def _normalize(coefficients: Sequence[complex]) -> Tuple[complex, ...]:
    arr = np.asarray(coefficients, dtype=complex)
    total = float(np.sum(np.abs(arr) ** 2))
    if total <= 0 or not np.isfinite(total):
        raise DomainError("coefficient vector has zero or non-finite norm")
    return tuple(complex(v) for v in arr / math.sqrt(total))


def box_state(d: float, coefficients: Sequence[complex], mode: BoxMode = BoxMode.EXPLICIT_COEFFICIENTS) -> BoxSpec:
    """Box superposition with the coefficient vector renormalized."""
    return BoxSpec(d, _normalize(coefficients), mode)


def gaussian_in_well(d: float, sigma0: float, c: PhysicalConstants, n_terms: Optional[int] = None) -> BoxSpec:
    """Gaussian centered in the well, expanded on the symmetric modes."""
    _positive("d", d)
    _positive("sigma0", sigma0)
    if sigma0 > BOX_SIGMA_LIMIT * d:
        logger.warning(
            f"sigma0={sigma0:g} exceeds d/8 ({BOX_SIGMA_LIMIT * d:g}); "
            "the packet does not vanish at the walls"
        )
    if n_terms is None:
        limit = math.sqrt(math.log(1.0 / SERIES_TAIL)) * d / (math.pi * sigma0)
        n_terms = int(math.floor(0.5 * (limit - 1.0))) + 2
    n = np.arange(n_terms)
    p = (2 * n + 1) * math.pi * c.hbar / d
    weights = np.exp(-(sigma0 * p / c.hbar) ** 2)
    return box_state(d, weights, BoxMode.GAUSSIAN_IN_WELL)


def truncated(spec: BoxSpec, K: int) -> BoxSpec:
    """First K modes of a box state, renormalized."""
    if K < 1:
        raise DomainError(f"truncation order must be >= 1, got {K}")
    if K >= len(spec.coefficients):
        return spec
    return box_state(spec.d, spec.coefficients[:K], spec.mode)


def square_wave_coefficients(L: float, w: float, N: int, normalize: bool = True) -> np.ndarray:
    """Projections of a centered square of width w onto the sine modes of [0, L].

    Entry k is the coefficient of mode n = k + 1. w == L is the full-width
    limit (a constant in the well).
    """
    _positive("L", L)
    _positive("w", w)
    if w > L:
        raise DomainError(f"square width w={w} must not exceed the well length L={L}")
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    n = np.arange(1, N + 1)
    # sin(n pi / 2) exactly, so antisymmetric modes vanish identically
    parity = np.array([0.0, 1.0, 0.0, -1.0])[n % 4]
    coeffs = (
        math.sqrt(2.0 / (L * w)) * (2.0 * L / (n * math.pi)) * parity * np.sin(n * math.pi * w / (2.0 * L))
    )
    if normalize:
        coeffs = coeffs / math.sqrt(float(np.sum(coeffs * coeffs)))
    return coeffs


def square_wave_state(L: float, w: float, N: int) -> BoxSpec:
    return box_state(L, square_wave_coefficients(L, w, N), BoxMode.EXPLICIT_COEFFICIENTS)


def tent_state(L: float, N: int) -> BoxSpec:
    """Tent min(x, L - x) on [0, L] truncated to its first N sine modes.

    Continuous with a kink at the center, so the coefficients fall off as
    1/n^2 and the density curve keeps a finite length at every time.
    """
    _positive("L", L)
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    n = np.arange(1, N + 1)
    parity = np.array([0.0, 1.0, 0.0, -1.0])[n % 4]
    return box_state(L, parity / (n * n), BoxMode.EXPLICIT_COEFFICIENTS)


def box_energies(spec: BoxSpec, c: PhysicalConstants) -> np.ndarray:
    k = spec.wavenumbers
    return (c.hbar * k) ** 2 / (2.0 * c.mass)


def eval_box(spec: BoxSpec, c: PhysicalConstants, x, t: float) -> WaveSample:
    xs = _as_x(x)
    k = spec.wavenumbers
    amp = math.sqrt(2.0 / spec.d) * np.asarray(spec.coefficients) * np.exp(-1j * box_energies(spec, c) * t / c.hbar)
    left, right = spec.well
    if spec.mode == BoxMode.GAUSSIAN_IN_WELL:
        arg = np.multiply.outer(xs, k)
        f, df, d2f = np.cos(arg), -k * np.sin(arg), -k * k * np.cos(arg)
    else:
        arg = np.multiply.outer(xs - left, k)
        f, df, d2f = np.sin(arg), k * np.cos(arg), -k * k * np.sin(arg)
    inside = (xs >= left) & (xs <= right)
    psi = np.where(inside, f @ amp, 0.0)
    dpsi = np.where(inside, df @ amp, 0.0)
    d2psi = np.where(inside, d2f @ amp, 0.0)
    return _finish(x, psi, dpsi, d2psi)


# ---------------------------------------------------------------------------
# Harmonic oscillator
# ---------------------------------------------------------------------------

def harmonic_state(omega: float, levels: Sequence[Tuple[int, complex]]) -> HarmonicSpec:
    indices = [n for n, _ in levels]
    coeffs = _normalize([cf for _, cf in levels])
    return HarmonicSpec(omega, tuple(zip(indices, coeffs)))


def harmonic_eigenfunctions(nmax: int, x, omega: float, c: PhysicalConstants) -> np.ndarray:
    """Normalized oscillator eigenfunctions phi_0..phi_nmax stacked on axis 0."""
    beta = math.sqrt(c.mass * omega / c.hbar)
    xi = beta * _as_x(x)
    phis = np.empty((nmax + 1,) + xi.shape)
    phis[0] = (c.mass * omega / (math.pi * c.hbar)) ** 0.25 * np.exp(-0.5 * xi * xi)
    if nmax >= 1:
        phis[1] = math.sqrt(2.0) * xi * phis[0]
    for n in range(1, nmax):
        phis[n + 1] = math.sqrt(2.0 / (n + 1)) * xi * phis[n] - math.sqrt(n / (n + 1)) * phis[n - 1]
    return phis


def eval_harmonic(spec: HarmonicSpec, c: PhysicalConstants, x, t: float) -> WaveSample:
    xs = _as_x(x)
    beta = math.sqrt(c.mass * spec.omega / c.hbar)
    top = max(n for n, _ in spec.levels) + 1
    phis = harmonic_eigenfunctions(top, xs, spec.omega, c)
    xi = beta * xs
    psi = np.zeros(xs.shape, dtype=complex)
    dpsi = np.zeros(xs.shape, dtype=complex)
    d2psi = np.zeros(xs.shape, dtype=complex)
    for n, coeff in spec.levels:
        energy = c.hbar * spec.omega * (n + 0.5)
        a = coeff * np.exp(-1j * energy * t / c.hbar)
        lower = phis[n - 1] if n > 0 else 0.0
        psi += a * phis[n]
        dpsi += a * beta * (math.sqrt(n / 2.0) * lower - math.sqrt((n + 1) / 2.0) * phis[n + 1])
        d2psi += a * beta * beta * (xi * xi - (2 * n + 1)) * phis[n]
    return _finish(x, psi, dpsi, d2psi)


def harmonic_relative_frequency(spec: HarmonicSpec, c: PhysicalConstants) -> float:
    """(E_b - E_a)/hbar for a two-level oscillator state."""
    if len(spec.levels) != 2:
        raise ArityError(f"relative frequency needs exactly two levels, got {len(spec.levels)}")
    (na, _), (nb, _) = spec.levels
    ea = c.hbar * spec.omega * (na + 0.5)
    eb = c.hbar * spec.omega * (nb + 0.5)
    return (eb - ea) / c.hbar


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

def eval_plane_wave(spec: PlaneWaveSpec, c: PhysicalConstants, x, t: float) -> WaveSample:
    xs = _as_x(x)
    k = spec.p / c.hbar
    energy = spec.p * spec.p / (2.0 * c.mass)
    psi = complex(spec.amplitude) * np.exp(1j * (k * xs - energy * t / c.hbar))
    return _finish(x, psi, 1j * k * psi, -k * k * psi)


def eval_model(model: ModelSpec, c: PhysicalConstants, x, t: float) -> WaveSample:
    """Evaluate any supported model at (x, t).

    Raises:
        OverflowGuard: if the result is not finite
    """
    if isinstance(model, GaussianSpec):
        sample = eval_gaussian(model, c, x, t)
    elif isinstance(model, SuperpositionSpec):
        sample = eval_gaussian(model.components[0], c, x, t)
        for component in model.components[1:]:
            sample = sample + eval_gaussian(component, c, x, t)
    elif isinstance(model, TalbotSpec):
        sample = eval_talbot(model, c, x, t)
    elif isinstance(model, BoxSpec):
        sample = eval_box(model, c, x, t)
    elif isinstance(model, HarmonicSpec):
        sample = eval_harmonic(model, c, x, t)
    elif isinstance(model, PlaneWaveSpec):
        sample = eval_plane_wave(model, c, x, t)
    elif isinstance(model, GlobalPhaseSpec):
        factor = np.exp(1j * (model.alpha + model.cubic * t ** 3))
        sample = eval_model(model.base, c, x, t).scaled(complex(factor))
    else:
        raise DomainError(f"unsupported model type {type(model).__name__}")

    for part in (sample.psi, sample.dpsi, sample.d2psi):
        if not np.all(np.isfinite(part)):
            raise OverflowGuard(f"{type(model).__name__} evaluation overflowed at t={t}")
    return sample


def model_support(model: ModelSpec, c: PhysicalConstants, t: float = 0.0, widths: float = 8.0) -> Tuple[float, float]:
    """Interval holding essentially all of the density at time t."""
    if isinstance(model, GaussianSpec):
        center = model.x0 + model.v * t
        half = widths * model.sigma0 * spreading_ratio(model.sigma0, t, c)
        return (center - half, center + half)
    if isinstance(model, SuperpositionSpec):
        spans = [model_support(g, c, t, widths) for g in model.components]
        return (min(s[0] for s in spans), max(s[1] for s in spans))
    if isinstance(model, TalbotSpec):
        return (-0.5 * model.d, 0.5 * model.d)
    if isinstance(model, BoxSpec):
        return model.well
    if isinstance(model, HarmonicSpec):
        top = max(n for n, _ in model.levels)
        half = (math.sqrt(2 * top + 1) + widths) * math.sqrt(c.hbar / (c.mass * model.omega))
        return (-half, half)
    if isinstance(model, GlobalPhaseSpec):
        return model_support(model.base, c, t, widths)
    raise DomainError(f"{type(model).__name__} has no bounded support")


def model_period(model: ModelSpec) -> Optional[float]:
    """Grating period of a Talbot model or an equally spaced slit array."""
    if isinstance(model, TalbotSpec):
        return model.d
    if isinstance(model, GlobalPhaseSpec):
        return model_period(model.base)
    if isinstance(model, SuperpositionSpec) and len(model.components) > 1:
        centers = np.sort([g.x0 for g in model.components])
        gaps = np.diff(centers)
        if np.allclose(gaps, gaps[0], rtol=1e-12):
            return float(gaps[0])
    return None


def model_norm(model: ModelSpec, c: PhysicalConstants, t: float = 0.0, points: Optional[int] = None) -> float:
    """Integral of |psi|^2 over the model support (one unit cell for Talbot)."""
    lo, hi = model_support(model, c, t, widths=12.0)
    if points is None:
        finest = _finest_scale(model, c, t)
        points = max(4001, int(40 * (hi - lo) / finest) + 1)
    x = np.linspace(lo, hi, points)
    psi = eval_model(model, c, x, t).psi
    return float(trapezoid(np.abs(psi) ** 2, x))


def _finest_scale(model: ModelSpec, c: PhysicalConstants, t: float) -> float:
    if isinstance(model, GaussianSpec):
        return model.sigma0
    if isinstance(model, SuperpositionSpec):
        return min(g.sigma0 for g in model.components)
    if isinstance(model, TalbotSpec):
        return model.d / (2 * model.resolved_nmax + 1)
    if isinstance(model, BoxSpec):
        return model.d / (2 * len(model.coefficients) + 1)
    if isinstance(model, HarmonicSpec):
        top = max(n for n, _ in model.levels)
        return math.sqrt(c.hbar / (c.mass * model.omega)) / (top + 1)
    if isinstance(model, GlobalPhaseSpec):
        return _finest_scale(model.base, c, t)
    raise DomainError(f"{type(model).__name__} has no bounded support")
