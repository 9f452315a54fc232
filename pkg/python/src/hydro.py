"""Hydrodynamic fields of a wave function: density, phase, velocity, flux, quantum potential."""

from dataclasses import dataclass
from typing import TYPE_CHECKING, Tuple
import logging
import math

import numpy as np

try:
    from .config import DENSITY_FLOOR_ABSOLUTE, DENSITY_FLOOR_RELATIVE
    from .errors import DomainError, NodeError
    from .wavemodel import ModelSpec, PhysicalConstants, WaveSample, eval_model
except ImportError:
    from src.config import DENSITY_FLOOR_ABSOLUTE, DENSITY_FLOOR_RELATIVE
    from src.errors import DomainError, NodeError
    from src.wavemodel import ModelSpec, PhysicalConstants, WaveSample, eval_model

if TYPE_CHECKING:
    from .carpets import GridSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HydroSample:
    rho: float
    S: float
    v: float
    J: float
    Q: float


@dataclass(frozen=True)
class TwoWaveDecomposition:
    Sbar: float
    curlyS: float
    curlyQ: float
    # half difference of the osmotic velocities (hbar/2m) rho_i'/rho_i
    osmotic_split: float


@dataclass(frozen=True)
class EnergySplit:
    kinetic: float
    internal: float
    flux_term: complex


def _guard(rho, floor: float) -> None:
    if np.any(np.asarray(rho) < floor):
        raise NodeError(f"density {np.min(rho):.3e} below floor {floor:.3e}")


def _density_derivatives(w: WaveSample):
    rho = np.abs(w.psi) ** 2
    drho = 2.0 * np.real(np.conj(w.psi) * w.dpsi)
    d2rho = 2.0 * np.real(np.conj(w.psi) * w.d2psi) + 2.0 * np.abs(w.dpsi) ** 2
    return rho, drho, d2rho


def quantum_potential(w: WaveSample, c: PhysicalConstants, form: str = "density",
                      floor: float = DENSITY_FLOOR_ABSOLUTE):
    """Bohm's quantum potential -(hbar^2/2m) A''/A.

    form="amplitude" evaluates A''/A as Re(psi''/psi) + Im(psi'/psi)^2;
    form="density" uses rho and its first two derivatives.
    """
    rho, drho, d2rho = _density_derivatives(w)
    _guard(rho, floor)
    if form == "amplitude":
        ratio = w.dpsi / w.psi
        curvature = np.real(w.d2psi / w.psi) + np.imag(ratio) ** 2
        return -(c.hbar ** 2) / (2.0 * c.mass) * curvature
    if form == "density":
        return -(c.hbar ** 2) / (4.0 * c.mass) * (d2rho / rho - 0.5 * (drho / rho) ** 2)
    raise DomainError(f"unknown quantum potential form {form!r}")


def hydro_fields(w: WaveSample, c: PhysicalConstants, floor: float = DENSITY_FLOOR_ABSOLUTE) -> HydroSample:
    """rho, S, v, J and Q from one wave sample (or arrays of samples).

    Raises:
        NodeError: if rho is below floor anywhere
    """
    rho = np.abs(w.psi) ** 2
    _guard(rho, floor)
    v = (c.hbar / c.mass) * np.imag(w.dpsi / w.psi)
    S = c.hbar * np.angle(w.psi)
    Q = quantum_potential(w, c, "density", floor)
    return HydroSample(rho=rho, S=S, v=v, J=rho * v, Q=Q)


def phase_sweep(psi, c: PhysicalConstants) -> np.ndarray:
    """Continuous phase S along a 1D sweep; jumps larger than pi are unwrapped."""
    return c.hbar * np.unwrap(np.angle(np.asarray(psi)), discont=math.pi)


def two_wave_velocity(
    w1: WaveSample, w2: WaveSample, c: PhysicalConstants, floor: float = DENSITY_FLOOR_RELATIVE
) -> Tuple[float, float, float, TwoWaveDecomposition]:
    """Density, flux and velocity of psi1 + psi2 from the fields of each partial wave.

    The interference flux is written with the osmotic velocities
    u_i = (hbar/2m) rho_i'/rho_i, which keeps it finite at fringe minima.

    Returns:
        (rho, J, v, decomposition)
    """
    rho1, drho1, _ = _density_derivatives(w1)
    rho2, drho2, _ = _density_derivatives(w2)
    if np.any(rho1 < floor) or np.any(rho2 < floor):
        raise NodeError("partial density below floor; two-wave decomposition undefined")

    v1 = (c.hbar / c.mass) * np.imag(w1.dpsi / w1.psi)
    v2 = (c.hbar / c.mass) * np.imag(w2.dpsi / w2.psi)
    u1 = 0.5 * (c.hbar / c.mass) * drho1 / rho1
    u2 = 0.5 * (c.hbar / c.mass) * drho2 / rho2
    q1 = quantum_potential(w1, c, "density", floor)
    q2 = quantum_potential(w2, c, "density", floor)

    curly_s = np.angle(w1.psi * np.conj(w2.psi))
    s_bar = 0.5 * c.hbar * (np.angle(w1.psi) + np.angle(w2.psi))
    mean_velocity = 0.5 * (v1 + v2)
    osmotic_split = 0.5 * (u1 - u2)
    amplitude = np.sqrt(rho1 * rho2)

    rho = rho1 + rho2 + 2.0 * amplitude * np.cos(curly_s)
    J = rho1 * v1 + rho2 * v2 + 2.0 * amplitude * (
        mean_velocity * np.cos(curly_s) + osmotic_split * np.sin(curly_s)
    )
    _guard(rho, DENSITY_FLOOR_ABSOLUTE)
    dec = TwoWaveDecomposition(Sbar=s_bar, curlyS=curly_s, curlyQ=0.5 * (q1 - q2), osmotic_split=osmotic_split)
    return rho, J, J / rho, dec


def energy_split(w: WaveSample, c: PhysicalConstants, floor: float = DENSITY_FLOOR_ABSOLUTE) -> EnergySplit:
    """Kinetic, internal and flux terms whose sum is -(hbar^2/2m) psi''/psi."""
    rho = np.abs(w.psi) ** 2
    _guard(rho, floor)
    grad_s = c.hbar * np.imag(w.dpsi / w.psi)
    div_j = (c.hbar / c.mass) * np.imag(np.conj(w.psi) * w.d2psi)
    return EnergySplit(
        kinetic=grad_s ** 2 / (2.0 * c.mass),
        internal=quantum_potential(w, c, "density", floor),
        flux_term=(c.hbar / 2j) * div_j / rho,
    )


def local_energy(w: WaveSample, c: PhysicalConstants) -> complex:
    """-(hbar^2/2m) psi''/psi, the left side of the energy split."""
    return -(c.hbar ** 2) / (2.0 * c.mass) * w.d2psi / w.psi


def continuity_residual(model: ModelSpec, grid: "GridSpec", c: PhysicalConstants) -> float:
    """max |d rho/dt + dJ/dx| over interior grid points (central differences)."""
    x = grid.x_values()
    t = grid.t_values()
    rho = np.empty((len(t), len(x)))
    flux = np.empty_like(rho)
    for i, ti in enumerate(t):
        w = eval_model(model, c, x, float(ti))
        rho[i] = np.abs(w.psi) ** 2
        flux[i] = (c.hbar / c.mass) * np.imag(np.conj(w.psi) * w.dpsi)

    dt = t[1] - t[0]
    dx = x[1] - x[0]
    drho_dt = (rho[2:, 1:-1] - rho[:-2, 1:-1]) / (2.0 * dt)
    dj_dx = (flux[1:-1, 2:] - flux[1:-1, :-2]) / (2.0 * dx)
    residual = float(np.max(np.abs(drho_dt + dj_dx)))
    logger.debug(f"continuity residual {residual:.3e} on {grid.nt}x{grid.nx} grid")
    return residual


def convergence_order(model: ModelSpec, grid: "GridSpec", c: PhysicalConstants) -> Tuple[float, float, float]:
    """Observed order of the continuity residual under halving both steps.

    Returns:
        (coarse residual, fine residual, log2 of their ratio)
    """
    coarse = continuity_residual(model, grid, c)
    fine = continuity_residual(model, grid.refined(), c)
    if fine <= 0:
        return coarse, fine, math.inf
    return coarse, fine, math.log2(coarse / fine)
