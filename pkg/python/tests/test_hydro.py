import math

import numpy as np
import pytest

from src.carpets import GridSpec
from src.errors import DomainError, NodeError
from src.hydro import (
    continuity_residual,
    convergence_order,
    energy_split,
    hydro_fields,
    local_energy,
    phase_sweep,
    quantum_potential,
    two_wave_velocity,
)
from src.wavemodel import (
    GaussianSpec,
    PlaneWaveSpec,
    box_state,
    eval_gaussian,
    eval_model,
    harmonic_state,
    slit_array,
)


def test_gaussian_quantum_potential_closed_form(c):
    packet = GaussianSpec(x0=0.0, v=0.0, sigma0=1.0)
    x = np.linspace(-3, 3, 13)
    w = eval_gaussian(packet, c, x, 0.0)
    # amplitude exp(-x^2/4): A''/A = x^2/4 - 1/2
    expected = -0.5 * (x * x / 4.0 - 0.5)
    assert np.allclose(quantum_potential(w, c, "density"), expected, atol=1e-12)
    assert np.allclose(quantum_potential(w, c, "amplitude"), expected, atol=1e-12)


def test_quantum_potential_forms_agree_for_interference(c):
    model = slit_array(2, 1.0, 0.1, c)
    x = np.linspace(-0.8, 0.8, 17)
    w = eval_model(model, c, x, 0.02)
    q_amp = quantum_potential(w, c, "amplitude")
    q_rho = quantum_potential(w, c, "density")
    assert np.allclose(q_amp, q_rho, rtol=1e-8, atol=1e-8)


def test_unknown_quantum_potential_form(c):
    w = eval_gaussian(GaussianSpec(0.0, 0.0, 1.0), c, 0.0, 0.0)
    with pytest.raises(DomainError):
        quantum_potential(w, c, "laplacian")


def test_plane_wave_fields(c):
    w = eval_model(PlaneWaveSpec(p=2.5), c, np.linspace(0, 1, 5), 0.3)
    h = hydro_fields(w, c)
    assert np.allclose(h.v, 2.5)
    assert np.allclose(h.J, h.rho * 2.5)
    assert np.allclose(h.Q, 0.0, atol=1e-12)


def test_fields_at_a_node_raise(c):
    spec = box_state(1.0, [1.0, 1.0])
    w = eval_model(spec, c, 0.0, 0.0)
    with pytest.raises(NodeError):
        hydro_fields(w, c)


def test_phase_sweep_is_continuous(c):
    x = np.linspace(0, 20, 2001)
    w = eval_model(PlaneWaveSpec(p=3.0), c, x, 0.0)
    S = phase_sweep(w.psi, c)
    assert np.allclose(np.diff(S), 3.0 * (x[1] - x[0]))


def test_energy_split_sums_to_local_energy(c):
    spec = harmonic_state(1.0, [(0, 1.0), (3, 1.0)])
    for x, t in ((0.3, 0.1), (-1.1, 0.7), (2.0, 2.5)):
        w = eval_model(spec, c, x, t)
        parts = energy_split(w, c)
        total = parts.kinetic + parts.internal + parts.flux_term
        assert abs(total - local_energy(w, c)) < 1e-10 * (1 + abs(local_energy(w, c)))


def test_two_wave_decomposition_matches_direct_fields(c):
    a = GaussianSpec(-0.5, 0.0, 0.1, 1 / math.sqrt(2))
    b = GaussianSpec(0.5, 0.0, 0.1, 1 / math.sqrt(2))
    for x, t in ((0.05, 0.02), (-0.2, 0.04), (0.31, 0.06)):
        w1 = eval_gaussian(a, c, x, t)
        w2 = eval_gaussian(b, c, x, t)
        rho, J, v, dec = two_wave_velocity(w1, w2, c)
        direct = hydro_fields(w1 + w2, c)
        assert rho == pytest.approx(direct.rho, rel=1e-10)
        assert J == pytest.approx(direct.J, rel=1e-9, abs=1e-12)
        assert v == pytest.approx(direct.v, rel=1e-9, abs=1e-12)
        assert dec.osmotic_split == pytest.approx(
            0.5 * (c.hbar / (2 * c.mass)) * (
                2 * (np.conj(w1.psi) * w1.dpsi).real / abs(w1.psi) ** 2
                - 2 * (np.conj(w2.psi) * w2.dpsi).real / abs(w2.psi) ** 2
            )
        )


def test_two_wave_needs_both_partial_densities(c):
    a = GaussianSpec(-0.5, 0.0, 0.01)
    b = GaussianSpec(0.5, 0.0, 0.01)
    w1 = eval_gaussian(a, c, 0.5, 0.0)
    w2 = eval_gaussian(b, c, 0.5, 0.0)
    with pytest.raises(NodeError):
        two_wave_velocity(w1, w2, c)


def test_continuity_residual_is_second_order(c):
    packet = GaussianSpec(x0=0.0, v=2.0, sigma0=1.0)
    grid = GridSpec((-6.0, 10.0), 401, (0.0, 2.0), 101)
    coarse, fine, order = convergence_order(packet, grid, c)
    assert fine < coarse
    assert order >= 1.8
    assert continuity_residual(packet, grid, c) == pytest.approx(coarse)
