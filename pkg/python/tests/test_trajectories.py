import math

import numpy as np
import pytest

from src.config import PathStatus, Sampling
from src.errors import ArityError, DomainError, NodeError
from src.trajectories import (
    EnsembleSpec,
    IntegratorConfig,
    TrajectoryEnsemble,
    channeling_check,
    closed_form_gaussian_path,
    density_histogram_deviation,
    exchange_diagnostics,
    integrate,
    mirror_confinement,
    ordering_check,
    run_ensemble,
    sample_initial,
    tolerance_convergence,
    uniform_times,
    velocity_at,
    velocity_double_sum,
)
from src.wavemodel import (
    GaussianSpec,
    GlobalPhaseSpec,
    PlaneWaveSpec,
    TalbotSpec,
    box_state,
    counter_propagating,
    critical_speed,
    slit_array,
    talbot_scales,
)


def _ensemble(paths, x0=None):
    paths = np.asarray(paths, dtype=float)
    x0 = paths[:, 0] if x0 is None else np.asarray(x0, dtype=float)
    times = np.arange(paths.shape[1], dtype=float)
    return TrajectoryEnsemble(times, x0, paths, tuple(PathStatus.COMPLETED for _ in x0))


def test_integrator_config_validation():
    with pytest.raises(DomainError):
        IntegratorConfig((0.0, 1.0, 1.0))
    with pytest.raises(DomainError):
        IntegratorConfig((0.0, 1.0), rtol=0.0)
    cfg = IntegratorConfig(uniform_times(2.0, 5))
    assert cfg.save_times == (0.0, 0.5, 1.0, 1.5, 2.0)
    assert cfg.tightened().rtol == pytest.approx(0.5 * cfg.rtol)


def test_sampling_is_deterministic(c):
    packet = GaussianSpec(0.0, 0.0, 1.0)
    spec = EnsembleSpec(100, seed=7)
    first = sample_initial(spec, packet, 0.0, c)
    second = sample_initial(spec, packet, 0.0, c)
    assert np.array_equal(first, second)
    assert not np.array_equal(first, sample_initial(EnsembleSpec(100, seed=8), packet, 0.0, c))
    # path i depends only on (seed, i)
    assert np.array_equal(sample_initial(EnsembleSpec(10, seed=7), packet, 0.0, c), first[:10])


def test_uniform_sampling_includes_endpoints(c):
    spec = EnsembleSpec(5, Sampling.UNIFORM_SUPPORT, support=(-1.0, 1.0))
    x0 = sample_initial(spec, GaussianSpec(0.0, 0.0, 1.0), 0.0, c)
    assert list(x0) == [-1.0, -0.5, 0.0, 0.5, 1.0]


def test_sampling_an_empty_support_fails(c):
    spec = EnsembleSpec(10, support=(100.0, 101.0))
    with pytest.raises(DomainError):
        sample_initial(spec, GaussianSpec(0.0, 0.0, 1.0), 0.0, c)


def test_gaussian_streamlines_follow_the_closed_form(c):
    packet = GaussianSpec(0.0, 1.0, 1.0)
    cfg = IntegratorConfig(uniform_times(4.0, 41))
    for x0 in (-1.2, 0.5, 2.0):
        traj = integrate(packet, x0, cfg, c)
        assert traj.completed
        exact = closed_form_gaussian_path(packet, x0, traj.times, c)
        assert np.max(np.abs(traj.positions - exact)) < 1e-6


def test_starting_on_a_node_is_rejected(c):
    spec = box_state(1.0, [1.0, 1.0])
    cfg = IntegratorConfig(uniform_times(0.1, 11))
    with pytest.raises(NodeError):
        integrate(spec, 0.0, cfg, c)


def test_two_slit_paths_never_cross(c):
    model = slit_array(2, 1.0, 0.1, c)
    cfg = IntegratorConfig(uniform_times(0.08, 41))
    e = run_ensemble(model, EnsembleSpec(40, seed=3), cfg, c)
    assert e.paths.shape == (40, 41)
    assert ordering_check(e).ok
    assert mirror_confinement(e, 0.0) == 0
    assert e.abort_fraction <= 0.05


def test_ordering_check_reports_first_violation():
    e = _ensemble([[0.0, 0.0, 2.0], [1.0, 1.0, 1.0]])
    report = ordering_check(e)
    assert not report.ok
    assert report.violations == 1
    assert report.first_pair == (0, 1)
    assert report.first_time == 2.0


def test_ordering_check_ignores_aborted_samples():
    e = _ensemble([[0.0, 0.5, math.nan], [1.0, 1.2, 1.4]])
    assert ordering_check(e).ok


def test_channeling_and_mirror_counts():
    e = _ensemble([[0.1, 0.3, 0.45], [-0.2, -0.4, -0.6], [0.9, 1.1, 1.2]])
    assert channeling_check(e, 1.0) == 1
    assert mirror_confinement(e, 0.0) == 0
    assert mirror_confinement(e, 1.0) == 1


def test_talbot_double_sum_velocity(c):
    spec = TalbotSpec(1.0, 0.1)
    for x, t in ((0.0, 0.01), (0.1, 0.02), (-0.2, 0.015)):
        generic = float(velocity_at(spec, x, t, c))
        double = float(velocity_double_sum(spec, x, t, c))
        assert double == pytest.approx(generic, rel=1e-9, abs=1e-9)


def test_density_histogram_of_sampled_points(c):
    packet = GaussianSpec(0.0, 0.0, 1.0)
    x0 = sample_initial(EnsembleSpec(20000, seed=1), packet, 0.0, c)
    assert density_histogram_deviation(x0, packet, 0.0, c) < 0.03


def test_exchange_diagnostics_needs_two_packets(c):
    e = _ensemble([[0.0, 0.1]])
    with pytest.raises(ArityError):
        exchange_diagnostics(e, GaussianSpec(0.0, 0.0, 1.0), c)


def test_exchange_counts_sides(c):
    model = counter_propagating(1.0, 10.0, 0.1, 0.1, c)
    e = _ensemble([[-0.6, -0.4, 0.4], [-0.4, -0.2, -0.1], [0.5, 0.3, 0.2]])
    report = exchange_diagnostics(e, model, c)
    assert report.line == pytest.approx(0.0)
    assert (report.left_count, report.right_count) == (2, 1)
    assert report.left_to_right == 1
    assert report.right_to_left == 0
    assert report.migrations == 1


def test_plane_wave_paths_move_at_constant_speed(c):
    cfg = IntegratorConfig(uniform_times(1.5, 31))
    traj = integrate(PlaneWaveSpec(2.0), 0.3, cfg, c)
    assert traj.completed
    assert np.max(np.abs(traj.positions - (0.3 + 2.0 * traj.times))) < 1e-8


@pytest.mark.parametrize("alpha, cubic", [(1.3, 0.0), (0.0, 5.0), (-0.7, 2.0)])
def test_global_phase_leaves_paths_unchanged(c, alpha, cubic):
    base = slit_array(2, 1.0, 0.1, c)
    starts = np.array([-0.62, -0.5, -0.41, 0.38, 0.5, 0.6])
    cfg = IntegratorConfig(uniform_times(0.08, 21))
    plain = run_ensemble(base, EnsembleSpec(len(starts)), cfg, c, x0=starts)
    phased = run_ensemble(GlobalPhaseSpec(base, alpha, cubic), EnsembleSpec(len(starts)), cfg, c, x0=starts)
    assert np.array_equal(plain.completed_mask, phased.completed_mask)
    keep = plain.completed_mask
    assert keep.sum() >= 5
    assert np.max(np.abs(plain.paths[keep] - phased.paths[keep])) < 1e-6


def test_talbot_paths_stay_in_their_cell(c):
    spec = TalbotSpec(1.0, 0.1)
    t_end = 2.0 * talbot_scales(1.0, c).tau_T
    cfg = IntegratorConfig(uniform_times(t_end, 201))
    e = run_ensemble(spec, EnsembleSpec(17, Sampling.UNIFORM_SUPPORT, support=(-0.4, 0.4)), cfg, c)
    assert e.abort_fraction <= 0.2
    assert channeling_check(e, 1.0) == 0


def test_equal_packets_exchange_velocities(c):
    v = critical_speed(1.0, 0.05, c).v
    model = counter_propagating(1.0, v, 0.05, 0.05, c)
    cfg = IntegratorConfig(uniform_times(2.0 / v, 101))
    e = run_ensemble(model, EnsembleSpec(60, seed=1), cfg, c)
    report = exchange_diagnostics(e, model, c)
    left, right = model.components
    assert report.left_count + report.right_count == int(e.completed_mask.sum())
    assert report.migrations == 0
    assert abs(report.left_final_velocity - right.v) <= 0.1 * v
    assert abs(report.right_final_velocity - left.v) <= 0.1 * v


def test_ensemble_transports_the_density(c):
    packet = GaussianSpec(0.0, 1.0, 1.0)
    cfg = IntegratorConfig(uniform_times(2.0, 5))
    e = run_ensemble(packet, EnsembleSpec(4000, seed=2), cfg, c)
    assert e.abort_count == 0
    assert density_histogram_deviation(e.paths[:, -1], packet, 2.0, c) < 0.03


def test_halving_tolerances_barely_moves_paths(c):
    packet = GaussianSpec(0.0, 1.0, 1.0)
    cfg = IntegratorConfig(uniform_times(2.0, 21))
    ratio = tolerance_convergence(packet, [-1.0, 0.2, 1.5], cfg, c)
    assert 0.0 <= ratio <= 10.0
