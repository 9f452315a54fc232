import math

import numpy as np
import pytest

from src.config import CENTER_PATH_TOLERANCE
from src.errors import DomainError
from src.fractal import (
    ScalingSeries,
    curve_length,
    density_length_series,
    fractal_dimension,
    highest_sine_mode,
    sample_box_density,
    trajectory_length_series,
    trajectory_save_count,
)
from src.trajectories import IntegratorConfig, uniform_times
from src.wavemodel import (
    box_state,
    eval_model,
    gaussian_in_well,
    recurrence_time,
    square_wave_state,
    tent_state,
)


def test_curve_length():
    x = np.linspace(0, 1, 7)
    assert curve_length(x, 2 * x) == pytest.approx(math.sqrt(5.0))
    assert curve_length([0, 1], [0, 0]) == 1.0
    with pytest.raises(DomainError):
        curve_length([0, 0], [0, 1])
    with pytest.raises(DomainError):
        curve_length([0], [0])


@pytest.mark.parametrize("spec_factory", [
    lambda c: box_state(1.0, [1.0, 0.3j, -0.2, 0.1]),
    lambda c: gaussian_in_well(1.0, 0.1, c),
])
def test_sine_transform_matches_direct_sum(c, spec_factory):
    spec = spec_factory(c)
    x, rho = sample_box_density(spec, 0.37, 257, c)
    direct = np.abs(eval_model(spec, c, x, 0.37).psi) ** 2
    assert x[0] == spec.well[0]
    assert x[-1] == pytest.approx(spec.well[1])
    assert np.max(np.abs(rho - direct)) < 1e-10


def test_sine_transform_needs_enough_points(c):
    spec = square_wave_state(1.0, 0.25, 64)
    with pytest.raises(DomainError):
        sample_box_density(spec, 0.1, highest_sine_mode(spec), c)


def test_fractal_dimension_of_a_power_law():
    ks = [16, 32, 64, 128, 256, 512]
    series = ScalingSeries(tuple((k, 3.0 * k ** 0.5) for k in ks))
    est = fractal_dimension(series)
    assert est.D_f == pytest.approx(1.5, abs=1e-12)
    assert est.r_squared == pytest.approx(1.0)
    assert est.n_points == 5


def test_fractal_fit_needs_four_points():
    with pytest.raises(DomainError):
        fractal_dimension(ScalingSeries(((1, 1.0), (2, 2.0), (4, 3.0))))


def test_scaling_series_validation():
    with pytest.raises(DomainError):
        ScalingSeries(((4, 1.0), (2, 2.0)))
    with pytest.raises(DomainError):
        ScalingSeries(((1, 0.0), (2, 2.0)))


def test_smooth_state_has_dimension_one(c):
    spec = gaussian_in_well(1.0, 0.1, c)
    t = recurrence_time(1.0, c) / math.sqrt(2.0)
    series = density_length_series(spec, [16, 32, 64, 128, 256], t, c)
    assert fractal_dimension(series).D_f == pytest.approx(1.0, abs=0.05)


def test_kinked_state_has_dimension_one(c):
    spec = tent_state(1.0, 1024)
    assert np.count_nonzero(spec.coefficients) == 512
    t = recurrence_time(1.0, c) / math.sqrt(2.0)
    series = density_length_series(spec, [16, 32, 64, 128, 256, 512, 1024], t, c)
    assert len(set(series.L.tolist())) == len(series.L)
    assert fractal_dimension(series).D_f == pytest.approx(1.0, abs=0.05)


def test_square_wave_density_is_fractal(c):
    spec = square_wave_state(1.0, 0.25, 4096)
    t = recurrence_time(1.0, c) / math.sqrt(2.0)
    series = density_length_series(spec, [16, 32, 64, 128, 256, 512, 1024, 2048, 4096], t, c)
    assert np.all(np.diff(series.L) > 0)
    est = fractal_dimension(series)
    assert 1.4 <= est.D_f <= 1.6


def test_trajectory_save_count():
    assert trajectory_save_count(4, 100) == 100
    assert trajectory_save_count(64, 100) == 32 * 512 + 1


def test_resting_center_path_has_unit_length(c):
    spec = gaussian_in_well(1.0, 0.1, c)
    span = (0.0, recurrence_time(1.0, c))
    cfg = IntegratorConfig(uniform_times(span[1], 51))
    series = trajectory_length_series(spec, 0.0, [2, 4, 8], span, cfg, c)
    assert np.allclose(series.L, 1.0, atol=1e-9)


def test_off_center_path_lengthens_with_more_modes(c):
    spec = square_wave_state(1.0, 0.25, 32)
    span = (0.0, recurrence_time(1.0, c))
    cfg = IntegratorConfig(uniform_times(span[1], 101))
    series = trajectory_length_series(spec, 0.45, [4, 8, 16, 32], span, cfg, c)
    assert series.L[-1] > series.L[0] > 1.0


def test_center_path_of_a_symmetric_square_wave_stays_flat(c):
    spec = square_wave_state(1.0, 0.25, 64)
    span = (0.0, recurrence_time(1.0, c))
    cfg = IntegratorConfig(uniform_times(span[1], 101))
    series = trajectory_length_series(spec, 0.5, [4, 8, 16, 32, 64], span, cfg, c)
    assert np.max(np.abs(series.L - 1.0)) <= CENTER_PATH_TOLERANCE
    assert fractal_dimension(series).D_f == pytest.approx(1.0, abs=0.05)


def test_trajectory_start_must_be_inside_the_well(c):
    spec = gaussian_in_well(1.0, 0.1, c)
    cfg = IntegratorConfig(uniform_times(0.1, 11))
    with pytest.raises(DomainError):
        trajectory_length_series(spec, 0.7, [2, 4], (0.0, 0.1), cfg, c)
