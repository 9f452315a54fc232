import math

import numpy as np
import pytest

from src.errors import DomainError, SingularityError
from src.toymodel import (
    PRESET_SPEEDS,
    ToyParams,
    potential_profile,
    toy_preset,
    well_geometry,
    well_history,
    x_min_forms,
)


def _dimensionless_times(params, tau_max=4.0, n=4001):
    c = params.constants
    return np.linspace(0.0, tau_max, n) * 2.0 * c.mass * params.sigma0 ** 2 / c.hbar


def test_well_edge_at_release(c):
    params = toy_preset("intermediate")
    geom = well_geometry(params, 0.0)
    assert geom.x_min == pytest.approx(-math.pi * c.hbar / (2 * params.p), rel=1e-12)
    assert geom.width == pytest.approx(-geom.x_min)


def test_depth_identity():
    params = toy_preset("slow")
    for t in (0.0, 0.5, 3.0):
        geom = well_geometry(params, t)
        c = params.constants
        assert geom.V0 * geom.x_min ** 2 == pytest.approx(2 * c.hbar ** 2 / c.mass, rel=1e-12)


@pytest.mark.parametrize("name", sorted(PRESET_SPEEDS))
def test_both_forms_agree(name):
    params = toy_preset(name)
    for t in _dimensionless_times(params, n=41):
        first, second = x_min_forms(params, float(t))
        assert first == pytest.approx(second, rel=1e-12)


@pytest.mark.parametrize("name, expected", [("young", 0.598), ("fast", 0.0705)])
def test_minimum_well_width(name, expected):
    params = toy_preset(name)
    df = well_history(params, _dimensionless_times(params))
    assert df["width"].min() == pytest.approx(expected, abs=1e-3)


def test_slow_packets_see_wider_shallower_wells():
    young = well_history(toy_preset("young"), _dimensionless_times(toy_preset("young"), n=201))
    fast = well_history(toy_preset("fast"), _dimensionless_times(toy_preset("fast"), n=201))
    assert young["width"].min() > fast["width"].min()
    assert young["V0"].max() < fast["V0"].max()


def test_singular_denominator():
    # packet on the far side of the wall: 2 p sigma0^2 / hbar = tau x0 at tau = 1
    params = ToyParams(p=1.0, sigma0=1.0, x0=2.0)
    with pytest.raises(SingularityError):
        x_min_forms(params, 2.0)


def test_potential_profile():
    params = toy_preset("young")
    geom = well_geometry(params, 0.0)
    x = np.array([2 * geom.x_min, 0.5 * geom.x_min, 0.5])
    values = potential_profile(params, x, 0.0)
    assert values[0] == 0.0
    assert values[1] == pytest.approx(-geom.V0)
    assert math.isinf(values[2])
    assert potential_profile(params, 0.5 * geom.x_min, 0.0) == pytest.approx(-geom.V0)


def test_invalid_inputs():
    with pytest.raises(DomainError):
        toy_preset("medium")
    with pytest.raises(DomainError):
        well_geometry(toy_preset("young"), -1.0)
    with pytest.raises(DomainError):
        ToyParams(p=1.0, sigma0=0.0, x0=-1.0)


def test_well_history_columns():
    df = well_history(toy_preset("fast"), [0.0, 0.1, 0.2])
    assert list(df.columns) == ["t", "x_min", "width", "V0"]
    assert np.allclose(df["width"], -df["x_min"])
    assert (df["width"] > 0).all()
    p = toy_preset("fast").p
    assert df["width"].iloc[0] == pytest.approx(math.pi / (2.0 * p), rel=1e-12)
    assert len(df) == 3
