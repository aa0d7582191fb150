import numpy as np
import pytest

from qscramble.core import NumericalError
from qscramble.fields import (
    SpaceTimeField,
    contour_gap_slope,
    contour_radii,
    fit_front_velocity,
    read_field_csv,
)


def _analytic_field(v=1.0, lam=2.0):
    sites = np.arange(0, 200)
    times = np.linspace(5, 80, 40)
    vals = np.exp(np.minimum(lam * (times[None, :] - sites[:, None] / v), 0.0))
    return SpaceTimeField(vals, sites, times, "test")


def test_shape_validation():
    with pytest.raises(ValueError):
        SpaceTimeField(np.zeros((3, 4)), np.arange(3), np.arange(5), "x")


def test_contour_radii_exponential_front():
    fld = _analytic_field(v=1.0, lam=2.0)
    r = contour_radii(fld, 1e-3, origin=0)
    # r_theta = v t + v ln(1/theta)/lam
    expect = fld.times + np.log(1e3) / 2.0
    ok = np.isfinite(r)
    assert ok.sum() > 30
    assert np.abs(r[ok] - expect[ok]).max() < 0.2


def test_contour_gap_slope_zero_for_exponential():
    fld = _analytic_field()
    r1 = contour_radii(fld, 1e-2, origin=0)
    r2 = contour_radii(fld, 1e-5, origin=0)
    slope, _, _ = contour_gap_slope(fld.times, r2 - r1, (10, 80))
    assert abs(slope) < 0.02


def test_contour_gap_slope_raises_on_garbage():
    with pytest.raises(NumericalError):
        contour_gap_slope(np.arange(5.0), np.full(5, np.nan))


def test_fit_front_velocity_separates_broadening():
    times = np.linspace(5, 300, 60)
    radii = 1.37 * times + 4.2 * times ** (1 / 3)
    v, b = fit_front_velocity(times, radii, 1 / 3)
    assert v == pytest.approx(1.37, abs=1e-9)
    assert b == pytest.approx(4.2, abs=1e-6)


def test_csv_round_trip(tmp_path):
    fld = SpaceTimeField(np.arange(6.0).reshape(2, 3), np.array([0, 1]),
                         np.array([0.0, 0.5, 1.0]), "unit", {"alpha": 2},
                         seed=7)
    path = tmp_path / "field.csv"
    fld.write_csv(path, version="9.9")
    back = read_field_csv(path)
    assert np.allclose(back.values, fld.values)
    assert np.allclose(back.times, fld.times)
    assert back.method == "unit"
    assert back.seed == 7
    assert back.params == {"alpha": 2}
