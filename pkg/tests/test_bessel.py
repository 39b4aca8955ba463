import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from oracles import j0_series_root, series_jy

from spectrakit.bessel import BesselOrder, bessel_j, bessel_jy, bessel_jy_pair, bessel_y
from spectrakit.errors import ConfigError

ORDERS = [0, 1, 2, 3, 5, 8, 13, 20, 30, 50]
ARGS = np.geomspace(1e-3, 1e3, 20)


def test_values_at_zero():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0


def test_first_zero_of_j0():
    assert abs(bessel_j(0, j0_series_root())) <= 1e-10


def test_wronskian_at_two():
    j0, y0 = bessel_jy(0, 2.0)
    j1, y1 = bessel_jy(1, 2.0)
    assert j1 * y0 - j0 * y1 == pytest.approx(1 / math.pi, abs=1e-10)


def test_y0_small_argument_against_series():
    assert bessel_y(0, 0.1) == pytest.approx(series_jy(0, 0.1)[1], abs=1e-9)


@pytest.mark.parametrize("n", ORDERS)
def test_lattice_against_series_oracle(n):
    j, y = bessel_jy(n, ARGS)
    for xi, ji, yi in zip(ARGS, j, y):
        jo, yo = series_jy(n, float(xi))
        assert abs(ji - jo) <= 1e-10 * abs(jo), (n, xi)
        assert abs(yi - yo) <= 1e-10 * abs(yo), (n, xi)


@pytest.mark.parametrize("x", [0.1, 1.0, 10.0, 100.0])
def test_wronskian_table(x):
    for n in range(21):
        jn, yn = bessel_jy(n, x)
        jp, yp = bessel_jy(n + 1, x)
        assert abs(x * (jp * yn - jn * yp) - 2 / math.pi) <= 1e-10


@given(st.integers(1, 49), st.floats(0.05, 800))
def test_recurrence_consistency(n, x):
    jm, ym = bessel_jy(n - 1, x)
    j, y = bessel_jy(n, x)
    jp, yp = bessel_jy(n + 1, x)
    assert abs(jm + jp - 2 * n / x * j) <= 1e-9 * max(1.0, abs(j))
    assert abs(ym + yp - 2 * n / x * y) <= 1e-9 * max(1.0, abs(y))


@given(st.integers(1, 30), st.floats(0.5, 200))
def test_derivative_identity(n, x):
    h = 1e-5
    dj = (bessel_j(n, x + h) - bessel_j(n, x - h)) / (2 * h)
    assert abs(x * dj + n * bessel_j(n, x) - x * bessel_j(n - 1, x)) <= 1e-6


def test_pair_matches_single_orders():
    x = np.array([0.3, 7.0, 40.0])
    jm, j, ym, y = bessel_jy_pair(4, x)
    assert np.array_equal(jm, bessel_j(3, x)) and np.array_equal(y, bessel_y(4, x))


def test_branch_continuity_at_asymptotic_switch():
    below, above = np.nextafter(25.0, 0), 25.0
    for n in (0, 1, 7):
        jb, yb = bessel_jy(n, below)
        ja, ya = bessel_jy(n, above)
        assert abs(jb - ja) < 1e-12 and abs(yb - ya) < 1e-12


@pytest.mark.parametrize("n", [-1, 51, 2.5, True])
def test_order_validation(n):
    with pytest.raises(ConfigError):
        BesselOrder(n)


def test_domain_errors():
    with pytest.raises(ConfigError):
        bessel_j(0, -1.0)
    with pytest.raises(ConfigError):
        bessel_y(0, 0.0)
    with pytest.raises(ConfigError):
        bessel_jy(1, np.nan)
