import math

import numpy as np
import pytest

from spectrakit import transforms as tr
from spectrakit import sturm_liouville as sl
from spectrakit.errors import ConfigError, InstabilityError
from spectrakit.spectral_pde import (WeberBoundary, compare_solutions, crank_nicolson_reference,
                                     heat_evolve, reference_problem)
from spectrakit.testfunctions import Gaussian, ModeRef, SmoothBump


def setup(T, spec, **kw):
    grid, sg = tr.default_grids(T, spec, **kw)
    return tr.sample(T, spec, grid), sg


@pytest.fixture(scope="module")
def robin_mode():
    T = tr.make_robin(1)
    f, sg = setup(T, ModeRef(0))
    return T, f, sg


def test_robin_mode_grows_by_exact_factor(robin_mode):
    T, f, sg = robin_mode
    res = heat_evolve(T, f, 0.5, sg)
    expected = tr.SampledFunction(f.grid, math.exp(0.5) * f.values)
    assert compare_solutions(expected, res.y)[0] <= 1e-6
    ((lam, coef),) = res.discrete_part
    assert lam == pytest.approx(1.0) and coef == pytest.approx(math.exp(0.5), rel=1e-9)
    assert res.continuous_part_norm <= 1e-5


@pytest.mark.parametrize("t", [0.0, 0.7, 3.0])
def test_weber_mode_is_stationary(t):
    T = tr.make_weber(2, 1)
    f, sg = setup(T, ModeRef(0))
    assert compare_solutions(f, heat_evolve(T, f, t, sg).y)[0] <= 1e-6


@pytest.mark.parametrize("T,spec", [
    (tr.make_sine(), Gaussian(5, 1)), (tr.make_cosine(), Gaussian(4, 0.7)),
    (tr.make_robin(1), Gaussian(4, 0.7)), (tr.make_weber(2, 1), SmoothBump(3, 1)),
], ids=lambda v: getattr(v, "name", None) or v.describe())
def test_time_zero_is_reconstruction(T, spec):
    f, sg = setup(T, spec)
    y0 = heat_evolve(T, f, 0.0, sg).y
    assert compare_solutions(tr.reconstruct(T, f, sg), y0)[0] <= 1e-4
    assert compare_solutions(f, y0)[0] <= 1e-4


def test_negative_time_rejected(robin_mode):
    T, f, sg = robin_mode
    for t in (-1.0, math.nan, math.inf):
        with pytest.raises(ConfigError):
            heat_evolve(T, f, t, sg)
        with pytest.raises(ConfigError):
            crank_nicolson_reference(sl.zero_potential(), sl.Robin(1), f, t)


# -- properties --------------------------------------------------------------------

@pytest.mark.parametrize("T,spec", [
    (tr.make_sine(), Gaussian(5, 1)), (tr.make_robin(1), Gaussian(4, 0.7)),
    (tr.make_weber(3, 1), SmoothBump(4, 1.5)),
], ids=lambda v: getattr(v, "name", None) or v.describe())
@pytest.mark.parametrize("t1,t2", [(0.1, 0.1), (0.1, 0.5), (0.5, 0.5)])
def test_semigroup_composition(T, spec, t1, t2):
    # domain long enough that the solution stays negligible at the cut
    f, sg = setup(T, spec, x_trunc=T.x_start + 30)
    direct = heat_evolve(T, f, t1 + t2, sg).y
    stepped = heat_evolve(T, heat_evolve(T, f, t1, sg).y, t2, sg).y
    assert compare_solutions(direct, stepped)[0] <= 2e-4


def test_continuous_part_damps_monotonically():
    T = tr.make_robin(1)
    f, sg = setup(T, Gaussian(4, 0.7))
    norms = [heat_evolve(T, f, t, sg).continuous_part_norm for t in (0, 0.01, 0.1, 0.5, 1, 5)]
    assert all(b <= a for a, b in zip(norms, norms[1:]))


@pytest.mark.parametrize("T,spec", [
    (tr.make_sine(), SmoothBump(5, 2)), (tr.make_weber(2, 1), SmoothBump(3, 1)),
], ids=["sine", "weber"])
def test_strong_continuity(T, spec):
    f, sg = setup(T, spec)
    base = tr.reconstruct(T, f, sg)
    gaps = [compare_solutions(base, heat_evolve(T, f, t, sg).y)[0]
            for t in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] <= 1e-3


# -- Crank-Nicolson reference -------------------------------------------------------

def test_cn_time_zero_returns_input(robin_mode):
    _, f, _ = robin_mode
    out = crank_nicolson_reference(sl.zero_potential(), sl.Robin(1), f, 0.0)
    assert np.array_equal(out.values, f.values)


def test_cn_robin_mode_growth(robin_mode):
    T, f, _ = robin_mode
    out = crank_nicolson_reference(sl.zero_potential(), sl.Robin(1), f, 0.5, dt=1e-3)
    expected = tr.SampledFunction(f.grid, math.exp(0.5) * f.values)
    assert compare_solutions(expected, out)[0] <= 1e-4


@pytest.mark.parametrize("T,spec", [
    (tr.make_sine(), Gaussian(5, 1)), (tr.make_cosine(), Gaussian(5, 1)),
    (tr.make_robin(1), Gaussian(4, 0.7)), (tr.make_weber(2, 1), Gaussian(4, 0.7)),
], ids=["sine", "cosine", "robin", "weber"])
@pytest.mark.parametrize("t", [0.1, 1.0])
def test_cn_agrees_with_spectral(T, spec, t):
    f, sg = setup(T, spec)
    q, b = reference_problem(T)
    spectral = heat_evolve(T, f, t, sg).y
    assert compare_solutions(spectral, crank_nicolson_reference(q, b, f, t))[0] <= 1e-3


def test_cn_is_second_order_in_time(robin_mode):
    _, f, _ = robin_mode
    exact = tr.SampledFunction(f.grid, math.exp(0.5) * f.values)
    errs = [compare_solutions(exact, crank_nicolson_reference(
        sl.zero_potential(), sl.Robin(1), f, 0.5, dt=dt, uniform_n=8000))[0]
        for dt in (0.05, 0.025)]
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.2)


def test_cn_detects_instability(robin_mode):
    _, f, _ = robin_mode
    with pytest.raises(InstabilityError):
        crank_nicolson_reference(sl.zero_potential(), sl.Robin(1), f, 0.5, growth_rate=-2.0)


def test_cn_argument_checks(robin_mode):
    _, f, _ = robin_mode
    with pytest.raises(ConfigError):
        crank_nicolson_reference(sl.zero_potential(), sl.Robin(1), f, 0.5, dt=0.0)
    with pytest.raises(ConfigError):
        crank_nicolson_reference(sl.zero_potential(), sl.Robin(1), f, 0.5, uniform_n=4)
    with pytest.raises(ConfigError):
        crank_nicolson_reference(sl.zero_potential(), sl.Robin(1), f, 0.5, x_far=1.0)


def test_reference_problem_mapping():
    assert reference_problem(tr.make_robin(2))[1] == sl.Robin(2)
    assert reference_problem(tr.make_weber(3, 0.5))[1] == WeberBoundary(3, 0.5)
    assert reference_problem(tr.make_sine())[1] == sl.Dirichlet


# -- compare_solutions ----------------------------------------------------------------

def test_compare_examples(robin_mode):
    _, f, _ = robin_mode
    assert compare_solutions(f, f) == (0.0, 0.0)
    l2, sup = compare_solutions(f, tr.SampledFunction(f.grid, 2 * f.values))
    assert l2 == pytest.approx(1.0, rel=1e-12) and sup == pytest.approx(1.0, rel=1e-12)


def test_compare_zero_reference(robin_mode):
    _, f, _ = robin_mode
    zero = tr.SampledFunction(f.grid, np.zeros(f.grid.size))
    assert compare_solutions(zero, zero) == (0.0, 0.0)
    assert compare_solutions(zero, f) == (math.inf, math.inf)


def test_compare_rejects_grid_mismatch(robin_mode):
    T, f, _ = robin_mode
    other, _ = setup(T, Gaussian(4, 0.7))
    with pytest.raises(ConfigError):
        compare_solutions(f, other)
