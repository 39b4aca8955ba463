import math

import numpy as np
import pytest

from spectrakit import quadgrid, transforms as tr
from spectrakit import sturm_liouville as sl
from spectrakit.errors import AliasingError, ConfigError, FitError
from spectrakit.testfunctions import ExpDecay, Gaussian, SmoothBump
from spectrakit.validation import parseval_residual


def grid_to(x_end, n=800):
    return quadgrid.make_spatial_grid(0.0, x_end, n, 10, 0)


def value_at(sol, x):
    return float(sol.grid.interpolate(sol.phi, [x])[0])


def unit_potential():
    return sl.PotentialSpec(lambda x: np.ones_like(x), 0.0, 1.0, "one")


# -- eigenfunction integration ------------------------------------------------------

def test_robin_eigenfunction_closed_form():
    sol = sl.integrate_eigenfunction(sl.zero_potential(), sl.Robin(1), 1.0, grid_to(40))
    assert value_at(sol, math.pi / 2) == pytest.approx(-1.0, abs=1e-8)
    x = sol.grid.nodes
    assert np.abs(sol.phi - (np.cos(x) - np.sin(x))).max() <= 1e-10


def test_dirichlet_eigenfunction_closed_form():
    sol = sl.integrate_eigenfunction(sl.zero_potential(), sl.Dirichlet, 2.0, grid_to(40))
    assert value_at(sol, math.pi / 4) == pytest.approx(0.5, abs=1e-8)


def test_constant_potential_shifts_frequency():
    # phi'' = (1 - 2) phi with (0, 1) data is sin x
    phi, dphi, log = sl.propagate(unit_potential(), np.array([-2.0]), (0.0, 1.0),
                                  np.array([math.pi / 2]))
    assert phi[0, 0] * math.exp(log[0, 0]) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("b,s,weight", [
    (sl.Robin(1), 1.0, 1 / math.pi),
    (sl.Dirichlet, 2.0, 8 / math.pi),
    (sl.Neumann, 1.0, 2 / math.pi),
])
def test_spectral_weight_examples(b, s, weight):
    sol = sl.integrate_eigenfunction(sl.zero_potential(), b, s, grid_to(40))
    assert spectral_weight_estimate_ok(sol) == pytest.approx(weight, abs=1e-6)


def spectral_weight_estimate_ok(sol):
    return sl.spectral_weight_estimate(sol)


@pytest.mark.parametrize("s", [0.5, 3.0, 17.0])
def test_energy_conserved_on_free_region(s):
    sol = sl.integrate_eigenfunction(sl.zero_potential(), sl.Robin(0.7), s,
                                     grid_to(40, n=quadgrid.nodes_for_frequency(40, 20, 10)))
    energy = sol.dphi**2 + s * s * sol.phi**2
    assert np.abs(energy / energy[0] - 1).max() <= 1e-6


def test_energy_conserved_past_potential():
    q = sl.sech2_potential(2.0)
    sol = sl.integrate_eigenfunction(q, sl.Dirichlet, 1.5, grid_to(60))
    free = sol.grid.nodes > q.x_q
    energy = sol.dphi[free] ** 2 + 1.5**2 * sol.phi[free] ** 2
    assert np.ptp(energy) / energy.mean() <= 1e-6


def test_log_rescaling_keeps_growth_finite():
    phi, dphi, log = sl.propagate(sl.zero_potential(), np.array([4.0]), (1.0, 0.0),
                                  np.array([10.0, 400.0]))
    assert np.all(np.isfinite(phi)) and log[1, 0] > 700
    assert log[1, 0] + math.log(abs(phi[1, 0])) == pytest.approx(800 - math.log(2), rel=1e-10)


def test_eigenfunction_refuses_aliasing():
    with pytest.raises(AliasingError):
        sl.integrate_eigenfunction(sl.zero_potential(), sl.Neumann, 50.0, grid_to(40, n=100))


def test_eigenfunction_refuses_undecayed_potential():
    with pytest.raises(FitError):
        sl.integrate_eigenfunction(sl.sech2_potential(2.0), sl.Neumann, 1.0, grid_to(30))


def test_weight_refuses_bad_fit():
    slow = sl.PotentialSpec(lambda x: 1.0 / (1 + x), 0.0, 1.0, "slow")
    sol = sl.integrate_eigenfunction(slow, sl.Neumann, 1.0, grid_to(40))
    with pytest.raises(FitError):
        sl.spectral_weight_estimate(sol)


def test_nonpositive_frequency_rejected():
    with pytest.raises(ConfigError):
        sl.integrate_eigenfunction(sl.zero_potential(), sl.Neumann, 0.0, grid_to(40))


def test_boundary_spec_validation():
    with pytest.raises(ConfigError):
        sl.BoundarySpec("periodic")
    with pytest.raises(ConfigError):
        sl.Robin(0.0)


# -- discrete spectrum -------------------------------------------------------------

@pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 5.0])
def test_robin_shooting_reproduces_a_squared(a):
    found = sl.find_discrete_eigenvalues(sl.zero_potential(), sl.Robin(a), (0.1, 1.2 * a * a + 1))
    assert len(found) == 1
    lam, e = found[0]
    assert lam == pytest.approx(a * a, abs=1e-8)
    assert e.norm() == pytest.approx(1.0, abs=1e-6)
    x = e.grid.nodes
    ref = math.sqrt(2 * a) * np.exp(-a * x)
    assert np.abs(np.abs(e.values) - ref).max() <= 1e-6 * ref.max()


@pytest.mark.parametrize("b", [sl.Dirichlet, sl.Neumann])
def test_free_operator_has_no_bound_states(b):
    assert sl.find_discrete_eigenvalues(sl.zero_potential(), b, (0.1, 4)) == []


def test_gaussian_well_has_bound_state():
    q = sl.gausswell_potential(8.0, 1.0)
    found = sl.find_discrete_eigenvalues(q, sl.Dirichlet, (0.05, 12))
    assert len(found) >= 1
    for lam, e in found:
        x = e.grid.nodes
        assert e.norm() == pytest.approx(1.0, abs=1e-6)
        # e'' - q e = lam e at interior points
        h = 1e-3
        mode = sl._numeric_mode(lam, e, e.grid)
        pts = np.array([0.5, 1.0, 2.0])
        d2 = (mode.eigenfunction(pts + h) - 2 * mode.eigenfunction(pts)
              + mode.eigenfunction(pts - h)) / h**2
        resid = d2 - q(pts) * mode.eigenfunction(pts) - lam * mode.eigenfunction(pts)
        assert np.abs(resid).max() <= 1e-4 * np.abs(e.values).max() * max(1, lam)
        assert x.size == e.values.size


@pytest.mark.parametrize("window", [(-1.0, 2.0), (2.0, 1.0), (0.0, 1.0)])
def test_search_window_rejected(window):
    with pytest.raises(ConfigError):
        sl.find_discrete_eigenvalues(sl.zero_potential(), sl.Robin(1), window)


def test_scan_count_minimum():
    with pytest.raises(ConfigError):
        sl.find_discrete_eigenvalues(sl.zero_potential(), sl.Robin(1), (0.1, 4), n_scan=4)


# -- assembled numeric transforms ------------------------------------------------------

def free_grids(s_max=40.0, x_trunc=40.0):
    n_x = quadgrid.nodes_for_frequency(x_trunc, s_max, 10)
    n_s = quadgrid.nodes_for_frequency(s_max, x_trunc, 10)
    return grid_to(x_trunc, n_x), quadgrid.make_spectral_grid(s_max, n_s, 10)


@pytest.fixture(scope="module")
def numeric_robin():
    grid, sg = free_grids()
    return sl.build_numeric_transform(sl.zero_potential(), sl.Robin(1), sg, grid), grid, sg


@pytest.mark.parametrize("b,analytic", [
    (sl.Robin(1), tr.make_robin(1)),
    (sl.Dirichlet, tr.make_sine()),
    (sl.Neumann, tr.make_cosine()),
])
def test_numeric_kernel_matches_closed_form(b, analytic):
    x = np.linspace(0, 40, 57)
    s = np.linspace(0.05, 40, 61)
    T = sl.NumericTransform(sl.zero_potential(), b, 40.0)
    numeric = T.kernel(x[:, None], s[None, :]) * np.sqrt(T.spectral_weight(s))[None, :]
    closed = analytic.kernel(x[:, None], s[None, :]) * np.sqrt(analytic.spectral_weight(s))[None, :]
    assert np.abs(numeric - closed).max() <= 1e-6


def test_numeric_robin_mode(numeric_robin):
    T, grid, sg = numeric_robin
    (mode,) = T.modes
    assert mode.eigenvalue == pytest.approx(1.0, abs=1e-8)
    assert mode.norm_check == pytest.approx(1.0, abs=1e-8)


def test_numeric_robin_reconstruct(numeric_robin):
    T, grid, sg = numeric_robin
    f = tr.sample(T, Gaussian(4, 0.7), grid)
    assert tr.relative_l2(tr.reconstruct(T, f, sg), f) <= 1e-3


def test_numeric_dirichlet_forward_matches_sine():
    grid, sg = free_grids()
    T = sl.build_numeric_transform(sl.zero_potential(), sl.Dirichlet, sg, grid)
    f = tr.sample(T, ExpDecay(1), grid)
    S = tr.make_sine()
    ref = tr.forward(S, tr.sample(S, ExpDecay(1), grid), sg).values
    s = sg.nodes
    # compare in the unit-weight normalization
    numeric = tr.forward(T, f, sg).values * np.sqrt(T.spectral_weight(s))
    assert np.abs(numeric - ref * np.sqrt(S.spectral_weight(s))).max() <= 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("q,b", [
    (sl.sech2_potential(2.0), sl.Dirichlet),
    (sl.gausswell_potential(8.0, 1.0), sl.Robin(1)),
], ids=["sech2-dirichlet", "gausswell-robin"])
def test_numeric_parseval_with_potential(q, b):
    grid, sg = free_grids(s_max=40.0, x_trunc=max(40.0, 2 * q.x_q))
    T = sl.build_numeric_transform(q, b, sg, grid)
    assert parseval_residual(T, SmoothBump(5, 2), sg, grid) <= 1e-3


def test_build_rejects_shifted_grid():
    grid = quadgrid.make_spatial_grid(1.0, 40.0, 400, 10, 0)
    sg = quadgrid.make_spectral_grid(10, 100, 10)
    with pytest.raises(ConfigError):
        sl.build_numeric_transform(sl.zero_potential(), sl.Neumann, sg, grid)


def test_build_rejects_short_domain():
    grid, sg = free_grids(s_max=10, x_trunc=25)
    with pytest.raises(FitError):
        sl.build_numeric_transform(sl.sech2_potential(2.0), sl.Neumann, sg, grid)
