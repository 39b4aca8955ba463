"""Numerical generalized eigenfunctions for f'' - q(x) f on the half-line.

The ODE phi'' = (q(x) + E) phi (E = -s^2 on the continuous spectrum, E = lambda
for bound states) is integrated with the fourth-order Magnus method: on each
step the coefficient matrix is sampled at the two Gauss points and the 2x2
exponential is taken in closed form.  The step is exact for constant q, so
the frequency s never limits the step size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from . import quadgrid
from .errors import ConfigError, FitError
from .quadgrid import SpatialGrid, SpectralGrid
from .transforms import SQRT_2_PI, DegenerateTransform, DiscreteMode, _array_key

MAX_STEP = 0.02
_GAUSS = 0.5 - math.sqrt(3.0) / 6.0
_MAGNUS = math.sqrt(3.0) / 12.0
_LOG_RESCALE = 200.0
FIT_RESIDUAL_LIMIT = 1e-6


@dataclass(frozen=True)
class PotentialSpec:
    """q(x), with the promise |q(x)| <= bound for x > x_q."""

    q: Callable[[np.ndarray], np.ndarray]
    x_q: float = 0.0
    bound: float = 1e-15
    label: str = "custom"

    def __call__(self, x):
        return np.broadcast_to(np.asarray(self.q(np.asarray(x, dtype=float)), dtype=float),
                               np.shape(x)).astype(float)

    @property
    def is_zero(self) -> bool:
        return self.label == "zero"

    def check_decay(self, x_end: float) -> None:
        if x_end <= self.x_q:
            return
        pts = np.linspace(self.x_q, x_end, 16)
        worst = float(np.abs(self(pts)).max())
        if worst > self.bound:
            raise ConfigError(f"potential {self.label} exceeds {self.bound:g} beyond x_q="
                              f"{self.x_q:g} (max {worst:.3g})")


def zero_potential() -> PotentialSpec:
    return PotentialSpec(lambda x: np.zeros_like(x), 0.0, 0.0, "zero")


def sech2_potential(c: float) -> PotentialSpec:
    """q = c * sech(x)^2."""
    x_q = 0.5 * (math.log(4 * max(abs(c), 1e-300)) + 37.0) if c else 0.0

    def q(x):
        return c / np.cosh(np.minimum(x, 350.0)) ** 2

    return PotentialSpec(q, max(x_q, 0.0), 1e-15, f"sech2(c={c:g})")


def gausswell_potential(c: float, w: float) -> PotentialSpec:
    """q = -c * exp(-(x/w)^2), a well of depth c for c > 0."""
    if w <= 0:
        raise ConfigError("gausswell width must be positive")
    x_q = w * math.sqrt(max(math.log(max(abs(c), 1e-300)) + 37.0, 0.0))
    return PotentialSpec(lambda x: -c * np.exp(-(x / w) ** 2), x_q, 1e-15,
                         f"gausswell(c={c:g},w={w:g})")


@dataclass(frozen=True)
class BoundarySpec:
    kind: str  # "dirichlet" | "neumann" | "robin"
    a: float = 0.0

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann", "robin"):
            raise ConfigError(f"unknown boundary condition {self.kind!r}")
        if self.kind == "robin" and not self.a > 0:
            raise ConfigError("Robin boundary needs a > 0")

    def initial_data(self) -> tuple[float, float]:
        return {"dirichlet": (0.0, 1.0), "neumann": (1.0, 0.0),
                "robin": (1.0, -self.a)}[self.kind]

    def residual(self, value, slope):
        if self.kind == "dirichlet":
            return value
        if self.kind == "neumann":
            return slope
        return slope + self.a * value


Dirichlet = BoundarySpec("dirichlet")
Neumann = BoundarySpec("neumann")


def Robin(a: float) -> BoundarySpec:
    return BoundarySpec("robin", a)


# -- Magnus propagation --------------------------------------------------------

def _step_points(x_targets: np.ndarray, x_start: float, max_step: Optional[float]):
    """Step endpoints covering [x_start, max(x_targets)], with target indices."""
    pts = [x_start]
    idx = np.empty(x_targets.size, dtype=int)
    for i, xt in enumerate(x_targets):
        gap = xt - pts[-1]
        if max_step is not None and gap > max_step:
            n = math.ceil(gap / max_step)
            pts.extend(pts[-1] + gap * np.arange(1, n) / n)
        if xt > pts[-1]:
            pts.append(float(xt))
        idx[i] = len(pts) - 1
    return np.array(pts), idx


def propagate(q: PotentialSpec, energy: np.ndarray, y0: tuple[float, float],
              x_targets: np.ndarray, x_start: float = 0.0):
    """Integrate phi'' = (q + energy) phi from x_start with (phi, phi') = y0.

    Returns (phi, dphi, log_scale) at the sorted ``x_targets`` for every energy;
    the true solution is value * exp(log_scale) where log_scale is per energy.
    """
    energy = np.atleast_1d(np.asarray(energy, dtype=float))
    x_targets = np.asarray(x_targets, dtype=float)
    if np.any(np.diff(x_targets) < 0) or (x_targets.size and x_targets[0] < x_start):
        raise ConfigError("propagation targets must be sorted and >= x_start")
    max_step = None if q.is_zero else MAX_STEP
    top = float(energy.max(initial=0.0))
    if top > 0:
        # keep cosh(sqrt(E) h) far from overflow between rescalings
        limit = 0.5 * _LOG_RESCALE / math.sqrt(top)
        max_step = limit if max_step is None else min(max_step, limit)
    pts, idx = _step_points(x_targets, x_start, max_step)
    h = np.diff(pts)
    q1 = q(pts[:-1] + _GAUSS * h)
    q2 = q(pts[:-1] + (1.0 - _GAUSS) * h)

    phi = np.full(energy.shape, y0[0], dtype=float)
    dphi = np.full(energy.shape, y0[1], dtype=float)
    log_scale = np.zeros_like(energy)
    out_phi = np.empty((x_targets.size, energy.size))
    out_dphi = np.empty_like(out_phi)
    out_log = np.empty_like(out_phi)
    target_at = {}
    for t, i in enumerate(idx):
        target_at.setdefault(int(i), []).append(t)
    for t in target_at.get(0, ()):
        out_phi[t], out_dphi[t], out_log[t] = phi, dphi, log_scale

    for step in range(h.size):
        hs = h[step]
        c1 = q1[step] + energy
        c2 = q2[step] + energy
        alpha = _MAGNUS * hs * hs * (c1 - c2)
        beta = 0.5 * hs * (c1 + c2)  # lower-left entry, h * mean(c)
        delta = alpha * alpha + hs * beta
        r = np.sqrt(np.abs(delta))
        pos = delta > 0
        with np.errstate(over="ignore", invalid="ignore"):
            ch = np.where(pos, np.cosh(r), np.cos(r))
            safe_r = np.where(r > 0, r, 1.0)
            sh = np.where(r > 0, np.where(pos, np.sinh(r), np.sin(r)) / safe_r, 1.0)
        new_phi = (ch + sh * alpha) * phi + sh * hs * dphi
        new_dphi = sh * beta * phi + (ch - sh * alpha) * dphi
        phi, dphi = new_phi, new_dphi
        big = np.maximum(np.abs(phi), np.abs(dphi)) > math.exp(_LOG_RESCALE)
        if big.any():
            factor = np.where(big, math.exp(-_LOG_RESCALE), 1.0)
            phi *= factor
            dphi *= factor
            log_scale += np.where(big, _LOG_RESCALE, 0.0)
        for t in target_at.get(step + 1, ()):
            out_phi[t], out_dphi[t], out_log[t] = phi, dphi, log_scale
    return out_phi, out_dphi, out_log


# -- continuous spectrum -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EigenfunctionSolution:
    s: float
    grid: SpatialGrid
    phi: np.ndarray
    dphi: np.ndarray
    amplitude: float
    phase: float
    fit_residual: float


def _amplitude_phase(s: np.ndarray, x: np.ndarray, phi: np.ndarray, dphi: np.ndarray):
    """Fit phi = R sin(s x + theta) on the window rows of (phi, dphi)."""
    r_local = np.sqrt(phi**2 + (dphi / s) ** 2)
    amp = r_local.mean(axis=0)
    resid = np.abs(r_local - amp).max(axis=0) / amp
    angle = np.unwrap(np.arctan2(s * phi, dphi) - np.outer(x, s), axis=0)
    phase = np.mod(angle.mean(axis=0), 2 * math.pi)
    return amp, phase, resid


def _fit_window(x_end: float, n: int = 64) -> np.ndarray:
    return np.linspace(0.75 * x_end, x_end, n)


def integrate_eigenfunction(q: PotentialSpec, b: BoundarySpec, s: float,
                            grid: SpatialGrid) -> EigenfunctionSolution:
    """phi'' = (q - s^2) phi from x = 0 with data from ``b``; amplitude and
    phase from the last quarter of [0, x_trunc]."""
    if not s > 0:
        raise ConfigError("s must be positive")
    if grid.x_start != 0.0 or grid.measure_exponent != 0:
        raise ConfigError("Sturm-Liouville grids start at 0 with measure dx")
    quadgrid.require_resolution(grid, s, "integrate_eigenfunction")
    if q.x_q > 0.5 * grid.x_trunc:
        raise FitError(f"potential decays only beyond {q.x_q:g}; need x_q <= x_trunc/2")
    window = _fit_window(grid.x_trunc)
    targets = np.concatenate([grid.nodes, window])
    order = np.argsort(targets, kind="stable")
    phi, dphi, log = propagate(q, np.array([-s * s]), b.initial_data(), targets[order])
    unsorted = np.empty_like(order)
    unsorted[order] = np.arange(order.size)
    phi, dphi = phi[unsorted, 0], dphi[unsorted, 0]
    n = grid.size
    amp, phase, resid = _amplitude_phase(np.array([s]), window, phi[n:, None], dphi[n:, None])
    return EigenfunctionSolution(float(s), grid, phi[:n], dphi[:n], float(amp[0]),
                                 float(phase[0]), float(resid[0]))


def spectral_weight_estimate(sol: EigenfunctionSolution) -> float:
    """(2/pi) / R(s)^2: the density that makes the raw solution orthonormal."""
    if not sol.fit_residual <= FIT_RESIDUAL_LIMIT:
        raise FitError(f"amplitude fit residual {sol.fit_residual:.3g} at s={sol.s:g}; "
                       "the potential has not decayed in the fit window")
    return (2.0 / math.pi) / sol.amplitude**2


# -- discrete spectrum ---------------------------------------------------------

def _shooting_points(x_end: float) -> np.ndarray:
    return np.linspace(0.0, x_end, max(201, int(math.ceil(x_end / MAX_STEP)) + 1))


def _mismatch(q: PotentialSpec, b: BoundarySpec, lam: np.ndarray, x_end: float) -> np.ndarray:
    """(phi' + sqrt(lam) phi)(x_end) * exp(-sqrt(lam) x_end): zero exactly when the
    solution from the boundary is the decaying one."""
    kappa = np.sqrt(lam)
    phi, dphi, log = propagate(q, lam, b.initial_data(), np.array([x_end]))
    return (dphi[0] + kappa * phi[0]) * np.exp(log[0] - kappa * x_end)


def find_discrete_eigenvalues(q: PotentialSpec, b: BoundarySpec, search: tuple[float, float],
                              n_scan: int = 64, grid: Optional[SpatialGrid] = None,
                              x_end: float = 40.0):
    """Bound states lambda > 0 of f'' - q f in ``search``, by shooting.

    Returns a list of (eigenvalue, unit-norm SampledFunction on ``grid``).
    """
    from .transforms import SampledFunction

    lo, hi = search
    if lo <= 0 or hi <= lo:
        raise ConfigError("eigenvalue search window must satisfy 0 < lo < hi")
    if n_scan < 8:
        raise ConfigError("n_scan must be >= 8")
    if grid is None:
        grid = quadgrid.make_spatial_grid(0.0, x_end, 400, 10, 0)
    x_end = grid.x_trunc
    # geometric points resolve shallow states near the threshold
    lams = np.union1d(np.linspace(lo, hi, n_scan), np.geomspace(lo, hi, n_scan))
    vals = _mismatch(q, b, lams, x_end)
    if np.any(vals == 0.0):
        lams = lams + 1e-7 * (hi - lo)
        vals = _mismatch(q, b, lams, x_end)
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        root = brentq(lambda lam: float(_mismatch(q, b, np.array([lam]), x_end)[0]),
                      lams[i], lams[i + 1], xtol=1e-13, rtol=1e-15, maxiter=200)
        roots.append(root)
    out = []
    for lam in roots:
        e, tail_sq = _bound_state(q, b, lam, grid)
        out.append((lam, SampledFunction(grid, e)))
    return out


def _bound_state(q: PotentialSpec, b: BoundarySpec, lam: float, grid: SpatialGrid):
    """Unit-norm samples and the tail integral past x_trunc."""
    kappa = math.sqrt(lam)
    x_c = min(max(q.x_q, 5.0 / kappa), 0.5 * grid.x_trunc)
    x = grid.nodes
    inner = x[x <= x_c]
    phi_in, dphi_in, log_in = propagate(q, np.array([lam]), b.initial_data(),
                                        np.append(inner, x_c))
    phi_c = phi_in[-1, 0] * math.exp(log_in[-1, 0])
    vals = np.empty_like(x)
    vals[: inner.size] = phi_in[:-1, 0] * np.exp(log_in[:-1, 0])
    vals[inner.size:] = phi_c * np.exp(-kappa * (x[inner.size:] - x_c))
    end = vals[-1]
    tail_sq = end * end / (2 * kappa)
    norm = math.sqrt(quadgrid.integrate(vals**2, grid) + tail_sq)
    k = int(np.argmax(np.abs(vals)))
    sign = 1.0 if vals[k] >= 0 else -1.0
    return sign * vals / norm, tail_sq / norm**2


# -- assembled transform -------------------------------------------------------

class NumericTransform(DegenerateTransform):
    """Transform of f'' - q f with boundary ``b`` built from numerical solutions."""

    kind = "numeric"

    def __init__(self, q: PotentialSpec, b: BoundarySpec, x_fit: float, modes=()):
        super().__init__()
        self.potential = q
        self.boundary = b
        self.x_fit = float(x_fit)
        self.asymptote_trig = "sin" if b.kind == "dirichlet" else "cos"
        self.modes = tuple(modes)
        self._weights: dict = {}

    @property
    def name(self) -> str:
        bc = self.boundary.kind
        if bc == "robin":
            bc += f"(a={self.boundary.a:g})"
        return f"numeric(q={self.potential.label},bc={bc})"

    def _solve(self, x, s):
        x, s = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(s, dtype=float))
        xu, xi = np.unique(x, return_inverse=True)
        su, si = np.unique(s, return_inverse=True)
        phi, dphi, _ = propagate(self.potential, -su * su, self.boundary.initial_data(), xu)
        return (phi[xi.reshape(x.shape), si.reshape(s.shape)],
                dphi[xi.reshape(x.shape), si.reshape(s.shape)])

    def kernel(self, x, s):
        return self._solve(x, s)[0]

    def kernel_dx(self, x, s):
        return self._solve(x, s)[1]

    def amplitude(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        window = _fit_window(self.x_fit)
        phi, dphi, _ = propagate(self.potential, -s * s, self.boundary.initial_data(), window)
        amp, _, resid = _amplitude_phase(s, window, phi, dphi)
        if np.any(resid > FIT_RESIDUAL_LIMIT):
            bad = s[resid > FIT_RESIDUAL_LIMIT]
            raise FitError(f"amplitude fit failed at s={bad[0]:g} (residual "
                           f"{resid.max():.3g}); increase x_trunc or s")
        return amp

    def spectral_weight(self, s):
        s = np.asarray(s, dtype=float)
        key = _array_key(s)
        if key not in self._weights:
            self._weights[key] = ((2.0 / math.pi) / self.amplitude(s.ravel()) ** 2).reshape(s.shape)
        return self._weights[key]

    def apply_operator(self, x, f, df, d2f):
        return np.asarray(d2f, dtype=float) - self.potential(x) * f

    def boundary_functional(self, value, slope):
        return self.boundary.residual(value, slope)

    def asymptotic_amplitude(self, x):
        return np.full_like(np.asarray(x, dtype=float), SQRT_2_PI)


def _numeric_mode(lam: float, samples, grid: SpatialGrid) -> DiscreteMode:
    kappa = math.sqrt(lam)
    values = samples.values
    deriv_nodes = np.gradient(values, grid.nodes, edge_order=2)
    R = grid.x_trunc
    end = float(grid.interpolate(values, [R])[0])

    def eig(x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        inside = x <= R
        out[inside] = grid.interpolate(values, x[inside])
        out[~inside] = end * np.exp(-kappa * (x[~inside] - R))
        return out

    def deriv(x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        inside = x <= R
        out[inside] = grid.interpolate(deriv_nodes, x[inside])
        out[~inside] = -kappa * end * np.exp(-kappa * (x[~inside] - R))
        return out

    def tail_sq(r):
        v = float(eig(np.array([r]))[0])
        return v * v / (2 * kappa)

    norm = math.sqrt(quadgrid.integrate(values**2, grid) + tail_sq(R))
    return DiscreteMode(lam, eig, deriv, tail_sq, norm)


def eigenvalue_search_window(q: PotentialSpec, b: BoundarySpec, grid: SpatialGrid):
    depth = max(0.0, -float(q(grid.nodes).min()))
    a2 = b.a**2 if b.kind == "robin" else 0.0
    return (1.0 / grid.x_trunc) ** 2, 1.2 * (a2 + depth) + 1.0


def build_numeric_transform(q: PotentialSpec, b: BoundarySpec, sg: SpectralGrid,
                            grid: SpatialGrid, n_scan: int = 64) -> NumericTransform:
    """Tabulate kernel and weight on (grid, sg) and attach the bound states."""
    if grid.x_start != 0.0 or grid.measure_exponent != 0:
        raise ConfigError("Sturm-Liouville grids start at 0 with measure dx")
    if q.x_q > 0.5 * grid.x_trunc:
        raise FitError(f"potential decays only beyond {q.x_q:g}; need x_q <= x_trunc/2")
    q.check_decay(grid.x_trunc)
    found = find_discrete_eigenvalues(q, b, eigenvalue_search_window(q, b, grid), n_scan, grid)
    modes = [_numeric_mode(lam, samples, grid) for lam, samples in found]
    T = NumericTransform(q, b, grid.x_trunc, modes)
    T.spectral_weight(sg.nodes)
    T.kernel_matrix(grid.nodes, sg.nodes)
    return T
