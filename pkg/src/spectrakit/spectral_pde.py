"""Heat flow y_t = A y on the half-line, spectrally and by Crank-Nicolson.

The spectral solution damps the transform by exp(-s^2 t) and scales every
discrete coefficient by exp(lambda_k t).  The finite-difference solver is an
independent reference that knows only the differential operator and the
boundary condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from . import quadgrid
from .errors import ConfigError, InstabilityError
from .quadgrid import SpectralGrid
from .sturm_liouville import BoundarySpec, NumericTransform, PotentialSpec, zero_potential
from .transforms import (CosineTransform, DegenerateTransform, ModeTail, RobinTransform,
                         SampledFunction, SineTransform, SpectralFunction, WeberTransform,
                         discrete_coefficients, forward, inverse)

DAMPING_CUTOFF = 46.0  # drop s^2 t beyond this: exp(-46) < 1e-20


@dataclass(frozen=True, eq=False)
class HeatSolveResult:
    t: float
    y: SampledFunction
    discrete_part: tuple[tuple[float, float], ...]  # (lambda_k, c_k exp(lambda_k t))
    continuous_part_norm: float


def heat_evolve(T: DegenerateTransform, f: SampledFunction, t: float,
                sg: SpectralGrid) -> HeatSolveResult:
    """y(t) = F*[exp(mu t) F f] + sum_k exp(lambda_k t) (f, e_k) e_k."""
    if not (math.isfinite(t) and t >= 0):
        raise ConfigError(f"heat_evolve needs finite t >= 0, got {t}")
    fhat = forward(T, f, sg)
    s = sg.nodes
    exponent = s * s * t
    damp = np.where(exponent > DAMPING_CUTOFF, 0.0, np.exp(-np.minimum(exponent, DAMPING_CUTOFF)))
    damped = SpectralFunction(sg, fhat.values * damp, fhat.tail_coefficients if t == 0 else None)
    continuous = inverse(T, damped, f.grid)
    weight = T.spectral_weight(s)
    cont_norm = math.sqrt(max(quadgrid.integrate(damped.values**2 * weight, sg), 0.0))

    coeffs = discrete_coefficients(T, f)
    values = continuous.values.copy()
    parts = []
    for c, mode in zip(coeffs, T.modes):
        grown = c * math.exp(mode.eigenvalue * t)
        values += grown * mode.eigenfunction(f.grid.nodes)
        parts.append((mode.eigenvalue, grown))
    tail = None
    if f.tail is not None:
        lam = T.modes[f.tail.index].eigenvalue
        tail = ModeTail(f.tail.index, f.tail.scale * math.exp(lam * t))
    if not np.all(np.isfinite(values)):
        raise InstabilityError("non-finite values in the spectral heat solution")
    return HeatSolveResult(float(t), SampledFunction(f.grid, values, tail), tuple(parts), cont_norm)


# -- finite-difference reference ----------------------------------------------

@dataclass(frozen=True)
class WeberBoundary:
    """Radial operator (1/r)(r y')' - k^2 y / r^2 with r0 y'(r0) + k y(r0) = 0."""

    k: int
    r0: float


def reference_problem(T: DegenerateTransform):
    """The (q, boundary) pair that the finite-difference solver needs for ``T``."""
    if isinstance(T, SineTransform):
        return zero_potential(), BoundarySpec("dirichlet")
    if isinstance(T, CosineTransform):
        return zero_potential(), BoundarySpec("neumann")
    if isinstance(T, RobinTransform):
        return zero_potential(), BoundarySpec("robin", T.a)
    if isinstance(T, WeberTransform):
        return zero_potential(), WeberBoundary(T.k, T.r0)
    if isinstance(T, NumericTransform):
        return T.potential, T.boundary
    raise ConfigError(f"no finite-difference reference for {T!r}")


def _operator_bands(q: PotentialSpec, b, x: np.ndarray, h: float):
    """Tridiagonal L on the unknowns; returns (lower, diag, upper, first_unknown)."""
    n = x.size - 1  # x[n] is the far Dirichlet end
    xi = x[:n]
    lower = np.full(n, 1.0 / h**2)
    upper = np.full(n, 1.0 / h**2)
    diag = np.full(n, -2.0 / h**2)
    if isinstance(b, WeberBoundary):
        upper += 1.0 / (2 * h * xi)
        lower -= 1.0 / (2 * h * xi)
        diag -= b.k**2 / xi**2
        # ghost value y_{-1} = y_1 + 2 h k y_0 / r0
        g = 2 * h * b.k / b.r0
        diag[0] += lower[0] * g
        upper[0] += lower[0]
        lower[0] = 0.0
        return lower, diag, upper, 0
    diag -= q(xi)
    if b.kind == "dirichlet":
        return lower[1:], diag[1:], upper[1:], 1
    a = b.a if b.kind == "robin" else 0.0
    # ghost value y_{-1} = y_1 + 2 h a y_0
    diag[0] += lower[0] * 2 * h * a
    upper[0] += lower[0]
    lower[0] = 0.0
    return lower, diag, upper, 0


def _growth_bound(q: PotentialSpec, b, x: np.ndarray) -> float:
    """Upper bound for the top of the spectrum: a^2 + max(-q)."""
    if isinstance(b, WeberBoundary):
        return 0.0
    a2 = b.a**2 if b.kind == "robin" else 0.0
    return a2 + max(0.0, -float(q(x).min()))


def crank_nicolson_reference(q: PotentialSpec, b: Union[BoundarySpec, WeberBoundary],
                             f: SampledFunction, t: float, dt: float = 1e-3,
                             uniform_n: int = 4000, x_far: Optional[float] = None,
                             growth_rate: Optional[float] = None) -> SampledFunction:
    """Second-order finite-difference solution of y_t = A y, returned on f's grid.

    The uniform grid runs from f's left end to ``x_far`` (default: f's
    truncation point plus 10 sqrt(t)) with y = 0 there; f is extended by zero.
    """
    if not (math.isfinite(t) and t >= 0):
        raise ConfigError(f"t must be finite and >= 0, got {t}")
    if not dt > 0:
        raise ConfigError("dt must be positive")
    if uniform_n < 16:
        raise ConfigError("uniform_n must be >= 16")
    grid = f.grid
    if t == 0:
        return SampledFunction(grid, f.values.copy(), f.tail)
    x0 = grid.x_start
    if x_far is None:
        x_far = grid.x_trunc + 10.0 * math.sqrt(t)
    if x_far < grid.x_trunc:
        raise ConfigError("x_far must not be left of the input grid")
    x = np.linspace(x0, x_far, uniform_n + 1)
    h = x[1] - x[0]
    y = np.zeros_like(x)
    inside = x <= grid.x_trunc
    y[inside] = grid.interpolate(f.values, x[inside])
    y[-1] = 0.0

    steps = max(1, math.ceil(t / dt - 1e-9))
    dt = t / steps
    lower, diag, upper, first = _operator_bands(q, b, x, h)
    m = diag.size
    lhs = np.zeros((3, m))
    lhs[0, 1:] = -0.5 * dt * upper[:-1]
    lhs[1] = 1.0 - 0.5 * dt * diag
    lhs[2, :-1] = -0.5 * dt * lower[1:]

    def apply_rhs(u):
        out = u + 0.5 * dt * diag * u
        out[:-1] += 0.5 * dt * upper[:-1] * u[1:]
        out[1:] += 0.5 * dt * lower[1:] * u[:-1]
        return out

    weight = x[first:-1] if isinstance(b, WeberBoundary) else np.ones(m)

    def norm(u):
        return math.sqrt(h * float(np.dot(weight * u, u)))

    u = y[first:-1].copy()
    start_norm = norm(u)
    rate = (_growth_bound(q, b, x) if growth_rate is None else growth_rate) + 1.0
    for n in range(1, steps + 1):
        u = solve_banded((1, 1), lhs, apply_rhs(u))
        limit = start_norm * math.exp(rate * n * dt) * (1 + 1e-9)
        if not np.all(np.isfinite(u)) or norm(u) > limit:
            raise InstabilityError(f"Crank-Nicolson norm growth beyond exp({rate:g} t) at step {n}")
    y[first:-1] = u
    if first:
        y[0] = 0.0
    spline = CubicSpline(x, y)
    return SampledFunction(grid, spline(grid.nodes), f.tail)


def compare_solutions(y1: SampledFunction, y2: SampledFunction) -> tuple[float, float]:
    """(relative weighted L2, relative sup) of y2 - y1, measured against y1."""
    if y1.grid is not y2.grid and not (
            y1.grid.size == y2.grid.size and np.array_equal(y1.grid.nodes, y2.grid.nodes)
            and np.array_equal(y1.grid.weights, y2.grid.weights)):
        raise ConfigError("compare_solutions needs both functions on the same grid")
    diff = y2.values - y1.values
    peak = float(np.abs(y1.values).max(initial=0.0))
    floor = 1e-14 * peak
    l2_diff = math.sqrt(max(quadgrid.integrate(diff**2, y1.grid), 0.0))
    sup_diff = float(np.abs(diff).max(initial=0.0))
    l2_ref = max(y1.norm(), floor)
    sup_ref = max(peak, floor)
    l2 = 0.0 if l2_diff == 0 else (l2_diff / l2_ref if l2_ref > 0 else math.inf)
    sup = 0.0 if sup_diff == 0 else (sup_diff / sup_ref if sup_ref > 0 else math.inf)
    return l2, sup
