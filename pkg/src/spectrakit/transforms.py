"""Degenerate spectral transforms on a half-line.

A transform is the triple (kernel phi(x, s), spectral weight w(s), discrete
modes).  The continuous part maps f to

    fhat(s) = int phi(x, s) f(x) x^m dx

and back through F*[fhat](x) = int phi(x, s) fhat(s) w(s) ds, and the modes
supply the remaining sum_k (f, e_k) e_k.  The frequency s > 0 parametrizes
the continuous spectrum through mu(s) = -s^2.
"""

from __future__ import annotations

import hashlib
import math
import os
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import sici

from . import quadgrid
from .bessel import bessel_jy, bessel_jy_pair
from .errors import ConfigError
from .quadgrid import SpatialGrid, SpectralGrid, require_resolution
from .testfunctions import ModeRef, TestFunctionSpec

SQRT_2_PI = math.sqrt(2.0 / math.pi)
TAIL_POWERS = (1, 2, 3, 4)
_CHUNK = 256


def thread_count() -> int:
    env = os.environ.get("SPECTRAKIT_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            n = 0
        if n < 1:
            raise ConfigError(f"SPECTRAKIT_THREADS must be a positive integer, got {env!r}")
        return n
    return min(8, os.cpu_count() or 1)


@dataclass(frozen=True, eq=False)
class DiscreteMode:
    eigenvalue: float
    eigenfunction: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    tail_norm_sq: Callable[[float], float]
    norm_check: float = float("nan")

    def __call__(self, x):
        return self.eigenfunction(x)


@dataclass(frozen=True)
class ModeTail:
    """Marks a sampled function that continues past x_trunc as scale * e_index."""

    index: int
    scale: float


@dataclass(frozen=True, eq=False)
class SampledFunction:
    grid: SpatialGrid
    values: np.ndarray
    tail: Optional[ModeTail] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise ConfigError(f"expected {self.grid.size} samples, got {values.shape}")
        object.__setattr__(self, "values", values)

    def norm(self) -> float:
        return math.sqrt(max(quadgrid.integrate(self.values**2, self.grid), 0.0))


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    grid: SpectralGrid
    values: np.ndarray
    tail_coefficients: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise ConfigError(f"expected {self.grid.size} samples, got {values.shape}")
        object.__setattr__(self, "values", values)


def _array_key(a: np.ndarray) -> str:
    return hashlib.blake2b(np.ascontiguousarray(a).tobytes(), digest_size=16).hexdigest()


class DegenerateTransform:
    """Base class; subclasses supply kernel, derivative, weight and modes."""

    kind = "abstract"
    x_start = 0.0
    measure_exponent = 0
    asymptote_origin = 0.0
    asymptote_trig = "cos"
    modes: tuple[DiscreteMode, ...] = ()

    def __init__(self):
        self._cache: OrderedDict = OrderedDict()

    # -- analytic ingredients -------------------------------------------------
    def kernel(self, x, s):
        raise NotImplementedError

    def kernel_dx(self, x, s):
        raise NotImplementedError

    def spectral_weight(self, s):
        raise NotImplementedError

    @staticmethod
    def eigenvalue_map(s):
        return -np.asarray(s, dtype=float) ** 2

    @property
    def spatial_domain(self) -> tuple[float, int]:
        return self.x_start, self.measure_exponent

    @property
    def name(self) -> str:
        return self.kind

    def apply_operator(self, x, f, df, d2f):
        """A f from analytic f, f', f''."""
        return np.asarray(d2f, dtype=float)

    def boundary_functional(self, value, slope):
        """Residual of the boundary condition at x_start."""
        raise NotImplementedError

    def asymptotic_amplitude(self, x):
        return np.full_like(np.asarray(x, dtype=float), SQRT_2_PI)

    # -- tabulation -----------------------------------------------------------
    def kernel_matrix(self, x: np.ndarray, s: np.ndarray) -> np.ndarray:
        """phi(x_i, s_j) as an (len(x), len(s)) array, memoized per grid pair."""
        key = (_array_key(x), _array_key(s))
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        out = np.empty((x.size, s.size))
        blocks = [slice(i, min(i + _CHUNK, s.size)) for i in range(0, s.size, _CHUNK)]

        def fill(block):
            out[:, block] = self.kernel(x[:, None], s[None, block])

        workers = thread_count()
        if workers > 1 and len(blocks) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(fill, blocks))
        else:
            for block in blocks:
                fill(block)
        out.setflags(write=False)
        self._cache[key] = out
        while len(self._cache) > 2:
            self._cache.popitem(last=False)
        return out

    # -- far field ------------------------------------------------------------
    def far_field(self, s, x_end: float, mode: DiscreteMode, scale: float):
        """int_{x_end}^inf phi(x, s) * scale * e(x) x^m dx, exactly, by the Lagrange
        identity for two solutions of the same Sturm-Liouville equation."""
        s = np.asarray(s, dtype=float)
        phi = self.kernel(x_end, s)
        dphi = self.kernel_dx(x_end, s)
        e = float(mode.eigenfunction(np.array([x_end]))[0])
        de = float(mode.derivative(np.array([x_end]))[0])
        p = x_end ** self.measure_exponent
        return -scale * p * (dphi * e - phi * de) / (self.eigenvalue_map(s) - mode.eigenvalue)

    def tail_inverse(self, x, s_max: float, coefficients: Sequence[float]):
        """Contribution of frequencies above s_max when the unitary transform
        decays like sum_p c_p s^-p there."""
        x = np.asarray(x, dtype=float)
        u = x - self.asymptote_origin
        total = np.zeros_like(x)
        for p, c in zip(TAIL_POWERS, coefficients):
            if c != 0.0:
                total += c * _trig_tail(self.asymptote_trig, p, s_max, u)
        return self.asymptotic_amplitude(x) * total

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


def _trig_tail(trig: str, p: int, big_s: float, u: np.ndarray) -> np.ndarray:
    """int_S^inf trig(s u) s^-p ds for u >= 0, by integration by parts down to
    the sine and cosine integrals."""
    u = np.asarray(u, dtype=float)
    su = big_s * u
    si, ci = sici(np.where(su > 0, su, 1.0))
    sin_1 = np.where(su > 0, 0.5 * math.pi - si, 0.0)
    with np.errstate(invalid="ignore"):
        cos_1 = np.where(su > 0, -ci, np.inf)
    sin_p, cos_p = sin_1, cos_1
    for q in range(2, p + 1):
        edge = big_s ** (1 - q)
        with np.errstate(invalid="ignore"):
            new_sin = (np.sin(su) * edge + u * cos_p) / (q - 1)
            new_cos = (np.cos(su) * edge - u * sin_p) / (q - 1)
        new_sin = np.where(u == 0, 0.0, new_sin)
        new_cos = np.where(u == 0, edge / (q - 1), new_cos)
        sin_p, cos_p = new_sin, new_cos
    return sin_p if trig == "sin" else cos_p


class SineTransform(DegenerateTransform):
    kind = "sine"
    asymptote_trig = "sin"

    def kernel(self, x, s):
        return SQRT_2_PI * np.sin(np.multiply(x, s))

    def kernel_dx(self, x, s):
        return SQRT_2_PI * np.asarray(s) * np.cos(np.multiply(x, s))

    def spectral_weight(self, s):
        return np.ones_like(np.asarray(s, dtype=float))

    def boundary_functional(self, value, slope):
        return value


class CosineTransform(DegenerateTransform):
    kind = "cosine"

    def kernel(self, x, s):
        return SQRT_2_PI * np.cos(np.multiply(x, s))

    def kernel_dx(self, x, s):
        return -SQRT_2_PI * np.asarray(s) * np.sin(np.multiply(x, s))

    def spectral_weight(self, s):
        return np.ones_like(np.asarray(s, dtype=float))

    def boundary_functional(self, value, slope):
        return slope


class RobinTransform(DegenerateTransform):
    """f'(0) + a f(0) = 0 with a > 0; one bound state sqrt(2a) e^{-ax} at a^2."""

    kind = "robin"

    def __init__(self, a: float):
        super().__init__()
        self.a = float(a)
        a = self.a
        root = math.sqrt(2 * a)
        self.modes = (DiscreteMode(
            eigenvalue=a * a,
            eigenfunction=lambda x: root * np.exp(-a * np.asarray(x, dtype=float)),
            derivative=lambda x: -a * root * np.exp(-a * np.asarray(x, dtype=float)),
            tail_norm_sq=lambda r: math.exp(-2 * a * r),
            norm_check=_mode_norm(lambda x: root * np.exp(-a * x), 0.0, 40.0 / a, 0,
                                  lambda r: math.exp(-2 * a * r)),
        ),)

    @property
    def name(self) -> str:
        return f"robin(a={self.a:g})"

    def kernel(self, x, s):
        s = np.asarray(s, dtype=float)
        xs = np.multiply(x, s)
        return (s * np.cos(xs) - self.a * np.sin(xs)) / np.sqrt(s * s + self.a**2)

    def kernel_dx(self, x, s):
        s = np.asarray(s, dtype=float)
        xs = np.multiply(x, s)
        return -s * (s * np.sin(xs) + self.a * np.cos(xs)) / np.sqrt(s * s + self.a**2)

    def spectral_weight(self, s):
        return np.full_like(np.asarray(s, dtype=float), 2.0 / math.pi)

    def boundary_functional(self, value, slope):
        return slope + self.a * value

    def asymptotic_amplitude(self, x):
        return np.full_like(np.asarray(x, dtype=float), SQRT_2_PI)


class WeberTransform(DegenerateTransform):
    """Delta_k = (1/r)(r u')' - k^2 u / r^2 on (r0, inf), r0 u'(r0) + k u(r0) = 0.

    Kernel J_k(sr) Y_{k-1}(s r0) - Y_k(sr) J_{k-1}(s r0); kernel element r^-k.
    """

    kind = "weber"
    measure_exponent = 1
    asymptote_trig = "cos"

    def __init__(self, k: int, r0: float):
        super().__init__()
        self.k = int(k)
        self.r0 = float(r0)
        self.x_start = self.r0
        self.asymptote_origin = self.r0
        k, r0 = self.k, self.r0
        c = math.sqrt(2 * k - 2) * r0 ** (k - 1)

        def tail(r):
            return (r0 / r) ** (2 * k - 2)

        self.modes = (DiscreteMode(
            eigenvalue=0.0,
            eigenfunction=lambda r: c * np.asarray(r, dtype=float) ** -k,
            derivative=lambda r: -k * c * np.asarray(r, dtype=float) ** (-k - 1),
            tail_norm_sq=tail,
            norm_check=_mode_norm(lambda r: c * r**-k, r0, 50.0 * r0, 1, tail),
        ),)

    @property
    def name(self) -> str:
        return f"weber(k={self.k},r0={self.r0:g})"

    def _boundary_bessel(self, s):
        return bessel_jy(self.k - 1, np.asarray(s, dtype=float) * self.r0)

    def kernel(self, x, s):
        s = np.asarray(s, dtype=float)
        jb, yb = self._boundary_bessel(s)
        j, y = bessel_jy(self.k, np.multiply(x, s))
        with np.errstate(invalid="ignore", over="ignore"):
            out = j * yb - y * jb
        return np.where(np.isfinite(out), out, 0.0)

    def kernel_dx(self, x, s):
        s = np.asarray(s, dtype=float)
        jb, yb = self._boundary_bessel(s)
        z = np.multiply(x, s)
        jm, j, ym, y = bessel_jy_pair(self.k, z)
        dj = jm - self.k / z * j
        dy = ym - self.k / z * y
        return s * (dj * yb - dy * jb)

    def spectral_weight(self, s):
        s = np.asarray(s, dtype=float)
        jb, yb = self._boundary_bessel(s)
        with np.errstate(over="ignore"):
            w = s / (jb * jb + yb * yb)
        return np.where(np.isfinite(w), w, 0.0)

    def apply_operator(self, x, f, df, d2f):
        x = np.asarray(x, dtype=float)
        return d2f + df / x - self.k**2 * f / x**2

    def boundary_functional(self, value, slope):
        return self.r0 * slope + self.k * value

    def asymptotic_amplitude(self, x):
        return SQRT_2_PI / np.sqrt(np.asarray(x, dtype=float))


def _mode_norm(func, x_start, x_end, m, tail_norm_sq) -> float:
    grid = quadgrid.make_spatial_grid(x_start, x_end, 400, 10, m)
    inner = quadgrid.integrate(func(grid.nodes) ** 2, grid)
    return math.sqrt(inner + tail_norm_sq(x_end))


def make_sine() -> SineTransform:
    return SineTransform()


def make_cosine() -> CosineTransform:
    return CosineTransform()


def make_robin(a: float) -> RobinTransform:
    if not (isinstance(a, (int, float)) and math.isfinite(a) and a > 0):
        raise ConfigError(f"Robin parameter a must be a positive number, got {a!r}")
    return RobinTransform(a)


def make_weber(k: int, r0: float) -> WeberTransform:
    if isinstance(k, bool) or not float(k).is_integer():
        raise ConfigError(f"Weber order k must be an integer, got {k!r}")
    if not 2 <= int(k) <= 50:
        raise ConfigError(f"Weber order k must lie in 2..50, got {k}")
    if not r0 > 0:
        raise ConfigError(f"r0 must be positive, got {r0}")
    return WeberTransform(int(k), r0)


# -- sampling -----------------------------------------------------------------

def _check_grid(T: DegenerateTransform, grid: SpatialGrid) -> None:
    if not math.isclose(grid.x_start, T.x_start, rel_tol=0, abs_tol=1e-12):
        raise ConfigError(f"grid starts at {grid.x_start:g} but {T.name} lives on "
                          f"({T.x_start:g}, inf)")
    if grid.measure_exponent != T.measure_exponent:
        raise ConfigError(f"{T.name} needs measure exponent {T.measure_exponent}")


def sample(T: DegenerateTransform, spec: TestFunctionSpec, grid: SpatialGrid) -> SampledFunction:
    """Sample an analytic test function (or a mode reference) on ``grid``."""
    _check_grid(T, grid)
    if isinstance(spec, ModeRef):
        mode = _mode(T, spec.index)
        return SampledFunction(grid, mode.eigenfunction(grid.nodes), ModeTail(spec.index, 1.0))
    spec.check_domain(grid.x_start, grid.x_trunc)
    return SampledFunction(grid, spec.value(grid.nodes))


def sample_operator(T: DegenerateTransform, spec: TestFunctionSpec,
                    grid: SpatialGrid) -> SampledFunction:
    """Sample A f for an analytic test function."""
    _check_grid(T, grid)
    if isinstance(spec, ModeRef):
        mode = _mode(T, spec.index)
        return SampledFunction(grid, mode.eigenvalue * mode.eigenfunction(grid.nodes),
                               ModeTail(spec.index, mode.eigenvalue))
    x = grid.nodes
    return SampledFunction(grid, T.apply_operator(x, spec.value(x), spec.d1(x), spec.d2(x)))


def _mode(T: DegenerateTransform, index: int) -> DiscreteMode:
    if not 0 <= index < len(T.modes):
        raise ConfigError(f"{T.name} has {len(T.modes)} discrete modes; index {index} invalid")
    return T.modes[index]


def default_grids(T: DegenerateTransform, spec: Optional[TestFunctionSpec] = None, *,
                  x_trunc: Optional[float] = None, s_max: float = 100.0,
                  n_x: Optional[int] = None, n_s: Optional[int] = None,
                  panel_degree: int = 10, refine: int = 1) -> tuple[SpatialGrid, SpectralGrid]:
    """Grids satisfying the oscillation rule in both directions.

    ``x_trunc`` defaults to where ``spec`` has decayed (40 decay lengths for
    exponentials); ``refine`` multiplies both node counts.
    """
    if x_trunc is None:
        if spec is None or isinstance(spec, ModeRef):
            x_trunc = T.x_start + 40.0 / getattr(T, "a", 1.0)
        else:
            x_trunc = max(spec.suggested_trunc(), T.x_start + 1.0)
    length = x_trunc - T.x_start
    if n_x is None:
        n_x = quadgrid.nodes_for_frequency(length, s_max, panel_degree)
    if n_s is None:
        n_s = quadgrid.nodes_for_frequency(s_max, x_trunc - T.asymptote_origin, panel_degree)
    grid = quadgrid.make_spatial_grid(T.x_start, x_trunc, n_x * refine, panel_degree,
                                      T.measure_exponent)
    sg = quadgrid.make_spectral_grid(s_max, n_s * refine, panel_degree)
    return grid, sg


# -- the transform pair -------------------------------------------------------

TAIL_FIT_TOLERANCE = 1e-3


def fit_tail(s: np.ndarray, unitary: np.ndarray, s_max: float) -> Optional[np.ndarray]:
    """Least-squares fit of sum_p c_p s^-p to the unitary transform on [s_max/2, s_max].

    Returns None when the data is not of that algebraic form (relative misfit
    above TAIL_FIT_TOLERANCE), e.g. for super-algebraically decaying transforms.
    """
    window = s >= 0.5 * s_max
    data = unitary[window]
    scale = np.linalg.norm(data)
    if scale == 0.0:
        return None
    t = s_max / s[window]
    basis = np.stack([t**p for p in TAIL_POWERS], axis=1)
    coef, *_ = np.linalg.lstsq(basis, data, rcond=None)
    if np.linalg.norm(basis @ coef - data) > TAIL_FIT_TOLERANCE * scale:
        return None
    return coef * np.array([s_max**p for p in TAIL_POWERS])


def forward(T: DegenerateTransform, f: SampledFunction, sg: SpectralGrid, *,
            fit_tail_model: bool = True) -> SpectralFunction:
    """fhat(s_j) = int phi(x, s_j) f(x) x^m dx on the grid of ``f``."""
    _check_grid(T, f.grid)
    require_resolution(f.grid, sg.s_max, f"forward {T.name}")
    s = sg.nodes
    K = T.kernel_matrix(f.grid.nodes, s)
    values = (f.values * f.grid.weights) @ K
    if f.tail is not None:
        values = values + T.far_field(s, f.grid.x_trunc, _mode(T, f.tail.index), f.tail.scale)
    coef = None
    if fit_tail_model:
        coef = fit_tail(s, np.sqrt(T.spectral_weight(s)) * values, sg.s_max)
    return SpectralFunction(sg, values, coef)


def inverse(T: DegenerateTransform, fhat: SpectralFunction, grid: SpatialGrid, *,
            include_tail: bool = True) -> SampledFunction:
    """F*[fhat](x_i) = int phi(x_i, s) fhat(s) w(s) ds, plus the fitted
    high-frequency completion when ``fhat`` carries one."""
    _check_grid(T, grid)
    sg = fhat.grid
    require_resolution(sg, grid.x_trunc - T.asymptote_origin, f"inverse {T.name}")
    K = T.kernel_matrix(grid.nodes, sg.nodes)
    values = K @ (fhat.values * T.spectral_weight(sg.nodes) * sg.weights)
    if include_tail and fhat.tail_coefficients is not None:
        values = values + T.tail_inverse(grid.nodes, sg.s_max, fhat.tail_coefficients)
    return SampledFunction(grid, values)


def discrete_coefficients(T: DegenerateTransform, f: SampledFunction) -> np.ndarray:
    """(f, e_k) for every mode, with the exact far-field part for mode tails."""
    _check_grid(T, f.grid)
    x, R = f.grid.nodes, f.grid.x_trunc
    out = []
    for k, mode in enumerate(T.modes):
        c = quadgrid.integrate(f.values * mode.eigenfunction(x), f.grid)
        if f.tail is not None:
            other = _mode(T, f.tail.index)
            if f.tail.index == k:
                c += f.tail.scale * mode.tail_norm_sq(R)
            else:
                e1 = other.eigenfunction(np.array([R]))[0]
                d1 = other.derivative(np.array([R]))[0]
                e2 = mode.eigenfunction(np.array([R]))[0]
                d2 = mode.derivative(np.array([R]))[0]
                p = R ** T.measure_exponent
                c += -f.tail.scale * p * (d1 * e2 - e1 * d2) / (other.eigenvalue - mode.eigenvalue)
        out.append(c)
    return np.array(out)


def discrete_part(T: DegenerateTransform, coefficients, grid: SpatialGrid,
                  factors=None) -> np.ndarray:
    total = np.zeros_like(grid.nodes)
    for i, (c, mode) in enumerate(zip(coefficients, T.modes)):
        scale = 1.0 if factors is None else factors[i]
        total += scale * c * mode.eigenfunction(grid.nodes)
    return total


def reconstruct(T: DegenerateTransform, f: SampledFunction, sg: SpectralGrid) -> SampledFunction:
    """F*[F f] + sum_k (f, e_k) e_k on the grid of ``f``."""
    fhat = forward(T, f, sg)
    continuous = inverse(T, fhat, f.grid)
    coeffs = discrete_coefficients(T, f)
    return SampledFunction(f.grid, continuous.values + discrete_part(T, coeffs, f.grid), f.tail)


def relative_l2(a: SampledFunction, b: SampledFunction) -> float:
    diff = quadgrid.integrate((a.values - b.values) ** 2, a.grid)
    ref = quadgrid.integrate(b.values**2, b.grid)
    return math.sqrt(max(diff, 0.0) / max(ref, 1e-300))


# -- pointwise residuals of the kernel -----------------------------------------

def kernel_ode_residual(T: DegenerateTransform, x: float, s: float, h: float = 1e-3) -> float:
    """|A phi - mu phi| / (1 + |phi|) with A applied by 5-point differences."""
    pts = x + h * np.arange(-2, 3)
    phi = T.kernel(pts, s)
    d1 = (phi[0] - 8 * phi[1] + 8 * phi[3] - phi[4]) / (12 * h)
    d2 = (-phi[0] + 16 * phi[1] - 30 * phi[2] + 16 * phi[3] - phi[4]) / (12 * h * h)
    a_phi = T.apply_operator(x, phi[2], d1, d2)
    return float(abs(a_phi - T.eigenvalue_map(s) * phi[2]) / (1 + abs(phi[2])))


def kernel_boundary_residual(T: DegenerateTransform, s: float, h: float = 1e-4) -> float:
    """Boundary functional at x_start with a one-sided 5-point derivative."""
    x0 = T.x_start
    pts = x0 + h * np.arange(5)
    phi = T.kernel(pts, s)
    slope = (-25 * phi[0] + 48 * phi[1] - 36 * phi[2] + 16 * phi[3] - 3 * phi[4]) / (12 * h)
    scale = 1 + abs(phi[0]) + abs(slope)
    return float(abs(T.boundary_functional(phi[0], slope)) / scale)
