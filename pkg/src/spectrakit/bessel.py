"""Integer-order Bessel functions J_n and Y_n for positive real arguments.

Small and moderate arguments use Miller's backward recurrence normalized by
J_0 + 2 sum J_2k = 1, with Y_0 and Y_1 from their Neumann series in the same
recurrence sweep.  Arguments x >= 25 use Hankel's asymptotic expansion for
orders 0 and 1.  Higher orders follow by forward recurrence, which is stable
for Y everywhere and for J while n <= x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

MAX_ORDER = 50
ASYMPTOTIC_THRESHOLD = 25.0
_HANKEL_TERMS = 12
# (lower bound of x, number of P/Q terms) keeping truncation below 1e-17
_HANKEL_BANDS = ((25.0, 10), (50.0, 8), (200.0, 5))
_RESCALE = 1e200


@dataclass(frozen=True)
class BesselOrder:
    n: int

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise ConfigError(f"Bessel order must be an integer, got {self.n!r}")
        if not 0 <= self.n <= MAX_ORDER:
            raise ConfigError(f"Bessel order must lie in 0..{MAX_ORDER}, got {self.n}")
        object.__setattr__(self, "n", int(self.n))


def _order(n) -> int:
    return n.n if isinstance(n, BesselOrder) else BesselOrder(n).n


def _hankel_coefficients(nu: int) -> np.ndarray:
    mu = 4.0 * nu * nu
    a = [1.0]
    for k in range(1, 2 * _HANKEL_TERMS):
        a.append(a[-1] * (mu - (2 * k - 1) ** 2) / (k * 8.0))
    return np.array(a)


_HANKEL = {0: _hankel_coefficients(0), 1: _hankel_coefficients(1)}


def _hankel01(x: np.ndarray):
    """(J0, J1, Y0, Y1) from the asymptotic expansion, x >= 25."""
    j0, j1, y0, y1 = (np.empty_like(x) for _ in range(4))
    edges = [b[0] for b in _HANKEL_BANDS] + [np.inf]
    for (lo, terms), hi in zip(_HANKEL_BANDS, edges[1:]):
        band = (x >= lo) & (x < hi)
        if band.any():
            j0[band], j1[band], y0[band], y1[band] = _hankel_band(x[band], terms)
    return j0, j1, y0, y1


def _hankel_band(x: np.ndarray, terms: int):
    inv = 1.0 / x
    inv2 = inv * inv
    amp = np.sqrt(2.0 / (math.pi * x))
    chi = x - 0.25 * math.pi
    # phase of order 1 is chi - pi/2
    trig = {0: (np.cos(chi), np.sin(chi))}
    trig[1] = (trig[0][1], -trig[0][0])
    out = []
    for nu in (0, 1):
        a = _HANKEL[nu]
        p = np.zeros_like(x)
        q = np.zeros_like(x)
        for k in range(terms - 1, -1, -1):
            sign = -1.0 if k % 2 else 1.0
            p = p * inv2 + sign * a[2 * k]
            q = q * inv2 + sign * a[2 * k + 1]
        q *= inv
        c, s = trig[nu]
        out.append((amp * (p * c - q * s), amp * (p * s + q * c)))
    (j0, y0), (j1, y1) = out
    return j0, j1, y0, y1


def _miller(orders: tuple[int, ...], x: np.ndarray):
    """Backward recurrence; returns {order: J}, Y0, Y1 for 0 < x < ~60."""
    top = max(max(orders), float(x.max()))
    start = 2 * int(math.ceil((top + 24 + 6 * math.sqrt(top + 1)) / 2))
    inv2x = 2.0 / x
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)  # J0 + 2*sum J_2k, unnormalized
    s0 = np.zeros_like(x)  # sum (-1)^k J_2k / k
    s1 = np.zeros_like(x)  # sum (-1)^k (2k+1)/(k(k+1)) J_{2k+1}
    kept = {}
    for m in range(start, 0, -1):
        # j_cur holds J_m, j_next holds J_{m+1}
        if m in orders:
            kept[m] = j_cur.copy()
        if m % 2 == 0:
            k = m // 2
            norm += 2.0 * j_cur
            s0 += (-1.0) ** k * j_cur / k
        else:
            k = (m - 1) // 2
            if k >= 1:
                s1 += (-1.0) ** k * (2 * k + 1) / (k * (k + 1)) * j_cur
        j_prev = m * inv2x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        big = np.abs(j_cur) > _RESCALE
        if big.any():
            scale = np.where(big, 1.0 / _RESCALE, 1.0)
            j_cur *= scale
            j_next *= scale
            norm *= scale
            s0 *= scale
            s1 *= scale
            for key in kept:
                kept[key] *= scale
    # j_cur is J_0 and j_next is J_1
    norm += j_cur
    j0, j1 = j_cur / norm, j_next / norm
    kept = {m: v / norm for m, v in kept.items()}
    kept[0], kept[1] = j0, j1
    s0, s1 = s0 / norm, s1 / norm
    log_term = np.log(0.5 * x) + np.euler_gamma
    y0 = (2.0 / math.pi) * (log_term * j0 - 2.0 * s0)
    y1 = (2.0 / math.pi) * ((log_term - 1.0) * j1 - j0 / x - s1)
    return kept, y0, y1


def _forward(n: int, f0: np.ndarray, f1: np.ndarray, x: np.ndarray) -> np.ndarray:
    if n == 0:
        return f0
    prev, cur = f0, f1
    for m in range(1, n):
        prev, cur = cur, (2.0 * m / x) * cur - prev
    return cur


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def bessel_jy(n, x):
    """Return (J_n(x), Y_n(x)) for x > 0, broadcasting over ``x``."""
    n = _order(n)
    arr, scalar = _as_array(x)
    if np.any(arr <= 0) or np.any(~np.isfinite(arr)):
        raise ConfigError("bessel_jy requires finite x > 0")
    flat = arr.ravel()
    j = np.empty_like(flat)
    y = np.empty_like(flat)

    asym = flat >= ASYMPTOTIC_THRESHOLD
    if asym.any():
        xa = flat[asym]
        j0, j1, y0, y1 = _hankel01(xa)
        y[asym] = _forward(n, y0, y1, xa)
        ja = _forward(n, j0, j1, xa)
        unstable = n > xa
        if unstable.any():
            kept, _, _ = _miller((n,), xa[unstable])
            ja[unstable] = kept[n]
        j[asym] = ja
    small = ~asym
    if small.any():
        xs = flat[small]
        kept, y0, y1 = _miller((n,), xs)
        j[small] = kept[n]
        with np.errstate(over="ignore", invalid="ignore"):
            y[small] = _forward(n, y0, y1, xs)
    j, y = j.reshape(arr.shape), y.reshape(arr.shape)
    if scalar:
        return float(j), float(y)
    return j, y


def bessel_j(n, x):
    """J_n(x) for x >= 0."""
    n = _order(n)
    arr, scalar = _as_array(x)
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise ConfigError("bessel_j requires finite x >= 0")
    out = np.zeros_like(arr, dtype=float)
    zero = arr == 0
    out[zero] = 1.0 if n == 0 else 0.0
    if (~zero).any():
        out[~zero] = bessel_jy(n, arr[~zero])[0]
    return float(out) if scalar else out


def bessel_y(n, x):
    """Y_n(x) for x > 0."""
    arr, scalar = _as_array(x)
    if np.any(arr <= 0):
        raise ConfigError("bessel_y requires x > 0")
    y = bessel_jy(n, arr)[1]
    return float(y) if scalar else y


def bessel_jy_pair(n, x):
    """Return (J_{n-1}, J_n, Y_{n-1}, Y_n) at array ``x`` > 0 for n >= 1."""
    n = _order(n)
    if n < 1:
        raise ConfigError("bessel_jy_pair needs n >= 1")
    jm, ym = bessel_jy(n - 1, x)
    j, y = bessel_jy(n, x)
    return jm, j, ym, y
