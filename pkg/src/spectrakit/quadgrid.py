"""Composite Gauss-Legendre grids on truncated half-lines and frequency axes.

Every integral in the package is a weighted sum over one of these grids.
Panels are geometrically graded toward the left endpoint (ratio 1.5) for the
first few levels and uniform afterwards, so the largest panel stays close to
the uniform width and oscillation resolution can be guaranteed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import AliasingError, ConfigError

GRADING_RATIO = 1.5
GRADING_LEVELS = 10
NODES_PER_WAVELENGTH = 8.0


@lru_cache(maxsize=None)
def _reference_rule(degree: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(degree)
    # barycentric weights for Lagrange interpolation through the GL nodes
    diff = t[:, None] - t[None, :]
    np.fill_diagonal(diff, 1.0)
    bary = 1.0 / diff.prod(axis=1)
    bary /= np.abs(bary).max()
    return t, w, bary


def graded_edges(a: float, b: float, n_panels: int) -> np.ndarray:
    levels = min(n_panels - 1, GRADING_LEVELS)
    widths = GRADING_RATIO ** np.minimum(np.arange(n_panels), levels)
    edges = a + (b - a) * np.concatenate([[0.0], np.cumsum(widths)]) / widths.sum()
    edges[0], edges[-1] = a, b
    return edges


def _panel_rule(edges: np.ndarray, degree: int) -> tuple[np.ndarray, np.ndarray]:
    t, w, _ = _reference_rule(degree)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _check_degree(panel_degree: int) -> None:
    if not 4 <= panel_degree <= 16:
        raise ConfigError(f"panel_degree must lie in 4..16, got {panel_degree}")


@dataclass(frozen=True, eq=False)
class _PanelGrid:
    panel_edges: np.ndarray
    panel_degree: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def max_panel_width(self) -> float:
        return float(np.diff(self.panel_edges).max())

    def nodes_per_wavelength(self, omega: float) -> float:
        """Nodes per period 2*pi/omega in the coarsest panel."""
        if omega <= 0:
            return math.inf
        return self.panel_degree * (2 * math.pi / omega) / self.max_panel_width

    def resolves(self, omega: float) -> bool:
        return self.nodes_per_wavelength(omega) >= NODES_PER_WAVELENGTH * (1 - 1e-12)

    def interpolate(self, values, x) -> np.ndarray:
        """Panel-wise polynomial interpolation of nodal ``values`` at ``x``."""
        values = np.asarray(values, dtype=float)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.panel_edges[0], self.panel_edges[-1]
        tol = 1e-12 * max(1.0, abs(hi))
        if np.any(x < lo - tol) or np.any(x > hi + tol):
            raise ConfigError("interpolation point outside the grid")
        deg = self.panel_degree
        panel = np.clip(np.searchsorted(self.panel_edges, x, side="right") - 1,
                        0, len(self.panel_edges) - 2)
        nodes = self.nodes.reshape(-1, deg)[panel]
        vals = values.reshape(-1, deg)[panel]
        _, _, bary = _reference_rule(deg)
        diff = x[:, None] - nodes
        exact = diff == 0.0
        diff[exact] = 1.0
        c = bary[None, :] / diff
        out = (c * vals).sum(axis=1) / c.sum(axis=1)
        hit = exact.any(axis=1)
        if hit.any():
            out[hit] = vals[hit][exact[hit]]
        return out


@dataclass(frozen=True, eq=False)
class SpatialGrid(_PanelGrid):
    """Quadrature on [x_start, x_trunc]; ``weights`` include the factor x**m."""

    x_start: float = 0.0
    x_trunc: float = 1.0
    measure_exponent: int = 0
    dx_weights: np.ndarray = field(default=None, repr=False)

    @property
    def length(self) -> float:
        return self.x_trunc - self.x_start


@dataclass(frozen=True, eq=False)
class SpectralGrid(_PanelGrid):
    """Quadrature for integrals over (0, s_max] in the frequency variable."""

    s_max: float = 1.0

    @property
    def s_nodes(self) -> np.ndarray:
        return self.nodes


def make_spatial_grid(x_start: float, x_trunc: float, n: int, panel_degree: int = 10,
                      measure_exponent: int = 0) -> SpatialGrid:
    if not (x_start >= 0 and x_trunc > x_start):
        raise ConfigError(f"need x_trunc > x_start >= 0, got ({x_start}, {x_trunc})")
    if n < 2:
        raise ConfigError(f"need n >= 2, got {n}")
    if measure_exponent not in (0, 1):
        raise ConfigError("measure_exponent must be 0 or 1")
    _check_degree(panel_degree)
    n_panels = max(1, math.ceil(n / panel_degree))
    edges = graded_edges(float(x_start), float(x_trunc), n_panels)
    nodes, dx_w = _panel_rule(edges, panel_degree)
    weights = dx_w * nodes if measure_exponent == 1 else dx_w
    return SpatialGrid(panel_edges=edges, panel_degree=panel_degree, nodes=nodes,
                       weights=weights, x_start=float(x_start), x_trunc=float(x_trunc),
                       measure_exponent=measure_exponent, dx_weights=dx_w)


def make_spectral_grid(s_max: float, n: int, panel_degree: int = 10) -> SpectralGrid:
    if not s_max > 0:
        raise ConfigError(f"s_max must be positive, got {s_max}")
    if n < 2:
        raise ConfigError(f"need n >= 2, got {n}")
    _check_degree(panel_degree)
    n_panels = max(1, math.ceil(n / panel_degree))
    edges = graded_edges(0.0, float(s_max), n_panels)
    nodes, weights = _panel_rule(edges, panel_degree)
    return SpectralGrid(panel_edges=edges, panel_degree=panel_degree, nodes=nodes,
                        weights=weights, s_max=float(s_max))


def nodes_for_frequency(length: float, omega: float, panel_degree: int = 10,
                        minimum: int = 64) -> int:
    """Smallest node count whose graded partition of ``length`` keeps at least
    NODES_PER_WAVELENGTH nodes per period 2*pi/omega in every panel."""
    _check_degree(panel_degree)
    limit = panel_degree * 2 * math.pi / (NODES_PER_WAVELENGTH * omega)
    n_panels = max(1, math.ceil(minimum / panel_degree), math.ceil(length / limit))
    while np.diff(graded_edges(0.0, length, n_panels)).max() > limit:
        n_panels += 1
    return n_panels * panel_degree


def integrate(values, grid: Union[SpatialGrid, SpectralGrid]) -> float:
    values = np.asarray(values, dtype=float)
    if values.shape != grid.weights.shape:
        raise ConfigError(f"expected {grid.weights.size} samples, got {values.shape}")
    return float(np.dot(values, grid.weights))


def require_resolution(grid: _PanelGrid, omega: float, what: str) -> None:
    if not grid.resolves(omega):
        raise AliasingError(
            f"{what}: {grid.nodes_per_wavelength(omega):.2f} nodes per wavelength at "
            f"frequency {omega:g}, need >= {NODES_PER_WAVELENGTH:g}; refine the grid")
