"""Degenerate spectral transforms on the half-line.

Sine, cosine, Robin and Weber transforms with their discrete modes, a
numerical Sturm-Liouville construction for decaying potentials, spectral
heat flow with a finite-difference reference, and a validation suite.
"""

from .errors import (AliasingError, ConfigError, FitError, InstabilityError, NumericalRefusal,
                     SpectrakitError)
from .quadgrid import SpatialGrid, SpectralGrid, make_spatial_grid, make_spectral_grid
from .transforms import (DegenerateTransform, SampledFunction, SpectralFunction, default_grids,
                         discrete_coefficients, forward, inverse, make_cosine, make_robin,
                         make_sine, make_weber, reconstruct, relative_l2, sample)

__version__ = "0.1.0"

__all__ = [
    "AliasingError", "ConfigError", "FitError", "InstabilityError", "NumericalRefusal",
    "SpectrakitError", "SpatialGrid", "SpectralGrid", "make_spatial_grid", "make_spectral_grid",
    "DegenerateTransform", "SampledFunction", "SpectralFunction", "default_grids",
    "discrete_coefficients", "forward", "inverse", "make_cosine", "make_robin", "make_sine",
    "make_weber", "reconstruct", "relative_l2", "sample",
]
