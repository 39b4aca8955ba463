"""Named, tolerance-bearing checks of the transform identities.

Each check returns a scalar residual.  ``validate_transform`` runs every check
family over a battery of test functions and collects the results in a
``ValidationReport`` that serializes to JSON and CSV.

Spectral-side quantities are compared in the unitary normalization
sqrt(w(s)) * fhat(s), so transforms with unnormalized kernels (Weber, numeric)
are measured on the same scale as the sine transform.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import quadgrid
from .errors import ConfigError
from .quadgrid import SpatialGrid, SpectralGrid
from .testfunctions import ModeRef, SmoothBump, TestFunctionSpec, default_battery
from .transforms import (TAIL_POWERS, DegenerateTransform, ModeTail, SampledFunction,
                         SpectralFunction, default_grids, discrete_coefficients, forward,
                         inverse, reconstruct, relative_l2, sample, sample_operator)

CHECK_NAMES = ("annihilation", "decay", "diagonalization", "ortho_projection", "parseval",
               "roundtrip")

ORTHO_FLOOR = 1e-10

FunctionInput = Union[TestFunctionSpec, SampledFunction]


@dataclass(frozen=True)
class Tolerances:
    parseval: float = 1e-6
    annihilation: float = 1e-6
    roundtrip: float = 1e-4
    ortho_projection: float = 1e-4
    diagonalization: float = 1e-6
    decay: float = 1e-5

    @classmethod
    def for_kind(cls, kind: str) -> "Tolerances":
        """Defaults: Weber identities at 1e-5, numeric transforms relaxed tenfold."""
        base = cls()
        if kind == "weber":
            return replace(base, parseval=1e-5, annihilation=1e-5, diagonalization=1e-5)
        if kind == "numeric":
            return base.scaled(10.0)
        return base

    def scaled(self, factor: float) -> "Tolerances":
        return Tolerances(**{k: v * factor for k, v in asdict(self).items()})

    @classmethod
    def uniform(cls, value: float) -> "Tolerances":
        return cls(**{k: value for k in asdict(cls())})


@dataclass(frozen=True)
class CheckRecord:
    name: str
    residual: Optional[float]
    tolerance: float
    passed: bool
    inputs: str
    applicable: bool = True


@dataclass
class ValidationReport:
    transform_kind: str
    checks: list[CheckRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def sorted(self) -> "ValidationReport":
        return ValidationReport(self.transform_kind,
                                sorted(self.checks, key=lambda c: (c.name, c.inputs)))

    def worst(self, name: Optional[str] = None) -> float:
        vals = [c.residual for c in self.checks
                if c.applicable and (name is None or c.name == name)]
        return max(vals) if vals else 0.0

    def to_dict(self) -> dict:
        return {"kind": self.transform_kind,
                "checks": [asdict(c) for c in self.sorted().checks]}


def reports_to_json(reports: Sequence[ValidationReport]) -> str:
    doc = [r.to_dict() for r in reports]
    return json.dumps(doc[0] if len(doc) == 1 else doc, indent=2, sort_keys=True) + "\n"


def reports_to_csv(reports: Sequence[ValidationReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["kind", "name", "inputs", "residual", "tolerance", "passed", "applicable"])
    for rep in reports:
        for c in rep.sorted().checks:
            writer.writerow([rep.transform_kind, c.name, c.inputs,
                             "" if c.residual is None else "%.17g" % c.residual,
                             "%.17g" % c.tolerance, int(c.passed), int(c.applicable)])
    return buf.getvalue()


# -- preparation ---------------------------------------------------------------

def _sampled(T: DegenerateTransform, f: FunctionInput, sg: SpectralGrid,
             grid: Optional[SpatialGrid]) -> SampledFunction:
    if isinstance(f, SampledFunction):
        return f
    if grid is None:
        grid, _ = default_grids(T, f, s_max=sg.s_max)
    return sample(T, f, grid)


def _unitary(T: DegenerateTransform, fhat: SpectralFunction) -> np.ndarray:
    return np.sqrt(T.spectral_weight(fhat.grid.nodes)) * fhat.values


def _spectral_norm_sq(u: np.ndarray, sg: SpectralGrid) -> float:
    return quadgrid.integrate(u * u, sg)


def _tail_norm_sq(coeffs, s_max: float) -> float:
    """int_{s_max}^inf (sum_p c_p s^-p)^2 ds."""
    if coeffs is None:
        return 0.0
    total = 0.0
    for p, cp in zip(TAIL_POWERS, coeffs):
        for q, cq in zip(TAIL_POWERS, coeffs):
            total += cp * cq * s_max ** (1 - p - q) / (p + q - 1)
    return total


def _function_norm_sq(T: DegenerateTransform, f: SampledFunction) -> float:
    total = quadgrid.integrate(f.values**2, f.grid)
    if f.tail is not None:
        total += f.tail.scale**2 * T.modes[f.tail.index].tail_norm_sq(f.grid.x_trunc)
    return total


# -- the checks ----------------------------------------------------------------

@dataclass(frozen=True)
class ParsevalSplit:
    function_norm_sq: float
    continuous_sq: float
    discrete_sq: float
    residual: float
    relative: bool


def parseval_split(T: DegenerateTransform, f: FunctionInput, sg: SpectralGrid,
                   grid: Optional[SpatialGrid] = None) -> ParsevalSplit:
    """Both sides of ||f||^2 = ||fhat||^2_{w ds} + sum_k c_k^2, with the fitted
    high-frequency tail added to the continuous side."""
    f = _sampled(T, f, sg, grid)
    fhat = forward(T, f, sg)
    cont = _spectral_norm_sq(_unitary(T, fhat), sg)
    cont += _tail_norm_sq(fhat.tail_coefficients, sg.s_max)
    disc = float(np.sum(discrete_coefficients(T, f) ** 2))
    lhs = _function_norm_sq(T, f)
    diff = abs(lhs - cont - disc)
    if lhs == 0.0:
        return ParsevalSplit(lhs, cont, disc, diff, False)
    return ParsevalSplit(lhs, cont, disc, diff / lhs, True)


def parseval_residual(T: DegenerateTransform, f: FunctionInput, sg: SpectralGrid,
                      grid: Optional[SpatialGrid] = None) -> float:
    """Relative Parseval defect; the absolute defect for the zero function."""
    return parseval_split(T, f, sg, grid).residual


def kernel_annihilation(T: DegenerateTransform, sg: SpectralGrid,
                        grid: Optional[SpatialGrid] = None) -> Optional[float]:
    """max_k sup_s |sqrt(w) F[e_k](s)|, or None when T has no discrete modes."""
    if not T.modes:
        return None
    if grid is None:
        grid, _ = default_grids(T, ModeRef(0), s_max=sg.s_max)
    worst = 0.0
    for k in range(len(T.modes)):
        ek = sample(T, ModeRef(k), grid)
        fhat = forward(T, ek, sg, fit_tail_model=False)
        worst = max(worst, float(np.abs(_unitary(T, fhat)).max()))
    return worst


def roundtrip_error(T: DegenerateTransform, f: FunctionInput, sg: SpectralGrid,
                    grid: Optional[SpatialGrid] = None) -> float:
    f = _sampled(T, f, sg, grid)
    if not np.any(f.values):
        return 0.0
    return relative_l2(reconstruct(T, f, sg), f)


def ortho_projection_check(T: DegenerateTransform, g: FunctionInput, sg: SpectralGrid,
                           grid: Optional[SpatialGrid] = None) -> float:
    """Relative L2(w ds) defect of F[F* ghat] = ghat.

    F* ghat is the continuous component of g; past the grid it equals
    -(g, e_0) e_0 when g itself is negligible there, which is closed exactly.
    The reference norm is floored at ORTHO_FLOOR * ||g|| so that inputs whose
    transform is pure quadrature noise (multiples of a mode) are not divided
    by that noise.
    """
    g = _sampled(T, g, sg, grid)
    ghat = forward(T, g, sg)
    ref = max(_spectral_norm_sq(_unitary(T, ghat), sg), ORTHO_FLOOR**2 * _function_norm_sq(T, g))
    if ref == 0.0:
        return 0.0
    back = inverse(T, ghat, g.grid)
    tail = None
    if len(T.modes) == 1:
        c0 = float(discrete_coefficients(T, g)[0])
        scale = (g.tail.scale if g.tail is not None else 0.0) - c0
        tail = ModeTail(0, scale)
    again = forward(T, SampledFunction(g.grid, back.values, tail), sg, fit_tail_model=False)
    diff = _spectral_norm_sq(_unitary(T, again) - _unitary(T, ghat), sg)
    return math.sqrt(max(diff, 0.0) / ref)


def _bump_pair(T: DegenerateTransform, g: TestFunctionSpec, sg: SpectralGrid,
               grid: Optional[SpatialGrid]):
    if not isinstance(g, TestFunctionSpec) or isinstance(g, ModeRef):
        raise ConfigError("the operator checks need an analytic test function")
    if grid is None:
        grid, _ = default_grids(T, g, s_max=sg.s_max)
    g.check_domain(grid.x_start, grid.x_trunc)
    ends = np.array([grid.x_start, grid.x_trunc])
    if max(np.abs(g.value(ends)).max(), np.abs(g.d1(ends)).max()) > 1e-14:
        raise ConfigError(f"{g.describe()} does not vanish at the domain ends; "
                          "boundary terms would enter F[Ag]")
    f = sample(T, g, grid)
    Af = sample_operator(T, g, grid)
    fh = _unitary(T, forward(T, f, sg, fit_tail_model=False))
    Afh = _unitary(T, forward(T, Af, sg, fit_tail_model=False))
    return fh, Afh


def diagonalization_check(T: DegenerateTransform, g: TestFunctionSpec, sg: SpectralGrid,
                          grid: Optional[SpatialGrid] = None) -> float:
    """sup_s |F[Ag] - mu(s) F[g]| / (1 + |mu(s) F[g]|)."""
    fh, Afh = _bump_pair(T, g, sg, grid)
    mu_fh = T.eigenvalue_map(sg.nodes) * fh
    return float((np.abs(Afh - mu_fh) / (1.0 + np.abs(mu_fh))).max())


def decay_check(T: DegenerateTransform, g: TestFunctionSpec, sg: SpectralGrid,
                grid: Optional[SpatialGrid] = None) -> float:
    """| ||mu ghat|| - ||F[Ag]|| | / ||F[Ag]|| in L2(w ds)."""
    fh, Afh = _bump_pair(T, g, sg, grid)
    a = math.sqrt(_spectral_norm_sq(T.eigenvalue_map(sg.nodes) * fh, sg))
    b = math.sqrt(_spectral_norm_sq(Afh, sg))
    if b == 0.0:
        return abs(a)
    return abs(a - b) / b


# -- batteries -------------------------------------------------------------------

def operator_input(T: DegenerateTransform) -> SmoothBump:
    """A bump strictly inside the domain for the diagonalization and decay checks."""
    if T.x_start == 0:
        return SmoothBump(5.0, 2.0)
    return SmoothBump(T.x_start + 2.0, 1.0)


def validate_transform(T: DegenerateTransform, battery: Optional[Iterable[TestFunctionSpec]] = None,
                       tolerances: Optional[Tolerances] = None, *, s_max: float = 100.0,
                       refine: int = 1) -> ValidationReport:
    """Run all six check families over ``battery`` (default battery if None)."""
    tol = tolerances or Tolerances.for_kind(T.kind)
    battery = list(default_battery(T.x_start) if battery is None else battery)
    report = ValidationReport(T.name)

    def grids(spec):
        return default_grids(T, spec, s_max=s_max, refine=refine)

    def record(name, residual, tolerance, inputs, applicable=True):
        passed = True if residual is None else bool(residual <= tolerance)
        report.checks.append(CheckRecord(name, None if residual is None else float(residual),
                                         float(tolerance), passed, inputs, applicable))

    for spec in battery:
        grid, sg = grids(spec)
        f = sample(T, spec, grid)
        label = spec.describe()
        record("parseval", parseval_residual(T, f, sg), tol.parseval, label)
        record("roundtrip", roundtrip_error(T, f, sg), tol.roundtrip, label)
        record("ortho_projection", ortho_projection_check(T, f, sg), tol.ortho_projection, label)

    if T.modes:
        grid, sg = grids(ModeRef(0))
        record("annihilation", kernel_annihilation(T, sg, grid), tol.annihilation,
               ",".join(ModeRef(k).describe() for k in range(len(T.modes))))
    else:
        record("annihilation", None, tol.annihilation, "no discrete modes", applicable=False)

    bump = operator_input(T)
    grid, sg = grids(bump)
    record("diagonalization", diagonalization_check(T, bump, sg, grid), tol.diagonalization,
           bump.describe())
    record("decay", decay_check(T, bump, sg, grid), tol.decay, bump.describe())
    return report.sorted()
