"""Command-line entry point.

Exit codes: 0 success, 1 numerical refusal, 2 configuration error,
3 validation failure (the report is still written).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import quadgrid, spectral_pde, sturm_liouville as sl, transforms as tr, validation
from .errors import ConfigError, NumericalRefusal
from .testfunctions import ModeRef, TestFunctionSpec, parse_function

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG, EXIT_VALIDATION = 0, 1, 2, 3
KINDS = ("sine", "cosine", "robin", "weber", "numeric")
OPS = ("forward", "inverse", "reconstruct")
DEFAULT_S_MAX = 100.0
DEFAULT_OUTPUT_STEP = 0.05


@dataclass
class RunConfig:
    command: str = "transform"
    kind: Optional[str] = None
    kinds: Optional[str] = None
    a: Optional[float] = None
    k: Optional[int] = None
    r0: Optional[float] = None
    q: str = "zero"
    qc: float = 2.0
    qw: float = 1.0
    bc: Optional[str] = None
    f: Optional[str] = None
    op: str = "forward"
    t: Optional[float] = None
    dt: float = 1e-3
    fd_n: int = 4000
    xmax: Optional[float] = None
    nx: Optional[int] = None
    smax: float = DEFAULT_S_MAX
    ns: Optional[int] = None
    panel_degree: int = 10
    out: str = "."
    compare_fd: bool = False
    tol: Optional[float] = None
    step: float = DEFAULT_OUTPUT_STEP
    nodes: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


# -- argument handling ----------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON config; command-line flags override it")
    common.add_argument("--kind", choices=KINDS)
    common.add_argument("--a", type=float, help="Robin parameter (kind robin or --bc robin)")
    common.add_argument("--k", type=int, help="Weber order")
    common.add_argument("--r0", type=float, help="Weber inner radius")
    common.add_argument("--q", choices=("zero", "sech2", "gausswell"), help="potential preset")
    common.add_argument("--qc", type=float, help="potential strength c")
    common.add_argument("--qw", type=float, help="gausswell width w")
    common.add_argument("--bc", choices=("dirichlet", "neumann", "robin"))
    common.add_argument("--f", help="test function, e.g. exp:rate=1 or mode")
    common.add_argument("--xmax", type=float, help="spatial truncation point")
    common.add_argument("--nx", type=int, help="spatial node count")
    common.add_argument("--smax", type=float, help="spectral cutoff")
    common.add_argument("--ns", type=int, help="spectral node count")
    common.add_argument("--panel-degree", dest="panel_degree", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--step", type=float, help="spacing of the uniform output grid")
    common.add_argument("--nodes", action="store_true",
                        help="write values at quadrature nodes instead of a uniform grid")

    parser = argparse.ArgumentParser(prog="spectrakit",
                                     description="Degenerate half-line spectral transforms.")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, text):
        return sub.add_parser(name, parents=[common], help=text,
                              argument_default=argparse.SUPPRESS)

    p = command("transform", "forward, inverse or reconstruct")
    p.add_argument("--op", choices=OPS)
    p = command("heat", "heat flow by the spectral formula")
    p.add_argument("--t", type=float)
    p.add_argument("--dt", type=float, help="Crank-Nicolson time step")
    p.add_argument("--fd-n", dest="fd_n", type=int, help="Crank-Nicolson interval count")
    p.add_argument("--compare-fd", dest="compare_fd", action="store_true")
    p = command("validate", "run the validation battery")
    p.add_argument("--kinds", help="comma-separated kinds (default: sine,cosine,robin,weber)")
    p.add_argument("--tol", type=float, help="override every tolerance")
    command("sl", "numeric Sturm-Liouville construction")
    return parser


def load_config(argv: Sequence[str]) -> RunConfig:
    args = vars(_parser().parse_args(argv))
    data = {}
    path = args.pop("config", None)
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    data.update(args)
    return RunConfig.from_mapping(data)


# -- construction ---------------------------------------------------------------

def _require(value, flag: str, why: str):
    if value is None:
        raise ConfigError(f"{flag} is required {why}")
    return value


def potential_of(cfg: RunConfig) -> sl.PotentialSpec:
    if cfg.q == "zero":
        return sl.zero_potential()
    if cfg.q == "sech2":
        return sl.sech2_potential(cfg.qc)
    if cfg.q == "gausswell":
        return sl.gausswell_potential(cfg.qc, cfg.qw)
    raise ConfigError(f"unknown potential preset {cfg.q!r}")


def boundary_of(cfg: RunConfig) -> sl.BoundarySpec:
    kind = _require(cfg.bc, "--bc", "for the numeric construction")
    if kind == "robin":
        return sl.Robin(_require(cfg.a, "--a", "for a Robin boundary"))
    return sl.BoundarySpec(kind)


def analytic_transform(kind: str, cfg: RunConfig) -> tr.DegenerateTransform:
    if kind == "sine":
        return tr.make_sine()
    if kind == "cosine":
        return tr.make_cosine()
    if kind == "robin":
        return tr.make_robin(_require(cfg.a, "--a", "for kind robin"))
    if kind == "weber":
        return tr.make_weber(_require(cfg.k, "--k", "for kind weber"),
                             _require(cfg.r0, "--r0", "for kind weber"))
    raise ConfigError(f"unknown transform kind {kind!r}; expected one of {KINDS}")


def _test_function(cfg: RunConfig) -> TestFunctionSpec:
    return parse_function(_require(cfg.f, "--f", "for this command"))


def _numeric_setup(cfg: RunConfig, spec: Optional[TestFunctionSpec]):
    q, b = potential_of(cfg), boundary_of(cfg)
    if cfg.xmax is not None:
        x_trunc = cfg.xmax
    else:
        x_trunc = max(40.0, 2.0 * q.x_q)
        if spec is not None and not isinstance(spec, ModeRef):
            x_trunc = max(x_trunc, spec.suggested_trunc())
    deg = cfg.panel_degree
    n_x = cfg.nx or quadgrid.nodes_for_frequency(x_trunc, cfg.smax, deg)
    n_s = cfg.ns or quadgrid.nodes_for_frequency(cfg.smax, x_trunc, deg)
    grid = quadgrid.make_spatial_grid(0.0, x_trunc, n_x, deg, 0)
    sg = quadgrid.make_spectral_grid(cfg.smax, n_s, deg)
    return sl.build_numeric_transform(q, b, sg, grid), grid, sg


def setup(cfg: RunConfig, spec: Optional[TestFunctionSpec]):
    """(transform, spatial grid, spectral grid) for a single-kind command."""
    kind = _require(cfg.kind, "--kind", "for this command")
    if kind == "numeric":
        return _numeric_setup(cfg, spec)
    T = analytic_transform(kind, cfg)
    grid, sg = tr.default_grids(T, spec, x_trunc=cfg.xmax, s_max=cfg.smax, n_x=cfg.nx,
                                n_s=cfg.ns, panel_degree=cfg.panel_degree)
    return T, grid, sg


# -- output -----------------------------------------------------------------------

def _fmt(v: float) -> str:
    return "%.17g" % v


def write_csv(path: Path, header: Sequence[str], columns: Sequence[np.ndarray]) -> None:
    rows = zip(*columns)
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="ascii")


def _output_points(cfg: RunConfig, grid: quadgrid._PanelGrid, lo: float, hi: float):
    if cfg.nodes:
        return grid.nodes
    if not cfg.step > 0:
        raise ConfigError("--step must be positive")
    n = int(math.floor((hi - lo) / cfg.step + 1e-9))
    return lo + cfg.step * np.arange(n + 1)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _resample(grid, values, points):
    return values if points is grid.nodes else grid.interpolate(values, points)


# -- commands ---------------------------------------------------------------------

def cmd_transform(cfg: RunConfig) -> int:
    if cfg.op not in OPS:
        raise ConfigError(f"--op must be one of {OPS}")
    spec = _test_function(cfg)
    T, grid, sg = setup(cfg, spec)
    out = _out_dir(cfg)
    f = tr.sample(T, spec, grid)
    if cfg.op == "forward":
        fhat = tr.forward(T, f, sg)
        s = _output_points(cfg, sg, 0.0, sg.s_max)
        write_csv(out / "transform.csv", ["s", "fhat"], [s, _resample(sg, fhat.values, s)])
    else:
        if cfg.op == "inverse":
            result = tr.inverse(T, tr.forward(T, f, sg), grid)
        else:
            result = tr.reconstruct(T, f, sg)
        x = _output_points(cfg, grid, grid.x_start, grid.x_trunc)
        write_csv(out / "transform.csv", ["x", "f"], [x, _resample(grid, result.values, x)])
    (out / "config.json").write_text(cfg.to_json(), encoding="ascii")
    return EXIT_OK


def cmd_heat(cfg: RunConfig) -> int:
    t = _require(cfg.t, "--t", "for heat")
    if not (math.isfinite(t) and t >= 0):
        raise ConfigError(f"--t must be finite and >= 0, got {t}")
    spec = _test_function(cfg)
    T, grid, sg = setup(cfg, spec)
    out = _out_dir(cfg)
    f = tr.sample(T, spec, grid)
    result = spectral_pde.heat_evolve(T, f, t, sg)
    x = _output_points(cfg, grid, grid.x_start, grid.x_trunc)
    header = ["x", "y_spectral"]
    cols = [x, _resample(grid, result.y.values, x)]
    summary = {"t": t, "l2_rel": None, "linf_rel": None,
               "continuous_part_norm": result.continuous_part_norm,
               "discrete_part": [list(p) for p in result.discrete_part]}
    if cfg.compare_fd:
        q, b = spectral_pde.reference_problem(T)
        fd = spectral_pde.crank_nicolson_reference(q, b, f, t, cfg.dt, cfg.fd_n)
        summary["l2_rel"], summary["linf_rel"] = spectral_pde.compare_solutions(result.y, fd)
        y_fd = _resample(grid, fd.values, x)
        header += ["y_fd", "abs_diff"]
        cols += [y_fd, np.abs(cols[1] - y_fd)]
    write_csv(out / "heat.csv", header, cols)
    _write_json(out / "heat_summary.json", summary)
    (out / "config.json").write_text(cfg.to_json(), encoding="ascii")
    return EXIT_OK


def _validation_kinds(cfg: RunConfig) -> list[str]:
    if cfg.kinds is not None:
        kinds = [k.strip() for k in cfg.kinds.split(",") if k.strip()]
    elif cfg.kind is not None:
        kinds = [cfg.kind]
    else:
        kinds = ["sine", "cosine", "robin", "weber"]
    if not kinds:
        raise ConfigError("the kinds list is empty")
    for k in kinds:
        if k not in KINDS:
            raise ConfigError(f"unknown transform kind {k!r}; expected one of {KINDS}")
    return kinds


def cmd_validate(cfg: RunConfig) -> int:
    kinds = _validation_kinds(cfg)
    battery = None if cfg.f is None else [_test_function(cfg)]
    # parameters the user left open fall back to the reference configuration
    params = replace(cfg, a=1.0 if cfg.a is None else cfg.a, k=2 if cfg.k is None else cfg.k,
                     r0=1.0 if cfg.r0 is None else cfg.r0)
    reports = []
    for kind in kinds:
        if kind == "numeric":
            T, _, _ = _numeric_setup(params, None)
        else:
            T = analytic_transform(kind, params)
        tol = validation.Tolerances.for_kind(kind)
        if cfg.tol is not None:
            tol = validation.Tolerances.uniform(cfg.tol)
        reports.append(validation.validate_transform(T, battery, tol, s_max=cfg.smax))
    out = _out_dir(cfg)
    (out / "report.json").write_text(validation.reports_to_json(reports), encoding="ascii")
    with open(out / "report.csv", "w", newline="\n", encoding="ascii") as fh:
        fh.write(validation.reports_to_csv(reports))
    (out / "config.json").write_text(cfg.to_json(), encoding="ascii")
    failed = [(r.transform_kind, c.name, c.inputs) for r in reports for c in r.checks
              if not c.passed]
    for kind, name, inputs in failed:
        print(f"FAILED {kind} {name} [{inputs}]", file=sys.stderr)
    return EXIT_VALIDATION if failed else EXIT_OK


def cmd_sl(cfg: RunConfig) -> int:
    cfg.kind = "numeric"
    T, grid, sg = _numeric_setup(cfg, None)
    out = _out_dir(cfg)
    s = _output_points(cfg, sg, 0.0, sg.s_max)
    s = s[s > 0]
    write_csv(out / "sl_weight.csv", ["s", "weight"], [s, T.spectral_weight(s)])
    _write_json(out / "sl_summary.json", {
        "transform": T.name,
        "x_trunc": grid.x_trunc,
        "eigenvalues": [m.eigenvalue for m in T.modes],
    })
    (out / "config.json").write_text(cfg.to_json(), encoding="ascii")
    return EXIT_OK


COMMANDS = {"transform": cmd_transform, "heat": cmd_heat, "validate": cmd_validate, "sl": cmd_sl}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = load_config(sys.argv[1:] if argv is None else argv)
        tr.thread_count()  # reject a malformed SPECTRAKIT_THREADS up front
        return COMMANDS[cfg.command](cfg)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG
    except ConfigError as exc:
        print(f"spectrakit: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalRefusal as exc:
        print(f"spectrakit: numerical refusal: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
