"""Command-line entry point: ``sphereineq <command> [options]``.

Every command prints (or writes to ``--out``) a report with one record per
check. Exit status is 0 when every record passes, 2 when a check fails and
1 on a usage or configuration error.

CSV columns
-----------
sweep
    alpha, a, m_value, lower_bound, upper_bound, dirichlet, beta3, converged
g-curve
    t, g, g_prime, g_quadrature
other commands
    name, measured, expected, tolerance, relation, pass
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .closed_form import (
    TWO_THIRDS,
    bound_curves,
    grad_energy_explicit,
    mean_explicit,
    u_explicit,
)
from .functionals import el_residual, eval_F, eval_I, mass_moments, random_field
from .grid import build_grid
from .harmonics import build_basis, synthesize
from .monotonicity import check_monotonicity, g_curve, szego_remark_check
from .report import Report, dumps_json, records_csv, rows_csv
from .solver import SolverOptions, m_sweep
from .spectral import conformal_eigenvalues, hessian_diag_at_zero, kernel_dim

log = logging.getLogger("sphereineq")

COMMANDS = ("verify-closed-form", "fuzz-inequality", "sweep", "spectrum", "monotonicity", "g-curve")

DEFAULT_A = {
    "verify-closed-form": "0,0.3,0.6,0.9",
    "fuzz-inequality": "0,0.3,0.6,0.9",
    "sweep": "0.2,0.5,0.8",
    "spectrum": "0,0.3,0.5,0.8",
}
DEFAULT_ALPHA = {
    "fuzz-inequality": "2/3,0.75,1",
    "sweep": "0.55,0.6,2/3,0.7,0.75,0.8",
    "spectrum": "0.6,2/3,0.7,0.9",
}
DEFAULT_SAMPLES = {"fuzz-inequality": 1000, "monotonicity": 500, "g-curve": 61}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    l_max: int = 24
    n_theta: int = 48
    n_phi: int = 96
    alpha: list = field(default_factory=list)
    a: list = field(default_factory=list)
    samples: int = 0
    seed: int = 0
    tol_el: float = 1e-8
    tol_c: float = 1e-10
    tol_report: float = 1e-6
    out: str | None = None
    format: str = "json"

    def validate(self) -> None:
        if self.n_theta < self.l_max:
            raise UsageError(f"n_theta = {self.n_theta} must be >= lmax = {self.l_max}")
        if min(self.tol_el, self.tol_c, self.tol_report) <= 0:
            raise UsageError("tolerances must be positive")
        if self.format not in ("json", "csv"):
            raise UsageError(f"unknown format {self.format!r}")
        if self.samples < 0:
            raise UsageError("samples must be >= 0")
        if any(not 0 <= a < 1 for a in self.a):
            raise UsageError("every a must lie in [0, 1)")

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("out")
        return d


def _number(text: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"not a number: {text!r}") from exc


def _number_list(text: str) -> list:
    return [_number(t) for t in str(text).split(",") if t.strip()]


def _grid_spec(text: str):
    try:
        nt, npf = str(text).lower().split("x")
        return int(nt), int(npf)
    except ValueError as exc:
        raise UsageError(f"--grid expects NTHETAxNPHI, got {text!r}") from exc


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="sphereineq",
        description="Numerical checks of I_alpha(u) >= (alpha - 2/3) |grad u|^2 on the sphere.",
        epilog=__doc__.split("CSV columns", 1)[1].replace("-----------", "CSV columns:"),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--lmax", type=int, default=None, help="band limit (default 24)")
        p.add_argument("--grid", default=None, help="NTHETAxNPHI (default 48x96)")
        p.add_argument("--alpha", default=None, help="comma list, fractions allowed")
        p.add_argument("--a", default=None, help="comma list of centers in [0, 1)")
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--tol-report", type=float, default=None)
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default=None)
        p.add_argument("--config", default=None, help="key=value file; flags win")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge builtin defaults, the config file and flags, in that order."""
    cmd = args.command
    file_vals = read_config_file(args.config) if args.config else {}
    known = {"lmax", "grid", "alpha", "a", "samples", "seed", "tol_report", "tol_el", "tol_c", "out", "format"}
    unknown = set(file_vals) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")

    def pick(key, default):
        flag = getattr(args, key, None)
        if flag is not None:
            return flag
        return file_vals.get(key, default)

    n_theta, n_phi = _grid_spec(pick("grid", "48x96"))
    try:
        cfg = RunConfig(
            command=cmd,
            l_max=int(pick("lmax", 24)),
            n_theta=n_theta,
            n_phi=n_phi,
            alpha=_number_list(pick("alpha", DEFAULT_ALPHA.get(cmd, ""))),
            a=_number_list(pick("a", DEFAULT_A.get(cmd, ""))),
            samples=int(pick("samples", DEFAULT_SAMPLES.get(cmd, 0))),
            seed=int(pick("seed", 0)),
            tol_el=float(pick("tol_el", 1e-8)),
            tol_c=float(pick("tol_c", 1e-10)),
            tol_report=float(pick("tol_report", 1e-6)),
            out=pick("out", None),
            format=str(pick("format", "json")),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    cfg.validate()
    return cfg


def _basis(cfg: RunConfig):
    try:
        return build_basis(build_grid(cfg.n_theta, cfg.n_phi), cfg.l_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _tag(x: float) -> str:
    return format(x, ".6g")


def cmd_verify_closed_form(cfg: RunConfig) -> Report:
    basis = _basis(cfg)
    grid = basis.grid
    rep = Report("verify-closed-form", cfg.echo())
    for a in cfg.a:
        t = _tag(a)
        u = u_explicit(grid, a)
        md = mass_moments(grid, u)
        rep.add(f"a={t}.mass", md.M, 1.0, 1e-8)
        rep.add(f"a={t}.center_norm_error", float(np.linalg.norm(md.m / md.M - [0.0, 0.0, a])), 0.0, 1e-8)
        res = el_residual(TWO_THIRDS, basis, u)
        budget = 1e-6 if a <= 0.6 else 1e-3
        rep.add(f"a={t}.el_residual_sup", res.sup, 0.0, budget, "le")
        rep.add(f"a={t}.el_residual_pointwise_sup", res.pointwise_sup, relation="info")
        rep.add(f"a={t}.I_2/3", eval_I(TWO_THIRDS, basis, u).value, 0.0, 1e-7)
        rep.add(f"a={t}.dirichlet", eval_I(TWO_THIRDS, basis, u).dirichlet, grad_energy_explicit(a), 1e-6)
        mean = float(grid.weights @ u)
        rep.add(f"a={t}.mean", mean, mean_explicit(a), 1e-8)
    return rep


def cmd_fuzz_inequality(cfg: RunConfig) -> Report:
    basis = _basis(cfg)
    grid = basis.grid
    rep = Report("fuzz-inequality", cfg.echo())
    rng = np.random.default_rng(cfg.seed)
    seeds = rng.integers(0, 2**63 - 1, size=cfg.samples)
    amps = rng.uniform(0.1, 2.5, size=cfg.samples)
    decays = rng.choice([2.0, 3.0], size=cfg.samples)
    fields = [random_field(int(s), basis, float(A), float(d)) for s, A, d in zip(seeds, amps, decays)]
    family = [u_explicit(grid, a) for a in cfg.a]
    for alpha in cfg.alpha:
        t = _tag(alpha)
        margins = []
        for u in fields + family:
            v = eval_I(alpha, basis, u)
            margins.append(v.value - (alpha - TWO_THIRDS) * v.dirichlet)
        rep.add(f"alpha={t}.min_margin", float(min(margins)), 0.0, cfg.tol_report, "ge")
        if abs(alpha - 1.0) < 1e-15:
            onofri = min(eval_F(1.0, basis, u).value for u in fields)
            rep.add("alpha=1.min_F1", float(onofri), 0.0, 1e-8, "ge")
    fam = [eval_I(TWO_THIRDS, basis, u).value for u in family]
    if fam:
        rep.add("family.max_abs_I_2/3", float(np.max(np.abs(fam))), 0.0, 1e-7, "le")
    # unboundedness trend below 2/3 along the explicit family
    trend_a = [0.5, 0.8, 0.9, 0.95]
    trend = [eval_I(0.6, basis, u_explicit(grid, a)).value for a in trend_a]
    for a, v in zip(trend_a, trend):
        rep.add(f"trend.alpha=0.6.a={_tag(a)}", v, relation="info")
    rep.add("trend.alpha=0.6.decreasing", bool(np.all(np.diff(trend) < 0)), True, relation="eq")
    rep.diagnostics["samples"] = cfg.samples
    return rep


SWEEP_COLUMNS = ("alpha", "a", "m_value", "lower_bound", "upper_bound", "dirichlet", "beta3", "converged")


def beta_bounds(alpha: float, a: float):
    """Interval for beta3: between ``a/(1-a^2)`` and ``2(1/alpha - 1) a/(1-a^2)``."""
    base = a / (1.0 - a * a)
    other = 2.0 * (1.0 / alpha - 1.0) * base
    return min(base, other), max(base, other)


def cmd_sweep(cfg: RunConfig) -> Report:
    basis = _basis(cfg)
    rep = Report("sweep", cfg.echo(), columns=SWEEP_COLUMNS)
    opts = SolverOptions(tol_el=cfg.tol_el, tol_c=cfg.tol_c)
    rows = m_sweep(cfg.alpha, cfg.a, basis, opts=opts)
    for row in rows:
        t = f"alpha={_tag(row.alpha)},a={_tag(row.a)}"
        rep.rows.append(asdict(row))
        rep.add(f"{t}.converged", row.converged, True, relation="eq")
        if not row.converged:
            continue
        if abs(row.alpha - TWO_THIRDS) < 1e-12:
            rep.add(f"{t}.m_zero", row.m_value, 0.0, 1e-5)
        rep.add(f"{t}.m_ge_lower", row.m_value, row.lower_bound, 1e-3, "ge")
        rep.add(f"{t}.m_le_upper", row.m_value, row.upper_bound, 1e-3, "le")
        lo, hi = beta_bounds(row.alpha, row.a)
        rep.add(f"{t}.beta3_ge", row.beta3, lo, 1e-6, "ge")
        rep.add(f"{t}.beta3_le", row.beta3, hi, 1e-6, "le")
        if 0.5 < row.alpha < 1.0 and row.alpha != TWO_THIRDS and row.a > 0:
            asym = bound_curves(row.alpha, row.a).upper_asym
            rep.add(f"{t}.asymptotic_ratio", row.m_value / asym, relation="info")
    return rep


def cmd_spectrum(cfg: RunConfig) -> Report:
    basis = _basis(cfg)
    rep = Report("spectrum", cfg.echo())
    eps = 1e-3
    zero = np.zeros(basis.grid.size)
    for alpha in cfg.alpha:
        t = _tag(alpha)
        diag = hessian_diag_at_zero(alpha, basis.L)
        worst = 0.0
        for k in range(min(16, basis.ncoef)):
            phi = synthesize(basis, np.eye(basis.ncoef)[k])
            fd = (eval_I(alpha, basis, eps * phi).value + eval_I(alpha, basis, -eps * phi).value
                  - 2.0 * eval_I(alpha, basis, zero).value) / eps**2
            worst = max(worst, abs(fd - diag[k]) / max(1.0, abs(diag[k])))
        rep.add(f"alpha={t}.hessian_diag_vs_fd", worst, 0.0, 1e-4, "le")
        expected = 4 if abs(alpha - TWO_THIRDS) < 1e-12 else 1
        rep.add(f"alpha={t}.kernel_dim", kernel_dim(alpha, basis=basis), expected, relation="eq")
    for a in cfg.a:
        t = _tag(a)
        er = conformal_eigenvalues(a)
        rep.add(f"a={t}.ladder_deviation", er.ladder_deviation, 0.0, er.budget, "le")
        rep.add(f"a={t}.gap_to_3", er.gap_to_three, 0.5, 0.0, "ge")
        strict = conformal_eigenvalues(a, polar_extra=0)
        rep.add(f"a={t}.ladder_deviation_degree_limited", strict.ladder_deviation, relation="info")
    return rep


G_COLUMNS = ("t", "g", "g_prime", "g_quadrature")


def cmd_g_curve(cfg: RunConfig) -> Report:
    rep = Report("g-curve", cfg.echo(), columns=G_COLUMNS)
    n = max(cfg.samples, 2)
    ts = np.geomspace(1e-3, 1e3, n)
    vals = [g_curve(float(t)) for t in ts]
    rep.rows = [asdict(v) for v in vals]
    rep.add("max_abs_g_minus_quadrature", max(abs(v.g - v.g_quadrature) for v in vals), 0.0, 1e-10, "le")
    rep.add("min_g", min(v.g for v in vals), 0.0, 0.0, "ge")
    rep.add("min_g_prime", min(v.g_prime for v in vals), 0.0, 0.0, "ge")
    one = g_curve(1.0)
    rep.add("g(1)", one.g, 2.0 * math.log(2.0) - 1.0, 1e-15)
    rep.add("g_prime(1)", one.g_prime, 1.0, 1e-15)
    return rep


def cmd_monotonicity(cfg: RunConfig) -> Report:
    basis = _basis(cfg)
    grid = basis.grid
    rep = Report("monotonicity", cfg.echo())
    rng = np.random.default_rng(cfg.seed)
    seeds = rng.integers(0, 2**63 - 1, size=cfg.samples)
    amps = rng.uniform(0.1, 2.0, size=cfg.samples)
    min_ineq = min_d1 = math.inf
    max_id = 0.0
    for s, A in zip(seeds, amps):
        f = np.exp(2.0 * random_field(int(s), basis, float(A)))
        try:
            r = check_monotonicity(grid, f, tol=math.inf)
        except ArithmeticError:
            r = None
        if r is None:
            min_d1 = -math.inf
            continue
        min_ineq = min(min_ineq, r.margin_inequality)
        min_d1 = min(min_d1, r.D1)
        max_id = max(max_id, r.identity_residual)
    if cfg.samples:
        rep.add("min_margin_inequality", min_ineq, 0.0, 1e-8, "ge")
        rep.add("min_D1", min_d1, 0.0, 1e-12, "ge")
        rep.add("max_identity_residual", max_id, 0.0, 1e-10, "le")
    u = random_field(7, basis)
    margin = szego_remark_check(basis, u)
    rep.add("szego_margin_minus_2I", margin - 2.0 * eval_I(TWO_THIRDS, basis, u).value, 0.0, 1e-10)
    ts = np.geomspace(1e-3, 1e3, 25)
    rep.add("g_max_abs_error", max(abs(g_curve(float(t)).g - g_curve(float(t)).g_quadrature) for t in ts),
            0.0, 1e-10, "le")
    return rep


HANDLERS = {
    "verify-closed-form": cmd_verify_closed_form,
    "fuzz-inequality": cmd_fuzz_inequality,
    "sweep": cmd_sweep,
    "spectrum": cmd_spectrum,
    "monotonicity": cmd_monotonicity,
    "g-curve": cmd_g_curve,
}


def render(report: Report, fmt: str) -> str:
    if fmt == "json":
        return dumps_json(report.as_dict())
    if report.rows:
        return rows_csv(report.columns, report.rows)
    return records_csv(report)


def run(cfg: RunConfig) -> Report:
    start = time.perf_counter()
    report = HANDLERS[cfg.command](cfg)
    report.wall_time = time.perf_counter() - start
    report.version = __version__
    return report


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = resolve_config(args)
        report = run(cfg)
    except UsageError as exc:
        print(f"sphereineq: error: {exc}", file=sys.stderr)
        return 1
    text = render(report, cfg.format)
    if cfg.out:
        try:
            Path(cfg.out).write_text(text)
        except OSError as exc:
            print(f"sphereineq: error: {exc}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(text)
    failed = [r.name for r in report.records if not r.passed]
    for name in failed:
        log.warning("check failed: %s", name)
    return 0 if not failed else 2


if __name__ == "__main__":
    sys.exit(main())
