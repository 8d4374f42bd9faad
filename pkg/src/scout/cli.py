"""Command-line harness: ``scout run | convergence | reproduce-all | list``.

Exit codes: 0 success, 1 usage error, 2 solver failure, 3 check failure.
All numbers are written with 17 significant digits so files round-trip
binary64 exactly; metadata lines start with ``#``.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, TextIO

import numpy as np

from . import __version__
from .acceptance import StudyCache, evaluate
from .exceptions import ConfigurationError, ScoutError
from .golden import check_rows, find_golden, golden_keys, load_golden
from .metrics import ConvergenceRow, convergence_study, l1_error, mass_delta
from .problems import get_problem, problem_names
from .steppers import SCHEMES, SchemeConfig, reference_evaluator, run

logger = logging.getLogger("scout")

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_CHECK = 0, 1, 2, 3
DEFAULT_CHAIN = "50,100,200,400,800"
CONFIG_KEYS = ("problem", "scheme", "ncells", "cfl", "nu", "tfinal", "out", "check", "snapshots")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(value) -> str:
    if value is None:
        return ""
    value = float(value)
    return repr(value) if not np.isfinite(value) else format(value, ".17g")


# -- configuration ------------------------------------------------------------

def read_config(path: str) -> Dict[str, str]:
    """Parse a ``key=value`` file; ``#`` starts a comment."""
    out: Dict[str, str] = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_").lower()
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _floats(text: str, name: str) -> List[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise UsageError(f"--{name}: expected comma-separated numbers, got {text!r}") from None


def _ints(text: str, name: str) -> List[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise UsageError(f"--{name}: expected comma-separated integers, got {text!r}") from None


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off", ""):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


@dataclass
class RunConfig:
    """Validated settings shared by ``run`` and ``convergence``."""

    problem: str
    scheme: str = "scout"
    ncells: List[int] = field(default_factory=lambda: [100])
    cfl: Optional[float] = None
    nu: Optional[float] = None
    tfinal: Optional[float] = None
    out: Optional[str] = None
    check: bool = False
    snapshots: List[float] = field(default_factory=list)

    def __post_init__(self):
        try:
            get_problem(self.problem)
        except ConfigurationError as exc:
            raise UsageError(str(exc)) from None
        if self.scheme not in SCHEMES:
            raise UsageError(f"unknown scheme {self.scheme!r}; available: {', '.join(SCHEMES)}")
        if not self.ncells or any(n < 2 for n in self.ncells):
            raise UsageError("--ncells must be integers >= 2")
        if self.cfl is not None and not self.cfl > 0:
            raise UsageError("--cfl must be positive")
        if self.nu is not None and self.nu < 0:
            raise UsageError("--nu must be non-negative")
        if self.tfinal is not None and not self.tfinal > 0:
            raise UsageError("--tfinal must be positive")

    def problem_spec(self):
        try:
            return get_problem(self.problem).with_overrides(nu=self.nu, t_end=self.tfinal,
                                                            cfl=self.cfl)
        except ConfigurationError as exc:
            raise UsageError(str(exc)) from None

    def scheme_config(self) -> SchemeConfig:
        return SchemeConfig(self.scheme, cfl=self.cfl, nu=self.nu)


def merge_config(args: argparse.Namespace, default_ncells: str) -> RunConfig:
    """Flags override the config file; the file overrides built-in defaults."""
    file_values = read_config(args.config) if getattr(args, "config", None) else {}
    merged = {}
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        merged[key] = flag if flag not in (None, False) else file_values.get(key)
    if merged["problem"] is None:
        raise UsageError("--problem is required (flag or config file)")
    try:
        return RunConfig(
            problem=merged["problem"],
            scheme=merged["scheme"] or "scout",
            ncells=_ints(str(merged["ncells"] or default_ncells), "ncells"),
            cfl=None if merged["cfl"] is None else float(merged["cfl"]),
            nu=None if merged["nu"] is None else float(merged["nu"]),
            tfinal=None if merged["tfinal"] is None else float(merged["tfinal"]),
            out=merged["out"],
            check=_bool(merged["check"] or False),
            snapshots=_floats(str(merged["snapshots"] or ""), "snapshots"),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- writers ------------------------------------------------------------------

def _meta(fh: TextIO, items: Dict[str, object]):
    for key, value in items.items():
        fh.write(f"# {key}={value}\n")


def _run_meta(cfg: RunConfig, problem, n_cells: Optional[int] = None) -> Dict[str, object]:
    cfl = cfg.cfl if cfg.cfl is not None else problem.cfl
    meta = {"generator": f"scout {__version__}", "problem": cfg.problem, "scheme": cfg.scheme}
    if n_cells is not None:
        meta["n_cells"] = n_cells
    meta.update({"domain": f"{fmt(problem.domain[0])},{fmt(problem.domain[1])}",
                 "cfl": fmt(cfl), "nu": fmt(problem.nu if cfg.nu is None else cfg.nu),
                 "t_start": fmt(problem.t_start), "t_end": fmt(problem.t_end)})
    return meta


def write_solution(path: str, meta: Dict[str, object], x, q, q_ref):
    with open(path, "w", newline="\n") as fh:
        _meta(fh, meta)
        fh.write("x,q_numeric,q_reference\n")
        for xi, qi, ri in zip(x, q, q_ref):
            fh.write(f"{fmt(xi)},{fmt(qi)},{fmt(ri)}\n")


def write_table(fh: TextIO, meta: Dict[str, object], rows) -> None:
    _meta(fh, meta)
    fh.write("N,l1_error,l1_order,mass_delta\n")
    for r in rows:
        fh.write(f"{r.n_cells},{fmt(r.l1_error)},{fmt(r.l1_order)},{fmt(r.mass_delta)}\n")


def _reference_for(problem, cfg: RunConfig):
    if problem.exact is not None:
        return problem.exact
    if problem.reference is not None:
        logger.info("%s: no closed form, using a %d-cell %s reference run", problem.name,
                    problem.reference.n_cells, problem.reference.scheme)
        return reference_evaluator(problem, config=SchemeConfig(problem.reference.scheme,
                                                                cfl=cfg.cfl, nu=cfg.nu))
    return None


# -- commands -----------------------------------------------------------------

def cmd_list(out: TextIO) -> int:
    out.write("problems:\n")
    for name in problem_names():
        p = get_problem(name)
        ref = "exact" if p.exact is not None else ("reference run" if p.reference else
                                                   "shock speed" if p.shock_speed else "none")
        bc = "periodic" if p.boundary.is_periodic else "dirichlet"
        out.write(f"  {name:<12} {p.title}; [{p.domain[0]:g}, {p.domain[1]:g}] {bc}, "
                  f"t_end={p.t_end:.6g}, nu={p.nu:g}, cfl={p.cfl:g}, solution: {ref}\n")
    out.write("schemes:\n")
    for s in SCHEMES:
        out.write(f"  {s}\n")
    out.write("golden tables:\n")
    for key in golden_keys():
        g = load_golden(key)
        out.write(f"  {key:<26} {g.problem} {g.scheme} cfl={g.cfl:g}\n")
    return EXIT_OK


def cmd_run(cfg: RunConfig, out: TextIO) -> int:
    if len(cfg.ncells) != 1:
        raise UsageError("run takes a single --ncells value")
    n = cfg.ncells[0]
    problem = cfg.problem_spec()
    config = cfg.scheme_config()
    res = run(problem, n, config, snapshot_times=cfg.snapshots, keep_first_feet=True)
    grid = res.grid
    ref = problem.exact
    dq = mass_delta(res.initial, res.final, grid)
    err = None if ref is None else l1_error(res.final, ref, grid, bc=problem.boundary)
    meta = _run_meta(cfg, problem, n)

    folder = cfg.out or "."
    os.makedirs(folder, exist_ok=True)
    stem = os.path.join(folder, f"{cfg.problem}_{cfg.scheme}_N{n}")
    fields = [(f"{stem}_snapshot{k}.csv", s) for k, s in enumerate(res.snapshots)]
    fields.append((f"{stem}_solution.csv", res.final))
    for path, fld in fields:
        q_ref = ref(grid.centers, fld.time) if ref is not None else np.full(n, np.nan)
        write_solution(path, {**meta, "time": fmt(fld.time)}, grid.centers, fld.values, q_ref)

    iters = sum(r.newton_iters_total for r in res.reports)
    fallbacks = sum(r.fallback_count for r in res.reports)
    with open(f"{stem}_summary.csv", "w", newline="\n") as fh:
        _meta(fh, {**meta, "n_steps": res.n_steps, "mass_delta": fmt(dq),
                   "l1_error": fmt(err) if err is not None else "n/a",
                   "newton_iterations": iters, "bisection_fallbacks": fallbacks,
                   "max_crossed_interfaces": max((r.max_crossed for r in res.reports), default=0)})
        fh.write("step,dt,max_speed,newton_iterations,bisection_fallbacks,ghost_width,"
                 "max_crossed_interfaces\n")
        for k, r in enumerate(res.reports):
            fh.write(f"{k},{fmt(r.dt_used)},{fmt(r.max_speed)},{r.newton_iters_total},"
                     f"{r.fallback_count},{r.ghost_width},{r.max_crossed}\n")

    crossed_max = 0
    if res.first_feet is not None:
        x_if = grid.interfaces
        counts = np.atleast_1d(res.first_feet.crossed_interfaces)
        crossed_max = int(np.max(counts)) if counts.size else 0
        with open(f"{stem}_crossed.csv", "w", newline="\n") as fh:
            _meta(fh, {**meta, "step": 0, "dt": fmt(res.reports[0].dt_used)})
            fh.write("x_interface,count\n")
            for xi, c in zip(x_if, counts):
                fh.write(f"{fmt(xi)},{int(c)}\n")

    out.write(f"{cfg.problem} {cfg.scheme} N={n}: {res.n_steps} steps, "
              f"mass_delta={dq:.3e}, l1_error={'n/a' if err is None else f'{err:.6e}'}, "
              f"max crossed interfaces={crossed_max}\n")
    out.write(f"files: {stem}_*.csv\n")
    if cfg.check:
        table = find_golden(cfg.problem, cfg.scheme, cfg.cfl if cfg.cfl is not None else problem.cfl)
        if table is None or table.row(n) is None:
            raise UsageError(f"no golden row for {cfg.problem}/{cfg.scheme} at N={n}")
        issues = check_rows([ConvergenceRow(n, err, None, dq)], table)
        return _report_check(issues, table.key, out)
    return EXIT_OK


def _report_check(issues: Sequence[str], key: str, out: TextIO) -> int:
    if issues:
        out.write(f"check against {key}: FAIL\n")
        for msg in issues:
            out.write(f"  {msg}\n")
        return EXIT_CHECK
    out.write(f"check against {key}: PASS\n")
    return EXIT_OK


def cmd_convergence(cfg: RunConfig, out: TextIO) -> int:
    problem = cfg.problem_spec()
    cfl = cfg.cfl if cfg.cfl is not None else problem.cfl
    table = None
    if cfg.check:
        table = find_golden(cfg.problem, cfg.scheme, cfl)
        if table is None:
            raise UsageError(f"no golden table for {cfg.problem}/{cfg.scheme} at cfl={cfl:g}")
    ref = _reference_for(problem, cfg)
    if ref is None:
        raise UsageError(f"{cfg.problem} has neither an exact solution nor a reference recipe")
    rows = convergence_study(problem, cfg.scheme_config(), cfg.ncells, reference=ref)
    meta = _run_meta(cfg, problem)
    meta["resolutions"] = ",".join(map(str, cfg.ncells))
    if table is not None and table.expected_degraded:
        meta["note"] = table.note
    if cfg.out:
        os.makedirs(os.path.dirname(os.path.abspath(cfg.out)), exist_ok=True)
        with open(cfg.out, "w", newline="\n") as fh:
            write_table(fh, meta, rows)
    else:
        write_table(out, meta, rows)
    if any(r.failed for r in rows):
        for r in rows:
            if r.failed:
                out.write(f"N={r.n_cells} failed: {r.message}\n")
        if table is None:
            return EXIT_SOLVER
    if table is not None:
        if table.expected_degraded:
            out.write(f"{table.key}: {table.note}\n")
        return _report_check(check_rows(rows, table), table.key, out)
    return EXIT_OK


def cmd_reproduce_all(out_dir: str, out: TextIO, criteria: Optional[Sequence[int]] = None) -> int:
    """Every golden table plus every acceptance criterion; writes ``report.txt``."""
    os.makedirs(out_dir, exist_ok=True)
    cache = StudyCache()
    lines = [f"# generator=scout {__version__}", "golden tables:"]
    failures = 0
    for key in golden_keys():
        table = load_golden(key)
        ns = [r.n_cells for r in table.rows]
        rows = cache.rows(table.problem, table.scheme, table.cfl, ns)
        meta = {"generator": f"scout {__version__}", "problem": table.problem,
                "scheme": table.scheme, "cfl": fmt(table.cfl), "golden": key}
        with open(os.path.join(out_dir, f"{key}.csv"), "w", newline="\n") as fh:
            write_table(fh, meta, rows)
        issues = check_rows(rows, table)
        failures += bool(issues)
        tag = "PASS" if not issues else "FAIL"
        extra = f" ({table.note})" if table.expected_degraded else ""
        lines.append(f"  {tag} {key}{extra}")
        lines.extend(f"      {msg}" for msg in issues)
    lines.append("acceptance criteria:")
    results = evaluate(criteria, cache)
    for res in results:
        lines.append("  " + res.line())
        lines.extend(f"      {d}" for d in res.details)
    failures += sum(not r.passed for r in results)
    lines.append(f"overall: {'PASS' if not failures else 'FAIL'}")
    text = "\n".join(lines) + "\n"
    with open(os.path.join(out_dir, "report.txt"), "w", newline="\n") as fh:
        fh.write(text)
    for res in results:
        out.write(res.line() + "\n")
    out.write(f"report: {os.path.join(out_dir, 'report.txt')}\n")
    return EXIT_OK if not failures else EXIT_CHECK


# -- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scout", description="Conservative semi-Lagrangian benchmark harness.")
    parser.add_argument("--version", action="version", version=f"scout {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, ncells_help):
        p.add_argument("--config", help="key=value file mirroring the flags")
        p.add_argument("--problem", help="problem name, see 'scout list'")
        p.add_argument("--scheme", help="one of: " + ", ".join(SCHEMES))
        p.add_argument("--ncells", help=ncells_help)
        p.add_argument("--cfl", type=float)
        p.add_argument("--nu", type=float, help="override the viscosity")
        p.add_argument("--tfinal", type=float, help="override the final time")
        p.add_argument("--out")
        p.add_argument("--check", action="store_true", help="compare with the golden table")

    p_run = sub.add_parser("run", help="single simulation")
    common(p_run, "number of cells (default 100)")
    p_run.add_argument("--snapshots", help="comma-separated output times")
    p_conv = sub.add_parser("convergence", help="convergence table over a chain of meshes")
    common(p_conv, f"comma-separated resolutions (default {DEFAULT_CHAIN})")
    p_all = sub.add_parser("reproduce-all", help="all golden tables and acceptance criteria")
    p_all.add_argument("--out", default="scout-report")
    sub.add_parser("list", help="problems, schemes and golden tables")
    return parser


def main(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.command is None:
            raise UsageError("a subcommand is required: run, convergence, reproduce-all, list")
        if args.command == "list":
            return cmd_list(out)
        if args.command == "reproduce-all":
            return cmd_reproduce_all(args.out, out)
        cfg = merge_config(args, "100" if args.command == "run" else DEFAULT_CHAIN)
        if args.command == "run":
            return cmd_run(cfg, out)
        return cmd_convergence(cfg, out)
    except (UsageError, ConfigurationError) as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (ScoutError, FloatingPointError, ArithmeticError) as exc:
        sys.stderr.write(f"solver failure: {type(exc).__name__}: {exc}\n")
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
