"""Published convergence tables stored as package data, and checks against them."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, List, Optional, Sequence

from .exceptions import ConfigurationError
from .metrics import ConvergenceRow

GOLDEN_PACKAGE = "scout.data.golden"


@dataclass(frozen=True)
class GoldenRow:
    n_cells: int
    l1_error: float
    mass_delta: Optional[float] = None
    rtol: Optional[float] = None  # None: listed for reference, not checked


@dataclass
class GoldenTable:
    """Expected convergence rows for one problem/scheme/CFL combination.

    Header metadata (``# key=value``) may carry ``mass_delta_max`` (bound on
    every row), ``fine_order`` with ``fine_order_tol`` (observed order of
    the last row) and ``fine_order_max`` (upper bound for degraded schemes).
    """

    key: str
    problem: str
    scheme: str
    cfl: float
    origin: str
    rows: List[GoldenRow]
    meta: Dict[str, str] = field(default_factory=dict)

    def row(self, n_cells: int) -> Optional[GoldenRow]:
        for r in self.rows:
            if r.n_cells == n_cells:
                return r
        return None

    def _float(self, name: str) -> Optional[float]:
        return float(self.meta[name]) if name in self.meta else None

    @property
    def mass_delta_max(self) -> Optional[float]:
        return self._float("mass_delta_max")

    @property
    def note(self) -> str:
        return self.meta.get("note", "")

    @property
    def expected_degraded(self) -> bool:
        return self.note.startswith("expected-degraded")


def _opt_float(text: str) -> Optional[float]:
    text = text.strip()
    return float(text) if text else None


def parse_golden(text: str, key: str = "") -> GoldenTable:
    meta: Dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            item = line[1:].strip()
            if item.startswith("origin:"):
                meta["origin"] = item.split(":", 1)[1].strip()
            elif "=" in item:
                k, v = item.split("=", 1)
                meta[k.strip()] = v.strip()
        elif line.strip():
            body.append(line)
    rows = [GoldenRow(int(r["n_cells"]), float(r["l1_error"]), _opt_float(r.get("mass_delta", "")),
                      _opt_float(r.get("rtol", "")))
            for r in csv.DictReader(body)]
    try:
        return GoldenTable(key, meta.pop("problem"), meta.pop("scheme"), float(meta.pop("cfl")),
                           meta.pop("origin", ""), rows, meta)
    except KeyError as exc:
        raise ConfigurationError(f"golden table {key!r} lacks {exc.args[0]!r}") from None


def golden_keys() -> List[str]:
    files = resources.files(GOLDEN_PACKAGE).iterdir()
    return sorted(f.name[:-4] for f in files if f.name.endswith(".csv"))


def load_golden(key: str) -> GoldenTable:
    path = resources.files(GOLDEN_PACKAGE).joinpath(key + ".csv")
    if not path.is_file():
        raise ConfigurationError(f"no golden table {key!r}")
    return parse_golden(path.read_text(), key)


def find_golden(problem: str, scheme: str, cfl: float) -> Optional[GoldenTable]:
    for key in golden_keys():
        table = load_golden(key)
        if table.problem == problem and table.scheme == scheme and math.isclose(table.cfl, cfl):
            return table
    return None


def check_rows(rows: Sequence[ConvergenceRow], table: GoldenTable) -> List[str]:
    """Violations of ``table`` by computed ``rows``; empty when all pass.

    Rows whose resolution is absent from the table are ignored, so a
    partial chain is checked on the rows it has.
    """
    problems: List[str] = []
    bound = table.mass_delta_max
    for row in rows:
        if row.failed:
            problems.append(f"N={row.n_cells}: run failed ({row.message})")
            continue
        exp = table.row(row.n_cells)
        if exp is not None and exp.rtol is not None:
            rel = abs(row.l1_error - exp.l1_error) / exp.l1_error
            if rel > exp.rtol:
                problems.append(f"N={row.n_cells}: l1_error {row.l1_error:.3e} vs expected "
                                f"{exp.l1_error:.3e} (off by {rel:.0%}, tolerance {exp.rtol:.0%})")
        if bound is not None and not row.mass_delta <= bound:
            problems.append(f"N={row.n_cells}: mass_delta {row.mass_delta:.3e} exceeds {bound:.1e}")
    last = rows[-1] if rows else None
    order = last.l1_order if last is not None else None
    # order targets refer to the finest published row
    if order is not None and table.rows and last.n_cells == table.rows[-1].n_cells:
        target, tol = table._float("fine_order"), table._float("fine_order_tol")
        if target is not None and tol is not None and abs(order - target) > tol:
            problems.append(f"N={last.n_cells}: order {order:.3f} not within {tol} of {target}")
        cap = table._float("fine_order_max")
        if cap is not None and order > cap:
            problems.append(f"N={last.n_cells}: order {order:.3f} exceeds {cap}")
    return problems
