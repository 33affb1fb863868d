"""Published reference tables and the code that recomputes them.

Each printed cell is kept as text so its precision is known. A computed
value matches when rounding or truncating it to that precision gives the
printed number (the published cells mix both conventions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_DOWN, ROUND_HALF_UP, Decimal

from .bounds import (
    Metric,
    Mode,
    PolynomialClass,
    corollary_poly_identical,
    gamma_bound,
    identical_bound,
    unweighted_closed_form,
)
from .latency import Polynomial

DEGREES = tuple(range(1, 9))

WEIGHTED = {
    "poa": ["2.618", "9.909", "47.82", "277", "1,858", "14,099", "118,926", "1,101,126"],
    "crs": ["7.464", "90.3", "1,521", "32,896", "868,567", "27,089,557", "974,588,649", "39,729,739,895"],
    "crc": ["5.828", "56.94", "780.2", "13,755", "296,476", "7,553,550", "222,082,591", "7,400,694,480"],
}

UNWEIGHTED = {
    "poa": ["2.5", "9.583", "41.54", "267.6", "1,514", "12,345", "98,734", "802,603"],
    "crs": ["4.236", "37.58", "527.3", "9,387", "201,401", "5,276,150", "151,192,413", "5,287,749,084"],
    "crc": ["5.66", "55.46", "755.2", "13,170", "289,648", "7,174,495", "220,349,064", "7,022,463,077"],
}
UNWEIGHTED_LOWER_ONLY_FROM = 4  # selfish cells from this degree on are lower bounds

IDENTICAL = ["1.125", "1.412", "1.946", "2.895", "4.571", "7.544", "12.866", "22.478"]

METRICS = ("poa", "crs", "crc")


def _decimals(printed: str) -> int:
    text = printed.replace(",", "")
    return len(text.split(".")[1]) if "." in text else 0


def matches_printed(value: float, printed: str) -> bool:
    if not math.isfinite(value):
        return False
    target = Decimal(printed.replace(",", ""))
    q = Decimal(1).scaleb(-_decimals(printed))
    v = Decimal(repr(value))
    return v.quantize(q, ROUND_HALF_UP) == target or v.quantize(q, ROUND_DOWN) == target


@dataclass
class Cell:
    d: int
    metric: str
    value: float
    printed: str
    match: bool
    note: str = ""
    upper: float | None = None

    def to_json(self) -> dict:
        out = {"d": self.d, "metric": self.metric, "value": self.value, "printed": self.printed, "match": self.match}
        if self.note:
            out["note"] = self.note
        if self.upper is not None:
            out["upper"] = self.upper
        return out


def weighted_cell(d: int, metric: str) -> Cell:
    res = gamma_bound(Mode.WEIGHTED, Metric.parse(metric), PolynomialClass(d))
    printed = WEIGHTED[metric][d - 1]
    return Cell(d, metric, res.value, printed, matches_printed(res.value, printed))


def unweighted_cell(d: int, metric: str) -> Cell:
    m = Metric.parse(metric)
    printed = UNWEIGHTED[metric][d - 1]
    if metric in ("poa", "crc"):
        value, _ = unweighted_closed_form(m, d)
        return Cell(d, metric, value, printed, matches_printed(value, printed), "closed form")
    res = gamma_bound(Mode.UNWEIGHTED, m, PolynomialClass(d))
    if d < UNWEIGHTED_LOWER_ONLY_FROM:
        return Cell(d, metric, res.value, printed, matches_printed(res.value, printed), f"grid search ({res.status})")
    lower = res.witness.value()
    ok = matches_printed(lower, printed) and res.value >= lower * (1 - 1e-12)
    return Cell(d, metric, lower, printed, ok, f"witness lower bound ({res.status})", upper=res.value)


def identical_cell(d: int) -> Cell:
    _, closed = corollary_poly_identical(d)
    numeric = identical_bound(0.0, Polynomial.monomial(d)).value
    printed = IDENTICAL[d - 1]
    agree = abs(closed - numeric) <= 1e-6 * closed
    note = f"nested optimum {numeric!r}, relative gap {abs(closed - numeric) / closed:.2e}"
    return Cell(d, "poa", closed, printed, matches_printed(closed, printed) and agree, note)


def _task(args):
    table, d, metric = args
    if table == "weighted":
        return weighted_cell(d, metric)
    if table == "unweighted":
        return unweighted_cell(d, metric)
    return identical_cell(d)


def table_tasks(table: str) -> list[tuple]:
    if table == "identical":
        return [(table, d, "poa") for d in DEGREES]
    if table not in ("weighted", "unweighted"):
        raise ValueError(f"unknown table {table!r}")
    return [(table, d, m) for d in DEGREES for m in METRICS]


def compute_table(table: str, workers: int = 1) -> list[Cell]:
    """All cells of one table, in (degree, metric) order whatever the worker count."""
    tasks = table_tasks(table)
    if workers <= 1:
        return [_task(t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_task, tasks))
