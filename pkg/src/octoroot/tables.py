"""Convergence and basin tables: computation, CSV/JSON encoding and reference checks."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal, InvalidOperation
from importlib import resources

import mpmath
from mpmath.libmp import to_str

from .basin import GridSpec, colorize, metrics, render
from .convergence import UndefinedOrderError, acoc, coc, run
from .expr import builtin
from .methods import ALL_METHODS, DEFAULT_PARAMS, MethodId
from .numerics import PrecisionContext

TABLE2_PROBLEMS = ("f1", "f2", "f3", "f4")
TABLE5_PROBLEMS = ("p1", "p2", "p3", "p4", "p5", "p6")
ERROR_DIGITS = 3
METRIC_DIGITS = 6

ORDER_BAND = (7.98, 8.02)
NC_SPLIT = 10.0
NC_TOL_SMALL = 0.5
NC_TOL_LARGE = 2.0
MEAN_TOL = 0.10


# ---------------------------------------------------------------------------
# Mantissa notation


def _to_decimal(value) -> Decimal:
    if isinstance(value, Decimal):
        return value
    if hasattr(value, "_mpf_"):
        # mpf of any context; going through float would underflow
        return Decimal(to_str(value._mpf_, 30, min_fixed=1, max_fixed=0))
    return Decimal(repr(float(value)))


def full_str(value, digits: int = 40) -> str:
    """Decimal text of a real or complex value with ``digits`` significant digits."""
    if hasattr(value, "value"):
        value = value.value
    if hasattr(value, "_mpc_"):
        re, im = value._mpc_
        return f"({to_str(re, digits)}{'+' if not im[0] else '-'}{to_str(mpmath.libmp.mpf_abs(im), digits)}j)"
    if hasattr(value, "_mpf_"):
        return to_str(value._mpf_, digits)
    return repr(value)


def format_mantissa(value, digits: int = ERROR_DIGITS) -> str:
    """``0.XXXe±E`` with ``digits`` significant digits (round half to even)."""
    if value is None:
        return "nan"
    d = _to_decimal(value)
    if d.is_nan():
        return "nan"
    if d.is_infinite():
        return "inf" if d > 0 else "-inf"
    sign = "-" if d < 0 else ""
    d = abs(d)
    if d == 0:
        return f"0.{'0' * digits}e+0"
    exp = d.adjusted() + 1
    mant = d.scaleb(-exp).quantize(Decimal(1).scaleb(-digits), rounding=ROUND_HALF_EVEN)
    if mant >= 1:
        mant = mant.scaleb(-1).quantize(Decimal(1).scaleb(-digits), rounding=ROUND_HALF_EVEN)
        exp += 1
    return f"{sign}{mant}e{exp:+d}"


def parse_mantissa(text: str) -> Decimal:
    try:
        return Decimal(text.strip())
    except InvalidOperation:
        raise ValueError(f"not a number: {text!r}") from None


def within_printed_ulp(value, printed: str) -> bool:
    """``value`` agrees with ``printed`` (``0.XXXe-E``) to within one unit of its last digit."""
    p = Decimal(printed)
    if p <= 0:
        return False
    exp = p.adjusted() + 1
    digits = len(printed.split("e")[0].split(".")[1])
    ulp = Decimal(1).scaleb(exp - digits)
    v = _to_decimal(value)
    if not v.is_finite():
        return False
    steps = (abs(v) / ulp).quantize(Decimal(1), rounding=ROUND_HALF_EVEN)
    return abs(steps - (p / ulp)) <= 1


# ---------------------------------------------------------------------------
# Order table


@dataclass
class OrderRow:
    problem: str
    method: str
    errors: tuple
    coc: float | None
    acoc: float | None
    status: str = "ok"
    note: str = ""

    def csv_fields(self) -> list[str]:
        e = list(self.errors) + [None] * (3 - len(self.errors))
        return [
            self.problem,
            self.method,
            *(format_mantissa(v, ERROR_DIGITS) for v in e[:3]),
            format_mantissa(self.coc, METRIC_DIGITS),
            format_mantissa(self.acoc, METRIC_DIGITS),
        ]

    def json_obj(self) -> dict:
        return {
            "problem": self.problem,
            "method": self.method,
            "errors": [full_str(v) for v in self.errors],
            "coc": self.coc,
            "acoc": self.acoc,
            "status": self.status,
            "note": self.note,
        }


ORDER_HEADER = ["problem", "method", "e1", "e2", "e3", "coc", "acoc"]


def order_row(method: MethodId, problem, digits: int, max_iter: int = 4, params=DEFAULT_PARAMS, x0=None, stop_tol=None) -> OrderRow:
    """One run with errors ``e1..e3`` and the order estimates."""
    ctx = PrecisionContext(digits)
    x0 = problem.guess_value(ctx) if x0 is None else ctx.convert(x0)
    trace = run(method, params, problem, x0, max_iter=max_iter, stop_tol=stop_tol)
    errors = tuple(trace.errors[1:4]) if trace.errors is not None else ()
    status, note = "ok", ""
    if trace.stop_reason == "error":
        status, note = "failed", trace.failure or ""
    try:
        c = coc(trace) if trace.errors is not None else None
    except (UndefinedOrderError, ValueError) as exc:
        c, note = None, note or str(exc)
    try:
        a = acoc(trace)
    except (UndefinedOrderError, ValueError) as exc:
        a, note = None, note or str(exc)
    return OrderRow(problem.name, method.label, errors, c, a, status, note)


def order_table(methods=ALL_METHODS, problems=TABLE2_PROBLEMS, digits: int = 1200, max_iter: int = 4) -> list[OrderRow]:
    rows = []
    for pname in problems:
        p = builtin(pname) if isinstance(pname, str) else pname
        for m in methods:
            rows.append(order_row(m, p, digits, max_iter))
    return rows


# ---------------------------------------------------------------------------
# Basin table


@dataclass
class BasinRow:
    polynomial: str
    method: str
    ipp: float
    nc: float
    icc: float
    grid: object = field(default=None, repr=False, compare=False)

    def csv_fields(self) -> list[str]:
        return [
            self.polynomial,
            self.method,
            format_mantissa(self.ipp, METRIC_DIGITS),
            format_mantissa(self.nc, METRIC_DIGITS),
            format_mantissa(self.icc, METRIC_DIGITS),
        ]

    def json_obj(self) -> dict:
        return {"polynomial": self.polynomial, "method": self.method, "ipp": self.ipp, "nc": self.nc, "icc": self.icc}


BASIN_HEADER = ["polynomial", "method", "ipp", "nc", "icc"]


def basin_row(method: MethodId, problem, spec: GridSpec = GridSpec(), params=DEFAULT_PARAMS) -> BasinRow:
    grid = render(method, params, problem, spec)
    m = metrics(grid)
    return BasinRow(problem.name, method.label, m.ipp, m.nc_percent, m.icc, grid)


def basin_table(methods=ALL_METHODS, problems=TABLE5_PROBLEMS, spec: GridSpec = GridSpec()) -> list[BasinRow]:
    rows = []
    for pname in problems:
        p = builtin(pname) if isinstance(pname, str) else pname
        for m in methods:
            rows.append(basin_row(m, p, spec))
    return rows


# ---------------------------------------------------------------------------
# Encoding


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    """Rows keyed by header; numeric columns become :class:`Decimal` (``nan`` stays a string)."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    out = []
    for rec in csv.DictReader(lines):
        row = {}
        for k, v in rec.items():
            row[k] = v
            if v not in ("nan", "inf", "-inf"):
                try:
                    row[k] = parse_mantissa(v)
                except ValueError:
                    pass
        out.append(row)
    return out


def to_json(rows) -> str:
    return json.dumps([r.json_obj() for r in rows], indent=2, sort_keys=True) + "\n"


def load_reference(name: str) -> list[dict]:
    """Checked-in printed values: ``"table2"`` or ``"table5"``."""
    text = resources.files("octoroot.data").joinpath(f"{name}_reference.csv").read_text()
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    return list(csv.DictReader(lines))


# ---------------------------------------------------------------------------
# Reference checks


@dataclass(frozen=True)
class Check:
    key: str
    quantity: str
    status: str  # "pass", "fail" or "precision-limited"
    detail: str

    @property
    def failed(self) -> bool:
        return self.status == "fail"


def _resolution_exponent(digits: int) -> int:
    # errors below 10^-(digits-10) are not resolved by a run at this precision
    return -(digits - 10)


def check_order(rows: list[OrderRow], digits: int, reference=None) -> list[Check]:
    ref = {(r["problem"], r["method"]): r for r in (reference or load_reference("table2"))}
    limit = _resolution_exponent(digits)
    checks = []
    for row in rows:
        key = f"{row.problem}/{row.method}"
        target = ref.get((row.problem, row.method))
        if target is None:
            continue
        limited = False
        for n in range(3):
            printed = target[f"e{n + 1}"]
            q = f"e{n + 1}"
            if Decimal(printed).adjusted() < limit:
                limited = True
                checks.append(Check(key, q, "precision-limited", f"printed {printed} is below 1e{limit}"))
                continue
            got = row.errors[n] if n < len(row.errors) else None
            ok = got is not None and within_printed_ulp(got, printed)
            checks.append(Check(key, q, "pass" if ok else "fail", f"got {format_mantissa(got)} printed {printed}"))
        for q, v in (("coc", row.coc), ("acoc", row.acoc)):
            if limited:
                checks.append(Check(key, q, "precision-limited", "depends on an unresolved error"))
                continue
            ok = v is not None and ORDER_BAND[0] <= v <= ORDER_BAND[1]
            shown = "undefined" if v is None else f"{v:.5f}"
            checks.append(Check(key, q, "pass" if ok else "fail", f"got {shown} need {ORDER_BAND[0]}..{ORDER_BAND[1]}"))
    return checks


def nc_tolerance(reference_nc: float) -> float:
    return NC_TOL_SMALL if reference_nc < NC_SPLIT else NC_TOL_LARGE


def check_basins(rows: list[BasinRow], reference=None) -> list[Check]:
    ref = {(r["polynomial"], r["method"]): r for r in (reference or load_reference("table5"))}
    checks = []
    for row in rows:
        target = ref.get((row.polynomial, row.method))
        if target is None:
            continue
        key = f"{row.polynomial}/{row.method}"
        for q, got in (("ipp", row.ipp), ("nc", row.nc), ("icc", row.icc)):
            want = float(target[q])
            tol = nc_tolerance(float(target["nc"])) if q == "nc" else MEAN_TOL
            ok = abs(got - want) <= tol
            checks.append(Check(key, q, "pass" if ok else "fail", f"got {got:.4g} printed {target[q]} tol {tol}"))
    return checks


def basin_image(row: BasinRow, palette=None):
    return colorize(row.grid) if palette is None else colorize(row.grid, palette)
