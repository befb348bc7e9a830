from decimal import Decimal

import mpmath
import pytest
from hypothesis import given, strategies as st

from octoroot.numerics import PrecisionContext
from octoroot.tables import (
    BASIN_HEADER,
    ORDER_HEADER,
    BasinRow,
    OrderRow,
    check_basins,
    check_order,
    format_mantissa,
    full_str,
    load_reference,
    nc_tolerance,
    read_csv,
    to_csv,
    to_json,
    within_printed_ulp,
)


@pytest.mark.parametrize(
    "value, digits, text",
    [
        (6.100935e-7, 3, "0.610e-6"),
        (0.0006, 3, "0.600e-3"),
        (0.99951, 3, "0.100e+1"),
        (123.0, 3, "0.123e+3"),
        (-0.5, 3, "-0.500e+0"),
        (0.0, 3, "0.000e+0"),
        (8.0000004, 6, "0.800000e+1"),
        (None, 3, "nan"),
        (float("inf"), 3, "inf"),
    ],
)
def test_format_mantissa(value, digits, text):
    assert format_mantissa(value, digits) == text


def test_format_mantissa_rounds_half_to_even():
    assert format_mantissa(Decimal("0.1245e-3")) == "0.124e-3"
    assert format_mantissa(Decimal("0.1235e-3")) == "0.124e-3"


def test_format_mantissa_keeps_tiny_precision_values():
    ctx = PrecisionContext(1200)
    v = ctx.mp.mpf("1.79e-369")
    assert format_mantissa(v) == "0.179e-368"


@given(st.floats(min_value=1e-300, max_value=1e300))
def test_format_then_parse_is_within_half_an_ulp(x):
    text = format_mantissa(x)
    mant, exp = text.split("e")
    assert 0.1 <= float(mant) < 1
    assert abs(Decimal(text) - Decimal(repr(x))) <= Decimal("0.0005").scaleb(int(exp))


def test_within_printed_ulp():
    assert within_printed_ulp(mpmath.mpf("0.6101e-6"), "0.610e-6")
    assert within_printed_ulp(mpmath.mpf("0.611e-6"), "0.610e-6")
    assert within_printed_ulp(mpmath.mpf("0.609e-6"), "0.610e-6")
    assert not within_printed_ulp(mpmath.mpf("0.612e-6"), "0.610e-6")
    assert not within_printed_ulp(mpmath.mpf("0.610e-7"), "0.610e-6")
    assert not within_printed_ulp(float("nan"), "0.610e-6")


def test_full_str():
    ctx = PrecisionContext(50)
    assert full_str(ctx.mp.mpf(1) / 3, 10) == "0.3333333333"
    assert full_str(ctx.convert(1) / 3, 10) == "(0.3333333333+0.0j)"
    assert full_str(ctx.complex(1, -2), 5).endswith("-2.0j)")


def _order_row(**kw):
    base = dict(problem="f1", method="m1", errors=(mpmath.mpf("6.1e-7"), mpmath.mpf("3.19e-47"), mpmath.mpf("1.79e-369")), coc=8.0000001, acoc=7.99999)
    base.update(kw)
    return OrderRow(**base)


def test_order_csv_round_trip():
    text = to_csv(ORDER_HEADER, [_order_row()])
    assert text.splitlines()[0] == "problem,method,e1,e2,e3,coc,acoc"
    (row,) = read_csv(text)
    assert row["problem"] == "f1" and row["method"] == "m1"
    assert row["e3"] == Decimal("0.179e-368")
    assert row["coc"] == Decimal("0.800000e+1")


def test_undefined_values_encode_as_nan():
    text = to_csv(ORDER_HEADER, [_order_row(errors=(), coc=None, acoc=None)])
    (row,) = read_csv(text)
    assert row["e1"] == "nan" and row["coc"] == "nan"


def test_basin_csv_and_json():
    rows = [BasinRow("p1", "m1", 2.85, 0.00111, 2.8498)]
    (row,) = read_csv(to_csv(BASIN_HEADER, rows))
    assert row["nc"] == Decimal("0.111000e-2")
    assert '"ipp": 2.85' in to_json(rows)


def test_reference_tables_are_complete():
    t2 = load_reference("table2")
    t5 = load_reference("table5")
    assert len(t2) == 24 and len(t5) == 36
    assert {r["method"] for r in t2} == {f"m{k}" for k in range(1, 7)}
    assert t2[0]["e1"] == "0.610e-6"


def test_check_order_flags_unresolved_rows_as_precision_limited():
    checks = check_order([_order_row()], digits=200)
    status = {c.quantity: c.status for c in checks}
    assert status["e1"] == "pass" and status["e2"] == "pass"
    assert status["e3"] == "precision-limited"
    assert status["coc"] == status["acoc"] == "precision-limited"
    checks = check_order([_order_row()], digits=1200)
    assert all(c.status == "pass" for c in checks)


def test_check_order_detects_mismatch():
    row = _order_row(errors=(mpmath.mpf("6.2e-7"),) + _order_row().errors[1:], coc=7.5)
    failed = {c.quantity for c in check_order([row], digits=1200) if c.failed}
    assert failed == {"e1", "coc"}


def test_nc_tolerance_split():
    assert nc_tolerance(9.99) == 0.5
    assert nc_tolerance(10.0) == 2.0


def test_check_basins_tolerances():
    ref = [{"polynomial": "p1", "method": "m1", "ipp": "3.00", "nc": "12.0", "icc": "2.00"}]
    ok = BasinRow("p1", "m1", 3.09, 13.9, 1.91)
    assert not any(c.failed for c in check_basins([ok], ref))
    bad = BasinRow("p1", "m1", 3.11, 14.1, 2.0)
    assert {c.quantity for c in check_basins([bad], ref) if c.failed} == {"ipp", "nc"}
