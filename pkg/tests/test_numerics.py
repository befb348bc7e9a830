from fractions import Fraction
import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from octoroot.numerics import (
    HARDWARE,
    BigComplex,
    ContextMismatchError,
    DomainError,
    Jet,
    PrecisionContext,
    SingularJetError,
    jet_arith,
    jet_elementary,
)

P50 = PrecisionContext(50)


def jet(*coeffs, ctx=P50):
    return Jet(list(coeffs), ctx)


def as_complex(j):
    return [complex(c) for c in j.coeffs]


def close(a, b, rel):
    return abs(a - b) <= rel * max(1.0, abs(b))


# -- contexts and scalars ------------------------------------------------------


def test_context_is_interned_and_validated():
    assert PrecisionContext(50) is P50
    with pytest.raises(ValueError):
        PrecisionContext(15)


def test_mixing_precisions_is_an_error():
    a = BigComplex(1, 0, context=P50)
    b = BigComplex(1, 0, context=PrecisionContext(60))
    with pytest.raises(ContextMismatchError):
        a + b
    with pytest.raises(ContextMismatchError):
        jet(1, 1) + Jet([1, 1], PrecisionContext(60))


def test_bigcomplex_arithmetic_basics():
    a = P50.complex(3, 4)
    assert abs(a) == 5
    assert (a * a.conjugate()).re == 25
    assert complex(a / 2) == 1.5 + 2j
    assert (1 - a).im == -4
    with pytest.raises(ZeroDivisionError):
        a / 0


def test_abs_does_not_overflow_for_large_components():
    ctx = PrecisionContext(30)
    z = ctx.complex(mpmath.mpf("1e400"), mpmath.mpf("1e400"))
    assert abs(z) > mpmath.mpf("1.4e400")


def test_non_finite_values_propagate():
    bad = BigComplex(math.inf, 0, context=P50)
    assert not bad.is_finite
    for result in (bad + 1, bad * 2, 1 - bad, P50.exp(bad)):
        assert not P50.isfinite(result)
    assert not (jet(math.inf, 1) * jet(1, 1)).is_finite


def test_domain_errors_carry_value():
    with pytest.raises(DomainError) as info:
        P50.ln(P50.convert(0))
    assert info.value.value == 0
    with pytest.raises(DomainError):
        HARDWARE.ln(0j)


def test_hardware_overflow_maps_to_infinity():
    assert not HARDWARE.isfinite(HARDWARE.exp(1000))
    assert not HARDWARE.isfinite(HARDWARE.sin(1000j))


# -- jet arithmetic examples -----------------------------------------------------


def test_jet_mul_example():
    assert as_complex(jet_arith("mul", jet(1, 1, 0, 0, 0), jet(1, 1, 0, 0, 0))) == [1, 2, 1, 0, 0]


def test_jet_add_example():
    assert as_complex(jet_arith("add", jet(2, 0, 0, 0, 0), jet(3, 1, 0, 0, 0))) == [5, 1, 0, 0, 0]


def test_jet_div_example():
    assert as_complex(jet_arith("div", jet(1, 0, 0, 0, 0), jet(1, 1, 0, 0, 0))) == [1, -1, 1, -1, 1]


def test_jet_div_by_zero_constant_term():
    with pytest.raises(SingularJetError):
        jet_arith("div", jet(1, 0, 0, 0, 0), jet(0, 1, 0, 0, 0))


@pytest.mark.parametrize(
    "fn, expected",
    [
        ("sin", [0, 1, 0, -1 / 6, 0]),
        ("exp", [1, 1, 1 / 2, 1 / 6, 1 / 24]),
        ("cos", [1, 0, -1 / 2, 0, 1 / 24]),
    ],
)
def test_elementary_maclaurin(fn, expected):
    got = as_complex(jet_elementary(fn, jet(0, 1, 0, 0, 0)))
    assert all(close(g, e, 1e-40) for g, e in zip(got, expected))


def test_pow_int_example():
    assert as_complex(jet_elementary("pow_int", jet(3, 1, 0, 0, 0), 2)) == [9, 6, 1, 0, 0]


def test_ln_at_zero_is_a_domain_error():
    with pytest.raises(DomainError):
        jet_elementary("ln", jet(0, 1, 0, 0, 0))


def test_sqrt_and_pow_real_agree():
    a = jet(4, 1, 0, 0, 0)
    s = as_complex(jet_elementary("sqrt", a))
    p = as_complex(jet_elementary("pow_real", a, Fraction(1, 2)))
    # sqrt(4 + h) = 2 + h/4 - h^2/64 + h^3/512 - 5 h^4/16384
    expected = [2, 1 / 4, -1 / 64, 1 / 512, -5 / 16384]
    for got in (s, p):
        assert all(close(g, e, 1e-40) for g, e in zip(got, expected))


def test_derivatives_rescale_by_factorial():
    d = Jet.seed(P50.convert(2)) ** 4
    assert [complex(v) for v in d.derivatives()] == [16, 32, 48, 48, 24]


# -- oracles and properties ------------------------------------------------------

small = st.fractions(min_value=-5, max_value=5, max_denominator=7)
nonzero = small.filter(lambda q: q != 0)


def long_division(a, b):
    """Series quotient by term-by-term long division over the rationals."""
    q = []
    for k in range(len(a)):
        acc = a[k] - sum(q[i] * b[k - i] for i in range(k))
        q.append(acc / b[0])
    return q


@settings(max_examples=100, deadline=None)
@given(st.lists(small, min_size=5, max_size=5), nonzero, st.lists(small, min_size=4, max_size=4))
def test_jet_division_matches_long_division(a, b0, brest):
    b = [b0] + brest
    got = jet_arith("div", Jet(a, P50), Jet(b, P50))
    want = long_division(a, b)
    for g, w in zip(got.coeffs, want):
        assert abs(g - P50.convert(w)) <= mpmath.mpf("1e-44") * max(1, abs(w))


jet_coeffs = st.lists(st.floats(-3, 3, allow_nan=False), min_size=5, max_size=5)


@settings(max_examples=60, deadline=None)
@given(jet_coeffs, jet_coeffs, jet_coeffs)
def test_jet_ring_laws(a, b, c):
    A, B, C = Jet(a, P50), Jet(b, P50), Jet(c, P50)
    tol = mpmath.mpf("1e-44")
    for lhs, rhs in (
        ((A * B) * C, A * (B * C)),
        ((A + B) + C, A + (B + C)),
        (A * (B + C), A * B + A * C),
        (A * B, B * A),
    ):
        for x, y in zip(lhs.coeffs, rhs.coeffs):
            assert abs(x - y) <= tol * (1 + abs(y))
