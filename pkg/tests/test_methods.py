import random

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from octoroot.expr import BUILTIN_NAMES, Problem, builtin
from octoroot.methods import (
    ALL_METHODS,
    DEFAULT_PARAMS,
    MethodId,
    MethodParams,
    NearSingularError,
    Status,
    divided_difference,
    step,
    step_m1,
    step_reference,
)
from octoroot.numerics import HARDWARE, PrecisionContext


def evaluator(src, ctx=HARDWARE):
    return Problem.from_strings("t", src).evaluator(ctx)


# -- divided differences -------------------------------------------------------------


def test_divided_difference_examples():
    sq = evaluator("x^2")
    assert divided_difference(sq, [1, 2]) == 3
    assert divided_difference(sq, [2, 2]) == 4
    assert divided_difference(evaluator("x^3"), [0, 1, 2, 2]) == 1


def test_divided_difference_node_rules():
    sq = evaluator("x^2")
    with pytest.raises(ValueError):
        divided_difference(sq, [1, 1, 1])
    with pytest.raises(ValueError):
        divided_difference(sq, [1, 2, 1])
    with pytest.raises(ValueError):
        divided_difference(sq, [1])
    ctx = PrecisionContext(40)
    a = ctx.convert(1)
    b = a + ctx.convert(mpmath.mpf(10) ** -35)
    with pytest.raises(NearSingularError):
        divided_difference(evaluator("x^2", ctx), [a, b])


def vandermonde_leading(nodes, values, ctx):
    """Leading coefficient of the interpolating polynomial via a dense solve."""
    mp = ctx.mp
    n = len(nodes)
    A = mp.matrix(n, n)
    for i, t in enumerate(nodes):
        for j in range(n):
            A[i, j] = t.value ** j
    coeffs = mp.lu_solve(A, mp.matrix([v.value for v in values]))
    return coeffs[n - 1]


def test_divided_difference_matches_vandermonde_oracle():
    digits = 50
    ctx = PrecisionContext(digits)
    rng = random.Random(1)
    funcs = [evaluator(src, ctx) for src in ("exp(x)*sin(x)", "x^5-3*x+2", "ln(2+x^2)", "cos(x)/(2+x)")]
    for _ in range(200):
        ev = rng.choice(funcs)
        k = rng.randint(2, 4)
        nodes = []
        while len(nodes) < k:
            t = ctx.complex(round(rng.uniform(-1, 1), 6), round(rng.uniform(-1, 1), 6))
            if all(abs(t - s) > 1e-3 for s in nodes):
                nodes.append(t)
        values = [ev.f(t) for t in nodes]
        got = divided_difference(ev, nodes, values=values)
        want = vandermonde_leading(nodes, values, ctx)
        assert abs(got.value - want) <= mpmath.mpf(10) ** -(digits // 2) * max(1, abs(want))


# -- step examples ---------------------------------------------------------------------


def test_m1_first_substeps_on_quadratic():
    out = step_m1(evaluator("x^2-1"), 2 + 0j)
    assert out.ok
    assert out.y == 1.25
    assert abs(out.z - 1.0679408482142857) < 1e-15


def test_m1_at_root_is_a_fixed_point():
    out = step_m1(evaluator("x^2-1"), 1 + 0j)
    assert out.ok and out.next == 1


def _first_error(method, name, digits=200):
    ctx = PrecisionContext(digits)
    p = builtin(name)
    out = step(method, p.evaluator(ctx), p.guess_value(ctx))
    assert out.ok
    return abs(out.next - p.root_value(ctx))


def _mantissa(v):
    from octoroot.tables import format_mantissa

    return format_mantissa(v)


def test_m1_on_f1_first_error():
    assert _mantissa(_first_error(MethodId.M1, "f1")) == "0.610e-6"


def test_m2_on_f1_first_error():
    assert _mantissa(_first_error(MethodId.M2, "f1")) == "0.721e-4"


def test_m5_on_f4_first_error():
    # reference value for M5; the formula as written does not reproduce it (see the decisions ledger)
    assert _mantissa(_first_error(MethodId.M5, "f4")) == "0.281e-8"


def test_step_reference_rejects_m1():
    with pytest.raises(ValueError):
        step_reference(MethodId.M1, DEFAULT_PARAMS, evaluator("x^2-1"), 2 + 0j)


@pytest.mark.parametrize("method", ALL_METHODS)
@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_every_known_root_is_a_fixed_point(method, name):
    ctx = PrecisionContext(100)
    p = builtin(name)
    ev = p.evaluator(ctx)
    for r in p.root_values(ctx):
        out = step(method, ev, r)
        assert out.ok
        assert abs(out.next - r) <= ctx.tiny


@pytest.mark.parametrize("method", ALL_METHODS)
def test_vanishing_residual_returns_the_point(method):
    out = step(method, evaluator("(x-1)*(x+2)"), -2 + 0j)
    assert out.ok and out.next == -2


def test_zero_derivative_is_singular():
    out = step(MethodId.M1, evaluator("x^2+1"), 0j)
    assert out.status is Status.SINGULAR
    assert "f'(x)" in out.label


def test_m1_weight_denominator_is_singular():
    # u = f/f' = -1 at x = 0 for x^2 + x - 1
    out = step(MethodId.M1, evaluator("x^2+x-1"), 0j)
    assert out.status is Status.SINGULAR
    assert out.label == "1 + u = 0"


# -- M2 parameter cancellation ---------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(
    st.sampled_from(["f1", "f2", "f3", "p3", "p4", "p6"]),
    st.floats(-2.5, 2.5),
    st.floats(-2.5, 2.5),
)
def test_m2_output_does_not_depend_on_beta_gamma(name, re, im):
    ctx = PrecisionContext(50)
    p = builtin(name)
    if p.real_only:
        im = 0.0
    x = ctx.complex(re, im)
    ev = p.evaluator(ctx)
    outs = [
        step(MethodId.M2, ev, x, MethodParams(beta_m2=b, gamma_m2=g))
        for b, g in ((0, 0), (1, -2), (-5, 3))
    ]
    statuses = {o.status for o in outs}
    assert len(statuses) == 1
    if outs[0].ok:
        base = outs[0].next
        for o in outs[1:]:
            assert abs(o.next - base) <= mpmath.mpf(10) ** -40 * max(1, abs(base))


# -- convergence speed near the root ---------------------------------------------------


@pytest.mark.parametrize("method", ALL_METHODS)
@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_perturbed_starts_converge_in_two_steps(method, name):
    ctx = PrecisionContext(60)
    p = builtin(name)
    ev = p.evaluator(ctx)
    rng = random.Random(f"{method.name}/{name}")
    for r in p.root_values(ctx):
        for _ in range(10):
            if p.real_only:
                d = ctx.convert(rng.uniform(-1e-3, 1e-3) * 0.999)
            else:
                d = ctx.complex(rng.uniform(-7e-4, 7e-4), rng.uniform(-7e-4, 7e-4))
            x = r + d
            for _ in range(2):
                out = step(method, ev, x)
                assert out.ok
                x = out.next
            assert abs(x - r) <= ctx.tiny
