"""Iteration runs and experimental order of convergence."""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath

from .expr import Problem
from .methods import DEFAULT_PARAMS, MethodId, MethodParams, Status, step
from .numerics import PrecisionContext, context_of


class UndefinedOrderError(ArithmeticError):
    """The order estimate is undefined (an error or step difference is zero)."""


class NotSimpleRootError(ArithmeticError):
    pass


@dataclass(frozen=True)
class IterationTrace:
    """Iterates ``x_0 .. x_N`` of one run plus per-iterate diagnostics.

    ``errors[n] = |x_n - x*|`` when the root is known. ``stop_reason`` is one
    of ``"max_iter"``, ``"step_tol"``, ``"residual"`` or ``"error"``; in the
    last case ``failure`` holds the failing step's label.
    """

    iterates: tuple
    residuals: tuple
    method: MethodId
    problem: str
    errors: tuple | None = None
    stop_reason: str = "max_iter"
    failure: str | None = None
    context: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.iterates:
            raise ValueError("a trace holds at least one iterate")
        if self.errors is not None and len(self.errors) != len(self.iterates):
            raise ValueError("errors and iterates differ in length")

    @property
    def final(self):
        return self.iterates[-1]

    def resolved_errors(self) -> list:
        """Errors above the working resolution (the ones an order estimate may use)."""
        if self.errors is None:
            return []
        tiny = getattr(self.context, "tiny", 0)
        out = []
        for e in self.errors:
            if e == 0 or (tiny and e <= tiny):
                break
            out.append(e)
        return out


def default_stop_tol(ctx):
    if isinstance(ctx, PrecisionContext):
        # 50 guard digits, but never looser than half the working precision
        return ctx.mp.mpf(10) ** (-max(ctx.decimal_digits - 50, ctx.decimal_digits // 2))
    return 0.0


def run(
    method: MethodId,
    params: MethodParams | None,
    problem: Problem,
    x0,
    max_iter: int = 4,
    stop_tol=None,
    root=None,
) -> IterationTrace:
    """Iterate ``method`` from ``x0`` recording every iterate.

    Stops when ``|x_{n+1} - x_n| < stop_tol``, when the residual drops below
    the working resolution, after ``max_iter`` steps, or when a step fails
    (the failure is recorded on the trace).
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    params = params or DEFAULT_PARAMS
    ctx = context_of(x0)
    x = ctx.convert(x0)
    if stop_tol is None:
        stop_tol = default_stop_tol(ctx)
    if stop_tol <= 0 and isinstance(ctx, PrecisionContext):
        raise ValueError("stop_tol must be positive")
    if root is None:
        root = problem.root_value(ctx)
    ev = problem.evaluator(ctx)
    iterates = [x]
    residuals = [abs(ev.f(x))]
    reason, failure = "max_iter", None
    for _ in range(max_iter):
        if residuals[-1] == 0 or (ctx.tiny and residuals[-1] <= ctx.tiny):
            reason = "residual"
            break
        out = step(method, ev, x, params)
        if out.status is not Status.OK:
            reason, failure = "error", f"{out.status.value}: {out.label}"
            break
        prev, x = x, out.next
        iterates.append(x)
        residuals.append(abs(ev.f(x)))
        if abs(x - prev) < stop_tol:
            reason = "step_tol"
            break
    errors = None
    if root is not None:
        errors = tuple(abs(v - root) for v in iterates)
    return IterationTrace(
        iterates=tuple(iterates),
        residuals=tuple(residuals),
        method=method,
        problem=problem.name,
        errors=errors,
        stop_reason=reason,
        failure=failure,
        context=ctx,
    )


def _log_ratio(a, b):
    if a == 0 or b == 0:
        raise UndefinedOrderError("zero error or step difference")
    return mpmath.log(abs(a)) - mpmath.log(abs(b))


def coc(trace_or_errors, root=None) -> float:
    """Computational order of convergence from the last three resolved errors.

    ``ln|e_{n+1}/e_n| / ln|e_n/e_{n-1}|``. Accepts an :class:`IterationTrace`
    or a plain sequence of errors.
    """
    if isinstance(trace_or_errors, IterationTrace):
        trace = trace_or_errors
        if root is not None:
            errors = [abs(v - root) for v in trace.iterates]
            trace = IterationTrace(
                trace.iterates, trace.residuals, trace.method, trace.problem,
                tuple(errors), trace.stop_reason, trace.failure, trace.context,
            )
        if trace.errors is None:
            raise ValueError("trace has no errors; pass the root")
        errors = trace.resolved_errors()
        if len(errors) < 3 and len(errors) < len(trace.errors):
            raise UndefinedOrderError("root reached exactly before three errors were available")
    else:
        errors = list(trace_or_errors)
    if len(errors) < 3:
        raise ValueError("COC needs at least three errors")
    e0, e1, e2 = errors[-3:]
    den = _log_ratio(e1, e0)
    if den == 0:
        raise UndefinedOrderError("consecutive errors are equal")
    return float(_log_ratio(e2, e1) / den)


def acoc(trace_or_iterates) -> float:
    """Approximated computational order of convergence from the last four iterates.

    Root-free: ``ln|(x_{n+1}-x_n)/(x_n-x_{n-1})| / ln|(x_n-x_{n-1})/(x_{n-1}-x_{n-2})|``.
    """
    xs = list(
        trace_or_iterates.iterates
        if isinstance(trace_or_iterates, IterationTrace)
        else trace_or_iterates
    )
    if len(xs) < 4:
        raise ValueError("ACOC needs at least four iterates")
    x0, x1, x2, x3 = xs[-4:]
    d1, d2, d3 = x1 - x0, x2 - x1, x3 - x2
    den = _log_ratio(d2, d1)
    if den == 0:
        raise UndefinedOrderError("consecutive step sizes are equal")
    return float(_log_ratio(d3, d2) / den)


@dataclass(frozen=True)
class CCoefficients:
    c2: object
    c3: object
    c4: object


def c_coefficients(problem: Problem, root) -> CCoefficients:
    """``c_k = f^(k)(x*) / (k! f'(x*))`` for k = 2, 3, 4."""
    from .expr import eval_jet

    ctx = context_of(root)
    jet = eval_jet(problem.expr, ctx.convert(root), 4)
    d1 = jet.coeffs[1]
    if d1 == 0 or (ctx.tiny and abs(d1) <= ctx.tiny):
        raise NotSimpleRootError(f"f'(root) vanishes for {problem.name}")
    c = [jet.coeffs[k] / d1 for k in (2, 3, 4)]
    return CCoefficients(*c)


def error_constant(c: CCoefficients):
    """Leading error-equation coefficient ``c2^2 (c2 + 5c2^2 - c3)(c2^2 - 5c2^3 - c2 c3 + c4)``."""
    c2, c3, c4 = c.c2, c.c3, c.c4
    c2sq = c2 * c2
    return c2sq * (c2 + 5 * c2sq - c3) * (c2sq - 5 * c2sq * c2 - c2 * c3 + c4)


def efficiency_index(evaluations: int, order: float) -> float:
    """Ostrowski efficiency index ``order ** (1 / evaluations)``."""
    if evaluations < 1:
        raise ValueError("evaluations must be >= 1")
    if order < 1:
        raise ValueError("order must be >= 1")
    return float(order) ** (1.0 / evaluations)
