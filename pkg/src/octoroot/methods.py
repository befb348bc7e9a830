"""One iteration of each eighth-order three-point method.

All steps are generic over the scalar family: they work on ``complex`` at
hardware precision and on :class:`~octoroot.numerics.BigComplex` at any
working precision. Each returns a :class:`StepOutcome`; a vanishing
denominator is reported as ``Status.SINGULAR`` with a label naming it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .numerics import DomainError, NumericsError


class MethodId(enum.Enum):
    M1 = 1
    M2 = 2
    M3 = 3
    M4 = 4
    M5 = 5
    M6 = 6

    @classmethod
    def parse(cls, name: str) -> "MethodId":
        key = str(name).strip().upper()
        if key.isdigit():
            key = "M" + key
        try:
            return cls[key]
        except KeyError:
            raise ValueError(
                f"unknown method {name!r}; expected one of m1..m6"
            ) from None

    @property
    def label(self) -> str:
        return self.name.lower()


ALL_METHODS = tuple(MethodId)


@dataclass(frozen=True)
class MethodParams:
    """Free parameters of the reference methods (defaults used throughout)."""

    A: float = 0.0
    alpha_m4: float = 1.0
    beta_m6: float = 0.0
    alpha_m6: float = 1.0
    beta_m2: float = 0.0
    gamma_m2: float = 0.0

    def as_tuple(self) -> tuple:
        return (self.A, self.alpha_m4, self.beta_m6, self.alpha_m6, self.beta_m2, self.gamma_m2)


DEFAULT_PARAMS = MethodParams()


class Status(enum.Enum):
    OK = "ok"
    SINGULAR = "singular"
    NONFINITE = "nonfinite"


@dataclass(frozen=True)
class StepOutcome:
    next: object
    y: object = None
    z: object = None
    status: Status = Status.OK
    label: str = ""

    @property
    def ok(self) -> bool:
        return self.status is Status.OK


class SingularStep(NumericsError):
    def __init__(self, label: str):
        super().__init__(label)
        self.label = label


class NearSingularError(SingularStep):
    """Two distinct divided-difference nodes are closer than the working resolution."""


@dataclass
class _Done(Exception):
    value: object
    y: object = None
    z: object = None


def _nz(value, label: str):
    if value == 0:
        raise SingularStep(f"{label} = 0")
    return value


def _is_zero(ctx, v) -> bool:
    if v == 0:
        return True
    return ctx.tiny != 0 and abs(v) <= ctx.tiny


def _gap(ctx, a, b, label):
    d = a - b
    if d == 0 or (ctx.tiny != 0 and abs(d) <= ctx.tiny):
        raise NearSingularError(f"{label} = 0")
    return d


# ---------------------------------------------------------------------------
# Divided differences


def divided_difference(f, nodes: Sequence, *, df=None, values=None, ctx=None):
    """Newton divided difference ``f[t0, ..., tk]`` for 2 to 4 nodes.

    Adjacent equal nodes are confluent and use ``f[t, t] = f'(t)``, taken
    from ``df`` (callable) or from an ``Evaluator``-like ``f`` with ``fdf``.
    ``values`` may supply precomputed ``f(t_i)``. Distinct nodes closer than
    the context's ``tiny`` raise :class:`NearSingularError`.
    """
    from .numerics import context_of

    nodes = list(nodes)
    if not 2 <= len(nodes) <= 4:
        raise ValueError("divided_difference needs 2 to 4 nodes")
    if ctx is None:
        ctx = context_of(*nodes)
    for a, b, c in zip(nodes, nodes[1:], nodes[2:]):
        if a == b == c:
            raise ValueError("nodes may repeat at most twice")
    for i, a in enumerate(nodes):
        for b in nodes[i + 2:]:
            if a == b:
                raise ValueError("repeated nodes must be adjacent")
    evalf = f.f if hasattr(f, "f") else f
    if df is None and hasattr(f, "df"):
        df = f.df
    if values is None:
        values = [evalf(t) for t in nodes]

    def first(i):
        a, b = nodes[i], nodes[i + 1]
        if a == b:
            if df is None:
                raise ValueError("confluent node needs a derivative")
            return df(a)
        return (values[i + 1] - values[i]) / _gap(ctx, b, a, f"t{i + 1} - t{i}")

    row = [first(i) for i in range(len(nodes) - 1)]
    for j in range(2, len(nodes)):
        row = [
            (row[i + 1] - row[i]) / _gap(ctx, nodes[i + j], nodes[i], f"t{i + j} - t{i}")
            for i in range(len(row) - 1)
        ]
    return row[0]


# ---------------------------------------------------------------------------
# Steps


def _common_start(ev, x):
    fx, dfx = ev.fdf(x)
    if _is_zero(ev.ctx, fx):
        raise _Done(x)
    _nz(dfx, "f'(x)")
    return fx, dfx


def _eval_or_done(ev, point, y=None, z=None):
    fp = ev.f(point)
    if _is_zero(ev.ctx, fp):
        raise _Done(point, y, z)
    return fp


def _m1(ev, x, params):
    ctx = ev.ctx
    fx, dfx = _common_start(ev, x)
    u = fx / dfx
    y = x - u
    fy = _eval_or_done(ev, y, y)
    t = fy / fx
    w = 1 / _nz(1 + u, "1 + u")
    z = x - u * (1 + t + (1 + w) * (t * t))
    fz = _eval_or_done(ev, z, y, z)
    # divided-difference table over the nodes (z, y, x, x)
    f_zy = (fz - fy) / _gap(ctx, z, y, "z - y")
    f_yx = (fy - fx) / _gap(ctx, y, x, "y - x")
    xz = _gap(ctx, x, z, "x - z")
    f_zyx = (f_yx - f_zy) / xz
    f_yxx = (dfx - f_yx) / (x - y)
    f_zyxx = (f_yxx - f_zyx) / xz
    zy = z - y
    D = f_zy + zy * f_zyx + zy * (z - x) * f_zyxx
    return z - fz / _nz(D, "D"), y, z


def _m2(ev, x, params):
    beta, gamma = params.beta_m2, params.gamma_m2
    fx, dfx = _common_start(ev, x)
    y = x - fx / dfx
    fy = _eval_or_done(ev, y, y)
    t = fy / fx
    one_t = _nz(1 - t, "1 - f(y)/f(x)")
    z = y - fy / dfx / (one_t * one_t)
    fz = _eval_or_done(ev, z, y, z)
    s = fz / fx
    u = fz / fy
    H = -beta - gamma + t + t * t / 2 - t * t * t / 2
    J = beta + s / 2
    P = gamma + u / 2
    den = _nz(1 - H - J - P, "1 - H - J - P")
    return z - fz / dfx / (den * den), y, z


def _m3(ev, x, params):
    A = params.A
    fx, dfx = _common_start(ev, x)
    y = x - fx / dfx
    fy = _eval_or_done(ev, y, y)
    z = y - (fx + A * fy) / _nz(fx + (A - 2) * fy, "f(x) + (A-2) f(y)") * (fy / dfx)
    fz = _eval_or_done(ev, z, y, z)
    Fy = _nz(fy - fx, "F_y")
    Fz = _nz(fz - fx, "F_z")
    inv_d = 1 / dfx
    zeta_y = ((y - x) / Fy - inv_d) / Fy
    zeta_z = ((z - x) / Fz - inv_d) / Fz
    delta2 = -(zeta_y - zeta_z) / _nz(Fy - Fz, "F_y - F_z")
    delta1 = zeta_y + delta2 * Fy
    fx2 = fx * fx
    return y + delta1 * fx2 + delta2 * (fx2 * fx), y, z


def _m4(ev, x, params):
    ctx = ev.ctx
    alpha = params.alpha_m4
    fx, dfx = _common_start(ev, x)
    y = x - fx / dfx
    fy = _eval_or_done(ev, y, y)
    z = y - fy / dfx * (fx / _nz(fx - 2 * fy, "f(x) - 2 f(y)"))
    fz = _eval_or_done(ev, z, y, z)
    t = fz / fx
    W = 1 + t / _nz(1 + alpha * t, "1 + alpha t")
    f_xy = (fx - fy) / _gap(ctx, x, y, "x - y")
    f_xz = (fx - fz) / _gap(ctx, x, z, "x - z")
    f_yz = (fy - fz) / _gap(ctx, y, z, "y - z")
    return z - f_xy * fz / _nz(f_xz * f_yz, "f[x,z] f[y,z]") * W, y, z


def _m5(ev, x, params):
    fx, dfx = _common_start(ev, x)
    u = fx / dfx
    u2 = u * u
    y = x - u * (1 + u2 * u2 * u)
    fy = _eval_or_done(ev, y, y)
    t = fy / fx
    one_t = _nz(1 - t, "1 - f(y)/f(x)")
    z = y - fy / dfx / (one_t * one_t)
    fz = _eval_or_done(ev, z, y, z)
    t2 = t * t
    num = 1 + t2 + 5 * (t2 * t2) + fz / fy
    den = _nz(1 - t - fz / fx, "1 - f(y)/f(x) - f(z)/f(x)")
    return z - fz / dfx * (num / (den * den)), y, z


def _m6(ev, x, params):
    beta, alpha = params.beta_m6, params.alpha_m6
    fx, dfx = _common_start(ev, x)
    y = x - fx / dfx
    fy = _eval_or_done(ev, y, y)
    z = y - fy / dfx * ((fx + beta * fy) / _nz(fx + (beta - 2) * fy, "f(x) + (beta-2) f(y)"))
    fz = _eval_or_done(ev, z, y, z)
    t = fy / fx
    s = fz / fy
    u = fz / fx
    phi = 1 + t / _nz(1 - 2 * t, "1 - 2t")
    phi = phi * phi
    psi = s / _nz(1 - alpha * s, "1 - alpha s")
    return z - fz / dfx * (phi + psi + 4 * u), y, z


_STEPS = {
    MethodId.M1: _m1,
    MethodId.M2: _m2,
    MethodId.M3: _m3,
    MethodId.M4: _m4,
    MethodId.M5: _m5,
    MethodId.M6: _m6,
}


def step(method: MethodId, ev, x, params: MethodParams = DEFAULT_PARAMS) -> StepOutcome:
    """One iteration of ``method`` from ``x`` using evaluator ``ev``.

    When ``f`` vanishes (to the context's resolution) at ``x`` or at an
    intermediate point, that point is returned as the next iterate.
    """
    ctx = ev.ctx
    try:
        nxt, y, z = _STEPS[method](ev, x, params)
    except _Done as done:
        return StepOutcome(done.value, done.y, done.z)
    except SingularStep as exc:
        return StepOutcome(x, status=Status.SINGULAR, label=exc.label)
    except ZeroDivisionError as exc:
        return StepOutcome(x, status=Status.SINGULAR, label=str(exc) or "division by zero")
    except (DomainError, OverflowError) as exc:
        return StepOutcome(x, status=Status.NONFINITE, label=str(exc))
    if not ctx.isfinite(nxt):
        return StepOutcome(nxt, y, z, Status.NONFINITE, "non-finite iterate")
    return StepOutcome(nxt, y, z)


def step_m1(ev, x) -> StepOutcome:
    return step(MethodId.M1, ev, x)


def step_reference(method: MethodId, params: MethodParams, ev, x) -> StepOutcome:
    if method is MethodId.M1:
        raise ValueError("step_reference covers M2..M6; use step_m1 for M1")
    return step(method, ev, x, params)
