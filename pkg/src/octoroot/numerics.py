"""Arbitrary-precision complex scalars and truncated Taylor jets.

Two scalar families are supported and share one calling convention:

* :class:`BigComplex` values bound to a :class:`PrecisionContext`
  (mpmath underneath, any number of decimal digits >= 16);
* plain Python ``complex`` values, handled by :data:`HARDWARE` (IEEE double).

Every module above this one is written against the small context API
(``convert``, ``sin``, ``cos``, ``exp``, ``ln``, ``sqrt``, ``power``, ``pi``,
``isfinite``, ``tiny``) so that the same step formulas run at 53 bits for
basin rendering and at thousands of digits for order verification.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import lru_cache
from numbers import Number
from typing import Sequence

from mpmath.ctx_mp import MPContext

MAX_JET_ORDER = 4


class NumericsError(ArithmeticError):
    """Base class for errors raised by the numerics layer."""


class ContextMismatchError(NumericsError, TypeError):
    """Two operands were created under different precision contexts."""


class SingularJetError(NumericsError, ZeroDivisionError):
    """Division by a jet whose constant term is zero."""


class DomainError(NumericsError, ValueError):
    """Branch point or pole hit at the given value."""

    def __init__(self, message: str, value=None):
        super().__init__(message)
        self.value = value


class PrecisionContext:
    """Working precision for :class:`BigComplex` values.

    Contexts are interned: ``PrecisionContext(50) is PrecisionContext(50)``.
    """

    _instances: dict[int, "PrecisionContext"] = {}

    def __new__(cls, decimal_digits: int):
        decimal_digits = int(decimal_digits)
        if decimal_digits < 16:
            raise ValueError(f"decimal_digits must be >= 16, got {decimal_digits}")
        ctx = cls._instances.get(decimal_digits)
        if ctx is None:
            ctx = super().__new__(cls)
            ctx.decimal_digits = decimal_digits
            ctx.mp = MPContext()
            ctx.mp.dps = decimal_digits
            # absolute threshold below which residuals and node gaps count as zero
            ctx.tiny = ctx.mp.mpf(10) ** (-(decimal_digits - 10))
            ctx._pi = None
            cls._instances[decimal_digits] = ctx
        return ctx

    def __repr__(self) -> str:
        return f"PrecisionContext({self.decimal_digits})"

    def __reduce__(self):
        return (PrecisionContext, (self.decimal_digits,))

    @property
    def digits(self) -> int:
        return self.decimal_digits

    # -- construction -------------------------------------------------

    def _raw(self, value):
        """Coerce ``value`` to an mpmath mpc in this context."""
        mp = self.mp
        if isinstance(value, BigComplex):
            if value.context is not self:
                raise ContextMismatchError(
                    f"operand has {value.context!r}, expected {self!r}"
                )
            return value.value
        if isinstance(value, Fraction):
            return mp.mpc(mp.mpf(value.numerator) / value.denominator)
        if isinstance(value, (int, float)):
            return mp.mpc(value)
        if isinstance(value, complex):
            return mp.mpc(value.real, value.imag)
        if isinstance(value, str):
            return mp.mpc(mp.mpmathify(value))
        if isinstance(value, tuple) and len(value) == 2:
            re, im = value
            return mp.mpc(self._raw(re).real, self._raw(im).real)
        if hasattr(value, "_mpf_") or hasattr(value, "_mpc_"):
            return mp.mpc(value)
        raise TypeError(f"cannot convert {type(value).__name__} to BigComplex")

    def convert(self, value) -> "BigComplex":
        if isinstance(value, BigComplex):
            self._raw(value)
            return value
        return BigComplex._wrap(self._raw(value), self)

    def complex(self, re, im=0) -> "BigComplex":
        mp = self.mp
        return BigComplex._wrap(mp.mpc(self._raw(re).real, self._raw(im).real), self)

    @property
    def pi(self) -> "BigComplex":
        if self._pi is None:
            self._pi = BigComplex._wrap(self.mp.mpc(+self.mp.pi), self)
        return self._pi

    # -- elementary functions ------------------------------------------

    def sin(self, z: "BigComplex") -> "BigComplex":
        return self._apply(self.mp.sin, z)

    def cos(self, z: "BigComplex") -> "BigComplex":
        return self._apply(self.mp.cos, z)

    def exp(self, z: "BigComplex") -> "BigComplex":
        return self._apply(self.mp.exp, z)

    def ln(self, z: "BigComplex") -> "BigComplex":
        v = self._raw(z)
        if v == 0:
            raise DomainError("ln of zero", z)
        return self._finish(self.mp.log(v), v)

    def sqrt(self, z: "BigComplex") -> "BigComplex":
        return self._apply(self.mp.sqrt, z)

    def power(self, base: "BigComplex", exponent) -> "BigComplex":
        """Principal-branch ``base ** exponent``."""
        b = self._raw(base)
        e = exponent if isinstance(exponent, int) else self._raw(exponent)
        if b == 0:
            if isinstance(e, int):
                if e < 0:
                    raise DomainError("zero raised to a negative power", base)
            elif e.real <= 0:
                raise DomainError("zero raised to a non-positive power", base)
        return self._finish(self.mp.power(b, e), b)

    def isfinite(self, z) -> bool:
        return self.mp.isfinite(self._raw(z))

    def abs(self, z):
        return abs(self._raw(z))

    def _apply(self, fn, z):
        v = self._raw(z)
        return self._finish(fn(v), v)

    def _finish(self, result, *operands):
        if not all(self.mp.isfinite(o) for o in operands) and self.mp.isfinite(result):
            result = self.mp.mpc(self.mp.nan, self.mp.nan)
        return BigComplex._wrap(self.mp.mpc(result), self)


class BigComplex:
    """Arbitrary-precision complex number tied to a :class:`PrecisionContext`.

    Operands from different contexts raise :class:`ContextMismatchError`;
    Python ints, floats, complex numbers and Fractions are converted at the
    receiver's precision. Division by an exact zero raises
    ``ZeroDivisionError``. Non-finite values propagate: any operation with a
    non-finite operand yields a non-finite result.
    """

    __slots__ = ("value", "context")

    def __init__(self, re=0, im=0, context: PrecisionContext | None = None):
        if context is None:
            raise TypeError("BigComplex requires a PrecisionContext")
        self.context = context
        self.value = context.complex(re, im).value

    @classmethod
    def _wrap(cls, value, context):
        obj = object.__new__(cls)
        obj.value = value
        obj.context = context
        return obj

    @property
    def re(self):
        return self.value.real

    @property
    def im(self):
        return self.value.imag

    @property
    def is_finite(self) -> bool:
        return self.context.mp.isfinite(self.value)

    def conjugate(self) -> "BigComplex":
        return BigComplex._wrap(self.value.conjugate(), self.context)

    def __complex__(self) -> complex:
        return complex(self.value)

    def __abs__(self):
        return abs(self.value)

    def __repr__(self) -> str:
        return f"BigComplex({self.context.mp.nstr(self.value, 17)}, digits={self.context.decimal_digits})"

    def __hash__(self):
        return hash((self.value, self.context.decimal_digits))

    def __eq__(self, other):
        if isinstance(other, BigComplex):
            return self.context is other.context and self.value == other.value
        if isinstance(other, (Number, Fraction)):
            return self.value == self.context._raw(other)
        return NotImplemented

    def _binary(self, other, op, reflected=False):
        ctx = self.context
        if isinstance(other, BigComplex):
            if other.context is not ctx:
                raise ContextMismatchError(
                    f"cannot combine {ctx!r} with {other.context!r}"
                )
            o = other.value
        elif isinstance(other, (int, float, complex, Fraction)):
            o = ctx._raw(other)
        else:
            return NotImplemented
        a, b = (o, self.value) if reflected else (self.value, o)
        if op is _DIV and b == 0:
            raise ZeroDivisionError("BigComplex division by zero")
        result = op(a, b)
        if not (ctx.mp.isfinite(a) and ctx.mp.isfinite(b)) and ctx.mp.isfinite(result):
            result = ctx.mp.mpc(ctx.mp.nan, ctx.mp.nan)
        return BigComplex._wrap(result, ctx)

    def __add__(self, other):
        return self._binary(other, _ADD)

    def __radd__(self, other):
        return self._binary(other, _ADD, True)

    def __sub__(self, other):
        return self._binary(other, _SUB)

    def __rsub__(self, other):
        return self._binary(other, _SUB, True)

    def __mul__(self, other):
        return self._binary(other, _MUL)

    def __rmul__(self, other):
        return self._binary(other, _MUL, True)

    def __truediv__(self, other):
        return self._binary(other, _DIV)

    def __rtruediv__(self, other):
        return self._binary(other, _DIV, True)

    def __neg__(self):
        return BigComplex._wrap(-self.value, self.context)

    def __pos__(self):
        return self

    def __pow__(self, exponent):
        if isinstance(exponent, int):
            if exponent < 0 and self.value == 0:
                raise ZeroDivisionError("BigComplex zero to a negative power")
            return BigComplex._wrap(self.value ** exponent, self.context)
        return self.context.power(self, exponent)


def _ADD(a, b):
    return a + b


def _SUB(a, b):
    return a - b


def _MUL(a, b):
    return a * b


def _DIV(a, b):
    return a / b


class HardwareContext:
    """IEEE double-precision complex arithmetic on plain ``complex`` values.

    Zero thresholds are exact: a residual or node gap counts as zero only
    when it is exactly zero.
    """

    decimal_digits = 15
    digits = 15
    tiny = 0.0
    pi = complex(math.pi)

    def __repr__(self) -> str:
        return "HARDWARE"

    def convert(self, value) -> complex:
        if isinstance(value, BigComplex):
            return complex(value)
        if isinstance(value, tuple):
            return complex(float(value[0]), float(value[1]))
        if isinstance(value, Fraction):
            return complex(float(value))
        return complex(value)

    def complex(self, re, im=0) -> complex:
        return complex(float(re), float(im))

    def sin(self, z):
        try:
            return cmath.sin(z)
        except OverflowError:
            return complex(math.inf, math.inf)

    def cos(self, z):
        try:
            return cmath.cos(z)
        except OverflowError:
            return complex(math.inf, math.inf)

    def exp(self, z):
        try:
            return cmath.exp(z)
        except OverflowError:
            return complex(math.inf, math.inf)

    def ln(self, z):
        if z == 0:
            raise DomainError("ln of zero", z)
        return cmath.log(z)

    def sqrt(self, z):
        return cmath.sqrt(z)

    def power(self, base, exponent):
        if base == 0:
            e = exponent.real if isinstance(exponent, complex) else exponent
            if e < 0 or (not isinstance(exponent, int) and e == 0):
                raise DomainError("zero raised to a non-positive power", base)
        try:
            return complex(base) ** exponent
        except OverflowError:
            return complex(math.inf, math.inf)

    def isfinite(self, z) -> bool:
        return cmath.isfinite(z)

    def abs(self, z):
        return abs(z)


HARDWARE = HardwareContext()


def context_of(*values):
    """Return the shared context of ``values`` (BigComplex, Jet or complex)."""
    ctx = None
    for v in values:
        if isinstance(v, Jet):
            c = v.context
        elif isinstance(v, BigComplex):
            c = v.context
        elif isinstance(v, (int, float, complex, Fraction)):
            continue
        else:
            raise TypeError(f"unsupported scalar type {type(v).__name__}")
        if ctx is None:
            ctx = c
        elif c is not ctx:
            raise ContextMismatchError(f"cannot combine {ctx!r} with {c!r}")
    return HARDWARE if ctx is None else ctx


@lru_cache(maxsize=None)
def _factorial(n: int) -> int:
    return math.factorial(n)


class Jet:
    """Truncated Taylor series ``sum coeffs[k] * h**k`` in a formal increment ``h``.

    A jet seeded at ``x`` (``Jet.seed(x)``) and pushed through an analytic
    expression carries ``f^(k)(x) / k!`` in ``coeffs[k]``.
    """

    __slots__ = ("coeffs", "context")

    def __init__(self, coeffs: Sequence, context=None):
        if context is None:
            context = context_of(*coeffs)
        if not 1 <= len(coeffs) <= MAX_JET_ORDER + 1:
            raise ValueError(f"jets carry 1..{MAX_JET_ORDER + 1} coefficients")
        self.coeffs = tuple(context.convert(c) for c in coeffs)
        self.context = context

    @classmethod
    def _make(cls, coeffs, context):
        obj = object.__new__(cls)
        obj.coeffs = tuple(coeffs)
        obj.context = context
        return obj

    @classmethod
    def seed(cls, x, order: int = MAX_JET_ORDER) -> "Jet":
        ctx = context_of(x)
        x = ctx.convert(x)
        coeffs = [x] + [ctx.convert(1)] + [ctx.convert(0)] * (order - 1)
        return cls._make(coeffs[: order + 1], ctx)

    @classmethod
    def constant(cls, c, order: int, context) -> "Jet":
        zero = context.convert(0)
        return cls._make([context.convert(c)] + [zero] * order, context)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def value(self):
        return self.coeffs[0]

    @property
    def is_finite(self) -> bool:
        return all(self.context.isfinite(c) for c in self.coeffs)

    def derivatives(self) -> list:
        """Coefficients rescaled by ``k!``: ``[f, f', f'', ...]``."""
        return [c * _factorial(k) for k, c in enumerate(self.coeffs)]

    def __repr__(self) -> str:
        return f"Jet({list(self.coeffs)!r})"

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return self.context is other.context and self.coeffs == other.coeffs

    __hash__ = None

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.context is not self.context:
                raise ContextMismatchError(
                    f"cannot combine {self.context!r} with {other.context!r}"
                )
            if other.order != self.order:
                raise ValueError("jets of different order")
            return other
        return Jet.constant(other, self.order, self.context)

    def __add__(self, other):
        return jet_arith("add", self, self._lift(other))

    def __radd__(self, other):
        return jet_arith("add", self._lift(other), self)

    def __sub__(self, other):
        return jet_arith("sub", self, self._lift(other))

    def __rsub__(self, other):
        return jet_arith("sub", self._lift(other), self)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, Fraction, BigComplex)):
            c = self.context.convert(other)
            return Jet._make([a * c for a in self.coeffs], self.context)
        return jet_arith("mul", self, self._lift(other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        return jet_arith("div", self, self._lift(other))

    def __rtruediv__(self, other):
        return jet_arith("div", self._lift(other), self)

    def __neg__(self):
        return Jet._make([-a for a in self.coeffs], self.context)

    def __pow__(self, exponent):
        if isinstance(exponent, int):
            return jet_elementary("pow_int", self, exponent)
        return jet_elementary("pow_real", self, exponent)


def _check_pair(a: Jet, b: Jet):
    if a.context is not b.context:
        raise ContextMismatchError(f"cannot combine {a.context!r} with {b.context!r}")
    if a.order != b.order:
        raise ValueError("jets of different order")


def _mul_coeffs(a, b, n):
    return [sum((a[i] * b[k - i] for i in range(1, k + 1)), a[0] * b[k]) for k in range(n)]


def jet_arith(op: str, a: Jet, b: Jet) -> Jet:
    """Truncated Taylor arithmetic: ``op`` is one of add, sub, mul, div."""
    _check_pair(a, b)
    n = len(a.coeffs)
    x, y = a.coeffs, b.coeffs
    if op == "add":
        out = [p + q for p, q in zip(x, y)]
    elif op == "sub":
        out = [p - q for p, q in zip(x, y)]
    elif op == "mul":
        out = _mul_coeffs(x, y, n)
    elif op == "div":
        if y[0] == 0:
            raise SingularJetError("division by a jet with zero constant term")
        out = []
        for k in range(n):
            acc = x[k]
            for j in range(1, k + 1):
                acc = acc - y[j] * out[k - j]
            out.append(acc / y[0])
    else:
        raise ValueError(f"unknown jet operation {op!r}")
    return Jet._make(out, a.context)


def _compose(a: Jet, taylor) -> Jet:
    """Evaluate ``sum taylor[k] * (a - a0)**k`` truncated at ``a.order``.

    ``taylor[k]`` must already be ``g^(k)(a0) / k!``.
    """
    n = len(a.coeffs)
    ctx = a.context
    zero = ctx.convert(0)
    h = [zero] + list(a.coeffs[1:])
    out = [taylor[0]] + [zero] * (n - 1)
    hk = h
    for k in range(1, n):
        for i in range(n):
            out[i] = out[i] + taylor[k] * hk[i]
        hk = _mul_coeffs(hk, h, n)
    return Jet._make(out, ctx)


def jet_elementary(fn: str, a: Jet, exponent=None) -> Jet:
    """Compose an elementary function with a jet.

    ``fn`` is one of sin, cos, exp, ln, sqrt, pow_int, pow_real; the last two
    take ``exponent``. Principal branches throughout.
    """
    ctx = a.context
    n = len(a.coeffs)
    x0 = a.coeffs[0]
    if not ctx.isfinite(x0) or not a.is_finite:
        nan = ctx.convert(complex(math.nan, math.nan))
        return Jet._make([nan] * n, ctx)
    if fn == "pow_int":
        if not isinstance(exponent, int):
            raise TypeError("pow_int needs an integer exponent")
        return _pow_int(a, exponent)
    if fn in ("sin", "cos"):
        s, c = ctx.sin(x0), ctx.cos(x0)
        cycle = [s, c, -s, -c] if fn == "sin" else [c, -s, -c, s]
        derivs = [cycle[k % 4] for k in range(n)]
    elif fn == "exp":
        e = ctx.exp(x0)
        derivs = [e] * n
    elif fn == "ln":
        if x0 == 0:
            raise DomainError("ln at zero", x0)
        derivs = [ctx.ln(x0)]
        inv = 1 / x0
        p = inv
        for k in range(1, n):
            # d^k/dx^k ln x = (-1)^(k-1) (k-1)! / x^k
            derivs.append(p * ((-1) ** (k - 1) * _factorial(k - 1)))
            p = p * inv
    elif fn in ("sqrt", "pow_real"):
        r = Fraction(1, 2) if fn == "sqrt" else exponent
        if x0 == 0:
            raise DomainError(f"{fn} at zero", x0)
        if isinstance(r, Fraction):
            r_val = ctx.convert(r)
        else:
            r_val = ctx.convert(r)
        base = ctx.sqrt(x0) if fn == "sqrt" else ctx.power(x0, r_val)
        derivs = [base]
        inv = 1 / x0
        coef = ctx.convert(1)
        term = base
        for k in range(1, n):
            coef = coef * (r_val - (k - 1))
            term = term * inv
            derivs.append(coef * term)
    else:
        raise ValueError(f"unknown elementary function {fn!r}")
    taylor = [d / _factorial(k) if k > 1 else d for k, d in enumerate(derivs)]
    return _compose(a, taylor)


def _pow_int(a: Jet, n: int) -> Jet:
    if n < 0:
        return jet_arith("div", Jet.constant(1, a.order, a.context), _pow_int(a, -n))
    result = Jet.constant(1, a.order, a.context)
    base = a
    while n:
        if n & 1:
            result = jet_arith("mul", result, base)
        n >>= 1
        if n:
            base = jet_arith("mul", base, base)
    return result
