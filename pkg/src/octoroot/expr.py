"""Expression language for target functions.

Grammar (whitespace-insensitive)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := number | 'i' | 'pi' | 'x' | func '(' expr ')' | '(' expr ')'
    func   := 'sin' | 'cos' | 'exp' | 'ln' | 'sqrt'

``^`` is right-associative and binds tighter than unary minus, so
``-x^2`` is ``-(x^2)`` and ``2^-1`` is ``2^(-1)``. A number may carry an
``i`` suffix (``2i``) to denote an imaginary literal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Union

from .numerics import (
    HARDWARE,
    DomainError,
    Jet,
    MAX_JET_ORDER,
    PrecisionContext,
    context_of,
    jet_elementary,
)

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    """Syntax error at byte ``offset`` of the source string."""

    def __init__(self, message: str, offset: int, expected=()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f" (expected one of: {', '.join(sorted(self.expected))})" if expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class UnknownIdentifierError(ParseError):
    pass


class EvaluationError(ExprError, DomainError):
    """Domain error during evaluation; ``pos`` is the offending node's offset."""

    def __init__(self, message: str, pos: int, value=None):
        self.pos = pos
        DomainError.__init__(self, f"{message} (node at offset {pos})", value)


class UnknownProblemError(KeyError):
    def __str__(self):
        return self.args[0]


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: Fraction
    imag: bool = False
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Pi:
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    arg: "Expr"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"
    pos: int = field(default=0, compare=False)


Expr = Union[Num, Var, Pi, Neg, BinOp, Call]


def Add(a, b):
    return BinOp("+", a, b)


def Sub(a, b):
    return BinOp("-", a, b)


def Mul(a, b):
    return BinOp("*", a, b)


def Div(a, b):
    return BinOp("/", a, b)


def Pow(a, b):
    return BinOp("^", a, b)


def lit(v) -> Num:
    return Num(Fraction(v))


X = Var()


# ---------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<imag>i(?![A-Za-z_0-9]))?"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    i = 0
    n = len(src)
    while i < n:
        if src[i].isspace():
            i += 1
            continue
        m = _TOKEN.match(src, i)
        if m is None or m.end() == i:
            raise ParseError(f"unexpected character {src[i]!r}", _byte_offset(src, i))
        start = m.start(m.lastgroup) if m.lastgroup != "imag" else m.start("num")
        if m.group("num") is not None:
            kind = "imag" if m.group("imag") else "num"
            toks.append(_Tok(kind, m.group("num"), start))
        elif m.group("name") is not None:
            toks.append(_Tok("name", m.group("name"), start))
        else:
            toks.append(_Tok(m.group("op"), m.group("op"), start))
        i = m.end()
    toks.append(_Tok("eof", "", n))
    return toks


def _byte_offset(src: str, index: int) -> int:
    return len(src[:index].encode("utf-8"))


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, tok: _Tok, expected):
        what = "end of input" if tok.kind == "eof" else f"token {tok.text!r}"
        raise ParseError(f"unexpected {what}", _byte_offset(self.src, tok.pos), expected)

    def parse(self) -> Expr:
        if not self.src.strip():
            raise ParseError("empty expression", 0, {"expression"})
        e = self.expr()
        tok = self.peek()
        if tok.kind != "eof":
            self.error(tok, {"+", "-", "*", "/", "^", "end of input"})
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek().kind in ("+", "-"):
            tok = self.take()
            left = BinOp(tok.kind, left, self.term(), tok.pos)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek().kind in ("*", "/"):
            tok = self.take()
            left = BinOp(tok.kind, left, self.unary(), tok.pos)
        return left

    def unary(self) -> Expr:
        if self.peek().kind == "-":
            tok = self.take()
            return Neg(self.unary(), tok.pos)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek().kind == "^":
            tok = self.take()
            return BinOp("^", base, self.unary(), tok.pos)
        return base

    def atom(self) -> Expr:
        tok = self.take()
        if tok.kind in ("num", "imag"):
            return Num(Fraction(tok.text), tok.kind == "imag", tok.pos)
        if tok.kind == "(":
            e = self.expr()
            close = self.take()
            if close.kind != ")":
                self.i -= 1
                self.error(close, {")", "+", "-", "*", "/", "^"})
            return e
        if tok.kind == "name":
            name = tok.text
            if name == "x":
                return Var(tok.pos)
            if name == "i":
                return Num(Fraction(1), True, tok.pos)
            if name == "pi":
                return Pi(tok.pos)
            if name in FUNCTIONS:
                if self.peek().kind != "(":
                    self.error(self.peek(), {"("})
                self.take()
                arg = self.expr()
                close = self.take()
                if close.kind != ")":
                    self.i -= 1
                    self.error(close, {")"})
                return Call(name, arg, tok.pos)
            raise UnknownIdentifierError(
                f"unknown identifier {name!r}",
                _byte_offset(self.src, tok.pos),
                {"x", "i", "pi", *FUNCTIONS},
            )
        self.i -= 1
        self.error(tok, {"number", "x", "i", "pi", "(", "-", *FUNCTIONS})


def parse(src: str) -> Expr:
    """Parse ``src`` into an expression tree."""
    return _Parser(src).parse()


# ---------------------------------------------------------------------------
# Printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _num_text(n: Num) -> str:
    v = n.value
    if v.denominator == 1:
        s = str(v.numerator)
    else:
        # exact decimal when possible, otherwise a quotient of integers
        d = v.denominator
        while d % 2 == 0:
            d //= 2
        while d % 5 == 0:
            d //= 5
        if d == 1:
            k = 0
            while (v * 10**k).denominator != 1:
                k += 1
            digits = str(abs(v.numerator * 10**k // v.denominator)).rjust(k + 1, "0")
            s = f"{digits[:-k]}.{digits[-k:]}"
        else:
            s = f"({v.numerator}/{v.denominator})"
            return s + ("*i" if n.imag else "")
    return s + ("i" if n.imag else "")


def to_source(e: Expr) -> str:
    """Render ``e`` so that ``parse(to_source(e)) == e``."""
    return _show(e, 0)


def _show(e: Expr, ctx_prec: int) -> str:
    # precedence levels: 1 additive, 2 multiplicative, 3 unary minus, 4 power, 5 atom
    if isinstance(e, Num):
        s = _num_text(e)
        prec = 5 if not s.startswith("(") else 2
    elif isinstance(e, Var):
        s, prec = "x", 5
    elif isinstance(e, Pi):
        s, prec = "pi", 5
    elif isinstance(e, Call):
        s, prec = f"{e.func}({_show(e.arg, 0)})", 5
    elif isinstance(e, Neg):
        s, prec = "-" + _show(e.arg, 3), 3
    elif e.op == "^":
        s, prec = f"{_show(e.left, 5)}^{_show(e.right, 3)}", 4
    else:
        p = _PREC[e.op]
        s, prec = f"{_show(e.left, p)}{e.op}{_show(e.right, p + 1)}", p
    return f"({s})" if prec < ctx_prec else s


# ---------------------------------------------------------------------------
# Evaluation


def _int_exponent(e: Expr):
    if isinstance(e, Num) and not e.imag and e.value.denominator == 1:
        return e.value.numerator
    if isinstance(e, Neg):
        k = _int_exponent(e.arg)
        return None if k is None else -k
    return None


def _has_var(e: Expr) -> bool:
    if isinstance(e, Var):
        return True
    if isinstance(e, (Num, Pi)):
        return False
    if isinstance(e, (Neg, Call)):
        return _has_var(e.arg)
    return _has_var(e.left) or _has_var(e.right)


def _is_zero(v) -> bool:
    if isinstance(v, Jet):
        return v.coeffs[0] == 0
    return v == 0


class _Algebra:
    """Scalar algebra: values are BigComplex or complex."""

    def __init__(self, ctx):
        self.ctx = ctx

    def const(self, c):
        return self.ctx.convert(c)

    def call(self, fn: str, v):
        return getattr(self.ctx, fn)(v)

    def pow_int(self, v, k: int):
        if k < 0 and v == 0:
            raise DomainError("zero to a negative power", v)
        return v**k

    def pow_const(self, v, c):
        return self.ctx.power(v, c)


class _JetAlgebra(_Algebra):
    def __init__(self, ctx, order):
        super().__init__(ctx)
        self.order = order

    def const(self, c):
        return Jet.constant(c, self.order, self.ctx)

    def call(self, fn: str, v):
        return jet_elementary(fn, v)

    def pow_int(self, v, k: int):
        return jet_elementary("pow_int", v, k)

    def pow_const(self, v, c):
        return jet_elementary("pow_real", v, c)


def _evaluate(e: Expr, x, alg: _Algebra):
    ctx = alg.ctx

    def ev(node):
        if isinstance(node, Var):
            return x
        if isinstance(node, Num):
            v = node.value
            return alg.const((0, v) if node.imag else v)
        if isinstance(node, Pi):
            return alg.const(ctx.pi)
        if isinstance(node, Neg):
            return -ev(node.arg)
        if isinstance(node, Call):
            arg = ev(node.arg)
            try:
                return alg.call(node.func, arg)
            except DomainError as exc:
                raise EvaluationError(str(exc), node.pos, arg) from None
        op = node.op
        if op == "^":
            base = ev(node.left)
            k = _int_exponent(node.right)
            try:
                if k is not None:
                    return alg.pow_int(base, k)
                if not _has_var(node.right):
                    c = _evaluate(node.right, ctx.convert(0), _Algebra(ctx))
                    return alg.pow_const(base, c)
                expo = ev(node.right)
                return alg.call("exp", expo * alg.call("ln", base))
            except (DomainError, ZeroDivisionError) as exc:
                raise EvaluationError(str(exc), node.pos, base) from None
        a = ev(node.left)
        b = ev(node.right)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if _is_zero(b):
            raise EvaluationError("division by zero", node.pos, b)
        return a / b

    return ev(e)


def eval_value(e: Expr, x):
    """Value of ``e`` at ``x`` (BigComplex or complex) at ``x``'s precision."""
    ctx = context_of(x)
    return _evaluate(e, ctx.convert(x), _Algebra(ctx))


def eval_jet(e: Expr, x, order: int = MAX_JET_ORDER) -> Jet:
    ctx = context_of(x)
    return _evaluate(e, Jet.seed(ctx.convert(x), order), _JetAlgebra(ctx, order))


def eval_derivatives(e: Expr, x, order: int = 1) -> list:
    """``[f(x), f'(x), ..., f^(order)(x)]`` by jet propagation."""
    if not 0 <= order <= MAX_JET_ORDER:
        raise ValueError(f"order must be in 0..{MAX_JET_ORDER}")
    if order == 0:
        return [eval_value(e, x)]
    return eval_jet(e, x, order).derivatives()


# ---------------------------------------------------------------------------
# Polynomials

GaussQ = tuple  # (Fraction re, Fraction im)


def _gq(re=0, im=0) -> GaussQ:
    return (Fraction(re), Fraction(im))


def _gadd(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _gmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _ginv(a):
    n = a[0] * a[0] + a[1] * a[1]
    return (a[0] / n, -a[1] / n)


def _padd(p, q):
    n = max(len(p), len(q))
    p = p + [_gq()] * (n - len(p))
    q = q + [_gq()] * (n - len(q))
    return [_gadd(a, b) for a, b in zip(p, q)]


def _pmul(p, q):
    out = [_gq()] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] = _gadd(out[i + j], _gmul(a, b))
    return out


def _pneg(p):
    return [(-a[0], -a[1]) for a in p]


def as_polynomial(e: Expr):
    """Exact Gaussian-rational coefficients, lowest degree first, or None.

    Returns None when ``e`` is not a polynomial in ``x`` with exactly
    representable coefficients (``pi`` and function calls disqualify it).
    """

    def go(node):
        if isinstance(node, Var):
            return [_gq(), _gq(1)]
        if isinstance(node, Num):
            return [_gq(0, node.value) if node.imag else _gq(node.value)]
        if isinstance(node, (Pi, Call)):
            return None
        if isinstance(node, Neg):
            p = go(node.arg)
            return None if p is None else _pneg(p)
        a = go(node.left)
        if a is None:
            return None
        if node.op == "^":
            k = _int_exponent(node.right)
            if k is None or k < 0:
                return None
            out = [_gq(1)]
            for _ in range(k):
                out = _pmul(out, a)
            return out
        b = go(node.right)
        if b is None:
            return None
        if node.op == "+":
            return _padd(a, b)
        if node.op == "-":
            return _padd(a, _pneg(b))
        if node.op == "*":
            return _pmul(a, b)
        # division only by a nonzero constant
        if len(_trim(b)) != 1 or _trim(b)[0] == _gq():
            return None
        inv = _ginv(_trim(b)[0])
        return [_gmul(c, inv) for c in a]

    p = go(e)
    return None if p is None else _trim(p)


def _trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == _gq():
        p.pop()
    return p


# ---------------------------------------------------------------------------
# Evaluators and problems


class Evaluator:
    """``f`` and ``f'`` of a problem at a fixed context."""

    def __init__(self, expr: Expr, ctx, poly=None):
        self.expr = expr
        self.ctx = ctx
        self._poly = None
        if poly is not None:
            # Horner, highest degree first
            self._poly = [ctx.convert(c) for c in reversed(poly)]

    def f(self, x):
        if self._poly is not None:
            acc = self._poly[0]
            for c in self._poly[1:]:
                acc = acc * x + c
            return acc
        return _evaluate(self.expr, x, _Algebra(self.ctx))

    def fdf(self, x):
        if self._poly is not None:
            p = self._poly[0]
            dp = self.ctx.convert(0)
            for c in self._poly[1:]:
                dp = dp * x + p
                p = p * x + c
            return p, dp
        j = _evaluate(self.expr, Jet.seed(x, 1), _JetAlgebra(self.ctx, 1))
        return j.coeffs[0], j.coeffs[1]

    def df(self, x):
        return self.fdf(x)[1]


@dataclass(frozen=True)
class Problem:
    """Target function with optional known roots and starting guess.

    Roots and guesses are constant expressions so they can be materialised
    at any precision via :meth:`root_values` and :meth:`guess_value`.
    """

    name: str
    expr: Expr
    known_root: Expr | None = None
    initial_guess: Expr | None = None
    known_roots: tuple = ()
    real_only: bool = False

    @classmethod
    def from_strings(cls, name, src, root=None, guess=None, roots=()):
        return cls(
            name=name,
            expr=parse(src),
            known_root=parse(root) if root is not None else None,
            initial_guess=parse(guess) if guess is not None else None,
            known_roots=tuple(parse(r) for r in roots),
        )

    @cached_property
    def polynomial(self):
        return as_polynomial(self.expr)

    @property
    def source(self) -> str:
        return to_source(self.expr)

    def evaluator(self, ctx=HARDWARE) -> Evaluator:
        return Evaluator(self.expr, ctx, self.polynomial)

    def root_value(self, ctx=HARDWARE):
        if self.known_root is None:
            return None
        return constant_value(self.known_root, ctx)

    def root_values(self, ctx=HARDWARE) -> list:
        roots = self.known_roots
        if not roots and self.known_root is not None:
            roots = (self.known_root,)
        return [constant_value(r, ctx) for r in roots]

    def guess_value(self, ctx=HARDWARE):
        if self.initial_guess is None:
            return None
        return constant_value(self.initial_guess, ctx)


def constant_value(e: Expr, ctx=HARDWARE):
    """Value of a constant expression; at hardware precision it is correctly rounded."""
    if _has_var(e):
        raise ExprError(f"expected a constant expression, got {to_source(e)!r}")
    if ctx is HARDWARE:
        wide = PrecisionContext(40)
        return complex(_evaluate(e, wide.convert(0), _Algebra(wide)))
    return _evaluate(e, ctx.convert(0), _Algebra(ctx))


def _roots_of_unity_scaled(scale: str, n: int, offset: str = "0") -> list[str]:
    return [f"{scale}*exp(({2 * k}+{offset})*pi*i/{n})" for k in range(n)]


_BUILTINS = {
    "f1": ("ln(1+x^2)+exp(x^2-3*x)*sin(x)", "0", "0.35", None, True),
    "f2": ("1+exp(2+x-x^2)+x^3-cos(1+x)", "-1", "-0.3", None, True),
    "f3": ("(1+x^2)*cos(pi*x/2)+ln(x^2+2*x+2)/(1+x^2)", "-1", "-1.1", None, True),
    "f4": ("x^4+sin(pi/x^2)-5", "sqrt(2)", "1.5", None, True),
    "p1": ("x^2-1", None, None, ["1", "-1"], False),
    "p2": ("x^3-x", None, None, ["0", "1", "-1"], False),
    "p3": ("x*(x^2+1)*(x^2+4)", None, None, ["0", "2i", "-2i", "i", "-i"], False),
    "p4": ("(x^4-1)*(x^2+2i)", None, None, ["1", "i", "-1", "-i", "-1+i", "1-i"], False),
    "p5": ("x^7-1", None, None, [f"exp({2 * k}*pi*i/7)" for k in range(7)], False),
    "p6": (
        "(10*x^5-1)*(x^5+10)",
        None,
        None,
        _roots_of_unity_scaled("(1/10)^(1/5)", 5) + _roots_of_unity_scaled("10^(1/5)", 5, "1"),
        False,
    ),
}

BUILTIN_NAMES = tuple(_BUILTINS)


def builtin(name: str) -> Problem:
    """Named test problem: f1..f4 (real test functions) or p1..p6 (polynomials)."""
    try:
        src, root, guess, roots, real_only = _BUILTINS[name]
    except KeyError:
        raise UnknownProblemError(
            f"unknown builtin {name!r}; available: {', '.join(BUILTIN_NAMES)}"
        ) from None
    p = Problem.from_strings(name, src, root=root, guess=guess, roots=roots or ())
    return Problem(
        name=p.name,
        expr=p.expr,
        known_root=p.known_root,
        initial_guess=p.initial_guess,
        known_roots=p.known_roots,
        real_only=real_only,
    )
