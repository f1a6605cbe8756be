"""Symbolic integrand family: AST, parser, printer, evaluator, derivative.

The family is closed under the operations the integration engine needs:
sums, scalar multiples, multiplication by smooth functions, restriction to
intervals and periodic extension.  Every additive term carries at most one
non-smooth leaf.

Grammar (whitespace insensitive)::

    expr   := term (("+" | "-") term)*
    term   := factor ("*" factor)*
    factor := leaf | number | "(" expr ")" | "-" factor
    leaf   := "chirp(" args ")" | "pow(" args ")" | "step(" ["a=" num ","] "cn=" seq ")"
            | "indicator(" num "," num ")" | "sin(" lin ")" | "cos(" lin ")"
            | "exp(" lin ")" | "poly(" num ("," num)* ")" | "periodic(" num ";" expr ")"

``lin`` is a polynomial in ``x`` (``2*x+1``, ``-x^2``); ``seq`` is an
arithmetic formula in the integer ``n``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from numpy.polynomial import polynomial as P

__all__ = [
    "Const", "Power", "Chirp", "StepSeq", "Indicator", "Smooth", "Sum",
    "SmoothProduct", "Scale", "Periodic", "Restrict", "Expr", "Atom",
    "ParseDiagnostics", "ParseError", "DomainError",
    "parse", "to_text", "eval_at", "evaluate", "differentiate",
    "singular_points", "is_smooth", "atoms", "shift", "support",
]

SIDES = ("both", "right", "left")
TRIG = ("sin", "cos")


class DomainError(ValueError):
    """Operation not defined for this node or input."""


@dataclass(frozen=True)
class ParseDiagnostics:
    position: int
    message: str
    expected: tuple[str, ...] = ()

    def render(self, text: str) -> str:
        caret = " " * self.position + "^"
        exp = f" (expected: {', '.join(self.expected)})" if self.expected else ""
        return f"{text}\n{caret}\nparse error at offset {self.position}: {self.message}{exp}"


class ParseError(ValueError):
    def __init__(self, diagnostics: ParseDiagnostics):
        super().__init__(diagnostics.message)
        self.diagnostics = diagnostics


# ---------------------------------------------------------------------------
# nodes


@dataclass(frozen=True)
class Const:
    c: float


@dataclass(frozen=True)
class Power:
    """|x-a|^alpha, optionally times sgn(x-a) or restricted to one side."""

    alpha: float
    a: float = 0.0
    side: str = "both"
    signed: bool = False


@dataclass(frozen=True)
class Chirp:
    """|x-a|^alpha * trig(|x-a|^-beta), same side/sign variants as Power.

    The value at the center is 0 by convention.
    """

    alpha: float
    beta: float
    kind: str = "sin"
    a: float = 0.0
    side: str = "both"
    signed: bool = False

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"chirp requires beta > 0, got {self.beta}")
        if self.kind not in TRIG:
            raise DomainError(f"chirp kind must be sin or cos, got {self.kind!r}")


@dataclass(frozen=True)
class StepSeq:
    """c_n on [a + 1/(n+1), a + 1/n), zero outside (a, a+1)."""

    coeff: str
    a: float = 0.0
    _fn: Callable = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if self._fn is None:
            object.__setattr__(self, "_fn", compile_sequence(self.coeff))

    def c(self, n) -> np.ndarray:
        return self._fn(np.asarray(n, dtype=float))


@dataclass(frozen=True)
class Indicator:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"indicator needs lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class Smooth:
    """poly(coeffs) or sin/cos/exp of the polynomial with ascending coeffs."""

    kind: str
    coeffs: tuple[float, ...]

    def __post_init__(self):
        # canonical form: trailing zero coefficients dropped, at least one kept
        cs = [float(c) for c in self.coeffs] or [0.0]
        while len(cs) > 1 and cs[-1] == 0.0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))


@dataclass(frozen=True)
class Sum:
    terms: tuple


@dataclass(frozen=True)
class SmoothProduct:
    smooth: object
    general: object


@dataclass(frozen=True)
class Scale:
    k: float
    e: object


@dataclass(frozen=True)
class Periodic:
    period: float
    base: object

    def __post_init__(self):
        if not self.period > 0:
            raise DomainError("period must be positive")


@dataclass(frozen=True)
class Restrict:
    """body restricted to (lo, hi), i.e. body * indicator(lo, hi)."""

    lo: float
    hi: float
    body: object

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"indicator needs lo < hi, got [{self.lo}, {self.hi}]")


Expr = Union[Const, Power, Chirp, StepSeq, Indicator, Smooth, Sum, SmoothProduct,
             Scale, Periodic, Restrict]

NONSMOOTH_LEAVES = (Power, Chirp, StepSeq, Periodic)


def is_smooth(e) -> bool:
    if isinstance(e, (Const, Smooth)):
        return True
    if isinstance(e, Scale):
        return is_smooth(e.e)
    if isinstance(e, Sum):
        return all(is_smooth(t) for t in e.terms)
    if isinstance(e, SmoothProduct):
        return is_smooth(e.general)
    return False


def poly(*coeffs: float) -> Smooth:
    return Smooth("poly", tuple(float(c) for c in coeffs))


# ---------------------------------------------------------------------------
# sign bookkeeping: a side/signed pair is the pair (value for u>0, value for u<0)


def sigma(side: str, signed: bool) -> tuple[float, float]:
    sp = 0.0 if side == "left" else 1.0
    sm = 0.0 if side == "right" else (-1.0 if signed else 1.0)
    return sp, sm


def from_sigma(sp: float, sm: float) -> tuple[str, bool, float]:
    """Inverse of sigma up to an overall factor: returns (side, signed, factor)."""
    if sp == 0.0 and sm == 0.0:
        return "both", False, 0.0
    if sp == 0.0:
        return "left", sm < 0, abs(sm)
    if sm == 0.0:
        return "right", False, sp
    return "both", (sm / sp) < 0, sp


# ---------------------------------------------------------------------------
# step-coefficient sub-language


_SEQ_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)|(n)|(pi)|([-+*/^()]))")


def compile_sequence(src: str) -> Callable[[np.ndarray], np.ndarray]:
    """Compile a formula in n (+ - * / ^, parentheses) into a vectorized callable."""
    toks = []
    pos = 0
    src_s = src.strip()
    while pos < len(src_s):
        m = _SEQ_TOKEN.match(src_s, pos)
        if not m or m.end() == pos:
            raise DomainError(f"bad character in sequence formula at {pos}: {src_s[pos:]!r}")
        num, var, pi, op = m.groups()
        toks.append(("num", float(num)) if num else ("n", None) if var else
                    ("num", math.pi) if pi else ("op", op))
        pos = m.end()
    i = 0

    def peek():
        return toks[i] if i < len(toks) else ("end", None)

    def take():
        nonlocal i
        t = peek()
        i += 1
        return t

    def expr():
        left = term()
        while peek() in (("op", "+"), ("op", "-")):
            op = take()[1]
            right = term()
            left = (lambda l, r: lambda n: l(n) + r(n))(left, right) if op == "+" else \
                (lambda l, r: lambda n: l(n) - r(n))(left, right)
        return left

    def term():
        left = unary()
        while peek() in (("op", "*"), ("op", "/")):
            op = take()[1]
            right = unary()
            left = (lambda l, r: lambda n: l(n) * r(n))(left, right) if op == "*" else \
                (lambda l, r: lambda n: l(n) / r(n))(left, right)
        return left

    def unary():
        if peek() == ("op", "-"):
            take()
            inner = unary()
            return lambda n: -inner(n)
        return power()

    def power():
        base = atom()
        if peek() == ("op", "^"):
            take()
            ex = unary()
            return lambda n: np.power(base(n), ex(n))
        return base

    def atom():
        kind, val = take()
        if kind == "num":
            return lambda n, v=val: np.full_like(n, v, dtype=float)
        if kind == "n":
            return lambda n: n
        if (kind, val) == ("op", "("):
            inner = expr()
            if take() != ("op", ")"):
                raise DomainError("unbalanced parentheses in sequence formula")
            return inner
        raise DomainError(f"unexpected token in sequence formula: {val!r}")

    fn = expr()
    if i != len(toks):
        raise DomainError("trailing tokens in sequence formula")
    return fn


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),;=]))"
)

_LEAVES = ("chirp", "pow", "step", "indicator", "sin", "cos", "exp", "poly", "periodic")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks: list[tuple[str, str, int, int]] = []
        pos = 0
        while True:
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                rest = text[pos:]
                if rest.strip() == "":
                    break
                self.fail(pos + len(rest) - len(rest.lstrip()), "unexpected character")
            kind = m.lastgroup
            self.toks.append((kind, m.group(kind), m.start(kind), m.end()))
            pos = m.end()
        self.i = 0

    def fail(self, pos, msg, expected=()):
        raise ParseError(ParseDiagnostics(min(pos, len(self.text)), msg, tuple(expected)))

    def peek(self):
        if self.i < len(self.toks):
            return self.toks[self.i]
        return ("end", "", len(self.text), len(self.text))

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def expect(self, value, kind="op"):
        t = self.peek()
        if t[0] != kind or t[1] != value:
            self.fail(t[2], f"unexpected {t[1] or 'end of input'!r}", (repr(value),))
        return self.take()

    def at(self, value, kind="op"):
        t = self.peek()
        return t[0] == kind and t[1] == value

    # numbers: [-] (literal | pi) (("*" | "/") (literal | pi))*
    def number(self) -> float:
        sign = 1.0
        while self.at("-"):
            self.take()
            sign = -sign
        val = self._num_atom()
        while (self.at("*") or self.at("/")) and self._next_is_num():
            op = self.take()[1]
            v = self._num_atom()
            val = val * v if op == "*" else val / v
        return sign * val

    def _next_is_num(self):
        if self.i + 1 >= len(self.toks):
            return False
        t = self.toks[self.i + 1]
        return t[0] == "num" or (t[0] == "id" and t[1] == "pi")

    def _num_atom(self) -> float:
        t = self.peek()
        if t[0] == "num":
            self.take()
            return float(t[1])
        if t[0] == "id" and t[1] == "pi":
            self.take()
            return math.pi
        self.fail(t[2], f"expected a number, got {t[1] or 'end of input'!r}", ("number",))

    def parse(self):
        e = self.expr()
        t = self.peek()
        if t[0] != "end":
            self.fail(t[2], f"unexpected {t[1]!r}", ("'+'", "'*'", "end of input"))
        return e

    def expr(self):
        terms = [self.term()]
        while self.at("+") or self.at("-"):
            neg = self.take()[1] == "-"
            t = self.term()
            terms.append(_negate(t) if neg else t)
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def term(self):
        start = self.peek()[2]
        factors = [self.factor()]
        while self.at("*"):
            self.take()
            factors.append(self.factor())
        return self._combine(factors, start)

    def factor(self):
        t = self.peek()
        if t[0] == "op" and t[1] == "-":
            self.take()
            return ("num", -1.0) if False else _neg_factor(self.factor())
        if t[0] == "num" or (t[0] == "id" and t[1] == "pi"):
            return ("num", self.number())
        if t[0] == "op" and t[1] == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        if t[0] == "id" and t[1] in _LEAVES:
            return self.leaf()
        self.fail(t[2], f"unexpected {t[1] or 'end of input'!r}",
                  ("number", "'('") + tuple(f"'{x}('" for x in _LEAVES))

    def _combine(self, factors, pos):
        k = 1.0
        has_num = False
        inds = []
        smooth = []
        rough = []
        for f in factors:
            if isinstance(f, tuple) and f[0] == "num":
                k *= f[1]
                has_num = True
            elif isinstance(f, Indicator):
                inds.append(f)
            elif is_smooth(f):
                smooth.append(f)
            else:
                rough.append(f)
        if len(rough) > 1:
            self.fail(pos, "two non-smooth factors: products are limited to smooth x general")
        if rough:
            body = rough[0]
        elif smooth:
            body = smooth.pop()
        elif inds:
            body = inds.pop(0)
        else:
            return Const(k)
        for s in reversed(smooth):
            body = SmoothProduct(s, body)
        for ind in inds:
            body = Restrict(ind.lo, ind.hi, body)
        if has_num:
            body = Scale(k, body)
        return body

    def leaf(self):
        _, name, pos, _ = self.take()
        self.expect("(")
        try:
            if name == "chirp":
                node = self._chirp(pos)
            elif name == "pow":
                node = self._pow(pos)
            elif name == "step":
                node = self._step(pos)
            elif name == "indicator":
                lo = self.number()
                self.expect(",")
                hi = self.number()
                node = Indicator(lo, hi)
            elif name in ("sin", "cos", "exp"):
                node = Smooth(name, self._lin())
            elif name == "poly":
                cs = [self.number()]
                while self.at(","):
                    self.take()
                    cs.append(self.number())
                node = Smooth("poly", tuple(cs))
            else:  # periodic
                period = self.number()
                self.expect(";")
                base = self.expr()
                node = Periodic(period, base)
        except DomainError as exc:
            self.fail(pos, str(exc))
        self.expect(")")
        return node

    def _kwargs(self, allowed, kinds=()):
        out = {}
        kind = None
        while True:
            t = self.peek()
            if t[0] == "id" and t[1] in kinds:
                self.take()
                kind = t[1]
            elif t[0] == "id" and t[1] in allowed:
                self.take()
                self.expect("=")
                key = t[1]
                if key == "side":
                    v = self.take()
                    if v[1] not in SIDES:
                        self.fail(v[2], f"bad side {v[1]!r}", SIDES)
                    out[key] = v[1]
                elif key == "signed":
                    v = self.take()
                    if v[1] not in ("true", "false"):
                        self.fail(v[2], f"bad flag {v[1]!r}", ("true", "false"))
                    out[key] = v[1] == "true"
                else:
                    out[key] = self.number()
            else:
                self.fail(t[2], f"unexpected {t[1] or 'end of input'!r}",
                          tuple(allowed) + tuple(kinds))
            if not self.at(","):
                return out, kind
            self.take()

    def _chirp(self, pos):
        kw, kind = self._kwargs(("a", "alpha", "beta", "side", "signed"), TRIG)
        if "alpha" not in kw or "beta" not in kw:
            self.fail(pos, "chirp needs alpha and beta", ("alpha", "beta"))
        return Chirp(kw["alpha"], kw["beta"], kind or "sin", kw.get("a", 0.0),
                     kw.get("side", "both"), kw.get("signed", False))

    def _pow(self, pos):
        kw, _ = self._kwargs(("a", "alpha", "side", "signed"))
        if "alpha" not in kw:
            self.fail(pos, "pow needs alpha", ("alpha",))
        return Power(kw["alpha"], kw.get("a", 0.0), kw.get("side", "both"), kw.get("signed", False))

    def _step(self, pos):
        a = 0.0
        if self.at("a", "id"):
            self.take()
            self.expect("=")
            a = self.number()
            self.expect(",")
        self.expect("cn", "id")
        self.expect("=")
        start = self.peek()[2]
        depth = 0
        while True:
            t = self.peek()
            if t[0] == "end":
                self.fail(t[2], "unterminated step(...)", ("')'",))
            if t[0] == "op" and t[1] == "(":
                depth += 1
            elif t[0] == "op" and t[1] == ")":
                if depth == 0:
                    break
                depth -= 1
            self.take()
        src = re.sub(r"\s+", "", self.text[start:self.peek()[2]])
        if not src:
            self.fail(start, "empty sequence formula", ("formula in n",))
        return StepSeq(src, a)

    def _lin(self) -> tuple[float, ...]:
        """Polynomial in x: sum of [num][*]x[^int] terms."""
        coeffs: dict[int, float] = {}
        first = True
        while True:
            sign = 1.0
            if self.at("+") and not first:
                self.take()
            elif self.at("-"):
                self.take()
                sign = -1.0
            elif not first:
                break
            first = False
            t = self.peek()
            c = 1.0
            deg = 0
            if t[0] == "num" or (t[0] == "id" and t[1] == "pi"):
                c = self._num_atom()
                while self.at("*") and self._next_is_num():
                    self.take()
                    c *= self._num_atom()
                if self.at("*"):
                    self.take()
                    t = self.peek()
                    if not (t[0] == "id" and t[1] == "x"):
                        self.fail(t[2], "expected x", ("x",))
                else:
                    t = None
            if t is not None:
                if not (t[0] == "id" and t[1] == "x"):
                    self.fail(t[2], "expected a polynomial in x", ("number", "x"))
                self.take()
                deg = 1
                if self.at("^"):
                    self.take()
                    d = self.peek()
                    if d[0] != "num" or not float(d[1]).is_integer():
                        self.fail(d[2], "exponent must be a non-negative integer", ("integer",))
                    self.take()
                    deg = int(float(d[1]))
            coeffs[deg] = coeffs.get(deg, 0.0) + sign * c
        n = max(coeffs) + 1
        return tuple(coeffs.get(i, 0.0) for i in range(n))


def _negate(e):
    return Scale(-1.0, e)


def _neg_factor(f):
    if isinstance(f, tuple):
        return ("num", -f[1])
    return Scale(-1.0, f)


def parse(text: str):
    """Parse an integrand; raises ParseError carrying ParseDiagnostics."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# printer


def _num(v: float) -> str:
    if v == math.pi:
        return "pi"
    return repr(float(v))


def _lin_text(cs) -> str:
    parts = []
    for d, c in enumerate(cs):
        if c == 0.0 and len(cs) > 1:
            continue
        mono = "" if d == 0 else ("x" if d == 1 else f"x^{d}")
        txt = _num(abs(c)) + ("*" + mono if mono else "")
        parts.append(("-" if math.copysign(1.0, c) < 0 else "+", txt))
    if not parts:
        return "0.0"
    s = "".join(f"{sg}{t}" for sg, t in parts)
    return s[1:] if s[0] == "+" else s


def to_text(e) -> str:
    """Inverse of parse: parse(to_text(e)) == e."""
    if isinstance(e, Const):
        return _num(e.c) if e.c >= 0 else f"({_num(e.c)})"
    if isinstance(e, Power):
        return f"pow(a={_num(e.a)}, alpha={_num(e.alpha)}, side={e.side}, signed={str(e.signed).lower()})"
    if isinstance(e, Chirp):
        return (f"chirp(a={_num(e.a)}, alpha={_num(e.alpha)}, beta={_num(e.beta)}, "
                f"side={e.side}, signed={str(e.signed).lower()}, {e.kind})")
    if isinstance(e, StepSeq):
        return f"step(a={_num(e.a)}, cn={e.coeff})"
    if isinstance(e, Indicator):
        return f"indicator({_num(e.lo)}, {_num(e.hi)})"
    if isinstance(e, Smooth):
        if e.kind == "poly":
            return "poly(" + ", ".join(_num(c) for c in e.coeffs) + ")"
        return f"{e.kind}({_lin_text(e.coeffs)})"
    if isinstance(e, Sum):
        return " + ".join(f"({to_text(t)})" for t in e.terms)
    if isinstance(e, SmoothProduct):
        return f"({to_text(e.smooth)}) * ({to_text(e.general)})"
    if isinstance(e, Scale):
        return f"{_num(e.k)} * ({to_text(e.e)})"
    if isinstance(e, Periodic):
        return f"periodic({_num(e.period)}; {to_text(e.base)})"
    if isinstance(e, Restrict):
        return f"({to_text(e.body)}) * indicator({_num(e.lo)}, {_num(e.hi)})"
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# evaluation


def _sided(u: np.ndarray, sp: float, sm: float) -> np.ndarray:
    return np.where(u > 0, sp, np.where(u < 0, sm, np.nan))


def evaluate(e, x) -> np.ndarray:
    """Vectorized pointwise values; nan where the classical value is undefined."""
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        return _ev(e, x)


def _ev(e, x):
    if isinstance(e, Const):
        return np.full_like(x, e.c)
    if isinstance(e, Smooth):
        p = P.polyval(x, e.coeffs)
        if e.kind == "poly":
            return p
        return {"sin": np.sin, "cos": np.cos, "exp": np.exp}[e.kind](p)
    if isinstance(e, Power):
        u = x - e.a
        sp, sm = sigma(e.side, e.signed)
        out = np.abs(u) ** e.alpha * _sided(u, sp, sm)
        at0 = u == 0
        if at0.any():
            if e.alpha > 0:
                v = 0.0
            elif e.alpha == 0 and sp == sm:
                v = sp
            elif e.alpha == 0 and sp == -sm:
                v = 0.0
            else:
                v = np.nan
            out = np.where(at0, v, out)
        return out
    if isinstance(e, Chirp):
        u = x - e.a
        au = np.abs(u)
        sp, sm = sigma(e.side, e.signed)
        trig = np.sin if e.kind == "sin" else np.cos
        out = au ** e.alpha * trig(au ** (-e.beta)) * _sided(u, sp, sm)
        return np.where(u == 0, 0.0, out)
    if isinstance(e, StepSeq):
        u = x - e.a
        inside = (u > 0) & (u < 1)
        us = np.where(inside, u, 0.5)
        n = np.ceil(1.0 / us) - 1.0
        n = np.where(1.0 / (n + 1) > us, n + 1, n)
        n = np.where(us >= 1.0 / np.maximum(n, 1), n - 1, n)
        n = np.maximum(n, 1.0)
        return np.where(inside, e.c(n), 0.0)
    if isinstance(e, Indicator):
        return np.where((x > e.lo) & (x < e.hi), 1.0,
                        np.where((x == e.lo) | (x == e.hi), np.nan, 0.0))
    if isinstance(e, Restrict):
        inside = (x > e.lo) & (x < e.hi)
        body = _ev(e.body, np.where(inside, x, (e.lo + e.hi) / 2))
        return np.where(inside, body, np.where((x == e.lo) | (x == e.hi), np.nan, 0.0))
    if isinstance(e, Sum):
        out = np.zeros_like(x)
        for t in e.terms:
            out = out + _ev(t, x)
        return out
    if isinstance(e, SmoothProduct):
        return _ev(e.smooth, x) * _ev(e.general, x)
    if isinstance(e, Scale):
        return e.k * _ev(e.e, x)
    if isinstance(e, Periodic):
        return _ev(e.base, np.mod(x, e.period))
    raise TypeError(f"not an expression node: {e!r}")


def eval_at(e, x: float) -> Optional[float]:
    """Classical value at x, or None where it is undefined."""
    v = float(evaluate(e, np.array([float(x)]))[0])
    return None if math.isnan(v) else v


# ---------------------------------------------------------------------------
# derivative


def _simplify_sum(terms):
    terms = [t for t in terms if not (isinstance(t, Const) and t.c == 0.0)]
    if not terms:
        return Const(0.0)
    return terms[0] if len(terms) == 1 else Sum(tuple(terms))


def _scale(k, e):
    if k == 0.0 or (isinstance(e, Const) and e.c == 0.0):
        return Const(0.0)
    if isinstance(e, Const):
        return Const(k * e.c)
    if k == 1.0:
        return e
    return Scale(k, e)


def _times_smooth(s, g):
    if isinstance(s, Const):
        return _scale(s.c, g)
    if isinstance(g, Const):
        return _scale(g.c, s)
    return SmoothProduct(s, g)


def _smooth_poly(cs) -> object:
    cs = np.trim_zeros(np.asarray(cs, dtype=float), "b")
    if cs.size == 0:
        return Const(0.0)
    if cs.size == 1:
        return Const(float(cs[0]))
    return Smooth("poly", tuple(float(c) for c in cs))


def differentiate(e):
    """Pointwise derivative, valid away from centers of Power/Chirp leaves."""
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Smooth):
        dp = P.polyder(np.asarray(e.coeffs, dtype=float)) if len(e.coeffs) > 1 else np.zeros(1)
        if e.kind == "poly":
            return _smooth_poly(dp)
        inner = _smooth_poly(dp)
        if e.kind == "sin":
            return _times_smooth(inner, Smooth("cos", e.coeffs))
        if e.kind == "cos":
            return _scale(-1.0, _times_smooth(inner, Smooth("sin", e.coeffs)))
        return _times_smooth(inner, e)
    if isinstance(e, Power):
        if e.alpha == 0.0:
            return Const(0.0)
        sp, sm = sigma(e.side, e.signed)
        side, signed, f = from_sigma(sp, -sm)
        return _scale(e.alpha * f, Power(e.alpha - 1.0, e.a, side, signed))
    if isinstance(e, Chirp):
        sp, sm = sigma(e.side, e.signed)
        side, signed, f = from_sigma(sp, -sm)
        other = "cos" if e.kind == "sin" else "sin"
        dsign = 1.0 if e.kind == "sin" else -1.0
        terms = []
        if e.alpha != 0.0:
            terms.append(_scale(e.alpha * f, Chirp(e.alpha - 1.0, e.beta, e.kind, e.a, side, signed)))
        terms.append(_scale(-e.beta * dsign * f,
                            Chirp(e.alpha - e.beta - 1.0, e.beta, other, e.a, side, signed)))
        return _simplify_sum(terms)
    if isinstance(e, Sum):
        return _simplify_sum([differentiate(t) for t in e.terms])
    if isinstance(e, Scale):
        return _scale(e.k, differentiate(e.e))
    if isinstance(e, SmoothProduct):
        ds = differentiate(e.smooth)
        dg = differentiate(e.general)
        return _simplify_sum([_times_smooth(ds, e.general) if not _is_zero(ds) else Const(0.0),
                              _times_smooth(e.smooth, dg) if not _is_zero(dg) else Const(0.0)])
    raise DomainError(f"differentiate: unsupported node {type(e).__name__}")


def _is_zero(e) -> bool:
    return isinstance(e, Const) and e.c == 0.0


# ---------------------------------------------------------------------------
# structure queries


def singular_points(e, lo: float, hi: float) -> list[float]:
    """Centers, jump points and period boundaries inside [lo, hi], sorted."""
    pts: set[float] = set()
    _collect(e, lo, hi, pts)
    return sorted(p for p in pts if lo <= p <= hi)


def _collect(e, lo, hi, pts):
    if isinstance(e, (Power, Chirp)):
        pts.add(float(e.a))
    elif isinstance(e, StepSeq):
        pts.update((float(e.a), float(e.a) + 1.0))
    elif isinstance(e, Indicator):
        pts.update((e.lo, e.hi))
    elif isinstance(e, Restrict):
        pts.update((e.lo, e.hi))
        _collect(e.body, max(lo, e.lo), min(hi, e.hi), pts)
    elif isinstance(e, Sum):
        for t in e.terms:
            _collect(t, lo, hi, pts)
    elif isinstance(e, SmoothProduct):
        _collect(e.general, lo, hi, pts)
    elif isinstance(e, Scale):
        _collect(e.e, lo, hi, pts)
    elif isinstance(e, Periodic):
        base_pts = singular_points(e.base, 0.0, e.period)
        k0 = math.floor(lo / e.period)
        k1 = math.floor(hi / e.period)
        for k in range(k0, k1 + 1):
            off = k * e.period
            pts.add(off)
            pts.update(off + p for p in base_pts if p < e.period)


def support(e) -> tuple[float, float]:
    """Closed hull of the support (may be infinite)."""
    if isinstance(e, Const):
        return (math.inf, -math.inf) if e.c == 0 else (-math.inf, math.inf)
    if isinstance(e, StepSeq):
        return (e.a, e.a + 1.0)
    if isinstance(e, Indicator):
        return (e.lo, e.hi)
    if isinstance(e, Restrict):
        lo, hi = support(e.body)
        return (max(lo, e.lo), min(hi, e.hi))
    if isinstance(e, Power) or isinstance(e, Chirp):
        if e.side == "right":
            return (e.a, math.inf)
        if e.side == "left":
            return (-math.inf, e.a)
        return (-math.inf, math.inf)
    if isinstance(e, Sum):
        sups = [support(t) for t in e.terms]
        return (min(s[0] for s in sups), max(s[1] for s in sups))
    if isinstance(e, SmoothProduct):
        return support(e.general)
    if isinstance(e, Scale):
        return support(e.e) if e.k != 0 else (math.inf, -math.inf)
    return (-math.inf, math.inf)


def shift(e, d: float):
    """e(x + d) as an expression."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Smooth):
        cs = np.asarray(e.coeffs, dtype=float)
        out = np.zeros_like(cs)
        base = np.array([1.0])
        lin = np.array([d, 1.0])
        for c in cs:
            out = P.polyadd(out, c * base)[: len(cs)]
            base = P.polymul(base, lin)
        out = np.pad(out, (0, len(cs) - len(out)))
        return Smooth(e.kind, tuple(float(c) for c in out))
    if isinstance(e, Power):
        return Power(e.alpha, e.a - d, e.side, e.signed)
    if isinstance(e, Chirp):
        return Chirp(e.alpha, e.beta, e.kind, e.a - d, e.side, e.signed)
    if isinstance(e, StepSeq):
        return StepSeq(e.coeff, e.a - d)
    if isinstance(e, Indicator):
        return Indicator(e.lo - d, e.hi - d)
    if isinstance(e, Restrict):
        return Restrict(e.lo - d, e.hi - d, shift(e.body, d))
    if isinstance(e, Sum):
        return Sum(tuple(shift(t, d) for t in e.terms))
    if isinstance(e, SmoothProduct):
        return SmoothProduct(shift(e.smooth, d), shift(e.general, d))
    if isinstance(e, Scale):
        return Scale(e.k, shift(e.e, d))
    if isinstance(e, Periodic):
        r = math.fmod(d, e.period)
        if r == 0.0:
            return e
        return Periodic(e.period, _periodic_shift_base(e, r))
    raise TypeError(f"not an expression node: {e!r}")


def _periodic_shift_base(e: Periodic, r: float):
    # base'(u) = base((u + r) mod P) on [0, P): two restricted copies
    r = r % e.period
    first = Restrict(0.0, e.period - r, shift(e.base, r))
    second = Restrict(e.period - r, e.period, shift(e.base, r - e.period))
    return Sum((first, second))


# ---------------------------------------------------------------------------
# additive normal form


@dataclass(frozen=True)
class Atom:
    """coef * smooth(x) * leaf(x) restricted to window; None means 1 / everywhere."""

    coef: float
    smooth: object = None
    leaf: object = None
    window: Optional[tuple[float, float]] = None

    def expr(self):
        body = self.leaf if self.leaf is not None else (self.smooth if self.smooth is not None else Const(1.0))
        if self.leaf is not None and self.smooth is not None:
            body = SmoothProduct(self.smooth, self.leaf)
        if self.window is not None:
            body = Restrict(self.window[0], self.window[1], body)
        return _scale(self.coef, body) if not (self.coef == 1.0) else body

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            v = np.full_like(x, self.coef)
            if self.smooth is not None:
                v = v * _ev(self.smooth, x)
            if self.leaf is not None:
                v = v * _ev(self.leaf, x)
            if self.window is not None:
                v = np.where((x > self.window[0]) & (x < self.window[1]), v, 0.0)
        return v


def atoms(e) -> list[Atom]:
    """Flatten into a list of atoms whose sum is e."""
    if isinstance(e, Const):
        return [Atom(e.c)] if e.c != 0 else []
    if isinstance(e, Smooth):
        return [Atom(1.0, e)]
    if isinstance(e, (Power, Chirp, StepSeq, Periodic)):
        return [Atom(1.0, None, e)]
    if isinstance(e, Indicator):
        return [Atom(1.0, None, None, (e.lo, e.hi))]
    if isinstance(e, Sum):
        return [a for t in e.terms for a in atoms(t)]
    if isinstance(e, Scale):
        return [Atom(a.coef * e.k, a.smooth, a.leaf, a.window) for a in atoms(e.e) if e.k != 0]
    if isinstance(e, SmoothProduct):
        out = []
        for a in atoms(e.general):
            s = e.smooth if a.smooth is None else SmoothProduct(e.smooth, a.smooth)
            out.append(Atom(a.coef, s, a.leaf, a.window))
        return out
    if isinstance(e, Restrict):
        out = []
        for a in atoms(e.body):
            lo, hi = e.lo, e.hi
            if a.window is not None:
                lo, hi = max(lo, a.window[0]), min(hi, a.window[1])
            if lo < hi:
                out.append(Atom(a.coef, a.smooth, a.leaf, (lo, hi)))
        return out
    raise TypeError(f"not an expression node: {e!r}")
