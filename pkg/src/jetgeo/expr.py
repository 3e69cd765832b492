"""Symbolic scalar expressions over named coordinates.

A deliberately small, closed node set: exact rational constants, coordinate
symbols, n-ary sums and products, integer powers, quotients, and the
elementary functions sin, cos, exp, sqrt.  Trees are immutable values;
every operation returns a new tree.  Constants stay exact rationals until
numeric evaluation, so identities that hold by cancellation hold exactly.

Simplification is structural only: constant folding, 0/1 absorption,
flattening of sums and products, collection of identical monomials.  There
is no polynomial canonical form; equality of expressions is decided by
`equal_at_random_points` where structural equality is too weak.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from .errors import (
    DomainError,
    MissingSymbolError,
    ParseError,
    UnknownSymbolError,
)

FUNCTION_NAMES = ("sin", "cos", "exp", "sqrt")


class Expression:
    """Base node.  Arithmetic operators build raw (unsimplified) trees."""

    __slots__ = ()

    def __add__(self, other):
        return Add((self, _coerce(other)))

    def __radd__(self, other):
        return Add((_coerce(other), self))

    def __sub__(self, other):
        return Add((self, negate(_coerce(other))))

    def __rsub__(self, other):
        return Add((_coerce(other), negate(self)))

    def __mul__(self, other):
        return Mul((self, _coerce(other)))

    def __rmul__(self, other):
        return Mul((_coerce(other), self))

    def __truediv__(self, other):
        return Div(self, _coerce(other))

    def __rtruediv__(self, other):
        return Div(_coerce(other), self)

    def __pow__(self, exponent):
        if not isinstance(exponent, int):
            raise TypeError("exponents must be plain integers")
        return Pow(self, exponent)

    def __neg__(self):
        return negate(self)

    def __repr__(self):
        return f"<{type(self).__name__} {to_text(self)}>"


@dataclass(frozen=True, repr=False)
class Const(Expression):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True, repr=False)
class Sym(Expression):
    name: str


@dataclass(frozen=True, repr=False)
class Add(Expression):
    terms: tuple


@dataclass(frozen=True, repr=False)
class Mul(Expression):
    factors: tuple


@dataclass(frozen=True, repr=False)
class Pow(Expression):
    base: Expression
    exponent: int


@dataclass(frozen=True, repr=False)
class Div(Expression):
    num: Expression
    den: Expression


@dataclass(frozen=True, repr=False)
class Func(Expression):
    name: str
    arg: Expression


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def _coerce(value):
    if isinstance(value, Expression):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(Fraction(value))
    if isinstance(value, float):
        return Const(Fraction(value))
    raise TypeError(f"cannot use {type(value).__name__} as an expression")


def const(value):
    return _coerce(value)


def sym(name):
    return Sym(name)


def sin(e):
    return Func("sin", _coerce(e))


def cos(e):
    return Func("cos", _coerce(e))


def exp(e):
    return Func("exp", _coerce(e))


def sqrt(e):
    return Func("sqrt", _coerce(e))


def negate(e):
    """-e, folding the sign into a leading rational constant when present."""
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Mul) and e.factors and isinstance(e.factors[0], Const):
        return Mul((Const(-e.factors[0].value),) + e.factors[1:])
    return Mul((Const(Fraction(-1)), e))


@dataclass(frozen=True)
class CoordinateFrame:
    """Ordered coordinate names with a base/fibre split position.

    names[:split] play the base role in a divided chart, names[split:]
    the fibre role.  The split stored here is the chart's declared
    default; operations that take an explicit split use that instead.
    """

    names: tuple
    split: int

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if len(set(self.names)) != len(self.names):
            raise ValueError("coordinate names must be unique")
        if not self.names:
            raise ValueError("frame needs at least one coordinate")
        if not 1 <= self.split <= len(self.names):
            raise ValueError(f"split {self.split} out of range for dimension {len(self.names)}")
        for name in self.names:
            if not _IDENT_RE.fullmatch(name) or name in FUNCTION_NAMES:
                raise ValueError(f"invalid coordinate name {name!r}")

    @property
    def dim(self):
        return len(self.names)

    def base_names(self):
        return self.names[: self.split]

    def fibre_names(self):
        return self.names[self.split:]


_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


# ---------------------------------------------------------------------------
# differentiation


def differentiate(e, coord):
    """Exact partial derivative of e with respect to the named coordinate.

    Symbols other than `coord` are treated as constants, so the same
    routine serves frame coordinates and external parameters.
    """
    return simplify(_diff(e, coord))


def _diff(e, coord):
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Sym):
        return ONE if e.name == coord else ZERO
    if isinstance(e, Add):
        return Add(tuple(_diff(t, coord) for t in e.terms))
    if isinstance(e, Mul):
        pieces = []
        for i, f in enumerate(e.factors):
            pieces.append(Mul(e.factors[:i] + (_diff(f, coord),) + e.factors[i + 1:]))
        return Add(tuple(pieces))
    if isinstance(e, Pow):
        if e.exponent == 0:
            return ZERO
        return Mul((Const(Fraction(e.exponent)), Pow(e.base, e.exponent - 1), _diff(e.base, coord)))
    if isinstance(e, Div):
        du = _diff(e.num, coord)
        dv = _diff(e.den, coord)
        num = Add((Mul((du, e.den)), negate(Mul((e.num, dv)))))
        return Div(num, Pow(e.den, 2))
    if isinstance(e, Func):
        da = _diff(e.arg, coord)
        if e.name == "sin":
            return Mul((Func("cos", e.arg), da))
        if e.name == "cos":
            return negate(Mul((Func("sin", e.arg), da)))
        if e.name == "exp":
            return Mul((e, da))
        if e.name == "sqrt":
            return Div(da, Mul((Const(Fraction(2)), e)))
    raise TypeError(f"cannot differentiate {type(e).__name__}")


# ---------------------------------------------------------------------------
# evaluation


def evaluate(e, assignment):
    """Evaluate at a full coordinate assignment, returning a finite float.

    Raises MissingSymbolError for uncovered symbols and DomainError for
    zero denominators, negative sqrt arguments, or overflow.
    """
    value = _eval(e, assignment)
    if not math.isfinite(value):
        raise DomainError(f"evaluation produced non-finite value {value}")
    return value


def _eval(e, env):
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Sym):
        try:
            return float(env[e.name])
        except KeyError:
            raise MissingSymbolError(f"no value assigned to '{e.name}'") from None
    if isinstance(e, Add):
        return _finite(math.fsum(_eval(t, env) for t in e.terms))
    if isinstance(e, Mul):
        out = 1.0
        for f in e.factors:
            out *= _eval(f, env)
        return _finite(out)
    if isinstance(e, Pow):
        base = _eval(e.base, env)
        if base == 0.0 and e.exponent < 0:
            raise DomainError("zero base with negative exponent")
        try:
            return _finite(base ** e.exponent)
        except OverflowError:
            raise DomainError("power overflow") from None
    if isinstance(e, Div):
        den = _eval(e.den, env)
        if den == 0.0:
            raise DomainError("division by zero")
        return _finite(_eval(e.num, env) / den)
    if isinstance(e, Func):
        arg = _eval(e.arg, env)
        if e.name == "sin":
            return math.sin(arg)
        if e.name == "cos":
            return math.cos(arg)
        if e.name == "exp":
            try:
                return _finite(math.exp(arg))
            except OverflowError:
                raise DomainError("exp overflow") from None
        if e.name == "sqrt":
            if arg < 0.0:
                raise DomainError(f"sqrt of negative value {arg}")
            return math.sqrt(arg)
    raise TypeError(f"cannot evaluate {type(e).__name__}")


def _finite(x):
    if not math.isfinite(x):
        raise DomainError("intermediate value is not finite")
    return x


def symbols_of(e):
    """Set of coordinate names appearing in the tree."""
    out = set()
    _collect_symbols(e, out)
    return out


def _collect_symbols(e, out):
    if isinstance(e, Sym):
        out.add(e.name)
    elif isinstance(e, Add):
        for t in e.terms:
            _collect_symbols(t, out)
    elif isinstance(e, Mul):
        for f in e.factors:
            _collect_symbols(f, out)
    elif isinstance(e, Pow):
        _collect_symbols(e.base, out)
    elif isinstance(e, Div):
        _collect_symbols(e.num, out)
        _collect_symbols(e.den, out)
    elif isinstance(e, Func):
        _collect_symbols(e.arg, out)


# ---------------------------------------------------------------------------
# simplification


def simplify(e):
    """Structural normal pass; idempotent.

    Folds constants, absorbs 0/1, flattens nested sums/products, sorts
    operands into a stable order, and collects identical monomials in sums.
    Quotients with a symbolic denominator are left alone so that declared
    division-by-zero behaviour is preserved.
    """
    if isinstance(e, (Const, Sym)):
        return e
    if isinstance(e, Func):
        arg = simplify(e.arg)
        if isinstance(arg, Const):
            folded = _fold_func(e.name, arg.value)
            if folded is not None:
                return folded
        return Func(e.name, arg)
    if isinstance(e, Pow):
        return _simplify_pow(simplify(e.base), e.exponent)
    if isinstance(e, Div):
        num = simplify(e.num)
        den = simplify(e.den)
        if isinstance(den, Const) and den.value != 0:
            return simplify(Mul((Const(1 / den.value), num)))
        return Div(num, den)
    if isinstance(e, Mul):
        return _simplify_mul(e.factors)
    if isinstance(e, Add):
        return _simplify_add(e.terms)
    raise TypeError(f"cannot simplify {type(e).__name__}")


def _fold_func(name, value):
    if value == 0:
        return {"sin": ZERO, "cos": ONE, "exp": ONE, "sqrt": ZERO}[name]
    if name == "sqrt" and value > 0:
        num = math.isqrt(value.numerator)
        den = math.isqrt(value.denominator)
        if num * num == value.numerator and den * den == value.denominator:
            return Const(Fraction(num, den))
    return None


def _simplify_pow(base, exponent):
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0:
            if exponent < 0:
                return Pow(base, exponent)
            return ZERO
        return Const(base.value ** exponent)
    if isinstance(base, Pow):
        return _simplify_pow(base.base, base.exponent * exponent)
    return Pow(base, exponent)


def _simplify_mul(factors):
    flat = []
    coeff = Fraction(1)
    stack = list(factors)
    while stack:
        f = simplify(stack.pop(0))
        if isinstance(f, Mul):
            stack = list(f.factors) + stack
        elif isinstance(f, Const):
            coeff *= f.value
        else:
            flat.append(f)
    if coeff == 0:
        return ZERO
    divs = [f for f in flat if isinstance(f, Div)]
    if divs:
        others = [f for f in flat if not isinstance(f, Div)]
        num = Mul((Const(coeff), *others, *(d.num for d in divs)))
        den = Mul(tuple(d.den for d in divs))
        return simplify(Div(num, den))
    flat.sort(key=_key)
    if not flat:
        return Const(coeff)
    if coeff != 1:
        return Mul((Const(coeff),) + tuple(flat))
    if len(flat) == 1:
        return flat[0]
    return Mul(tuple(flat))


def _simplify_add(terms):
    flat = []
    stack = list(terms)
    while stack:
        t = simplify(stack.pop(0))
        if isinstance(t, Add):
            stack = list(t.terms) + stack
        else:
            flat.append(t)
    constant = Fraction(0)
    groups = {}
    order = []
    for t in flat:
        if isinstance(t, Const):
            constant += t.value
            continue
        coeff, core = _coeff_core(t)
        if core not in groups:
            groups[core] = Fraction(0)
            order.append(core)
        groups[core] += coeff
    out = []
    for core in sorted(order, key=_key):
        c = groups[core]
        if c == 0:
            continue
        if c == 1:
            out.append(core)
        elif isinstance(core, Mul):
            out.append(Mul((Const(c),) + core.factors))
        elif isinstance(core, Div):
            out.append(simplify(Mul((Const(c), core))))
        else:
            out.append(Mul((Const(c), core)))
    if constant != 0:
        out.append(Const(constant))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(tuple(out))


def _coeff_core(t):
    """Split a simplified non-constant term into (rational coeff, core).
    Coefficients are pulled out of quotient numerators too, so like
    quotient terms collect."""
    if isinstance(t, Const):
        return t.value, ONE
    if isinstance(t, Div):
        coeff, core_num = _coeff_core(t.num)
        return coeff, Div(core_num, t.den)
    if isinstance(t, Mul):
        coeff = Fraction(1)
        rest = []
        for f in t.factors:
            if isinstance(f, Const):
                coeff *= f.value
            else:
                rest.append(f)
        if not rest:
            return coeff, ONE
        if len(rest) == 1:
            return coeff, rest[0]
        return coeff, Mul(tuple(rest))
    return Fraction(1), t


def _key(e):
    if isinstance(e, Const):
        return (0, e.value, 0)
    if isinstance(e, Sym):
        return (1, e.name, 0)
    if isinstance(e, Func):
        return (2, e.name, _key(e.arg))
    if isinstance(e, Pow):
        return (3, _key(e.base), e.exponent)
    if isinstance(e, Div):
        return (4, _key(e.num), _key(e.den))
    if isinstance(e, Mul):
        return (5, tuple(_key(f) for f in e.factors), 0)
    if isinstance(e, Add):
        return (6, tuple(_key(t) for t in e.terms), 0)
    raise TypeError(type(e).__name__)


def is_zero(e):
    s = simplify(e)
    return isinstance(s, Const) and s.value == 0


# ---------------------------------------------------------------------------
# parsing


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad_at = len(text) - len(stripped)
            raise ParseError(f"unexpected character {stripped[0]!r}", bad_at)
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, names):
        self.text = text
        self.names = frozenset(names)
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, value, pos = self.take()
        if kind != "op" or value != op:
            raise ParseError(f"expected '{op}'", pos)

    def parse(self):
        e = self.expression()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing input {value!r}", pos)
        return e

    def expression(self):
        terms = [self.term()]
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.take()
                t = self.term()
                terms.append(t if value == "+" else negate(t))
            else:
                break
        if len(terms) == 1:
            return terms[0]
        flat = []
        for t in terms:
            flat.extend(t.terms if isinstance(t, Add) else (t,))
        return Add(tuple(flat))

    def term(self):
        factors = [self.unary()]
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.take()
                rhs = self.unary()
                if value == "*":
                    factors.append(rhs)
                else:
                    lhs = self._combine(factors)
                    if isinstance(lhs, Const) and isinstance(rhs, Const) and rhs.value != 0:
                        factors = [Const(lhs.value / rhs.value)]
                    else:
                        factors = [Div(lhs, rhs)]
            else:
                break
        return self._combine(factors)

    @staticmethod
    def _combine(factors):
        if len(factors) == 1:
            return factors[0]
        flat = []
        for f in factors:
            flat.extend(f.factors if isinstance(f, Mul) else (f,))
        return Mul(tuple(flat))

    def unary(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.take()
            return negate(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.take()
            return Pow(base, self.exponent())
        return base

    def exponent(self):
        kind, value, pos = self.peek()
        if kind == "op" and value == "(":
            self.take()
            k = self.signed_integer()
            self.expect_op(")")
            return k
        return self.signed_integer()

    def signed_integer(self):
        sign = 1
        kind, value, pos = self.peek()
        if kind == "op" and value == "-":
            self.take()
            sign = -1
            kind, value, pos = self.peek()
        if kind != "number" or "." in value:
            raise ParseError("integer exponent required", pos)
        self.take()
        return sign * int(value)

    def atom(self):
        kind, value, pos = self.take()
        if kind == "number":
            return Const(Fraction(value))
        if kind == "ident":
            if value in FUNCTION_NAMES:
                self.expect_op("(")
                arg = self.expression()
                self.expect_op(")")
                return Func(value, arg)
            if value not in self.names:
                raise UnknownSymbolError(value, pos)
            return Sym(value)
        if kind == "op" and value == "(":
            e = self.expression()
            self.expect_op(")")
            return e
        raise ParseError(f"unexpected token {value!r}" if value else "unexpected end of input", pos)


def parse(text, frame):
    """Parse infix expression text over the frame's coordinate names.

    Numeric subterms of the forms `p/q` and `-p` fold to exact rational
    constants, so printed trees re-parse to structurally equal trees.
    """
    names = frame.names if isinstance(frame, CoordinateFrame) else tuple(frame)
    return _Parser(text, names).parse()


# ---------------------------------------------------------------------------
# printing

_PREC_ADD, _PREC_MUL, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4


def to_text(e):
    """Render to grammar text.  parse(to_text(x)) == x for parsed trees."""
    return _render(e)[0]


def _render(e):
    """Returns (text, precedence of the outermost construct)."""
    if isinstance(e, Const):
        text = str(e.value)
        return text, (_PREC_MUL if "/" in text else (_PREC_ADD if e.value < 0 else _PREC_ATOM))
    if isinstance(e, Sym):
        return e.name, _PREC_ATOM
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})", _PREC_ATOM
    if isinstance(e, Add):
        parts = []
        for t in e.terms:
            text, prec = _render(t)
            if prec < _PREC_ADD or isinstance(t, Add):
                text = f"({text})"
            if parts and text.startswith("-"):
                parts.append(f"- {text[1:]}")
            elif parts:
                parts.append(f"+ {text}")
            else:
                parts.append(text)
        return " ".join(parts), _PREC_ADD
    if isinstance(e, Mul):
        parts = []
        for f in e.factors:
            text, prec = _render(f)
            if prec < _PREC_MUL or isinstance(f, Div):
                text = f"({text})"
            parts.append(text)
        return "*".join(parts), _PREC_MUL
    if isinstance(e, Div):
        num, num_prec = _render(e.num)
        if num_prec < _PREC_MUL:
            num = f"({num})"
        den, den_prec = _render(e.den)
        if den_prec <= _PREC_MUL:
            den = f"({den})"
        return f"{num}/{den}", _PREC_MUL
    if isinstance(e, Pow):
        base, base_prec = _render(e.base)
        if base_prec < _PREC_ATOM:
            base = f"({base})"
        exp = str(e.exponent) if e.exponent >= 0 else f"({e.exponent})"
        return f"{base}^{exp}", _PREC_POW
    raise TypeError(type(e).__name__)


# ---------------------------------------------------------------------------
# small symbolic matrices (cofactor expansion; intended for dims <= 3)


def matrix_determinant(rows):
    size = len(rows)
    if any(len(r) != size for r in rows):
        raise ValueError("matrix must be square")
    if size == 1:
        return rows[0][0]
    terms = []
    for j in range(size):
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        cofactor = Mul((rows[0][j], matrix_determinant(minor)))
        terms.append(cofactor if j % 2 == 0 else negate(cofactor))
    return simplify(Add(tuple(terms)))


def matrix_inverse(rows):
    """Inverse of a matrix of expressions via the adjugate; entries are
    quotients by the symbolic determinant."""
    size = len(rows)
    det = matrix_determinant(rows)
    if size == 1:
        return [[simplify(Div(ONE, det))]]
    out = [[None] * size for _ in range(size)]
    for i in range(size):
        for j in range(size):
            minor = [
                [rows[r][c] for c in range(size) if c != j]
                for r in range(size) if r != i
            ]
            cof = matrix_determinant(minor)
            if (i + j) % 2 == 1:
                cof = negate(cof)
            out[j][i] = simplify(Div(cof, det))
    return out


# ---------------------------------------------------------------------------
# randomized numeric equality


def equal_at_random_points(e1, e2, names, rng, points=12, tol=1e-10, low=-1.0, high=1.0):
    """Decide equality by evaluating both trees at random points.

    Points raising DomainError in either tree are redrawn.  Returns
    (equal, max_deviation).
    """
    dev = deviation_at_random_points(e1, e2, names, rng, points, low, high)
    return dev <= tol, dev


def deviation_at_random_points(e1, e2, names, rng, points=12, low=-1.0, high=1.0):
    names = tuple(names)
    worst = 0.0
    done = 0
    attempts = 0
    while done < points:
        attempts += 1
        if attempts > 100 * points:
            raise DomainError("could not find enough evaluable sample points")
        env = {name: float(v) for name, v in zip(names, rng.uniform(low, high, len(names)))}
        try:
            v1 = evaluate(e1, env)
            v2 = evaluate(e2, env)
        except DomainError:
            continue
        worst = max(worst, abs(v1 - v2))
        done += 1
    return worst
