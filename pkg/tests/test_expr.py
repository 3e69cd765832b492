from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetgeo.errors import DomainError, MissingSymbolError, ParseError, UnknownSymbolError
from jetgeo.expr import (
    Add,
    Const,
    CoordinateFrame,
    Div,
    Func,
    Mul,
    Pow,
    Sym,
    deviation_at_random_points,
    differentiate,
    equal_at_random_points,
    evaluate,
    parse,
    simplify,
    to_text,
)

UV = ("u", "v")


def ev(e, **env):
    return evaluate(e, env)


# ---------------------------------------------------------------------------
# parsing


def test_parse_product_plus_constant():
    e = parse("u1*u2 + 3", ("u1", "u2"))
    assert e == Add((Mul((Sym("u1"), Sym("u2"))), Const(Fraction(3))))


def test_parse_double_caret_is_syntax_error():
    with pytest.raises(ParseError):
        parse("u1^^2", ("u1",))


def test_parse_unknown_symbol():
    with pytest.raises(UnknownSymbolError):
        parse("u1 + w", ("u1",))


def test_parse_function_quotient():
    e = parse("sin(u3)/u1", ("u1", "u3"))
    assert ev(e, u3=0.0, u1=2.0) == 0.0


def test_parse_rational_and_decimal_literals():
    assert parse("3/4", ()) == Const(Fraction(3, 4))
    assert parse("-3/4", ()) == Const(Fraction(-3, 4))
    assert parse("0.25", ()) == Const(Fraction(1, 4))


def test_parse_position_reported():
    with pytest.raises(ParseError) as err:
        parse("u + (v", UV)
    assert err.value.position == 6


@pytest.mark.parametrize(
    "text",
    [
        "u*v + 3",
        "u - v - 1/2",
        "-u^2 + sin(v)*cos(u)",
        "sqrt(u^2 + 1)/(v + 2)",
        "exp(u/(v^2 + 1)) - 0.5*u*v",
        "u/(v*u)",
        "(u + v)^3*u",
        "u^(-2) + 2/3*v",
    ],
)
def test_print_parse_round_trip(text):
    e = parse(text, UV)
    assert parse(to_text(e), UV) == e
    s = simplify(e)
    assert parse(to_text(s), UV) == s


# ---------------------------------------------------------------------------
# evaluation


def test_evaluate_polynomial():
    e = parse("u^2 + v", UV)
    assert ev(e, u=2.0, v=1.0) == 5.0


def test_evaluate_division_by_zero():
    e = parse("u/v", UV)
    with pytest.raises(DomainError):
        ev(e, u=1.0, v=0.0)


def test_evaluate_elementary_constants():
    e = parse("exp(0) + cos(0)", ())
    assert ev(e) == 2.0


def test_evaluate_missing_symbol():
    with pytest.raises(MissingSymbolError):
        ev(parse("u + v", UV), u=1.0)


def test_evaluate_negative_sqrt():
    with pytest.raises(DomainError):
        ev(parse("sqrt(u)", UV), u=-1.0, v=0.0)


# ---------------------------------------------------------------------------
# differentiation


def test_derivative_product_rule():
    e = parse("u*v + 3", UV)
    assert differentiate(e, "u") == Sym("v")


def test_derivative_of_constant():
    assert differentiate(parse("7/3", UV), "u") == Const(Fraction(0))


def test_derivative_matches_central_difference():
    e = parse("sin(u)*u^2", UV)
    d = differentiate(e, "u")
    h = 1e-6
    fd = (ev(e, u=1.0 + h, v=0.0) - ev(e, u=1.0 - h, v=0.0)) / (2 * h)
    assert abs(ev(d, u=1.0, v=0.0) - fd) <= 1e-8


def test_derivative_external_constant():
    e = parse("c*u", ("c", "u"))
    assert differentiate(e, "u") == Sym("c")


# ---------------------------------------------------------------------------
# randomized oracles

_CORPUS_NAMES = ("u", "v", "w")


def _random_expression(rng, depth):
    """Random tree kept away from domain trouble: denominators and sqrt
    arguments are offset squares."""
    if depth == 0 or rng.uniform() < 0.25:
        if rng.uniform() < 0.4:
            return Const(Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 5))))
        return Sym(_CORPUS_NAMES[int(rng.integers(0, len(_CORPUS_NAMES)))])
    kind = int(rng.integers(0, 6))
    if kind == 0:
        return Add((_random_expression(rng, depth - 1), _random_expression(rng, depth - 1)))
    if kind == 1:
        return Mul((_random_expression(rng, depth - 1), _random_expression(rng, depth - 1)))
    if kind == 2:
        return Pow(_random_expression(rng, depth - 1), int(rng.integers(1, 4)))
    if kind == 3:
        safe_den = Add((Const(Fraction(2)), Pow(_random_expression(rng, depth - 1), 2)))
        return Div(_random_expression(rng, depth - 1), safe_den)
    if kind == 4:
        name = ("sin", "cos")[int(rng.integers(0, 2))]
        return Func(name, _random_expression(rng, depth - 1))
    safe_arg = Add((Const(Fraction(1)), Pow(_random_expression(rng, depth - 2 if depth > 1 else 0), 2)))
    return Func("sqrt", safe_arg)


def test_symbolic_derivative_vs_finite_difference_corpus():
    rng = np.random.default_rng(20240817)
    h = 1e-6
    checked = 0
    while checked < 1000:
        e = _random_expression(rng, 3)
        name = _CORPUS_NAMES[int(rng.integers(0, len(_CORPUS_NAMES)))]
        d = differentiate(e, name)
        env = {n: float(x) for n, x in zip(_CORPUS_NAMES, rng.uniform(-1, 1, len(_CORPUS_NAMES)))}
        try:
            up = evaluate(e, {**env, name: env[name] + h})
            dn = evaluate(e, {**env, name: env[name] - h})
            exact = evaluate(d, env)
        except DomainError:
            continue
        fd = (up - dn) / (2 * h)
        scale = max(1.0, abs(exact), abs(fd))
        assert abs(exact - fd) / scale <= 1e-6, to_text(e)
        checked += 1


def test_mixed_partials_commute_on_corpus():
    rng = np.random.default_rng(7)
    for _ in range(200):
        e = _random_expression(rng, 3)
        duv = differentiate(differentiate(e, "u"), "v")
        dvu = differentiate(differentiate(e, "v"), "u")
        if duv == dvu:
            continue
        dev = deviation_at_random_points(duv, dvu, _CORPUS_NAMES, rng, points=6)
        assert dev <= 1e-10, to_text(e)


def test_derivative_linearity_on_corpus():
    rng = np.random.default_rng(99)
    for _ in range(200):
        e1 = _random_expression(rng, 2)
        e2 = _random_expression(rng, 2)
        a = Const(Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 4))))
        b = Const(Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 4))))
        lhs = simplify(differentiate(Add((Mul((a, e1)), Mul((b, e2)))), "u"))
        rhs = simplify(Add((Mul((a, differentiate(e1, "u"))), Mul((b, differentiate(e2, "u"))))))
        if lhs == rhs:
            continue
        dev = deviation_at_random_points(lhs, rhs, _CORPUS_NAMES, rng, points=6)
        assert dev <= 1e-10


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2 ** 63 - 1))
def test_simplify_is_idempotent(seed):
    rng = np.random.default_rng(seed)
    e = _random_expression(rng, 3)
    s = simplify(e)
    assert simplify(s) == s


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 63 - 1))
def test_simplify_preserves_value(seed):
    rng = np.random.default_rng(seed)
    e = _random_expression(rng, 3)
    dev = deviation_at_random_points(e, simplify(e), _CORPUS_NAMES, rng, points=6)
    assert dev <= 1e-10


def test_collects_identical_monomials():
    e = parse("2*u*v + 3*v*u - u*v", UV)
    assert simplify(e) == Mul((Const(Fraction(4)), Sym("u"), Sym("v")))


def test_equal_at_random_points_interface():
    rng = np.random.default_rng(0)
    same, dev = equal_at_random_points(parse("(u + v)^2", UV), parse("u^2 + 2*u*v + v^2", UV), UV, rng)
    assert same and dev <= 1e-10
    differ, dev2 = equal_at_random_points(parse("u", UV), parse("v", UV), UV, rng)
    assert not differ and dev2 > 1e-3


# ---------------------------------------------------------------------------
# frames


def test_frame_validation():
    f = CoordinateFrame(("u1", "u2", "u3"), 1)
    assert f.dim == 3 and f.base_names() == ("u1",) and f.fibre_names() == ("u2", "u3")
    with pytest.raises(ValueError):
        CoordinateFrame(("u1", "u1"), 1)
    with pytest.raises(ValueError):
        CoordinateFrame(("u1", "u2"), 3)
    with pytest.raises(ValueError):
        CoordinateFrame(("sin", "u2"), 1)
