"""Coordinate models of jets of submanifolds and jets of sections.

Two finite coordinate records:

* SubJet — a point of the order-r jet space of n-dimensional submanifolds
  in a divided chart: base values (u^1..u^l) and derivative values u^i_sigma
  for fibre indices i and multi-indices sigma over the base directions.
* SecJet — a point of the order-r jet of sections of a trivial bundle over
  an n-dimensional parameter space: (x^lambda, u^A, u^A_{x sigma}).

Plus the maps between and on them: prolongation of a parametrized map,
the covering projections that forget the parametrization (orders 1 and 2),
the affine action on the parameter space, and general reparametrization.

Multi-indices are stored sorted; the documented enumeration order used by
serialization is plain lexicographic over the sorted tuples, e.g. for
n = 2, r = 2: (1), (1,1), (1,2), (2), (2,2).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from . import expr
from .errors import DimensionMismatchError, SingularJacobianError, SpecLoadError
from .expr import CoordinateFrame

_DET_THRESHOLD = 1e-12


def multi_indices(n, r):
    """All sorted multi-indices over 1..n with 1 <= |sigma| <= r, in the
    serialization order."""
    out = []
    for k in range(1, r + 1):
        out.extend(combinations_with_replacement(range(1, n + 1), k))
    return tuple(sorted(out))


def mi_extend(sigma, lam):
    return tuple(sorted(sigma + (lam,)))


def _check_derivs(derivs, first_indices, n, r, what):
    expected = {(i, sigma) for i in first_indices for sigma in multi_indices(n, r)}
    got = set(derivs)
    if got != expected:
        missing = sorted(expected - got)[:4]
        extra = sorted(got - expected)[:4]
        raise SpecLoadError(
            f"{what} derivative table incomplete or overfull "
            f"(missing {missing}, unexpected {extra})"
        )
    for (_, sigma) in got:
        if tuple(sorted(sigma)) != tuple(sigma):
            raise SpecLoadError(f"{what} multi-index {sigma} is not sorted")


@dataclass(frozen=True, eq=True)
class SubJet:
    """Jet of an n-dimensional submanifold, order r, in a divided chart.

    base holds (u^1..u^{n+m}); derivs maps (i, sigma) -> value for fibre
    indices i in n+1..n+m, 1 <= |sigma| <= r.
    """

    n: int
    m: int
    r: int
    base: tuple
    derivs: dict

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(float(v) for v in self.base))
        object.__setattr__(
            self, "derivs", {(i, tuple(s)): float(v) for (i, s), v in self.derivs.items()}
        )
        if len(self.base) != self.n + self.m:
            raise DimensionMismatchError(
                f"base has {len(self.base)} values for n+m={self.n + self.m}"
            )
        _check_derivs(self.derivs, range(self.n + 1, self.n + self.m + 1), self.n, self.r, "subjet")

    @property
    def l(self):
        return self.n + self.m

    def u(self, a):
        return self.base[a - 1]

    def d(self, i, sigma):
        return self.derivs[(i, tuple(sorted(sigma)))]

    def first_matrix(self):
        """u^i_lambda as an (m, n) array, fibre rows, base columns."""
        return np.array(
            [[self.d(i, (lam,)) for lam in range(1, self.n + 1)]
             for i in range(self.n + 1, self.l + 1)]
        )

    def second_array(self):
        """u^i_{lambda xi} as an (m, n, n) array, symmetric in the last two."""
        out = np.zeros((self.m, self.n, self.n))
        for kk, i in enumerate(range(self.n + 1, self.l + 1)):
            for lam in range(1, self.n + 1):
                for xi in range(1, self.n + 1):
                    out[kk, lam - 1, xi - 1] = self.d(i, (lam, xi))
        return out

    @classmethod
    def order1(cls, n, m, base, first):
        first = np.asarray(first, dtype=float)
        derivs = {
            (n + 1 + kk, (lam,)): first[kk, lam - 1]
            for kk in range(m)
            for lam in range(1, n + 1)
        }
        return cls(n, m, 1, base, derivs)

    def with_second(self, second):
        """Extend an order-1 jet by a symmetric (m, n, n) second-derivative
        block."""
        second = np.asarray(second, dtype=float)
        derivs = dict(self.derivs)
        for kk in range(self.m):
            for lam in range(1, self.n + 1):
                for xi in range(lam, self.n + 1):
                    derivs[(self.n + 1 + kk, (lam, xi))] = second[kk, lam - 1, xi - 1]
        return SubJet(self.n, self.m, 2, self.base, derivs)

    def truncate(self, r):
        derivs = {key: v for key, v in self.derivs.items() if len(key[1]) <= r}
        return SubJet(self.n, self.m, r, self.base, derivs)


@dataclass(frozen=True, eq=True)
class SecJet:
    """Jet of a section over an n-dimensional parameter space, order r.

    x holds the parameter point, u the full fibre point (u^1..u^l), and
    derivs maps (A, sigma) -> value for A in 1..l.
    """

    n: int
    l: int
    r: int
    x: tuple
    u: tuple
    derivs: dict

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "u", tuple(float(v) for v in self.u))
        object.__setattr__(
            self, "derivs", {(a, tuple(s)): float(v) for (a, s), v in self.derivs.items()}
        )
        if len(self.x) != self.n:
            raise DimensionMismatchError(f"x has {len(self.x)} values for n={self.n}")
        if len(self.u) != self.l:
            raise DimensionMismatchError(f"u has {len(self.u)} values for l={self.l}")
        _check_derivs(self.derivs, range(1, self.l + 1), self.n, self.r, "secjet")

    @property
    def m(self):
        return self.l - self.n

    def d(self, a, sigma):
        return self.derivs[(a, tuple(sorted(sigma)))]

    def first_matrix(self):
        """u^A_{x lambda} as an (l, n) array."""
        return np.array(
            [[self.d(a, (lam,)) for lam in range(1, self.n + 1)] for a in range(1, self.l + 1)]
        )

    def second_array(self):
        """u^A_{x lambda x xi} as an (l, n, n) array."""
        out = np.zeros((self.l, self.n, self.n))
        for a in range(1, self.l + 1):
            for lam in range(1, self.n + 1):
                for xi in range(1, self.n + 1):
                    out[a - 1, lam - 1, xi - 1] = self.d(a, (lam, xi))
        return out

    def top_block(self):
        """The base-direction block (u^xi_{x lambda}), xi, lambda in 1..n."""
        return self.first_matrix()[: self.n, :]

    def top_det(self):
        return float(np.linalg.det(self.top_block()))

    def is_immersion(self, tol=1e-9):
        """Full Jacobian rank n; membership in the immersed-jet subset."""
        return np.linalg.matrix_rank(self.first_matrix(), tol=tol) == self.n

    @classmethod
    def order1(cls, n, l, x, u, first):
        first = np.asarray(first, dtype=float)
        derivs = {(a, (lam,)): first[a - 1, lam - 1] for a in range(1, l + 1) for lam in range(1, n + 1)}
        return cls(n, l, 1, x, u, derivs)

    def with_second(self, second):
        second = np.asarray(second, dtype=float)
        derivs = dict(self.derivs)
        for a in range(1, self.l + 1):
            for lam in range(1, self.n + 1):
                for xi in range(lam, self.n + 1):
                    derivs[(a, (lam, xi))] = second[a - 1, lam - 1, xi - 1]
        return SecJet(self.n, self.l, 2, self.x, self.u, derivs)

    def truncate(self, r):
        derivs = {key: v for key, v in self.derivs.items() if len(key[1]) <= r}
        return SecJet(self.n, self.l, r, self.x, self.u, derivs)


@dataclass(frozen=True)
class ParamMap:
    """An n-parameter family of expressions: a local section x -> s(x).

    frame names the parameters; components are the l fibre expressions.
    """

    frame: CoordinateFrame
    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        allowed = set(self.frame.names)
        for c in self.components:
            bad = expr.symbols_of(c) - allowed
            if bad:
                raise SpecLoadError(f"component uses non-parameter symbols {sorted(bad)}")

    @property
    def n(self):
        return self.frame.dim

    @property
    def l(self):
        return len(self.components)

    def jacobian_at(self, x):
        env = dict(zip(self.frame.names, map(float, x)))
        return np.array(
            [[expr.evaluate(expr.differentiate(c, name), env) for name in self.frame.names]
             for c in self.components]
        )

    def is_immersion_at(self, x, tol=1e-9):
        return np.linalg.matrix_rank(self.jacobian_at(x), tol=tol) == self.n


@dataclass(frozen=True)
class AffineMap:
    """x -> a x + b on the parameter space, det(a) != 0."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape != (a.shape[0],):
            raise DimensionMismatchError("affine map needs a square matrix and a matching vector")
        if abs(np.linalg.det(a)) < _DET_THRESHOLD:
            raise SingularJacobianError("affine map matrix is singular")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self):
        return self.a.shape[0]

    def apply(self, x):
        return self.a @ np.asarray(x, dtype=float) + self.b

    def compose(self, other):
        """self after other: x -> self(other(x))."""
        return AffineMap(self.a @ other.a, self.a @ other.b + self.b)

    def inverse(self):
        inv = np.linalg.inv(self.a)
        return AffineMap(inv, -inv @ self.b)


# ---------------------------------------------------------------------------
# prolongation


def prolong(s, x, r):
    """Order-r jet of the parametrized map s at the parameter point x.

    Fills u^A = s^A(x) and u^A_{x sigma} = the |sigma|-th partials of s^A,
    computed symbolically and evaluated at x.
    """
    if len(x) != s.n:
        raise DimensionMismatchError(f"point has {len(x)} parameters, map expects {s.n}")
    env = dict(zip(s.frame.names, map(float, x)))
    u = tuple(expr.evaluate(c, env) for c in s.components)
    derivs = {}
    cache = {}
    for a, comp in enumerate(s.components, start=1):
        cache[(a, ())] = comp
        for sigma in multi_indices(s.n, r):
            prefix, last = sigma[:-1], sigma[-1]
            parent = cache[(a, prefix)]
            d = expr.differentiate(parent, s.frame.names[last - 1])
            cache[(a, sigma)] = d
            derivs[(a, sigma)] = expr.evaluate(d, env)
    return SecJet(s.n, s.l, r, tuple(map(float, x)), u, derivs)


# ---------------------------------------------------------------------------
# covering projections


def _inverse_top_block(t):
    jac = t.top_block()
    scale = max(1.0, float(np.abs(jac).max())) ** t.n
    det = float(np.linalg.det(jac))
    if abs(det) < _DET_THRESHOLD * scale:
        raise SingularJacobianError(
            f"base-direction block determinant {det:.3e} below threshold; "
            "divided chart not concordant at this jet"
        )
    return np.linalg.solve(jac, np.eye(t.n))


def cover1(t):
    """Project an order->=1 section jet to the order-1 submanifold jet of
    its image.

    Base values copy u^A; first derivatives are u^j_xi = x^lambda_{u^xi}
    u^j_{x lambda} with (x^lambda_{u^xi}) the inverse of (u^xi_{x lambda}).
    """
    if t.r < 1:
        raise DimensionMismatchError("cover1 needs a jet of order >= 1")
    inv = _inverse_top_block(t)
    first = t.first_matrix()[t.n:, :] @ inv
    return SubJet.order1(t.n, t.m, t.u, first)


def cover2(t):
    """Project an order->=2 section jet to the order-2 submanifold jet of
    its image.

    Second derivatives follow the closed formula
    u^j_{xi eta} = u^j_{x lam x mu} x^lam_{u^xi} x^mu_{u^eta}
                 - u^j_{x lam} x^lam_{u^al} u^al_{x be x ga} x^ga_{u^xi} x^be_{u^eta},
    symmetric in (xi, eta).
    """
    if t.r < 2:
        raise DimensionMismatchError("cover2 needs a jet of order >= 2")
    inv = _inverse_top_block(t)  # inv[lam, xi] = x^lam_{u^xi}
    order1 = cover1(t)
    d1 = t.first_matrix()
    d2 = t.second_array()
    lat2 = d2[t.n:, :, :]
    top2 = d2[: t.n, :, :]
    term1 = np.einsum("jlm,lx,me->jxe", lat2, inv, inv)
    chain = np.einsum("jl,la->ja", d1[t.n:, :], inv)
    term2 = np.einsum("ja,abg,gx,be->jxe", chain, top2, inv, inv)
    second = term1 - term2
    second = 0.5 * (second + np.transpose(second, (0, 2, 1)))
    return order1.with_second(second)


def tangent_cover1(t, dx, du, dd):
    """Pushforward of a tangent vector at an order-1 section jet through
    cover1.

    Input components (dx over x^lambda, du over u^A, dd over u^A_{x lambda});
    the parameter directions are annihilated.  Returns (du_out over u^A,
    dd_out over u^j_alpha).
    """
    inv = _inverse_top_block(t)
    dd = np.asarray(dd, dtype=float)
    lat = t.first_matrix()[t.n:, :]
    dd_out = dd[t.n:, :] @ inv - np.einsum("jb,bx,la,xl->ja", lat, inv, inv, dd[: t.n, :])
    return np.asarray(du, dtype=float).copy(), dd_out


# ---------------------------------------------------------------------------
# actions on the parameter space


def affine_act(g, t):
    """Lift of (x, p) -> (g(x), p) to section jets of order <= 2.

    x moves by g; u^A is unchanged; derivatives transform by the constant
    inverse Jacobian: u^A_{x~ lam} = u^A_{x xi} (a^-1)^xi_lam and
    u^A_{x~ lam x~ be} = u^A_{x al x xi} (a^-1)^al_lam (a^-1)^xi_be.
    """
    if g.n != t.n:
        raise DimensionMismatchError("affine map and jet disagree on parameter dimension")
    if t.r > 2:
        raise DimensionMismatchError("affine action implemented for order <= 2")
    ainv = np.linalg.inv(g.a)
    first = t.first_matrix() @ ainv
    out = SecJet.order1(t.n, t.l, g.apply(t.x), t.u, first)
    if t.r == 2:
        second = np.einsum("Cax,al,xb->Clb", t.second_array(), ainv, ainv)
        out = out.with_second(second)
    return out


def reparam_act(phi, x_frame, t):
    """Lift of a smooth reparametrization x~ = phi(x) to order-2 section
    jets by the chain rule.

    phi is one expression per parameter over x_frame.  Unlike the affine
    action the lift carries the inhomogeneous second-derivative term of
    phi; for affine phi it reduces to `affine_act`.
    """
    names = x_frame.names if isinstance(x_frame, CoordinateFrame) else tuple(x_frame)
    if len(phi) != t.n or len(names) != t.n:
        raise DimensionMismatchError("reparametrization arity does not match the jet")
    env = dict(zip(names, t.x))
    n = t.n
    jac = np.array(
        [[expr.evaluate(expr.differentiate(p, names[lam]), env) for lam in range(n)] for p in phi]
    )
    scale = max(1.0, float(np.abs(jac).max())) ** n
    if abs(np.linalg.det(jac)) < _DET_THRESHOLD * scale:
        raise SingularJacobianError("reparametrization Jacobian is singular at the jet")
    hess = np.array(
        [
            [
                [expr.evaluate(expr.differentiate(expr.differentiate(p, names[lam]), names[mu]), env)
                 for mu in range(n)]
                for lam in range(n)
            ]
            for p in phi
        ]
    )
    binv = np.linalg.solve(jac, np.eye(n))
    dbinv = -np.einsum("ag,gcb,cl->bal", binv, hess, binv)  # d(binv[a,l])/dx^b
    new_x = [expr.evaluate(p, env) for p in phi]
    first = t.first_matrix() @ binv
    out = SecJet.order1(t.n, t.l, new_x, t.u, first)
    if t.r >= 2:
        d1 = t.first_matrix()
        d2 = t.second_array()
        second = np.einsum("Aab,al,bm->Alm", d2, binv, binv) + np.einsum(
            "Aa,bal,bm->Alm", d1, dbinv, binv
        )
        second = 0.5 * (second + np.transpose(second, (0, 2, 1)))
        out = out.with_second(second)
    return out


# ---------------------------------------------------------------------------
# JSON formats


def jet_from_dict(data):
    kind = data.get("kind")
    try:
        if kind == "secjet":
            n, l, r = int(data["n"]), int(data["l"]), int(data["r"])
            derivs = {
                (int(item["A"]), tuple(int(s) for s in item["sigma"])): float(item["value"])
                for item in data["derivs"]
            }
            return SecJet(n, l, r, data["x"], data["u"], derivs)
        if kind == "subjet":
            n, m, r = int(data["n"]), int(data["m"]), int(data["r"])
            derivs = {
                (int(item["i"]), tuple(int(s) for s in item["sigma"])): float(item["value"])
                for item in data["derivs"]
            }
            return SubJet(n, m, r, data["u"], derivs)
    except (KeyError, TypeError, ValueError) as e:
        raise SpecLoadError(f"malformed jet spec: {e}") from None
    raise SpecLoadError(f"unknown jet kind {kind!r}")


def jet_to_dict(jet):
    if isinstance(jet, SecJet):
        return {
            "kind": "secjet",
            "n": jet.n,
            "l": jet.l,
            "r": jet.r,
            "x": list(jet.x),
            "u": list(jet.u),
            "derivs": [
                {"A": a, "sigma": list(sigma), "value": v}
                for (a, sigma), v in sorted(jet.derivs.items())
            ],
        }
    return {
        "kind": "subjet",
        "n": jet.n,
        "m": jet.m,
        "r": jet.r,
        "u": list(jet.base),
        "derivs": [
            {"i": i, "sigma": list(sigma), "value": v}
            for (i, sigma), v in sorted(jet.derivs.items())
        ],
    }


def load_jets(path):
    """Load a jet file: either one jet object or {"jets": [...]}."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise SpecLoadError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}") from None
    items = data["jets"] if isinstance(data, dict) and "jets" in data else [data]
    return [jet_from_dict(item) for item in items]
