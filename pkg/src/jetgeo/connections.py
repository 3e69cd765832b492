"""Torsion-free linear connections and their projective/Grassmannian structure.

A connection is a table of Christoffel expressions ``G[A]^C[B]`` over a
coordinate frame, stored for the symmetric lower pair A <= B only, so
torsion-freeness holds by construction.  On top of that this module
implements:

* the projective change of connection and the Thomas projective
  invariants (the classical trace-adjusted combinations);
* the four invariant coefficient families of the equation of
  unparametrized totally geodesic submanifolds for a base/fibre split n
  (base indices 1..n, fibre indices n+1..l);
* the general admissible shift between connections sharing those
  invariants, parametrized by the free functions that survive the
  delta-identity contractions.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from . import expr
from .errors import (
    BadSplitError,
    DimensionMismatchError,
    InconsistentPerturbationError,
    SpecLoadError,
)
from .expr import Const, CoordinateFrame


_ZERO = Const(Fraction(0))


@dataclass(frozen=True)
class Connection:
    """Symmetric Christoffel table Γ_A{}^C{}_B over a frame.

    `christoffel` maps (A, B, C), 1-based with A <= B, to the expression
    of Γ_A{}^C{}_B; absent entries are zero.  Entries may only use the
    frame's coordinates (they are functions on the underlying manifold).
    """

    frame: CoordinateFrame
    christoffel: Mapping
    singular_points: tuple = ()

    def __post_init__(self):
        table = {}
        l = self.frame.dim
        allowed = set(self.frame.names)
        for (a, b, c), e in dict(self.christoffel).items():
            if not (1 <= a <= l and 1 <= b <= l and 1 <= c <= l):
                raise DimensionMismatchError(f"christoffel index ({a},{b},{c}) out of range 1..{l}")
            if a > b:
                raise SpecLoadError("christoffel storage keys must have A <= B")
            bad = expr.symbols_of(e) - allowed
            if bad:
                raise SpecLoadError(f"christoffel entry uses non-frame symbols {sorted(bad)}")
            if not expr.is_zero(e):
                table[(a, b, c)] = e
        object.__setattr__(self, "christoffel", table)
        object.__setattr__(self, "singular_points", tuple(tuple(p) for p in self.singular_points))

    @classmethod
    def zero(cls, frame):
        return cls(frame, {})

    @classmethod
    def from_entries(cls, frame, entries, singular_points=()):
        """Build from a mapping (A, B, C) -> expression with arbitrary
        lower-pair order; conflicting duplicates are rejected."""
        table = {}
        for (a, b, c), e in entries.items():
            key = (min(a, b), max(a, b), c)
            if key in table and table[key] != e:
                raise SpecLoadError(
                    f"components ({a},{b})^{c} and ({b},{a})^{c} listed with different expressions"
                )
            table[key] = e
        return cls(frame, table, singular_points)

    @property
    def dim(self):
        return self.frame.dim

    def gamma(self, a, c, b):
        """Γ_a{}^c{}_b as an expression (1-based indices)."""
        return self.christoffel.get((min(a, b), max(a, b), c), _ZERO)

    def christoffel_at(self, point):
        """All components at a point, as an (l, l, l) array indexed
        [A-1][C-1][B-1]."""
        l = self.dim
        env = self._env(point)
        out = np.zeros((l, l, l))
        for (a, b, c), e in self.christoffel.items():
            v = expr.evaluate(e, env)
            out[a - 1, c - 1, b - 1] = v
            out[b - 1, c - 1, a - 1] = v
        return out

    def _env(self, point):
        if len(point) != self.dim:
            raise DimensionMismatchError(
                f"point of length {len(point)} for frame of dimension {self.dim}"
            )
        return {name: float(v) for name, v in zip(self.frame.names, point)}

    def map_entries(self, f):
        return Connection(
            self.frame,
            {key: f(e) for key, e in self.christoffel.items()},
            self.singular_points,
        )


@dataclass(frozen=True)
class ProjInvariants:
    """Thomas projective invariants Π_A{}^C{}_B, keyed (A, C, B)."""

    frame: CoordinateFrame
    pi: Mapping

    def component(self, a, c, b):
        return self.pi.get((a, c, b), _ZERO)

    def at(self, point):
        l = self.frame.dim
        env = {name: float(v) for name, v in zip(self.frame.names, point)}
        out = np.zeros((l, l, l))
        for (a, c, b), e in self.pi.items():
            out[a - 1, c - 1, b - 1] = expr.evaluate(e, env)
        return out

    def trace_deviation(self, point):
        """max_A |Π_A{}^F{}_F| at the point; identically zero in exact
        arithmetic."""
        table = self.at(point)
        return float(np.abs(np.einsum("aff->a", table)).max())


@dataclass(frozen=True)
class GrassInvariants:
    """The four coefficient families of the totally geodesic equation.

    Index letters: base (Greek-role) indices run 1..n, fibre (Latin-role)
    indices run n+1..l.  Families, keyed exactly as displayed:

    * order0[(lam, k, xi)]            = Γ_lam{}^k{}_xi
    * order1[(lam, k, i, beta, xi)]   = δ_xi^beta Γ_lam{}^k{}_i
                                        + δ_lam^beta Γ_i{}^k{}_xi
                                        - δ_i^k Γ_lam{}^beta{}_xi
    * order2[(j, k, i, al, be, lam, xi)] = δ_lam^al δ_xi^be Γ_j{}^k{}_i
                                        - δ_xi^al δ_i^k Γ_lam{}^be{}_j
                                        - δ_lam^al δ_i^k Γ_j{}^be{}_xi
    * order3[(j, beta, i)]            = Γ_j{}^beta{}_i

    The second-order family is one matching per quadratic monomial of the
    equation; the well-defined coefficient of the monomial u^j_al * u^i_be
    is the symmetrization over the simultaneous swap (j, al) <-> (i, be),
    which is what `invariants_match` compares.
    """

    frame: CoordinateFrame
    n: int
    order0: Mapping
    order1: Mapping
    order2: Mapping
    order3: Mapping

    def at(self, point):
        env = {name: float(v) for name, v in zip(self.frame.names, point)}
        return {
            name: {key: expr.evaluate(e, env) for key, e in family.items()}
            for name, family in (
                ("order0", self.order0),
                ("order1", self.order1),
                ("order2", self.order2),
                ("order3", self.order3),
            )
        }

    def second_order_symmetrized_at(self, point):
        """Coefficients of the quadratic monomials: order2 symmetrized over
        the simultaneous swap of the two derivative slots."""
        env = {name: float(v) for name, v in zip(self.frame.names, point)}
        raw = {key: expr.evaluate(e, env) for key, e in self.order2.items()}
        return {
            (j, k, i, al, be, lam, xi): v + raw[(i, k, j, be, al, lam, xi)]
            for (j, k, i, al, be, lam, xi), v in raw.items()
        }


def projective_shift(g, phi):
    """Connection Γ' with Γ - Γ' = δ^C_A Φ_B + δ^C_B Φ_A.

    Φ is one expression per coordinate; Γ' has the same unparametrized
    geodesics as Γ.
    """
    l = g.dim
    if len(phi) != l:
        raise DimensionMismatchError(f"phi has length {len(phi)}, expected {l}")
    entries = {}
    for a in range(1, l + 1):
        for b in range(a, l + 1):
            for c in range(1, l + 1):
                delta = _ZERO
                if c == a:
                    delta = delta + phi[b - 1]
                if c == b:
                    delta = delta + phi[a - 1]
                if delta is _ZERO and (a, b, c) not in g.christoffel:
                    continue
                entries[(a, b, c)] = expr.simplify(g.gamma(a, c, b) - delta)
    return Connection(g.frame, entries, g.singular_points)


def thomas_pi(g):
    """Thomas projective invariants of g.

    Π_A{}^C{}_B = Γ_A{}^C{}_B - (Γ_A{}^F{}_F δ^C_B + Γ_B{}^F{}_F δ^C_A)/(l+1);
    unchanged under any projective shift, and trace-free in (C, B).
    """
    l = g.dim
    trace = [
        expr.simplify(expr.Add(tuple(g.gamma(a, f, f) for f in range(1, l + 1))))
        for a in range(1, l + 1)
    ]
    scale = Const(Fraction(1, l + 1))
    pi = {}
    for a in range(1, l + 1):
        for b in range(1, l + 1):
            for c in range(1, l + 1):
                e = g.gamma(a, c, b)
                correction = _ZERO
                if c == b:
                    correction = correction + trace[a - 1]
                if c == a:
                    correction = correction + trace[b - 1]
                e = expr.simplify(e - scale * correction)
                if not (isinstance(e, Const) and e.value == 0):
                    pi[(a, c, b)] = e
    return ProjInvariants(g.frame, pi)


def _check_split(g, n):
    if not 1 <= n < g.dim:
        raise BadSplitError(f"split n={n} invalid for dimension {g.dim}")


def grass_invariants(g, n):
    """The four invariant families of g for base/fibre split n."""
    _check_split(g, n)
    l = g.dim
    base = range(1, n + 1)
    fibre = range(n + 1, l + 1)

    order0 = {
        (lam, k, xi): g.gamma(lam, k, xi) for lam in base for k in fibre for xi in base
    }
    order1 = {}
    for lam in base:
        for k in fibre:
            for i in fibre:
                for beta in base:
                    for xi in base:
                        e = _ZERO
                        if beta == xi:
                            e = e + g.gamma(lam, k, i)
                        if beta == lam:
                            e = e + g.gamma(i, k, xi)
                        if i == k:
                            e = e - g.gamma(lam, beta, xi)
                        order1[(lam, k, i, beta, xi)] = expr.simplify(e)
    order2 = {}
    for j in fibre:
        for k in fibre:
            for i in fibre:
                for al in base:
                    for be in base:
                        for lam in base:
                            for xi in base:
                                e = _ZERO
                                if al == lam and be == xi:
                                    e = e + g.gamma(j, k, i)
                                if al == xi and k == i:
                                    e = e - g.gamma(lam, be, j)
                                if al == lam and k == i:
                                    e = e - g.gamma(j, be, xi)
                                order2[(j, k, i, al, be, lam, xi)] = expr.simplify(e)
    order3 = {
        (j, beta, i): g.gamma(j, beta, i) for j in fibre for beta in base for i in fibre
    }
    return GrassInvariants(g.frame, n, order0, order1, order2, order3)


def grass_shift(g, n, psi, chi=None):
    """Connection Γ' related to g by the admissible invariant-preserving
    differences for split n.

    Contracting the delta-identities of the relations between two
    connections with equal invariants leaves exactly these free functions:

    * psi: n functions; Γ - Γ' picks up δ^beta_lam ψ_xi + δ^beta_xi ψ_lam
      on the pure base block and δ^k_i ψ_lam on the mixed block with fibre
      upper index (any n).
    * chi: l - n functions, admissible only for n = 1; Γ - Γ' picks up
      δ^beta_lam χ_i on the mixed block with base upper index and
      δ^k_j χ_i + δ^k_i χ_j on the pure fibre block.  For n >= 2 the
      contracted identities force these differences to vanish.

    For n = 1 the combined (psi, chi) shift is exactly the projective
    shift by Φ = (psi_1, chi_2, ..., chi_l).
    """
    _check_split(g, n)
    l = g.dim
    m = l - n
    if len(psi) != n:
        raise DimensionMismatchError(f"psi has length {len(psi)}, expected {n}")
    if chi is None:
        chi = [_ZERO] * m
    if len(chi) != m:
        raise DimensionMismatchError(f"chi has length {len(chi)}, expected {m}")
    if n > 1 and any(not expr.is_zero(c) for c in chi):
        raise InconsistentPerturbationError(
            "fibre-block differences must vanish for n >= 2; only psi is free"
        )

    def diff(a, c, b):
        # Γ - Γ' on each block, 1-based indices; a <= b not assumed here.
        a_base, b_base, c_base = a <= n, b <= n, c <= n
        e = _ZERO
        if a_base and b_base and c_base:
            if c == a:
                e = e + psi[b - 1]
            if c == b:
                e = e + psi[a - 1]
        elif a_base != b_base:
            lam, i = (a, b) if a_base else (b, a)
            if c_base:
                if c == lam:
                    e = e + chi[i - n - 1]
            else:
                if c == i:
                    e = e + psi[lam - 1]
        elif not (a_base or b_base or c_base):
            if c == a:
                e = e + chi[b - n - 1]
            if c == b:
                e = e + chi[a - n - 1]
        return e

    entries = {}
    for a in range(1, l + 1):
        for b in range(a, l + 1):
            for c in range(1, l + 1):
                d = diff(a, c, b)
                if d is _ZERO and (a, b, c) not in g.christoffel:
                    continue
                entries[(a, b, c)] = expr.simplify(g.gamma(a, c, b) - d)
    return Connection(g.frame, entries, g.singular_points)


def invariants_match(inv1, inv2, rng, points=12, tol=1e-10):
    """Numeric equality of two invariant sets at random base points.

    The zeroth, first and third families compare entrywise; the second
    compares after symmetrizing over the two derivative slots.  Returns
    (equal, max deviation).
    """
    if inv1.frame.names != inv2.frame.names or inv1.n != inv2.n:
        raise DimensionMismatchError("invariant sets live on different frames or splits")
    names = inv1.frame.names
    worst = 0.0
    for _ in range(points):
        point = rng.uniform(-1.0, 1.0, len(names))
        a = inv1.at(point)
        b = inv2.at(point)
        for fam in ("order0", "order1", "order3"):
            for key, v in a[fam].items():
                worst = max(worst, abs(v - b[fam][key]))
        s1 = inv1.second_order_symmetrized_at(point)
        s2 = inv2.second_order_symmetrized_at(point)
        for key, v in s1.items():
            worst = max(worst, abs(v - s2[key]))
    return worst <= tol, worst


# ---------------------------------------------------------------------------
# JSON spec format


def connection_from_dict(data):
    """Load a connection from the JSON spec structure.

    {"coords": [...], "n": 1,
     "christoffel": [{"lower": [A, B], "upper": C, "expr": "..."}],
     "singular_points": [[...], ...]}
    """
    try:
        coords = tuple(data["coords"])
        n = int(data.get("n", 1))
        raw = data.get("christoffel", [])
    except (KeyError, TypeError) as e:
        raise SpecLoadError(f"malformed connection spec: {e}") from None
    frame = CoordinateFrame(coords, n)
    entries = {}
    for item in raw:
        try:
            a, b = (int(v) for v in item["lower"])
            c = int(item["upper"])
            text = item["expr"]
        except (KeyError, TypeError, ValueError) as e:
            raise SpecLoadError(f"malformed christoffel item {item!r}: {e}") from None
        e = expr.parse(text, frame)
        key = (min(a, b), max(a, b), c)
        if key in entries and entries[key] != e:
            raise SpecLoadError(
                f"components ({a},{b})^{c} and ({b},{a})^{c} listed with different expressions"
            )
        entries[key] = e
    singular = tuple(tuple(float(x) for x in p) for p in data.get("singular_points", []))
    return Connection(frame, entries, singular)


def connection_to_dict(g):
    return {
        "coords": list(g.frame.names),
        "n": g.frame.split,
        "christoffel": [
            {"lower": [a, b], "upper": c, "expr": expr.to_text(e)}
            for (a, b, c), e in sorted(g.christoffel.items())
        ],
        "singular_points": [list(p) for p in g.singular_points],
    }


def load_connection(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise SpecLoadError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}") from None
    return connection_from_dict(data)
