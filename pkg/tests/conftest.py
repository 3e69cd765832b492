"""Shared fixtures: frames, the round-sphere chart connection, and the
metric-to-Christoffel helper used to derive it (test-only, not public API)."""
from fractions import Fraction

import pytest

from jetgeo import expr
from jetgeo.connections import Connection
from jetgeo.expr import Const, CoordinateFrame


def levi_civita_connection(metric, frame):
    """Levi-Civita Christoffels of a symbolic metric:
    Γ_a{}^c{}_b = (1/2) g^{cd} (∂_a g_{db} + ∂_b g_{da} - ∂_d g_{ab})."""
    l = frame.dim
    names = frame.names
    inv = expr.matrix_inverse([list(row) for row in metric])
    half = Const(Fraction(1, 2))
    entries = {}
    for a in range(l):
        for b in range(a, l):
            for c in range(l):
                terms = []
                for d in range(l):
                    bracket = (
                        expr.differentiate(metric[d][b], names[a])
                        + expr.differentiate(metric[d][a], names[b])
                        - expr.differentiate(metric[a][b], names[d])
                    )
                    terms.append(inv[c][d] * bracket)
                e = expr.simplify(half * expr.Add(tuple(terms)))
                if not expr.is_zero(e):
                    entries[(a + 1, b + 1, c + 1)] = e
    return Connection(frame, entries)


def sphere_metric(frame):
    """Round metric of the unit sphere in a stereographic chart:
    g = 4 (1 + u1^2 + u2^2)^-2 δ."""
    conf = expr.parse("4/(1 + u1^2 + u2^2)^2", frame)
    zero = Const(Fraction(0))
    return [[conf, zero], [zero, conf]]


@pytest.fixture(scope="session")
def sphere_frame():
    return CoordinateFrame(("u1", "u2"), 1)


@pytest.fixture(scope="session")
def sphere_connection(sphere_frame):
    return levi_civita_connection(sphere_metric(sphere_frame), sphere_frame)
