"""Symmetry checks for the totally geodesic equations.

A map or vector field on first-order jet coordinates is a symmetry of the
equation exactly when it preserves the distinguished n-dimensional
distribution spanned by `geodesy.distribution_fields`.  This module checks
given candidates; it does not solve for the symmetry algebra.

Jet chart conventions (shared with the distribution rows):

* submanifold side: base coordinates u^1..u^l first, then derivative
  coordinates named "<fibre>_<lam>", fibre-major, base-minor;
* section side: parameter coordinates first, then u^1..u^l, then
  derivative coordinates named "<fibre>_x<lam>".
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr
from .errors import DimensionMismatchError, DomainError, SpecLoadError
from .expr import CoordinateFrame, Sym
from .geodesy import ddot_gamma_pro, distribution_fields, param_residual2, residual2
from .jets import SecJet, SubJet, affine_act, cover1, cover2, reparam_act
from .sampling import random_affine, random_secjet1, random_subjet1, spawn_rng


def subjet1_chart(frame, n):
    """Coordinate names of the order-1 submanifold jet chart."""
    names = list(frame.names)
    for fibre in frame.names[n:]:
        for lam in range(1, n + 1):
            names.append(f"{fibre}_{lam}")
    return tuple(names)


def secjet1_chart(x_frame, u_frame):
    """Coordinate names of the order-1 section jet chart."""
    names = list(x_frame.names) + list(u_frame.names)
    for fibre in u_frame.names:
        for lam in range(1, x_frame.dim + 1):
            names.append(f"{fibre}_x{lam}")
    return tuple(names)


def _subjet_values(p, chart):
    vals = list(p.base)
    for i in range(p.n + 1, p.l + 1):
        for lam in range(1, p.n + 1):
            vals.append(p.d(i, (lam,)))
    return dict(zip(chart, vals))


def _secjet_values(p, chart):
    vals = list(p.x) + list(p.u)
    for a in range(1, p.l + 1):
        for lam in range(1, p.n + 1):
            vals.append(p.d(a, (lam,)))
    return dict(zip(chart, vals))


@dataclass(frozen=True)
class JetMap:
    """Smooth map of order-1 jet coordinates, componentwise symbolic.

    kind is "subjet" or "secjet"; chart lists the coordinate names and
    components gives one expression per chart coordinate, in order.
    """

    kind: str
    n: int
    chart: tuple
    components: tuple

    def __post_init__(self):
        if self.kind not in ("subjet", "secjet"):
            raise SpecLoadError(f"unknown jet map kind {self.kind!r}")
        if len(self.components) != len(self.chart):
            raise DimensionMismatchError("one component per chart coordinate required")
        jac = tuple(
            tuple(expr.differentiate(comp, name) for name in self.chart)
            for comp in self.components
        )
        object.__setattr__(self, "_jacobian_exprs", jac)

    def apply(self, env):
        return np.array([expr.evaluate(c, env) for c in self.components])

    def jacobian_at(self, env):
        return np.array(
            [[expr.evaluate(d, env) for d in row] for row in self._jacobian_exprs]
        )


@dataclass(frozen=True)
class JetField:
    """Vector field on order-1 jet coordinates, componentwise symbolic."""

    kind: str
    n: int
    chart: tuple
    components: tuple

    def __post_init__(self):
        if self.kind not in ("subjet", "secjet"):
            raise SpecLoadError(f"unknown jet field kind {self.kind!r}")
        if len(self.components) != len(self.chart):
            raise DimensionMismatchError("one component per chart coordinate required")

    def at(self, env):
        return np.array([expr.evaluate(c, env) for c in self.components])


@dataclass(frozen=True)
class SymmetryReport:
    """Outcome of a symmetry check.  rows holds one (coordinates, residual)
    pair per sample, in sampling order."""

    passed: bool
    worst_residual: float
    samples_used: int
    skipped: int
    tol: float
    rows: tuple = ()

    def summary(self):
        k = sum(1 for _, r in self.rows if r <= self.tol) if self.rows else (
            self.samples_used if self.passed else 0
        )
        return f"{'PASS' if self.passed else 'FAIL'} {k}/{self.samples_used} tol={self.tol:g}"


def _span_residual(generators, vector):
    """Distance of the vector from the row span, scaled decision threshold
    handled by the caller.  Least squares against the generator rows."""
    sol, *_ = np.linalg.lstsq(generators.T, vector, rcond=None)
    return float(np.linalg.norm(generators.T @ sol - vector))


def _span_scale(generators):
    return max(1.0, float(np.linalg.norm(generators)))


# ---------------------------------------------------------------------------
# finite maps


def preserves_distribution(jmap, g, n, samples=25, tol=1e-8, seed=0, theta=None):
    """Whether the map carries the distinguished distribution into itself.

    At each sampled jet the generators are pushed through the map's
    Jacobian and tested for membership in the span of the generators at
    the image jet, by least squares.  Samples where the map or its
    Jacobian fails to evaluate are skipped and reported.
    """
    if theta is None and jmap.kind == "secjet":
        raise DimensionMismatchError("section-side distribution needs a parameter connection")
    l = g.dim
    m = l - n
    expected = l + m * n if jmap.kind == "subjet" else n + l + l * n
    if len(jmap.chart) != expected:
        raise DimensionMismatchError(
            f"map chart has {len(jmap.chart)} coordinates, expected {expected} "
            f"for the {jmap.kind} side of this connection"
        )
    rng = spawn_rng(seed, 0)
    worst = 0.0
    used = 0
    skipped = 0
    attempts = 0
    records = []
    while used < samples and attempts < 50 * samples:
        attempts += 1
        try:
            if jmap.kind == "subjet":
                p = random_subjet1(n, m, rng)
                env = _subjet_values(p, jmap.chart)
                rows = distribution_fields(g, p)
                image_vals = jmap.apply(env)
                jac = jmap.jacobian_at(env)
                q = SubJet.order1(n, m, image_vals[:l], image_vals[l:].reshape(m, n))
                rows_image = distribution_fields(g, q)
            else:
                p = random_secjet1(n, l, rng)
                env = _secjet_values(p, jmap.chart)
                rows = _pro_distribution_rows(g, theta, p)
                image_vals = jmap.apply(env)
                jac = jmap.jacobian_at(env)
                q = SecJet.order1(
                    n, l, image_vals[:n], image_vals[n:n + l],
                    image_vals[n + l:].reshape(l, n),
                )
                rows_image = _pro_distribution_rows(g, theta, q)
        except (DomainError, np.linalg.LinAlgError):
            skipped += 1
            continue
        scale = _span_scale(rows_image)
        local = max(_span_residual(rows_image, jac @ row) / scale for row in rows)
        records.append((tuple(env[name] for name in jmap.chart), local))
        worst = max(worst, local)
        used += 1
    return SymmetryReport(worst <= tol and used == samples, worst, used, skipped, tol,
                          tuple(records))


def _pro_distribution_rows(g, theta, p):
    """Generators of the parametrized-side distribution at an order-1
    section jet, rows over the section jet chart."""
    q2 = ddot_gamma_pro(g, theta, p)
    n, l = p.n, p.l
    rows = np.zeros((n, n + l + l * n))
    d1 = p.first_matrix()
    d2 = q2.second_array()
    for lam in range(n):
        rows[lam, lam] = 1.0
        rows[lam, n:n + l] = d1[:, lam]
        rows[lam, n + l:] = d2[:, :, lam].reshape(-1)
    return rows


def preserves_contact(jmap, samples=25, tol=1e-8, seed=0):
    """Whether a submanifold-side map preserves the full contact
    distribution (the span of all prolonged-graph tangents and all
    derivative directions)."""
    if jmap.kind != "subjet":
        raise DimensionMismatchError("contact check implemented for submanifold-side maps")
    n = jmap.n
    dim = len(jmap.chart)
    l = (dim + n * n) // (n + 1)  # dim = l + (l - n) n
    m = l - n
    rng = spawn_rng(seed, 0)
    worst = 0.0
    used = 0
    skipped = 0
    records = []
    while used < samples:
        p = random_subjet1(n, m, rng)
        env = _subjet_values(p, jmap.chart)
        try:
            vals = jmap.apply(env)
            jac = jmap.jacobian_at(env)
        except DomainError:
            skipped += 1
            if skipped > 50 * samples:
                break
            continue
        first_image = vals[l:].reshape(m, n)
        basis = np.zeros((n + m * n, dim))
        for lam in range(n):
            basis[lam, lam] = 1.0
            basis[lam, n:l] = p.first_matrix()[:, lam]
        for idx in range(m * n):
            basis[n + idx, l + idx] = 1.0
        local = 0.0
        for vec in basis:
            pushed = jac @ vec
            # contact forms at the image: du^j - u^j_lam du^lam
            for kk in range(m):
                omega = pushed[n + kk] - first_image[kk, :] @ pushed[:n]
                local = max(local, abs(omega))
        records.append((tuple(env[name] for name in jmap.chart), local))
        worst = max(worst, local)
        used += 1
    return SymmetryReport(worst <= tol and used == samples, worst, used, skipped, tol,
                          tuple(records))


# ---------------------------------------------------------------------------
# vector fields


def distribution_generator_expressions(g, n):
    """The distribution generators as symbolic vector fields over the
    order-1 jet chart, one tuple of components per base direction."""
    frame = g.frame
    l = frame.dim
    m = l - n
    chart = subjet1_chart(frame, n)

    def dsym(i, lam):
        return Sym(f"{frame.names[i - 1]}_{lam}")

    def dot_sym(a, k, xi):
        e = g.gamma(a, k, xi)
        for i in range(n + 1, l + 1):
            e = e + g.gamma(a, k, i) * dsym(i, xi)
        for beta in range(1, n + 1):
            inner = g.gamma(a, beta, xi)
            for i in range(n + 1, l + 1):
                inner = inner + g.gamma(a, beta, i) * dsym(i, xi)
            e = e - dsym(k, beta) * inner
        return expr.simplify(e)

    fields = []
    for lam in range(1, n + 1):
        comps = [expr.ZERO] * len(chart)
        comps[lam - 1] = expr.ONE
        for i in range(n + 1, l + 1):
            comps[i - 1] = dsym(i, lam)
        pos = l
        for k in range(n + 1, l + 1):
            for xi in range(1, n + 1):
                e = dot_sym(lam, k, xi)
                for j in range(n + 1, l + 1):
                    e = e + dsym(j, lam) * dot_sym(j, k, xi)
                comps[pos] = expr.simplify(expr.negate(e))
                pos += 1
        fields.append(JetField("subjet", n, chart, tuple(comps)))
    return fields


def commutator(f, x, chart):
    """[f, x] componentwise: f^d ∂_d x^c - x^d ∂_d f^c."""
    comps = []
    for c in range(len(chart)):
        e = expr.ZERO
        for d, name in enumerate(chart):
            e = e + f.components[d] * expr.differentiate(x.components[c], name)
            e = e - x.components[d] * expr.differentiate(f.components[c], name)
        comps.append(expr.simplify(e))
    return tuple(comps)


def field_preserves_distribution(f, g, n, samples=25, tol=1e-8, seed=0):
    """Infinitesimal version: the commutator of the field with each
    generator must stay in the distribution span at sampled jets."""
    l = g.dim
    m = l - n
    generators = distribution_generator_expressions(g, n)
    chart = generators[0].chart
    if f.chart != chart:
        raise DimensionMismatchError("field is not expressed over the jet chart of g")
    brackets = [commutator(f, x, chart) for x in generators]
    rng = spawn_rng(seed, 0)
    worst = 0.0
    used = 0
    skipped = 0
    records = []
    while used < samples:
        p = random_subjet1(n, m, rng)
        env = _subjet_values(p, chart)
        try:
            rows = distribution_fields(g, p)
            values = [np.array([expr.evaluate(c, env) for c in bracket]) for bracket in brackets]
        except DomainError:
            skipped += 1
            if skipped > 50 * samples:
                break
            continue
        scale = _span_scale(rows)
        local = max(_span_residual(rows, v) / scale for v in values)
        records.append((tuple(env[name] for name in chart), local))
        worst = max(worst, local)
        used += 1
    return SymmetryReport(worst <= tol and used == samples, worst, used, skipped, tol,
                          tuple(records))


# ---------------------------------------------------------------------------
# prolongation of point maps and point fields


def prolong_point_map(components, frame, n):
    """Lift a point transformation of the underlying manifold to the
    order-1 jet chart.

    Derivative coordinates transform by the graph chain rule: with
    T^A_lam = ∂F^A/∂u^lam + ∂F^A/∂u^i u^i_lam, the new derivatives are
    the fibre rows of T times the inverse of its base rows.
    """
    l = frame.dim
    if len(components) != l:
        raise DimensionMismatchError("one component per manifold coordinate required")
    m = l - n
    chart = subjet1_chart(frame, n)

    def dsym(i, lam):
        return Sym(f"{frame.names[i - 1]}_{lam}")

    total = [[None] * n for _ in range(l)]
    for a in range(l):
        for lam in range(1, n + 1):
            e = expr.differentiate(components[a], frame.names[lam - 1])
            for i in range(n + 1, l + 1):
                e = e + expr.differentiate(components[a], frame.names[i - 1]) * dsym(i, lam)
            total[a][lam - 1] = expr.simplify(e)
    base_block = [total[a] for a in range(n)]
    inv = expr.matrix_inverse(base_block)
    comps = list(components)
    for k in range(n, l):
        for mu in range(n):
            e = expr.ZERO
            for lam in range(n):
                e = e + total[k][lam] * inv[lam][mu]
            comps.append(expr.simplify(e))
    return JetMap("subjet", n, chart, tuple(comps))


def prolong_point_field(components, frame, n):
    """Lift a vector field of the underlying manifold to the order-1 jet
    chart: the derivative-slot components are D_lam(ξ^j) - u^j_mu D_lam(ξ^mu)
    with D_lam the graph total derivative."""
    l = frame.dim
    if len(components) != l:
        raise DimensionMismatchError("one component per manifold coordinate required")
    chart = subjet1_chart(frame, n)

    def dsym(i, lam):
        return Sym(f"{frame.names[i - 1]}_{lam}")

    def total_derivative(e, lam):
        out = expr.differentiate(e, frame.names[lam - 1])
        for i in range(n + 1, l + 1):
            out = out + dsym(i, lam) * expr.differentiate(e, frame.names[i - 1])
        return out

    comps = list(components)
    for j in range(n + 1, l + 1):
        for lam in range(1, n + 1):
            e = total_derivative(components[j - 1], lam)
            for mu in range(1, n + 1):
                e = e - dsym(j, mu) * total_derivative(components[mu - 1], lam)
            comps.append(expr.simplify(e))
    return JetField("subjet", n, chart, tuple(comps))


# ---------------------------------------------------------------------------
# the affine action on the parameter space


def affine_symmetry_check(g, theta, aff, samples=25, tol=1e-10, seed=0):
    """Whether the affine parameter change preserves the parametrized
    equation: points of the zero set are acted on and the residual is
    re-evaluated.  Requires the flat parameter connection, the setting in
    which the affine group acts by symmetries."""
    if theta.christoffel:
        raise DimensionMismatchError("affine symmetry check requires the flat parameter connection")
    if theta.dim != aff.n:
        raise DimensionMismatchError("affine map and parameter connection disagree")
    rng = spawn_rng(seed, 0)
    worst = 0.0
    records = []
    for _ in range(samples):
        p = random_secjet1(aff.n, g.dim, rng)
        q = ddot_gamma_pro(g, theta, p)
        acted = affine_act(aff, q)
        local = param_residual2(g, theta, acted).max_abs()
        records.append((p.x + p.u, local))
        worst = max(worst, local)
    return SymmetryReport(worst <= tol, worst, samples, 0, tol, tuple(records))


def reparam_symmetry_check(g, theta, phi, x_frame, samples=25, tol=1e-10, seed=0):
    """Same check for a general (possibly non-affine) reparametrization,
    lifted honestly by the chain rule; non-affine maps pick up the
    inhomogeneous second-derivative term and fail for generic data."""
    if theta.christoffel:
        raise DimensionMismatchError("reparametrization check requires the flat parameter connection")
    rng = spawn_rng(seed, 0)
    worst = 0.0
    used = 0
    skipped = 0
    records = []
    while used < samples:
        p = random_secjet1(theta.dim, g.dim, rng)
        q = ddot_gamma_pro(g, theta, p)
        try:
            acted = reparam_act(phi, x_frame, q)
        except DomainError:
            skipped += 1
            if skipped > 50 * samples:
                break
            continue
        local = param_residual2(g, theta, acted).max_abs()
        records.append((p.x + p.u, local))
        worst = max(worst, local)
        used += 1
    return SymmetryReport(worst <= tol and used == samples, worst, used, skipped, tol,
                          tuple(records))


# ---------------------------------------------------------------------------
# orbit and quotient structure


@dataclass(frozen=True)
class OrbitReport:
    wellposed_deviation: float
    preimage_deviation: float
    factoring_deviation: float
    passed: bool


def orbit_quotient_check(g, n, samples=25, seed=0, orbit_tol=1e-12, factoring_tol=1e-10):
    """Three checks on the affine orbit space of section jets:

    (a) the covering projection is constant on affine orbits;
    (b) every order-1 submanifold jet has the identity-parametrization
        preimage, mapped back by the projection;
    (c) extending a section jet on the zero set (flat parameter
        connection) and projecting lands on the zero set of the
        unparametrized equation.
    """
    l = g.dim
    m = l - n
    rng = spawn_rng(seed, 0)
    theta = _flat_theta(n)
    orbit_dev = 0.0
    preimage_dev = 0.0
    factoring_dev = 0.0
    for _ in range(samples):
        t = random_secjet1(n, l, rng)
        base = cover1(t)
        for _ in range(10):
            acted = affine_act(random_affine(n, rng), t)
            moved = cover1(acted)
            orbit_dev = max(orbit_dev, float(np.abs(np.asarray(moved.base) - np.asarray(base.base)).max()))
            orbit_dev = max(orbit_dev, float(np.abs(moved.first_matrix() - base.first_matrix()).max()))

        p = random_subjet1(n, m, rng)
        lift = SecJet.order1(
            n, l, np.zeros(n), p.base,
            np.vstack([np.eye(n), p.first_matrix()]),
        )
        back = cover1(lift)
        preimage_dev = max(preimage_dev, float(np.abs(np.asarray(back.base) - np.asarray(p.base)).max()))
        preimage_dev = max(preimage_dev, float(np.abs(back.first_matrix() - p.first_matrix()).max()))

        q = ddot_gamma_pro(g, theta, random_secjet1(n, l, rng))
        factoring_dev = max(factoring_dev, residual2(g, cover2(q)).max_abs())
    passed = orbit_dev <= orbit_tol and preimage_dev <= orbit_tol and factoring_dev <= factoring_tol
    return OrbitReport(orbit_dev, preimage_dev, factoring_dev, passed)


def _flat_theta(n):
    from .connections import Connection

    return Connection.zero(CoordinateFrame(tuple(f"x{i}" for i in range(1, n + 1)), n))


# ---------------------------------------------------------------------------
# JSON

def jetmap_from_dict(data, what=JetMap):
    """{"kind": "subjet"|"secjet", "n": 1, "coords": [base names],
    "x_coords": [... secjet only], "components": {chart name: expr}}"""
    try:
        kind = data["kind"]
        n = int(data["n"])
        coords = tuple(data["coords"])
        comp_map = data["components"]
    except (KeyError, TypeError) as e:
        raise SpecLoadError(f"malformed jet map spec: {e}") from None
    if kind == "subjet":
        chart = subjet1_chart(CoordinateFrame(coords, n), n)
    else:
        x_coords = tuple(data.get("x_coords", tuple(f"x{i}" for i in range(1, n + 1))))
        chart = secjet1_chart(CoordinateFrame(x_coords, n), CoordinateFrame(coords, len(coords)))
    missing = [name for name in chart if name not in comp_map]
    if missing:
        raise SpecLoadError(f"jet map spec missing components for {missing}")
    components = tuple(expr.parse(comp_map[name], chart) for name in chart)
    return what(kind, n, chart, components)


def jetfield_from_dict(data):
    return jetmap_from_dict(data, what=JetField)
