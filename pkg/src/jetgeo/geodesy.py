"""The equations of totally geodesic submanifolds and their structure maps.

Everything here is pointwise-numeric over the symbolic Christoffel data:

* `dot_gamma` — the connection induced on the bundle of first-order
  submanifold jets, in closed form; `dot_gamma_via_xi` builds the same
  object through the auxiliary-connection construction and is used to
  verify that the result does not depend on the auxiliary choice.
* `ddot_gamma` — the section of the 2-jet projection whose image is the
  zero set of `residual2`, the equation of unparametrized totally
  geodesic submanifolds.
* `dot_gamma_pro` / `ddot_gamma_pro` / `param_residual2` — the
  parametrized analogues over an n-dimensional parameter space.
* the covering identities tying the two pictures together, a fixed-step
  geodesic integrator for one-dimensional parameter spaces, and the
  equivalence test for connections inducing the same equation.

Index conventions match the connection module: base (Greek-role) indices
run 1..n, fibre (Latin-role) indices n+1..l, and arrays are 0-based with
the same ordering.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connections import grass_invariants, invariants_match
from .errors import DimensionMismatchError, DomainError, FrameMismatchError
from .jets import SecJet, SubJet, cover1, cover2, tangent_cover1
from .sampling import random_point, spawn_rng


def _check_subjet(g, p):
    if p.l != g.dim:
        raise FrameMismatchError(f"jet over {p.l} coordinates, connection over {g.dim}")


def _check_secjet(g, theta, p):
    if p.l != g.dim:
        raise DimensionMismatchError(f"jet fibre dimension {p.l}, connection dimension {g.dim}")
    if theta.dim != p.n:
        raise DimensionMismatchError(
            f"parameter connection dimension {theta.dim}, jet parameter dimension {p.n}"
        )


@dataclass(frozen=True)
class DotGamma:
    """Christoffel values of the induced jet-bundle connection at a jet.

    table[A-1][k-n-1][xi-1] holds dotΓ_A{}^k{}_xi; A runs over all
    coordinates, k over fibre indices, xi over base indices.  Components
    are polynomials of degree <= 2 in the first-derivative coordinates.
    """

    n: int
    m: int
    table: np.ndarray

    def value(self, a, k, xi):
        return float(self.table[a - 1, k - self.n - 1, xi - 1])


@dataclass(frozen=True)
class Residual2:
    """Left side of the unparametrized equation at an order-2 jet,
    symmetric in the two base indices."""

    n: int
    m: int
    table: np.ndarray  # (m, n, n)

    def component(self, k, lam, xi):
        return float(self.table[k - self.n - 1, lam - 1, xi - 1])

    def max_abs(self):
        return float(np.abs(self.table).max())


@dataclass(frozen=True)
class ParamResidual2:
    """Left side of the parametrized equation at an order-2 section jet,
    symmetric in the two parameter indices."""

    n: int
    l: int
    table: np.ndarray  # (l, n, n)

    def component(self, c, xi, lam):
        return float(self.table[c - 1, xi - 1, lam - 1])

    def max_abs(self):
        return float(np.abs(self.table).max())


# ---------------------------------------------------------------------------
# the induced connection on first-order jets


def dot_gamma(g, p):
    """Induced connection at an order-1 submanifold jet, closed form:

    dotΓ_A{}^k{}_xi = Γ_A{}^k{}_xi + Γ_A{}^k{}_i u^i_xi
                      - u^k_beta (Γ_A{}^beta{}_xi + Γ_A{}^beta{}_i u^i_xi),

    Christoffels evaluated at the jet's base point.
    """
    _check_subjet(g, p)
    n, m = p.n, p.m
    G = g.christoffel_at(p.base)
    D = p.first_matrix()
    lat = G[:, n:, :n] + np.einsum("aki,ix->akx", G[:, n:, n:], D)
    grk = G[:, :n, :n] + np.einsum("abi,ix->abx", G[:, :n, n:], D)
    table = lat - np.einsum("kb,abx->akx", D, grk)
    return DotGamma(n, m, table)


@dataclass(frozen=True)
class XiTable:
    """Auxiliary connection values on the horizontal codistribution at a
    point: base[A-1][xi-1][lam-1] and vert[alpha-1][h-n-1][xi-1][lam-1]."""

    base: np.ndarray  # (l, n, n)
    vert: np.ndarray  # (n, m, n, n)

    @classmethod
    def zero(cls, n, m):
        return cls(np.zeros((n + m, n, n)), np.zeros((n, m, n, n)))

    @classmethod
    def random(cls, n, m, rng, scale=1.0):
        return cls(
            rng.uniform(-scale, scale, (n + m, n, n)),
            rng.uniform(-scale, scale, (n, m, n, n)),
        )


def dot_gamma_via_xi(g, xi, p):
    """Induced connection computed through an auxiliary connection.

    Materializes the product-connection symbols

        Om_A{}^C_xi{}^lam_B      = δ^C_B Ξ_A{}_xi{}^lam + δ^lam_xi Γ_A{}^C{}_B
        Om^al_h{}^C_xi{}^lam_B   = δ^C_B Ξ^al_h{}_xi{}^lam

    contracts them along the canonical horizontal inclusion of the jet,
    and projects onto the vertical quotient by subtracting the
    u^k_beta-weighted base components.  The auxiliary terms cancel in the
    projection, so the result equals `dot_gamma(g, p)` for every table.
    """
    table, _ = _via_xi_tables(g, xi, p)
    return DotGamma(p.n, p.m, table)


def _via_xi_tables(g, xi, p):
    _check_subjet(g, p)
    n, m, l = p.n, p.m, p.l
    if xi.base.shape != (l, n, n) or xi.vert.shape != (n, m, n, n):
        raise FrameMismatchError("auxiliary table shapes do not match the jet")
    G = g.christoffel_at(p.base)
    D = p.first_matrix()

    # raw[A][C][xi]: du^A coefficient of the contraction, before projection
    raw = np.zeros((l, l, n))
    for a in range(l):
        for c in range(l):
            for x in range(n):
                total = G[a, c, x]  # δ^lam_xi Γ_A{}^C{}_lam summed over lam
                if c < n:
                    total += xi.base[a, x, c]
                else:
                    total += xi.base[a, x, :] @ D[c - n, :]
                total += G[a, c, n:] @ D[:, x]
                raw[a, c, x] = total

    # raw_v[h][alpha][C][xi]: du^h_alpha coefficient before projection
    raw_v = np.zeros((m, n, l, n))
    for h in range(m):
        for al in range(n):
            for c in range(l):
                for x in range(n):
                    total = 1.0 if (c == n + h and x == al) else 0.0
                    if c < n:
                        total += xi.vert[al, h, x, c]
                    else:
                        total += xi.vert[al, h, x, :] @ D[c - n, :]
                    raw_v[h, al, c, x] = total

    # vertical projection: fibre slot minus u^k_beta times base slots
    table = raw[:, n:, :] - np.einsum("kb,abx->akx", D, raw[:, :n, :])
    vert_coeff = raw_v[:, :, n:, :] - np.einsum("kb,habx->hakx", D, raw_v[:, :, :n, :])
    return table, vert_coeff


# ---------------------------------------------------------------------------
# the unparametrized equation


def ddot_gamma(g, p):
    """Extend an order-1 jet to the unique order-2 jet on the zero set:

    u^k_{lam xi} = -(dotΓ_lam{}^k{}_xi + u^j_lam dotΓ_j{}^k{}_xi),

    symmetrized over the base index pair.  `residual2` of the result
    vanishes identically.
    """
    dg = dot_gamma(g, p)
    D = p.first_matrix()
    n = p.n
    second = -(np.transpose(dg.table[:n, :, :], (1, 0, 2))
               + np.einsum("jl,jkx->klx", D, dg.table[n:, :, :]))
    second = 0.5 * (second + np.transpose(second, (0, 2, 1)))
    return p.with_second(second)


def residual2(g, q):
    """Left side of the unparametrized totally geodesic equation:

    u^k_{lam xi} + Γ_lam{}^k{}_xi + Γ_lam{}^k{}_i u^i_xi + Γ_j{}^k{}_xi u^j_lam
      + Γ_j{}^k{}_i u^j_lam u^i_xi
      - u^k_beta (Γ_lam{}^beta{}_xi + Γ_lam{}^beta{}_i u^i_xi
                  + Γ_j{}^beta{}_xi u^j_lam + Γ_j{}^beta{}_i u^j_lam u^i_xi),

    evaluated as written and averaged over the base index swap (a guard;
    the two agree for symmetric Christoffels).
    """
    _check_subjet(g, q)
    if q.r < 2:
        raise FrameMismatchError("residual needs an order-2 jet")
    n = q.n
    G = g.christoffel_at(q.base)
    D = q.first_matrix()
    u2 = q.second_array()

    # P[lam][C][xi] = Γ_lam{}^C{}_xi + Γ_lam{}^C{}_i u^i_xi
    #               + Γ_j{}^C{}_xi u^j_lam + Γ_j{}^C{}_i u^j_lam u^i_xi
    base_part = G[:n, :, :n] + np.einsum("lCi,ix->lCx", G[:n, :, n:], D)
    fibre_part = G[n:, :, :n] + np.einsum("jCi,ix->jCx", G[n:, :, n:], D)
    P = base_part + np.einsum("jl,jCx->lCx", D, fibre_part)
    F = u2 + np.transpose(P[:, n:, :], (1, 0, 2)) - np.einsum("kb,lbx->klx", D, P[:, :n, :])
    table = 0.5 * (F + np.transpose(F, (0, 2, 1)))
    return Residual2(n, q.m, table)


def distribution_fields(g, p):
    """Generators of the distinguished n-dimensional distribution at an
    order-1 jet, as rows over the jet-chart coordinates.

    Row lam is the coordinate vector of
    ∂_{u^lam} + u^j_lam ∂_{u^j} - (dotΓ_lam{}^k{}_xi + u^j_lam dotΓ_j{}^k{}_xi) ∂_{u^k_xi};
    columns are ordered base coordinates (l), then derivative coordinates
    (fibre-major, base-minor).
    """
    dg = dot_gamma(g, p)
    n, m, l = p.n, p.m, p.l
    D = p.first_matrix()
    vert = -(np.transpose(dg.table[:n, :, :], (1, 0, 2))
             + np.einsum("jl,jkx->klx", D, dg.table[n:, :, :]))  # (k, lam, xi)
    rows = np.zeros((n, l + m * n))
    for lam in range(n):
        rows[lam, lam] = 1.0
        rows[lam, n:l] = D[:, lam]
        rows[lam, l:] = vert[:, lam, :].reshape(m * n)
    return rows


# ---------------------------------------------------------------------------
# the parametrized equation


@dataclass(frozen=True)
class ProLift:
    """Coefficient table of the parametrized jet-bundle connection at an
    order-1 section jet.

    The lift of ∂_{x^lam} carries x_lift[lam][A][eta] on ∂_{u^A_{x eta}};
    the lift of ∂_{u^B} carries u_lift[B][C][xi] on ∂_{u^C_{x xi}}.
    """

    n: int
    l: int
    x_lift: np.ndarray  # (n, l, n)
    u_lift: np.ndarray  # (l, l, n)


def dot_gamma_pro(g, theta, p):
    """Parametrized jet-bundle connection at an order-1 section jet:
    x_lift[lam][A][eta] = Θ_lam{}^xi{}_eta u^A_{x xi},
    u_lift[B][C][xi] = -Γ_B{}^C{}_A u^A_{x xi}."""
    _check_secjet(g, theta, p)
    G = g.christoffel_at(p.u)
    Th = theta.christoffel_at(p.x)
    D = p.first_matrix()
    x_lift = np.einsum("lxe,Ax->lAe", Th, D)
    u_lift = -np.einsum("BCA,Ax->BCx", G, D)
    return ProLift(p.n, p.l, x_lift, u_lift)


def ddot_gamma_pro(g, theta, p):
    """Extend an order-1 section jet to the unique order-2 jet on the
    zero set of the parametrized equation:

    u^C_{x xi x lam} = -Γ_A{}^C{}_B u^A_{x xi} u^B_{x lam}
                       + Θ_xi{}^eta{}_lam u^C_{x eta}."""
    _check_secjet(g, theta, p)
    G = g.christoffel_at(p.u)
    Th = theta.christoffel_at(p.x)
    D = p.first_matrix()
    second = -np.einsum("ACB,Ax,Bl->Cxl", G, D, D) + np.einsum("xel,Ce->Cxl", Th, D)
    second = 0.5 * (second + np.transpose(second, (0, 2, 1)))
    return p.with_second(second)


def param_residual2(g, theta, q):
    """Left side of the parametrized totally geodesic equation:

    u^C_{x xi x lam} + Γ_A{}^C{}_B u^A_{x xi} u^B_{x lam}
                     - Θ_xi{}^eta{}_lam u^C_{x eta},

    averaged over the parameter index swap as a guard.
    """
    _check_secjet(g, theta, q)
    if q.r < 2:
        raise DimensionMismatchError("residual needs an order-2 jet")
    G = g.christoffel_at(q.u)
    Th = theta.christoffel_at(q.x)
    D = q.first_matrix()
    table = (q.second_array()
             + np.einsum("ACB,Ax,Bl->Cxl", G, D, D)
             - np.einsum("xel,Ce->Cxl", Th, D))
    table = 0.5 * (table + np.transpose(table, (0, 2, 1)))
    return ParamResidual2(q.n, q.l, table)


# ---------------------------------------------------------------------------
# vertical projections and the covering identities


def vertical_dot(g, q, du, dd):
    """Vertical projection of a tangent vector at an order-1 submanifold
    jet: out[k][xi] = dd[k][xi] + dotΓ_A{}^k{}_xi du^A."""
    dg = dot_gamma(g, q)
    return np.asarray(dd, dtype=float) + np.einsum("akx,a->kx", dg.table, np.asarray(du, dtype=float))


def vertical_pro(g, theta, p, dx, du, dd):
    """Vertical projection of a tangent vector at an order-1 section jet:
    out[C][eta] = dd[C][eta] - dx^lam Θ_lam{}^xi{}_eta u^C_{x xi}
                 + du^B Γ_B{}^C{}_A u^A_{x eta}."""
    lift = dot_gamma_pro(g, theta, p)
    dx = np.asarray(dx, dtype=float)
    du = np.asarray(du, dtype=float)
    dd = np.asarray(dd, dtype=float)
    return dd - np.einsum("l,lCe->Ce", dx, lift.x_lift) - np.einsum("B,BCe->Ce", du, lift.u_lift)


def covering_commutation_deviation(g, theta, p):
    """Max-abs difference between the two routes around the covering
    square: project-then-extend versus extend-then-project, at an
    admissible order-1 section jet."""
    via_param = cover2(ddot_gamma_pro(g, theta, p))
    via_sub = ddot_gamma(g, cover1(p))
    dev = np.abs(via_param.second_array() - via_sub.second_array()).max()
    dev = max(dev, np.abs(via_param.first_matrix() - via_sub.first_matrix()).max())
    return float(dev)


def quotient_diagram_deviation(g, theta, p, dx, du, dd):
    """Max-abs difference between pushing the vertical projection forward
    and projecting the pushforward, for one tangent vector at an
    admissible order-1 section jet."""
    vp = vertical_pro(g, theta, p, dx, du, dd)
    _, lhs = tangent_cover1(p, np.zeros(p.n), np.zeros(p.l), vp)
    du_img, dd_img = tangent_cover1(p, dx, du, dd)
    rhs = vertical_dot(g, cover1(p), du_img, dd_img)
    return float(np.abs(lhs - rhs).max())


# ---------------------------------------------------------------------------
# geodesics (one-dimensional parameter space)


def geodesic_steps(g, theta, start, velocity, h, steps):
    """Classical fixed-step fourth-order integration of

        u'' = -Γ_A{}^C{}_B u'^A u'^B + Θ_1{}^1{}_1 u'^C

    over a one-dimensional parameter space.  Yields steps+1 order-2
    section jets whose second-derivative slot is filled from the right
    side, so the parametrized residual vanishes along the output.
    """
    if theta.dim != 1:
        raise DimensionMismatchError("geodesic integration needs a 1-dimensional parameter space")
    if g.dim != len(start) or len(velocity) != len(start):
        raise DimensionMismatchError("start point/velocity do not match the connection dimension")
    if h <= 0 or steps < 0:
        raise DimensionMismatchError("step size must be positive and steps non-negative")

    def accel(x, u, v):
        G = g.christoffel_at(u)
        th = theta.christoffel_at([x])[0, 0, 0]
        return -np.einsum("ACB,A,B->C", G, v, v) + th * v

    x = 0.0
    u = np.asarray(start, dtype=float)
    v = np.asarray(velocity, dtype=float)
    for _ in range(steps + 1):
        a = accel(x, u, v)
        jet = SecJet.order1(1, len(u), [x], u, v.reshape(-1, 1)).with_second(
            a.reshape(-1, 1, 1)
        )
        yield jet
        k1u, k1v = v, a
        k2u, k2v = v + 0.5 * h * k1v, accel(x + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v)
        k3u, k3v = v + 0.5 * h * k2v, accel(x + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v)
        k4u, k4v = v + h * k3v, accel(x + h, u + h * k3u, v + h * k3v)
        u = u + (h / 6.0) * (k1u + 2 * k2u + 2 * k3u + k4u)
        v = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        x += h


def integrate_geodesic(g, theta, start, velocity, h, steps):
    """Trajectory of order-2 section jets; see `geodesic_steps`."""
    return list(geodesic_steps(g, theta, start, velocity, h, steps))


# ---------------------------------------------------------------------------
# equivalence of connections


@dataclass(frozen=True)
class EquivalenceVerdict:
    equivalent: bool
    max_deviation: float
    invariants_equal: bool
    invariants_deviation: float
    samples: int
    tol: float


def grass_equivalent(g1, g2, n, samples=50, tol=1e-10, seed=0):
    """Whether two connections induce the same equation of unparametrized
    totally geodesic submanifolds for split n.

    Ground truth: the order-2 extensions agree at `samples` random
    order-1 jets within tol.  Also reports the sufficient-condition fast
    path through the invariant families.
    """
    if g1.frame.names != g2.frame.names:
        raise FrameMismatchError("connections live on different frames")
    l = g1.dim
    m = l - n
    rng = spawn_rng(seed, 0)
    worst = 0.0
    done = 0
    attempts = 0
    while done < samples:
        attempts += 1
        if attempts > 100 * samples:
            raise DimensionMismatchError("could not sample enough regular jets")
        base = random_point(g1, rng)
        first = rng.uniform(-1.0, 1.0, (m, n))
        p = SubJet.order1(n, m, base, first)
        try:
            s1 = ddot_gamma(g1, p).second_array()
            s2 = ddot_gamma(g2, p).second_array()
        except DomainError:
            continue
        worst = max(worst, float(np.abs(s1 - s2).max()))
        done += 1
    inv_equal, inv_dev = invariants_match(
        grass_invariants(g1, n), grass_invariants(g2, n), spawn_rng(seed, 1), tol=tol
    )
    return EquivalenceVerdict(worst <= tol, worst, inv_equal, inv_dev, samples, tol)
