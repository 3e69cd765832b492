"""Computational apparatus for totally geodesic submanifold equations.

Builds, from symbolic Christoffel data of a torsion-free linear connection:
the induced connection on the Grassmann bundle of tangent subspaces, the
section of the 2-jet projection whose image is the equation of
unparametrized totally geodesic submanifolds, the parametrized analogue
over a parameter space, the covering between the two, projective and
Grassmannian invariants, equivalence tests, and symmetry checks.
"""

from .expr import CoordinateFrame, Expression, differentiate, evaluate, parse, simplify, to_text
from .connections import (
    Connection,
    GrassInvariants,
    ProjInvariants,
    grass_invariants,
    grass_shift,
    invariants_match,
    load_connection,
    projective_shift,
    thomas_pi,
)
from .jets import (
    AffineMap,
    ParamMap,
    SecJet,
    SubJet,
    affine_act,
    cover1,
    cover2,
    prolong,
    reparam_act,
)
from .geodesy import (
    DotGamma,
    EquivalenceVerdict,
    ParamResidual2,
    Residual2,
    XiTable,
    ddot_gamma,
    ddot_gamma_pro,
    distribution_fields,
    dot_gamma,
    dot_gamma_pro,
    dot_gamma_via_xi,
    grass_equivalent,
    integrate_geodesic,
    param_residual2,
    residual2,
)
from .symmetry import (
    JetField,
    JetMap,
    affine_symmetry_check,
    field_preserves_distribution,
    orbit_quotient_check,
    preserves_contact,
    preserves_distribution,
    prolong_point_field,
    prolong_point_map,
    reparam_symmetry_check,
)

__all__ = [
    "AffineMap",
    "Connection",
    "CoordinateFrame",
    "DotGamma",
    "EquivalenceVerdict",
    "Expression",
    "GrassInvariants",
    "JetField",
    "JetMap",
    "ParamMap",
    "ParamResidual2",
    "ProjInvariants",
    "Residual2",
    "SecJet",
    "SubJet",
    "XiTable",
    "affine_act",
    "affine_symmetry_check",
    "cover1",
    "cover2",
    "ddot_gamma",
    "ddot_gamma_pro",
    "differentiate",
    "distribution_fields",
    "dot_gamma",
    "dot_gamma_pro",
    "dot_gamma_via_xi",
    "evaluate",
    "field_preserves_distribution",
    "grass_equivalent",
    "grass_invariants",
    "grass_shift",
    "integrate_geodesic",
    "invariants_match",
    "load_connection",
    "orbit_quotient_check",
    "param_residual2",
    "parse",
    "preserves_contact",
    "preserves_distribution",
    "projective_shift",
    "prolong",
    "prolong_point_field",
    "prolong_point_map",
    "reparam_act",
    "reparam_symmetry_check",
    "residual2",
    "simplify",
    "thomas_pi",
    "to_text",
]
