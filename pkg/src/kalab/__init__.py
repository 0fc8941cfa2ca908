"""Numerical laboratory for the angle geometry of even-dimensional submanifolds
of Kahler and Kahler-Einstein targets.

The package computes, for catalog immersions, the polar decomposition of the
pulled-back Kahler form, the angle spectrum and derived scalars, the tangent-
to-normal bundle morphism with its torsion, curvature tensors two independent
ways, and runs a registry of identity checks in which each side of an identity
is evaluated along its own code path (typically one analytic route against a
finite-difference oracle).  A small discrete volume-descent flow on periodic
immersions probes the limiting angle behaviour empirically.
"""

__version__ = "0.1.0"

from .tensorcore import (
    MetricTensor,
    SkewOperator,
    PolarParts,
    ComplexVector,
    MatrixPath,
    two_form_to_operator,
    polar_decompose_skew,
    sorted_angle_spectrum,
    det_path_derivatives,
    complexify_frame,
)
from .targets import (
    TargetGeometry,
    SpherePoint,
    HyperKahlerTriple,
    make_flat_kahler,
    make_fubini_study,
    make_hyperkahler_flat,
    j_from_sphere,
    target_audit,
    resolve_target,
)
from .immersion import (
    ImmersionChart,
    PointGeometry,
    SecondFundamental,
    CurvatureData,
    evaluate_jets,
    first_fundamental,
    second_fundamental,
    shape_operator,
    domain_curvature,
)
from .catalog import resolve_immersion
from .angles import (
    AngleData,
    DiagonalizingFrame,
    ConnectionComparison,
    pullback_form,
    angle_data,
    diagonalizing_frame,
    phi_and_hat,
    torsion_and_difference,
    classify_point,
)
from .fields import angle_field_derivatives
from .checks import REGISTRY, IdentityReport, run_check
from .flow import DiscreteImmersion, FlowTrace, discretize, volume_and_gradient, run_flow, dichotomy_report

__all__ = [name for name in dir() if not name.startswith("_")]
