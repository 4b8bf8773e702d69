"""Quadrics in CP^3 under the conformal group of S^4.

Canonical forms under C* x GL(2,H), twistor discriminant loci (circle,
Clifford torus, unknotted torus, pinched tori), discriminant meshes, and the
orthogonal complex structures the quadrics induce on domains in R^4.
"""

from .canonical import (
    CanonicalForm,
    Diagonal,
    LMNData,
    NonDiagonalizable,
    canonicalize,
    diagonal_matrix,
    extract_lmnv,
    invariants,
    lift_so3,
    lift_so12,
    lorentz_svd,
    nondiagonal_matrix,
    normalize_real_part,
    stabilizer_element,
)
from .errors import (
    ChartBreakdownError,
    InfinityBasepointError,
    MalformedInputError,
    NotInGroupError,
    NumericalBreakdownError,
    NuZeroError,
    OnDiscriminantError,
    OrderMismatchError,
    PathBlockedError,
    RankDeficientError,
    ResolutionTooLowError,
    SingularPointError,
    TwistorqError,
)
from .locus import DiscriminantMesh, export_obj, extract_mesh, im_delta_radius, topology_report
from .ocs import (
    FiberPoint,
    HyperplaneField,
    OCSField,
    QuadricBranchField,
    RealQuadricField,
    eval_field,
    eval_jmatrix,
    fs_distance,
    hyperplane_section,
    integrability_residual,
    solve_fiber,
    to_jmatrix,
)
from .quatlin import (
    BLOCK,
    TWISTOR,
    ConformalElement,
    QuadraticForm,
    Quaternion,
    SpherePoint,
    act_on_form,
    act_on_sphere,
    is_gl2h,
    is_real,
    reality_decompose,
)
from .twistor import (
    FiberQuadratic,
    LineReport,
    LocusClassification,
    classify_lines,
    classify_locus,
    contains_fiber,
    discriminant,
    fiber_coefficients,
    invert_lift,
    real_quadric_form,
)

__version__ = "0.1.0"
