"""Default tolerances.

Structural predicates (symmetry, reality, group membership) use an absolute
Frobenius tolerance on matrices pre-normalized to unit Frobenius norm, so the
checks are scale invariant.  The environment variable ``TWISTORQ_TOL``
overrides the structural default; this is documented but discouraged, since
the shipped values are what the test suite is calibrated against.
"""

import os

STRUCTURAL_TOL = 1e-10       # symmetry / reality / GL(2,H) membership
RANK_TOL = 1e-9              # |det| of a Frobenius-normalized 4x4 form
X_RANK_TOL = 1e-8            # relative singular-value cutoff for the 3x3 data matrix
WITNESS_TOL = 1e-6           # final congruence residual of a canonical witness
MESH_TOL = 1e-6              # |discriminant| at mesh vertices


def structural_tol() -> float:
    value = os.environ.get("TWISTORQ_TOL")
    if value is None:
        return STRUCTURAL_TOL
    return float(value)
