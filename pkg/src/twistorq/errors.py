"""Exception hierarchy for twistorq.

Numerical failure is always reported, never silently absorbed: operations
whose residuals exceed their stated tolerances raise rather than return a
wrong label.
"""


class TwistorqError(Exception):
    """Base class for all twistorq errors."""


class RankDeficientError(TwistorqError):
    """Quadratic form (or its real part) has rank < 4; out of scope."""


class NumericalBreakdownError(TwistorqError):
    """A residual exceeded tolerance after refinement, or the input sits too
    close to a stratum boundary for the label to be trustworthy."""


class OrderMismatchError(TwistorqError):
    """Coordinate-order tags of two operands disagree."""


class MalformedInputError(TwistorqError):
    """Input violates a structural precondition (block structure, file syntax)."""


class NotInGroupError(TwistorqError):
    """Matrix fails its group-membership test beyond tolerance."""


class InfinityBasepointError(TwistorqError):
    """Fiber computation requested at the point at infinity; invert first."""


class OnDiscriminantError(TwistorqError):
    """Evaluation point lies on the discriminant locus."""


class PathBlockedError(TwistorqError):
    """Branch continuation could not keep the fiber roots separated."""


class SingularPointError(TwistorqError):
    """Hyperplane section degenerates (contains the twistor line) here."""


class ChartBreakdownError(TwistorqError):
    """Neither affine chart on the fiber stays bounded over the stencil."""


class NuZeroError(TwistorqError):
    """Radial graph of the locus requires a nonzero torsion angle."""


class ResolutionTooLowError(TwistorqError):
    """Extracted mesh is not manifold away from its declared pinch points."""
