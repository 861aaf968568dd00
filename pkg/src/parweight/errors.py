"""Exception types shared across the toolkit."""


class ParweightError(Exception):
    """Base class for all toolkit errors."""


class InvalidSpace(ParweightError):
    """Negative distance, nonpositive mass, or asymmetric distance data."""


class NoChain(ParweightError):
    """The discrete point set admits no monotone chaining step."""


class InvariantViolation(ParweightError):
    """A dyadic-system invariant failed post-construction verification."""

    def __init__(self, level, alpha, which):
        self.level = level
        self.alpha = alpha
        self.which = which
        super().__init__(f"dyadic invariant {which!r} failed at level {level}, cube {alpha}")


class CoverageFailure(ParweightError):
    """No cube in any grid contains the requested ball at an admissible level."""


class InadmissibleBox(ParweightError):
    """A parabolic box has an empty spatial or temporal part on the grid."""


class EmptyRegion(ParweightError):
    """Average requested over a region with no cells."""


class EmptyFamily(ParweightError):
    """A box family is empty after admissibility filtering."""


class NonpositiveWeight(ParweightError):
    """Weight values must be strictly positive and finite."""


class SubsetNotContained(ParweightError):
    """Subset passed to a containment-conditioned check is not inside its part."""


class ShiftOutOfGrid(ParweightError):
    """Temporal translation moves a region outside the time grid."""


class ZeroDenominator(ParweightError):
    """A norm ratio was requested for an identically zero field."""


class CoverageMismatch(ParweightError):
    """Two maximal operators cover different cell sets."""


class Divergence(ParweightError):
    """Factorization series partial sums grew; operator norm estimate too small."""


class DegenerateMeasure(ParweightError):
    """Backward maximal of the measure vanishes on a covered cell."""


class AllTailsZero(ParweightError):
    """All oscillation tails are zero; exponential fit is degenerate."""


class LadderExhausted(ParweightError):
    """No ladder entry satisfied the requested budget."""
