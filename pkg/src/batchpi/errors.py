"""Exception types raised across the library.

Every error is a subclass of BatchPIError so callers can catch the library's
failures with a single except clause while tests match specific classes.
"""


class BatchPIError(Exception):
    """Base class for all errors raised by this package."""


class EmptySupport(BatchPIError):
    """A discrete distribution was built with no atoms."""


class MassSumNotOne(BatchPIError):
    """Probability masses do not sum exactly to one."""


class TauOutOfRange(BatchPIError):
    """A quantile level or coverage level lies outside its valid range."""


class NaNInput(BatchPIError):
    """A NaN appeared where a real value is required."""


class ZetaOutOfRange(BatchPIError):
    """An order-statistic index lies outside {1, ..., m}."""


class ShapeMismatch(BatchPIError):
    """Paired sequences have incompatible lengths or orderings."""


class BoxInvalid(BatchPIError):
    """Box bounds violate 1 <= w_j <= q_j <= n+1."""


class StepContractViolated(BatchPIError):
    """A compositional step failed its strict-monotonicity spot check."""


class EnumerationCapExceeded(BatchPIError):
    """The rank simplex is too large for exhaustive enumeration."""


class SampleCountTooSmall(BatchPIError):
    """Sampled quantile mode was requested with too few draws."""


class NoFeasibleRank(BatchPIError):
    """No rank vector satisfies the requested threshold constraint."""


class QTooSmall(BatchPIError):
    """A rank-sum budget is below the minimum attainable value m."""


class HNotDefinedOnIntegers(BatchPIError):
    """A batch score function cannot be evaluated on integer rank tuples."""


class SplitTooSmall(BatchPIError):
    """A split used for rank ordering has fewer scores than the calibration set."""


class EtaOutOfRange(BatchPIError):
    """A false-claim budget lies outside {0, ..., m-1}."""


class NegativePrediction(BatchPIError):
    """Selection requires nonnegative predictions."""


class NoTreatedUnits(BatchPIError):
    """Counterfactual inference needs at least one treated unit."""


class NoControlUnits(BatchPIError):
    """Counterfactual inference needs at least one control unit."""


class PropensityBelowBound(BatchPIError):
    """A propensity evaluation fell below its declared lower bound."""


class SingularDesign(BatchPIError):
    """A linear fit received a rank-deficient design it cannot resolve."""


class SingleClass(BatchPIError):
    """A propensity fit received only one class label."""


class OutcomeOutOfRange(BatchPIError):
    """An outcome lies outside its declared bounded range."""


class SchemaError(BatchPIError):
    """A configuration document violates the strict schema."""


class SparsityCapExceeded(BatchPIError):
    """A sparse target depends on more order statistics than the cap allows."""
