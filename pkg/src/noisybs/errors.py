"""Exception hierarchy for the noisybs package."""


class NoisyBSError(Exception):
    """Base class for all package errors."""


class ValidationError(NoisyBSError, ValueError):
    """Invalid argument values (shape, range, ordering)."""


class NonSquareMatrixError(ValidationError):
    """Permanent requested for a non-square matrix."""


class SizeLimitExceededError(ValidationError):
    """A brute-force path was asked to run beyond its supported size."""


class ShapeMismatchError(ValidationError):
    """Two matrices that must share a shape do not."""


class InvalidPermutationError(ValidationError):
    """A permutation array is not a bijection of the expected length."""


class IndexOutOfBoundsError(ValidationError):
    """A mode index falls outside the interferometer dimension."""


class CombinatorialBlowupError(NoisyBSError):
    """An exact enumeration would exceed its configured term cap."""


class BudgetExceededError(NoisyBSError):
    """An expansion was rejected because its estimated cost exceeds the budget."""


class AlphaOutOfRangeError(ValidationError):
    """The interference figure of merit must lie in [0, 1) for geometric bounds."""


class EtaOutOfRangeError(ValidationError):
    """Transmission outside the open interval required by a formula."""


class WindowExceedsRangeError(ValidationError):
    """The Hoeffding window parameter C is not in (0, sqrt(n)(1 - eta))."""


class NoMarginError(NoisyBSError):
    """The postselection-margin inequality fails already at p = 0."""


class NoThresholdError(NoisyBSError):
    """No transmission threshold exists (even eta = 1 is simulable)."""


class NonErgodicStartError(NoisyBSError):
    """A Markov chain spent its entire dead-iteration budget on zero-target states."""
