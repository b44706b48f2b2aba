"""Error types raised by the estimation pipeline."""


class BayesLimitError(Exception):
    """Base class for all library errors."""


class DivergentNorm(BayesLimitError):
    """Waveform is not square-integrable."""


class Unsupported(BayesLimitError):
    """No closed form is available for this combination."""


class NotToeplitz(BayesLimitError):
    """Overlap matrix is not a function of the parameter difference."""


class NotCirculant(BayesLimitError):
    """Overlap function is not periodic at the required tolerance."""


class NonUniformGrid(BayesLimitError):
    """Operation requires a uniformly spaced parameter grid."""


class NotPositive(BayesLimitError):
    """Spectral density has significant negative mass."""


class WindowTooNarrow(BayesLimitError):
    """Lag window does not reach the symbol's asymptotic tail."""


class StepTooLarge(BayesLimitError):
    """Fidelity step is outside the quadratic regime."""


class RankZero(BayesLimitError):
    """No eigenvalue survives the truncation threshold."""


class GridMismatch(BayesLimitError):
    """Prior and basis were built on different grids."""


class DegenerateState(BayesLimitError):
    """Mixed state has no retained spectrum."""


class MemoryCap(BayesLimitError):
    """Requested Fock-space dimension exceeds the memory cap."""


class TruncationInadequate(BayesLimitError):
    """Per-oscillator Fock truncation loses too much norm."""


class Aliased(BayesLimitError):
    """Time discretization violates the Nyquist bound."""


class AllZeroPosterior(BayesLimitError):
    """Posterior underflowed even after log-space stabilization."""


class KernelDivergent(BayesLimitError):
    """Whitening kernel has no finite variance on this window."""


class NotNormalized(BayesLimitError):
    """Discrete spectral weights do not sum to one."""


class SingularMeasure(BayesLimitError):
    """Spectral weight is concentrated on near-zero bins."""
