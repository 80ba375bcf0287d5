"""Exception types raised by the memtomo numerics and I/O layers."""


class MemtomoError(Exception):
    """Base class for all memtomo errors."""


class DimMismatchError(MemtomoError):
    """Two matrices passed to a binary operation have different shapes."""


class NotHermitianError(MemtomoError):
    """A matrix required to be Hermitian violates the Hermiticity tolerance."""


class NoConvergenceError(MemtomoError):
    """The eigenvalue solver failed to converge."""


class NotPSDError(MemtomoError):
    """A matrix required to be positive semidefinite has a genuinely negative eigenvalue."""


class UnknownLabelError(MemtomoError):
    """Polarization label outside the six-state alphabet H,V,D,A,R,L."""


class DegeneratePairError(MemtomoError):
    """An analyzer pair (H/V, D/A or R/L) has non-positive total counts."""


class UnphysicalChiError(MemtomoError):
    """A process matrix is not Hermitian-PSD with trace in (0, 1]."""


class TraceIncreasingError(MemtomoError):
    """A Kraus set has sum K†K exceeding the identity."""


class NotUnitaryError(MemtomoError):
    """A matrix required to be unitary is not."""


class SingularSystemError(MemtomoError):
    """The linear-inversion system is singular or too ill-conditioned to solve."""


class ZeroTraceError(MemtomoError):
    """A process matrix with (numerically) zero trace cannot be normalized."""


class ResamplingUnstableError(MemtomoError):
    """Too many Monte-Carlo resampling trials failed to converge (> 20%)."""


class InputFormatError(MemtomoError):
    """A dataset, result, or config document does not match its schema."""
