"""Exception and warning types shared across the package."""


class KerrLearnError(Exception):
    """Base class for errors raised by kerrlearn."""


class NonConvergence(KerrLearnError):
    """The Hermitian eigensolver did not converge."""


class DimensionMismatch(KerrLearnError, ValueError):
    pass


class QuadratureUnderResolved(KerrLearnError):
    """Doubling the Gauss-Legendre node count moved the result too much."""


class ResourceLimit(KerrLearnError):
    pass


class TruncationWarning(UserWarning):
    """Population reached the top of the truncated Fock space."""


class UnstableLearningRate(UserWarning):
    """eta * lambda_max(NTK) >= 2; gradient descent will diverge."""
