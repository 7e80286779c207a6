"""Exception hierarchy for the ``gse`` package."""


class GSEError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(GSEError, ValueError):
    """An input violates a documented precondition (shape, hermiticity, range)."""


class NonPSDError(ContractViolation):
    """A matrix that must be positive semidefinite has a materially negative eigenvalue."""


class EmptySubspaceError(GSEError, ArithmeticError):
    """Every metric direction fell below the cutoff."""


class DegenerateProjectionError(GSEError, ArithmeticError):
    """The projected operator ``P^dag A P`` has (numerically) zero trace."""


class DegeneracyError(GSEError, ArithmeticError):
    """First-order perturbation theory was requested at a degenerate level."""


class AssemblyError(GSEError, ArithmeticError):
    """A subspace matrix came out non-Hermitian beyond round-off."""


class OptimizerDivergenceError(GSEError, RuntimeError):
    """The variational cost became non-finite."""


class ConfigError(GSEError, ValueError):
    """An experiment configuration failed schema validation."""


class ResourceLimitError(GSEError, MemoryError):
    """A requested computation exceeds the dense-simulation size limits."""


class AcceptanceFailure(GSEError, AssertionError):
    """An experiment's declared qualitative assertion did not hold."""


class NonPSDMetricWarning(UserWarning):
    """The overlap metric had eigenvalues below ``-1e-10 * max(s)``."""


class ImaginaryEnergyWarning(UserWarning):
    """A candidate energy carried an imaginary residue above tolerance."""
