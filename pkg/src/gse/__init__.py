"""Generalized subspace expansion for quantum error mitigation.

Dense-matrix reference implementation: noisy variational states of the
transverse-field Ising chain, the power / fault / general subspaces built
from them, and the comparison methods (virtual distillation, zero-noise
extrapolation, conventional subspace expansion).
"""

__version__ = "0.1.0"

from .baselines import (
    ExtrapolationSpec,
    extrapolate_zero_noise,
    richardson_coefficients,
    vd_energy,
    vd_state,
)
from .estimators import GeneralizedSubspaceExpansion, RichardsonExtrapolator, VirtualDistillation
from .exceptions import (
    AssemblyError,
    ConfigError,
    ContractViolation,
    DegeneracyError,
    DegenerateProjectionError,
    EmptySubspaceError,
    GSEError,
    NonPSDError,
    ResourceLimitError,
)
from .linalg import solve_generalized_eig
from .pauli import PauliHamiltonian, PauliString, build_tfi_hamiltonian
from .shots import ShotBudget, estimate_with_shot_noise, shift_variance
from .subspace import MitigationResult, SubspaceSpec, assemble_matrices, build_bases, mitigate

__all__ = [
    "AssemblyError",
    "ConfigError",
    "ContractViolation",
    "DegeneracyError",
    "DegenerateProjectionError",
    "EmptySubspaceError",
    "ExtrapolationSpec",
    "GSEError",
    "GeneralizedSubspaceExpansion",
    "MitigationResult",
    "NonPSDError",
    "PauliHamiltonian",
    "PauliString",
    "ResourceLimitError",
    "RichardsonExtrapolator",
    "ShotBudget",
    "SubspaceSpec",
    "VirtualDistillation",
    "__version__",
    "assemble_matrices",
    "build_bases",
    "build_tfi_hamiltonian",
    "estimate_with_shot_noise",
    "extrapolate_zero_noise",
    "mitigate",
    "richardson_coefficients",
    "shift_variance",
    "solve_generalized_eig",
    "vd_energy",
    "vd_state",
]
