"""Comparison methods: virtual distillation, dominant-vector analysis and Richardson extrapolation."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import ContractViolation, DegenerateProjectionError
from .pauli import as_observable
from .validation import check_random_state


@dataclass(frozen=True)
class VdResult:
    M: int
    energy: float
    numerator: float
    denominator: float


def _dense(H):
    return H if isinstance(H, np.ndarray) else as_observable(H).matrix()


def vd_energy(rho, M, hamiltonian):
    """``Tr[rho^M H] / Tr[rho^M]``; ``M = 1`` is the raw expectation."""
    if M < 1:
        raise ContractViolation("VD needs M >= 1 copies")
    rho = np.asarray(rho, dtype=complex)
    rM = np.linalg.matrix_power(rho, int(M))
    den = np.trace(rM).real
    if den <= 1e-300:
        raise DegenerateProjectionError(f"Tr[rho^{M}] underflowed ({den:.3e})")
    num = float(np.sum(rM * _dense(hamiltonian).T).real)
    return VdResult(int(M), num / den, num, float(den))


def vd_state(rho, M):
    rM = np.linalg.matrix_power(np.asarray(rho, dtype=complex), int(M))
    return rM / np.trace(rM).real


def dominant_vector(rho):
    """Top eigenvalue and eigenvector of ``rho``."""
    w, V = scipy.linalg.eigh(0.5 * (rho + rho.conj().T))
    return float(w[-1]), V[:, -1]


def dominant_vector_energy(rho, hamiltonian):
    _, v = dominant_vector(rho)
    return float(np.vdot(v, _dense(hamiltonian) @ v).real)


def coherent_mismatch(rho, ideal):
    """``1 - |<psi_0|psi_id>|^2`` with ``ideal`` a state vector or a pure density matrix."""
    ideal = np.asarray(ideal, dtype=complex)
    if ideal.ndim == 2:
        _, ideal = dominant_vector(ideal)
    ideal = ideal / np.linalg.norm(ideal)
    _, v = dominant_vector(rho)
    return float(min(1.0, max(0.0, 1.0 - abs(np.vdot(v, ideal)) ** 2)))


def richardson_coefficients(lambdas):
    """``beta_i = prod_{j != i} lambda_j / (lambda_j - lambda_i)``.

    These solve ``sum beta = 1`` and ``sum beta lambda^k = 0`` for
    ``k = 1 .. len(lambdas) - 1``.
    """
    lam = np.asarray(lambdas, dtype=float).ravel()
    if lam.size == 0:
        raise ContractViolation("need at least one stretch factor")
    if np.unique(lam).size != lam.size:
        raise ContractViolation("stretch factors must be distinct (singular Vandermonde system)")
    beta = np.ones(lam.size)
    for i in range(lam.size):
        for j in range(lam.size):
            if j != i:
                beta[i] *= lam[j] / (lam[j] - lam[i])
    return beta


def extrapolate_zero_noise(values, lambdas):
    values = np.asarray(values, dtype=float)
    beta = richardson_coefficients(lambdas)
    if values.shape != beta.shape:
        raise ContractViolation("one value per stretch factor is required")
    return float(beta @ values)


@dataclass(frozen=True)
class ExtrapolationSpec:
    lambdas: tuple = (1.0, 2.0, 3.0)
    epsilon: float = 1.0
    sigma: float = 0.0
    trials: int = 1

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if np.unique(lam).size != lam.size:
            raise ContractViolation("stretch factors must be distinct")
        if np.any(lam < 1):
            raise ContractViolation("stretch factors must be >= 1")
        if self.sigma < 0 or self.epsilon < 0:
            raise ContractViolation("sigma and epsilon must be nonnegative")
        if self.trials < 1:
            raise ContractViolation("trials must be >= 1")


def sample_noisy_lambdas(spec, rng=None):
    """``lambda_i + N(0, lambda_i * epsilon * sigma^2)`` (a variance), floored at 0."""
    rng = check_random_state(rng)
    lam = np.asarray(spec.lambdas, dtype=float)
    if spec.sigma == 0:
        return lam.copy()
    draw = lam + rng.normal(0.0, np.sqrt(lam * spec.epsilon) * spec.sigma)
    return np.maximum(draw, 0.0)


def extrapolated_effective_state(states, lambdas):
    """``sum beta_i rho_i`` with ``beta`` from the nominal ``lambdas``; may be unphysical."""
    beta = richardson_coefficients(lambdas)
    states = np.asarray(states, dtype=complex)
    if states.shape[0] != beta.size:
        raise ContractViolation("one state per stretch factor is required")
    rho = np.tensordot(beta, states, axes=(0, 0))
    return 0.5 * (rho + rho.conj().T)
