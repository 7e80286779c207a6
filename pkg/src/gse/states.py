"""Density-matrix operations: channels, metrics and observables.

States are plain ``(2**n, 2**n)`` complex arrays. Unphysical effective
states (for instance an extrapolated combination of density matrices) use
the same representation; :func:`is_physical` tells them apart.
"""

import numpy as np
import scipy.linalg

from .exceptions import ContractViolation, NonPSDError
from .pauli import PauliString, as_observable
from .validation import check_density_matrix, check_random_state, check_same_dim, n_qubits_of

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def basis_state(n_qubits, index):
    d = 2**n_qubits
    if not 0 <= index < d:
        raise ContractViolation(f"basis index {index} out of range")
    rho = np.zeros((d, d), dtype=complex)
    rho[index, index] = 1.0
    return rho


def pure_state(psi):
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_density_matrix(n_qubits, rank=None, rng=None):
    """Random mixed state from the induced (Ginibre) measure."""
    rng = check_random_state(rng)
    d = 2**n_qubits
    rank = d if rank is None else rank
    G = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_pure_state(n_qubits, rng=None):
    rng = check_random_state(rng)
    d = 2**n_qubits
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return psi / np.linalg.norm(psi)


def is_physical(rho, atol=1e-9):
    """Trace one and no eigenvalue below ``-atol``."""
    rho = np.asarray(rho)
    if abs(np.trace(rho).real - 1.0) > atol:
        return False
    return bool(scipy.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] >= -atol)


def purity(rho):
    return float(np.real(np.vdot(rho.T, rho)))


def moment(rho, k):
    """``Tr[rho^k]``."""
    return float(np.real(np.trace(np.linalg.matrix_power(rho, k))))


def _as_tensor(rho):
    n = n_qubits_of(rho.shape[0])
    return rho.reshape((2,) * (2 * n)), n


def apply_single_qubit_unitary(rho, U, qubit):
    """``U_q rho U_q^dag`` acting on one qubit of a density matrix."""
    t, n = _as_tensor(np.asarray(rho, dtype=complex))
    t = np.moveaxis(t, (qubit, n + qubit), (0, 1))
    t = np.tensordot(U, t, axes=(1, 0))
    t = np.moveaxis(np.tensordot(t, U.conj(), axes=(1, 1)), -1, 1)
    t = np.moveaxis(t, (0, 1), (qubit, n + qubit))
    return t.reshape(rho.shape)


def apply_depolarizing(rho, qubit, p):
    """Single-qubit depolarizing channel ``(1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z)``.

    Evaluated through the identity ``sum_P P rho P = 2 Tr_q[rho] (x) I_q``,
    which gives ``(1 - 4p/3) rho + (2p/3) Tr_q[rho] (x) I_q``.
    """
    if not 0.0 <= p < 1.0:
        raise ContractViolation(f"depolarizing probability {p} outside [0, 1)")
    rho = np.asarray(rho, dtype=complex)
    t, n = _as_tensor(rho)
    if not 0 <= qubit < n:
        raise ContractViolation(f"qubit {qubit} out of range for {n} qubits")
    if p == 0.0:
        return rho.copy()
    t = np.moveaxis(t, (qubit, n + qubit), (0, 1))
    reduced = t[0, 0] + t[1, 1]
    out = (1.0 - 4.0 * p / 3.0) * t
    out[0, 0] += (2.0 * p / 3.0) * reduced
    out[1, 1] += (2.0 * p / 3.0) * reduced
    out = np.moveaxis(out, (0, 1), (qubit, n + qubit))
    return out.reshape(rho.shape)


def pauli_expectation(rho, P):
    """``Tr[rho P]`` for a Pauli string (real part; the imaginary part is round-off)."""
    if not isinstance(P, PauliString):
        P = PauliString(P)
    return P.expectation(np.asarray(rho)).real


def expectation(rho, O):
    """``Tr[rho O]`` for a dense matrix, Pauli string or Pauli sum."""
    if isinstance(O, np.ndarray):
        return complex(np.sum(np.asarray(rho) * O.T)).real
    return as_observable(O).expectation(np.asarray(rho)).real


def fidelity(a, b):
    """Uhlmann fidelity ``Tr sqrt(sqrt(a) b sqrt(a))`` (not squared).

    ``a`` must be PSD. ``b`` may be an unphysical effective state; negative
    eigenvalues of the inner product are then clamped to zero, so the
    result can exceed one.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    check_same_dim(a, b)
    w, V = scipy.linalg.eigh(0.5 * (a + a.conj().T))
    tol = 10 * a.shape[0] * np.finfo(float).eps * max(abs(w).max(), 1e-300)
    if w[0] < -tol:
        raise NonPSDError(f"first argument of fidelity has eigenvalue {w[0]:.2e}")
    keep = w > tol
    # restricting to the support of a keeps round-off in its null space out of the square roots
    Vk = V[:, keep] * np.sqrt(w[keep])
    inner = Vk.conj().T @ b @ Vk
    vals = scipy.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    vals[np.abs(vals) <= tol * max(abs(vals).max(), 1.0)] = 0.0
    return float(np.sum(np.sqrt(np.clip(vals, 0.0, None))))


def trace_distance(a, b):
    """``(1/2) ||a - b||_1``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    check_same_dim(a, b)
    diff = a - b
    return 0.5 * float(np.sum(np.abs(scipy.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def two_point_correlator(rho, axis, r):
    """``<P_0 P_r>`` with ``P`` in ``{"X", "Z"}``; ``r = 0`` gives 1."""
    axis = axis.upper()
    if axis not in ("X", "Z"):
        raise ContractViolation(f"axis must be 'X' or 'Z', not {axis!r}")
    n = n_qubits_of(np.asarray(rho).shape[0])
    if not 0 <= r < n:
        raise ContractViolation(f"site {r} out of range")
    if r == 0:
        return float(np.trace(rho).real)
    return pauli_expectation(rho, PauliString.from_sites(n, {0: axis, r: axis}))


def ground_state(H):
    """Exact ground energy and state vector of a Pauli Hamiltonian."""
    e, V = scipy.linalg.eigh(as_observable(H).matrix())
    return float(e[0]), V[:, 0]


def exact_spectrum(H):
    e, V = scipy.linalg.eigh(as_observable(H).matrix())
    return e, V


__all__ = [
    "apply_depolarizing",
    "apply_single_qubit_unitary",
    "basis_state",
    "check_density_matrix",
    "exact_spectrum",
    "expectation",
    "fidelity",
    "ground_state",
    "is_physical",
    "moment",
    "pauli_expectation",
    "pure_state",
    "purity",
    "random_density_matrix",
    "random_pure_state",
    "trace_distance",
    "two_point_correlator",
]
