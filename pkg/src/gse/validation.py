"""Input validation helpers shared by every module.

These mirror the ``check_array`` family in scikit-learn: each returns a
clean ``complex128``/``float64`` array or raises :class:`ContractViolation`.
"""

import numpy as np

from .exceptions import ContractViolation, NonPSDError

HERMITIAN_RTOL = 1e-12


def check_square(M, name="matrix"):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractViolation(f"{name} must be a square 2-D array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ContractViolation(f"{name} contains non-finite entries")
    return M.astype(np.complex128, copy=False)


def hermitian_defect(M):
    """Max elementwise deviation ``|M_ij - conj(M_ji)|``."""
    return float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0


def check_hermitian(M, name="matrix", rtol=HERMITIAN_RTOL):
    """Validate a Hermitian matrix; tolerance is ``rtol * max(1, ||M||_F)``."""
    M = check_square(M, name)
    scale = max(1.0, float(np.linalg.norm(M)))
    if hermitian_defect(M) > rtol * scale:
        raise ContractViolation(f"{name} is not Hermitian (defect {hermitian_defect(M):.3e})")
    return M


def n_qubits_of(dim):
    n = int(round(np.log2(dim))) if dim > 0 else -1
    if n < 0 or 2**n != dim:
        raise ContractViolation(f"dimension {dim} is not a power of two")
    return n


def check_density_matrix(rho, physical=True, name="rho", atol=1e-10):
    """Validate a density matrix.

    With ``physical=True`` the trace must be 1 and the spectrum nonnegative
    (both within ``atol``); otherwise only hermiticity and a power-of-two
    dimension are enforced.
    """
    rho = check_hermitian(rho, name, rtol=1e-10)
    n_qubits_of(rho.shape[0])
    if physical:
        tr = np.trace(rho).real
        if abs(tr - 1.0) > atol:
            raise ContractViolation(f"{name} has trace {tr!r}, expected 1")
        lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
        if lo < -atol:
            raise NonPSDError(f"{name} has negative eigenvalue {lo:.3e}")
    return rho


def check_same_dim(*mats):
    dims = {m.shape for m in mats}
    if len(dims) != 1:
        raise ContractViolation(f"dimension mismatch: {sorted(dims)}")


def check_random_state(seed):
    """Turn ``seed`` into a :class:`numpy.random.Generator`."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def derive_rng(seed, *key):
    """Independent generator for stream ``key`` of master ``seed``.

    The key is folded into the seed sequence's spawn key, so the stream a
    trial sees depends only on ``(seed, key)`` and not on execution order.
    """
    key = tuple(int(k) for k in key)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))
