"""Dense complex linear algebra kernels.

Hermitian eigendecomposition, a metric-regularized generalized eigensolver
and PSD matrix functions. Everything here is a pure function of its inputs.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import EmptySubspaceError, NonPSDError, NonPSDMetricWarning
from .validation import check_hermitian, check_same_dim

DEFAULT_CUTOFF = 1e-8
NEGATIVE_METRIC_TOL = 1e-10


@dataclass(frozen=True)
class GeneralizedEigenSolution:
    """Eigenpairs of ``H a = E S a`` restricted to the kept metric directions.

    ``eigenvectors[:, k]`` is normalized so that ``a^dag S a = 1``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    kept_rank: int
    cutoff: float

    def __len__(self):
        return len(self.eigenvalues)

    def pair(self, k):
        return float(self.eigenvalues[k]), self.eigenvectors[:, k]


def hermitian_eig(M):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    M = check_hermitian(M)
    M = 0.5 * (M + M.conj().T)
    return scipy.linalg.eigh(M)


def _fix_phase(vecs):
    # largest-magnitude component made real and positive, for reproducibility
    idx = np.argmax(np.abs(vecs), axis=0)
    ph = vecs[idx, np.arange(vecs.shape[1])]
    ph = ph / np.abs(ph)
    return vecs / ph, idx


def _order(values, dominant, scale):
    order = sorted(
        range(len(values)),
        key=lambda k: (values[k], dominant[k]),
    )
    # ties (within round-off) are ordered by dominant coefficient index
    tol = 1e-12 * max(1.0, scale)
    out = []
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and values[order[j]] - values[order[i]] <= tol:
            j += 1
        out.extend(sorted(order[i:j], key=lambda k: dominant[k]))
        i = j
    return np.array(out, dtype=int)


def solve_generalized_eig(H, S, cutoff=DEFAULT_CUTOFF, *, equilibrate=False):
    """Solve ``H a = E S a`` after discarding small metric directions.

    The metric is diagonalized as ``S = U diag(s) U^dag``; directions with
    ``s_k <= cutoff * max(s)`` are dropped and the remaining problem is
    reduced to a standard Hermitian one in the ``s^{-1/2}``-scaled basis.

    Parameters
    ----------
    H, S : (D, D) array_like
        Hermitian matrices; ``S`` positive semidefinite.
    cutoff : float
        Relative metric threshold.
    equilibrate : bool
        If True, rescale bases to unit diagonal metric before the cutoff is
        applied. Eigenvalues are unaffected; only which directions survive
        the cutoff can change.

    Returns
    -------
    GeneralizedEigenSolution
    """
    H = check_hermitian(H, "H")
    S = check_hermitian(S, "S")
    check_same_dim(H, S)
    if cutoff < 0:
        raise ValueError("cutoff must be nonnegative")
    H = 0.5 * (H + H.conj().T)
    S = 0.5 * (S + S.conj().T)

    scale = np.ones(S.shape[0])
    if equilibrate:
        diag = np.real(np.diag(S))
        scale = np.where(diag > 0, 1.0 / np.sqrt(np.where(diag > 0, diag, 1.0)), 1.0)
    Hs = H * np.outer(scale, scale)
    Ss = S * np.outer(scale, scale)

    s, U = scipy.linalg.eigh(Ss)
    smax = s.max() if s.size else 0.0
    if smax <= 0:
        raise EmptySubspaceError("metric has no positive eigenvalue")
    if s[0] < -NEGATIVE_METRIC_TOL * smax:
        warnings.warn(
            f"metric is not PSD (min eigenvalue {s[0]:.3e}); negative directions discarded",
            NonPSDMetricWarning,
            stacklevel=2,
        )
    keep = s > cutoff * smax
    if not np.any(keep):
        raise EmptySubspaceError(f"all metric eigenvalues below cutoff {cutoff:g}")

    X = U[:, keep] / np.sqrt(s[keep])
    Hr = X.conj().T @ Hs @ X
    w, V = scipy.linalg.eigh(0.5 * (Hr + Hr.conj().T))
    alphas = (X @ V) * scale[:, None]

    norms = np.real(np.einsum("ik,ij,jk->k", alphas.conj(), S, alphas))
    alphas = alphas / np.sqrt(norms)
    alphas, dominant = _fix_phase(alphas)
    order = _order(w, dominant, float(np.max(np.abs(w))) if w.size else 1.0)
    return GeneralizedEigenSolution(
        eigenvalues=w[order],
        eigenvectors=alphas[:, order],
        kept_rank=int(np.count_nonzero(keep)),
        cutoff=float(cutoff),
    )


def psd_sqrt(M, *, clamp_negative=False):
    """Principal square root of a Hermitian PSD matrix.

    Eigenvalues in ``[-1e-6, 0)`` (scaled by ``max(1, ||M||_2)``) are treated
    as round-off and clamped to zero. With ``clamp_negative=True`` every
    negative eigenvalue is clamped instead of raising; this is used when the
    input is a known-unphysical effective state.
    """
    M = check_hermitian(M, rtol=1e-10)
    e, V = scipy.linalg.eigh(0.5 * (M + M.conj().T))
    scale = max(1.0, float(np.max(np.abs(e))) if e.size else 1.0)
    if not clamp_negative and e.size and e[0] < -1e-6 * scale:
        raise NonPSDError(f"matrix is materially non-PSD (eigenvalue {e[0]:.3e})")
    root = np.sqrt(np.clip(e, 0.0, None))
    R = (V * root) @ V.conj().T
    return 0.5 * (R + R.conj().T)


def psd_power(M, p):
    """``M**p`` for Hermitian PSD ``M`` via its spectrum (negatives clamped)."""
    e, V = scipy.linalg.eigh(0.5 * (M + M.conj().T))
    return (V * np.clip(e, 0.0, None) ** p) @ V.conj().T


def operator_norm_inverse(S, cutoff=DEFAULT_CUTOFF):
    """``||S^{-1}||_op`` restricted to directions kept by the metric cutoff."""
    s = scipy.linalg.eigvalsh(check_hermitian(S))
    kept = s[s > cutoff * s.max()]
    if kept.size == 0:
        raise EmptySubspaceError("all metric eigenvalues below cutoff")
    return float(1.0 / kept.min())
