"""Finite-measurement model: single-shot variances, Gaussian matrix noise, perturbation theory.

Multi-copy traces are estimated by measuring ``X = S W`` on ``rho_1 (x) ... (x) rho_M``
where ``S`` is the cyclic shift (``S|psi_1 ... psi_M> = |psi_2 ... psi_M psi_1>``)
and ``W`` is a product of local operators. The single-shot variance is
``<<X^2>> - <<X>>^2``. Both moments are traces of a permutation operator
times local operators, which reduce to products of ordinary traces along
the permutation's cycles; :func:`permutation_trace` implements that
reduction and the ``explicit_*`` helpers build the tensor-product operators
as oracles.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    ContractViolation,
    DegeneracyError,
    EmptySubspaceError,
    NonPSDMetricWarning,
    ResourceLimitError,
)
from .linalg import DEFAULT_CUTOFF, operator_norm_inverse, solve_generalized_eig
from .pauli import PauliHamiltonian, PauliString, as_observable
from .subspace import build_bases, assemble_matrices, select_candidate, solve_energy_principle
from .validation import check_random_state, derive_rng

MAX_ORACLE_QUBITS = 12


# ---------------------------------------------------------------- cyclic shift


def permutation_trace(perm, ops):
    """``Tr[Pi (Y_1 (x) ... (x) Y_M)]`` for ``Pi|psi_1..psi_M> = |psi_perm(1) .. psi_perm(M)>``.

    Equals the product over cycles ``(m, perm(m), perm^2(m), ...)`` of
    ``Tr[Y_m Y_perm(m) Y_perm^2(m) ...]``.
    """
    M = len(ops)
    seen = [False] * M
    out = 1.0 + 0j
    for start in range(M):
        if seen[start]:
            continue
        prod = np.eye(ops[0].shape[0], dtype=complex)
        m = start
        while not seen[m]:
            seen[m] = True
            prod = prod @ ops[m]
            m = perm[m]
        out *= np.trace(prod)
    return complex(out)


def _shift(M, k=1):
    return [(m + k) % M for m in range(M)]


def _dense(O, d):
    if O is None:
        return np.eye(d, dtype=complex)
    if isinstance(O, np.ndarray):
        return O.astype(complex)
    return as_observable(O).matrix()


def shift_moments(rhos, O, Qs=None):
    """First and second moment of ``X = S (O Q_1 (x) Q_2 (x) ... (x) Q_M)``.

    The first moment is ``Tr[O Q_1 rho_1 Q_2 rho_2 ... Q_M rho_M]``. For the
    second, ``X^2 = S^2 (x)_k (W_{k-1} W_k)`` since moving ``S`` through a
    local product shifts its registers by one.
    """
    rhos = [np.asarray(r, dtype=complex) for r in rhos]
    M = len(rhos)
    d = rhos[0].shape[0]
    Qd = [np.eye(d, dtype=complex) for _ in range(M)] if Qs is None else [_dense(q, d) for q in Qs]
    if len(Qd) != M:
        raise ContractViolation("one Q per copy is required")
    W = list(Qd)
    W[0] = _dense(O, d) @ W[0]
    first = permutation_trace(_shift(M), [W[m] @ rhos[m] for m in range(M)])
    ys = [W[(k - 1) % M] @ W[k] @ rhos[k] for k in range(M)]
    second = permutation_trace(_shift(M, 2), ys)
    return first, second


def shift_variance(rhos, O, Qs=None):
    """Closed-form single-shot variance ``<<X^2>> - |<<X>>|^2``.

    With one copy this is the ordinary ``Tr[rho O^2] - Tr[rho O]^2``. The
    value may be slightly negative for some inputs because ``X`` is not
    Hermitian for ``M > 2``; callers that need a noise scale clamp at zero.
    """
    first, second = shift_moments(rhos, O, Qs)
    return float(second.real - abs(first) ** 2)


def _guard(d, M):
    n = int(round(np.log2(d)))
    if n * M > MAX_ORACLE_QUBITS:
        raise ResourceLimitError(f"explicit {M}-copy operator on {n} qubits exceeds {MAX_ORACLE_QUBITS} qubits")


def cyclic_shift_matrix(M, d):
    """Dense ``S`` on ``(C^d)^{(x) M}`` with ``S|j_1 ... j_M> = |j_2 ... j_M j_1>``."""
    _guard(d, M)
    D = d**M
    idx = np.arange(D)
    digits = np.array(np.unravel_index(idx, (d,) * M))
    target = np.ravel_multi_index(np.roll(digits, -1, axis=0), (d,) * M)
    S = np.zeros((D, D))
    S[target, idx] = 1.0
    return S


def _kron_all(mats):
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def explicit_shift_moments(rhos, O, Qs=None):
    """Oracle for :func:`shift_moments` using the materialized shift operator."""
    rhos = [np.asarray(r, dtype=complex) for r in rhos]
    M = len(rhos)
    d = rhos[0].shape[0]
    _guard(d, M)
    S = cyclic_shift_matrix(M, d)
    Qd = [np.eye(d) for _ in range(M)] if Qs is None else [_dense(q, d) for q in Qs]
    local = list(Qd)
    local[0] = _dense(O, d) @ local[0]
    X = S @ _kron_all(local)
    R = _kron_all(rhos)
    return complex(np.trace(X @ R)), complex(np.trace(X @ X @ R))


def cyclic_shift_identity_check(rhos, O):
    """``|Tr[S O^(M) (x) rho_m] - Tr[rho_1 ... rho_M O]|`` with ``S`` built explicitly."""
    rhos = [np.asarray(r, dtype=complex) for r in rhos]
    d = rhos[0].shape[0]
    if len(rhos) > 3:
        raise ResourceLimitError("the explicit identity check supports at most 3 copies")
    first, _ = explicit_shift_moments(rhos, O)
    prod = np.eye(d, dtype=complex)
    for r in rhos:
        prod = prod @ r
    return float(abs(first - np.trace(prod @ _dense(O, d))))


# ---------------------------------------------------------------- closed forms


def _pauli_terms(O, n_qubits=None):
    if isinstance(O, (str, PauliString)):
        return [(1.0, O if isinstance(O, PauliString) else PauliString(O))]
    return [(c, p) for c, p in as_observable(O).terms]


def single_shot_variance_power(rho, O, M):
    """Variances of the numerator ``Tr[rho^M O]`` and denominator ``Tr[rho^M]``.

    The numerator is measured term by term, so its variance is
    ``sum_k |c_k|^2 Var_k``. For ``M = 2`` the per-term value is
    ``Tr[rho P]^2 - Tr[rho^2 P]^2``; ``M = 1`` gives ``1 - Tr[rho P]^2``.
    """
    if M < 1:
        raise ContractViolation("M must be >= 1")
    rhos = [rho] * M
    num = sum(abs(c) ** 2 * shift_variance(rhos, p.matrix()) for c, p in _pauli_terms(O))
    den = 0.0 if M == 1 else shift_variance(rhos, None)
    return float(num), float(den)


def single_shot_variance_fault(rho_i, rho_j, O):
    """``(Var O_ij, Var S_ij)`` for ``Tr[rho_i rho_j O]`` and ``Tr[rho_i rho_j]``.

    Per Pauli term ``Tr[rho_i P] Tr[rho_j P] - |Tr[rho_i rho_j P]|^2``; the
    overlap term is ``1 - Tr[rho_i rho_j]^2``.
    """
    pair = [rho_i, rho_j]
    var_o = sum(abs(c) ** 2 * shift_variance(pair, p.matrix()) for c, p in _pauli_terms(O))
    return float(var_o), float(shift_variance(pair, None))


def single_shot_variance_general(rhos, Qs, O):
    """Variance of ``<O>_Q = Tr[O Q_1 rho_1 Q_2 rho_2 ... Q_M rho_M]`` (one Pauli ``O``)."""
    return shift_variance(rhos, O, Qs)


def explicit_variance(rhos, O, Qs=None):
    first, second = explicit_shift_moments(rhos, O, Qs)
    return float(second.real - abs(first) ** 2)


# ---------------------------------------------------------------- element tables


@dataclass
class ElementQuantities:
    """Per-element single-shot variances and the count of measured quantities."""

    var_H: np.ndarray
    var_S: np.ndarray
    n_quantities: int


def _measured(k, pauli):
    # k = 0 traces are classical; Tr[rho] = 1 is known
    return k >= 1 and not (k == 1 and pauli.is_identity)


def element_variances(basis, rhos, hamiltonian):
    """Single-shot variance of every upper-triangle element of ``Hm`` and ``Sm``.

    Power kinds: element ``(i, j)`` is ``Tr[rho^k H^q]`` with ``k`` copies;
    ``H^q`` is expanded in Pauli strings. Fault: ``Tr[rho_i rho_j P]``.
    General: every element is treated as one quantity with unit variance
    per Pauli term of ``H`` (the bound for +/-1 outcomes).
    """
    H = as_observable(hamiltonian)
    D = basis.dim
    vH = np.zeros((D, D))
    vS = np.zeros((D, D))
    count = 0
    spec = basis.spec
    fam = [rhos] if isinstance(rhos, np.ndarray) and rhos.ndim == 2 else list(rhos)
    if spec.kind in ("power", "power_plus", "vd"):
        rho = fam[0]
        hpow = {}
        cache = {}

        def var_of(k, q):
            if (k, q) not in cache:
                if q not in hpow:
                    hpow[q] = H.power(q)
                total = 0.0
                n = 0
                for c, p in hpow[q].terms:
                    if not _measured(k, p):
                        continue
                    total += abs(c) ** 2 * max(0.0, shift_variance([rho] * k, p.matrix()))
                    n += 1
                cache[k, q] = (total, n)
            return cache[k, q]

        for i in range(D):
            for j in range(i, D):
                (mi, hi), (mj, hj) = basis.words[i], basis.words[j]
                k = mi + mj + basis.a_power
                for q0, table in ((1, vH), (0, vS)):
                    v, n = var_of(k, hi + hj + q0)
                    table[i, j] = table[j, i] = v
                    count += n
    elif spec.kind == "fault":
        if basis.a_power not in (None, 0) or not np.allclose(basis.A, np.eye(basis.A.shape[0])):
            raise ContractViolation("fault-subspace variances assume A = I")
        for i in range(D):
            for j in range(i, D):
                vo, vs = single_shot_variance_fault(fam[i], fam[j], H)
                vH[i, j] = vH[j, i] = max(0.0, vo)
                vS[i, j] = vS[j, i] = max(0.0, vs)
                count += len(H) + 1
    else:
        for i in range(D):
            for j in range(i, D):
                vH[i, j] = vH[j, i] = sum(abs(c) ** 2 for c, _ in H.terms)
                vS[i, j] = vS[j, i] = 1.0
                count += len(H) + 1
    return ElementQuantities(vH, vS, count)


# ---------------------------------------------------------------- noise model


@dataclass(frozen=True)
class ShotBudget:
    """Shots per measured quantity; ``n_s = inf`` means exact traces."""

    n_s: float

    def __post_init__(self):
        if not self.n_s >= 1:
            raise ContractViolation("n_s must be >= 1")

    @classmethod
    def uniform(cls, total_shots, n_quantities):
        """Split ``total_shots`` evenly over every (element, Pauli term) quantity."""
        if n_quantities < 1:
            return cls(np.inf)
        return cls(max(1.0, float(total_shots) / n_quantities))

    @property
    def infinite(self):
        return not np.isfinite(self.n_s)


def _hermitian_noise(var, n_s, rng):
    D = var.shape[0]
    out = np.zeros((D, D), dtype=complex)
    iu = np.triu_indices(D, 1)
    sd_off = np.sqrt(var[iu] / (2.0 * n_s))
    out[iu] = rng.normal(0.0, 1.0, sd_off.size) * sd_off + 1j * rng.normal(0.0, 1.0, sd_off.size) * sd_off
    out = out + out.conj().T
    out[np.diag_indices(D)] = rng.normal(0.0, 1.0, D) * np.sqrt(np.diag(var) / n_s)
    return out


def perturb_subspace_matrices(mats, budget, rng=None):
    """Add Gaussian shot noise to ``Hm`` and ``Sm`` (``K2`` is left exact).

    Diagonal elements get real noise of variance ``var / n_s``; off-diagonal
    elements get complex noise with ``var / (2 n_s)`` on each part, mirrored
    so the result is exactly Hermitian.
    """
    if mats.var_H is None or mats.var_S is None:
        raise ContractViolation("matrices carry no variance tables")
    if budget.infinite:
        return mats
    rng = check_random_state(rng)
    dH = _hermitian_noise(mats.var_H, budget.n_s, rng)
    dS = _hermitian_noise(mats.var_S, budget.n_s, rng)
    return type(mats)(mats.H_mat + dH, mats.S_mat + dS, mats.K2_mat, mats.omega, mats.var_H, mats.var_S)


def propagated_energy_variance(result, mats, budget):
    """First-order variance of ``E`` from independent element noise.

    Uses ``dE = a^dag (dH - E dS) a`` with ``a^dag S a = 1``; the covariance
    between numerator and denominator is taken as zero.
    """
    a = np.asarray(result.coef)
    w = np.abs(np.outer(a.conj(), a)) ** 2
    v = mats.var_H + result.energy**2 * mats.var_S
    D = a.size
    iu = np.triu_indices(D, 1)
    total = float(np.sum(np.diag(w) * np.diag(v))) + float(np.sum(2.0 * w[iu] * v[iu]))
    return total / budget.n_s


@dataclass
class ShotNoiseEstimate:
    energies: np.ndarray
    n_s: float
    n_quantities: int
    exact: float
    failures: int = 0
    edges: np.ndarray = field(default=None, repr=False)
    counts: np.ndarray = field(default=None, repr=False)

    @property
    def mean(self):
        return float(np.mean(self.energies))

    @property
    def std(self):
        return float(np.std(self.energies, ddof=1)) if self.energies.size > 1 else 0.0

    def histogram(self, bins=30):
        self.counts, self.edges = np.histogram(self.energies, bins=bins)
        return self.edges, self.counts

    def write_histogram_csv(self, path, bins=30):
        edges, counts = self.histogram(bins)
        lines = ["bin_left,bin_right,count"]
        lines += [f"{edges[k]!r},{edges[k + 1]!r},{int(counts[k])}" for k in range(counts.size)]
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")


def estimate_with_shot_noise(spec, rhos, hamiltonian, total_shots, trials, seed=0, *,
                             cutoff=DEFAULT_CUTOFF, equilibrate=True, selection="lowest", reference=None, stream=0):
    """Monte-Carlo distribution of the mitigated energy under uniform shot allocation.

    Each trial perturbs ``(Hm, Sm)``, regularizes the metric, solves the
    energy principle and selects one candidate. Trial ``t`` draws from the
    stream ``(seed, stream, t)``. Trials whose perturbed metric has no
    direction above the cutoff are counted in ``failures``.
    """
    basis = build_bases(spec, rhos, hamiltonian)
    mats = assemble_matrices(basis, hamiltonian)
    q = element_variances(basis, rhos, hamiltonian)
    mats.var_H, mats.var_S = q.var_H, q.var_S
    budget = ShotBudget(np.inf) if total_shots is None or not np.isfinite(total_shots) else ShotBudget.uniform(
        total_shots, q.n_quantities
    )
    exact = select_candidate(solve_energy_principle(mats, cutoff, equilibrate=equilibrate), selection, reference)
    out = []
    failures = 0
    for t in range(int(trials)):
        noisy = perturb_subspace_matrices(mats, budget, derive_rng(seed, stream, t))
        try:
            # a perturbed metric is routinely indefinite; the cutoff handles it
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NonPSDMetricWarning)
                cands = solve_energy_principle(noisy, cutoff, equilibrate=equilibrate)
        except EmptySubspaceError:
            failures += 1
            continue
        out.append(select_candidate(cands, selection, reference).energy)
    return ShotNoiseEstimate(np.array(out), budget.n_s, q.n_quantities, exact.energy, failures)


# ---------------------------------------------------------------- perturbation theory


@dataclass
class PerturbationReport:
    level: int
    predicted_shift: float
    predicted_coef_shift: np.ndarray
    actual_shift: float
    remainder: float = field(init=False)

    def __post_init__(self):
        self.remainder = abs(self.actual_shift - self.predicted_shift)


def predict_first_order_shift(H0, S0, solution, dH, dS, level=0, *, resolve=True):
    """First-order ``dE_n`` and ``d alpha_n`` for ``(H0 + dH) a = E (S0 + dS) a``.

    ``dE_n = a_n^dag (dH - E_n dS) a_n``; the coefficient shift is
    ``sum_l eps_nl a_l`` with ``eps_nl = a_l^dag (dH - E_n dS) a_n / (E_n - E_l)``
    and ``eps_nn = -a_n^dag dS a_n / 2``.
    """
    E = np.asarray(solution.eigenvalues)
    A = np.asarray(solution.eigenvectors)
    D = np.asarray(H0).shape[0]
    if solution.kept_rank != D:
        raise ContractViolation("perturbation theory needs the full-rank unperturbed problem")
    if not 0 <= level < E.size:
        raise ContractViolation(f"level {level} out of range")
    En = E[level]
    others = np.delete(E, level)
    if others.size and np.min(np.abs(others - En)) < 1e-8:
        raise DegeneracyError(f"level {level} is degenerate within 1e-8")
    dH = np.asarray(dH, dtype=complex)
    dS = np.asarray(dS, dtype=complex)
    an = A[:, level]
    G = dH - En * dS
    dE = float(np.vdot(an, G @ an).real)
    eps = np.zeros(E.size, dtype=complex)
    for l in range(E.size):
        if l == level:
            eps[l] = -0.5 * np.vdot(an, dS @ an)
        else:
            eps[l] = np.vdot(A[:, l], G @ an) / (En - E[l])
    dalpha = A @ eps
    actual = np.nan
    if resolve:
        sol = solve_generalized_eig(np.asarray(H0) + dH, np.asarray(S0) + dS, 0.0)
        actual = float(sol.eigenvalues[level] - En)
    return PerturbationReport(level, dE, dalpha, actual)


def sample_complexity_bound(gamma, D, S0, epsilon, cutoff=DEFAULT_CUTOFF):
    """``16 gamma^2 D^4 ||S0^-1||^2 / epsilon^2`` shots for accuracy ``epsilon``."""
    if epsilon <= 0:
        raise ContractViolation("target accuracy must be positive")
    inv = operator_norm_inverse(S0, cutoff)
    return 16.0 * gamma**2 * D**4 * inv**2 / epsilon**2


def metric_inverse_norm_d2(rho):
    """Approximate ``||S0^-1||`` for bases ``{I, rho}`` with ``A = rho``: ``1 / (Tr[rho^3] - Tr[rho^2]^2)``."""
    p2 = np.trace(rho @ rho).real
    p3 = np.trace(rho @ rho @ rho).real
    return 1.0 / (p3 - p2**2)


def metric_inverse_norm_d3(rho):
    """Approximate ``||S0^-1||`` for bases ``{I, rho, rho^2}`` with ``A = I/d``.

    Returns ``1 / (Tr[rho^4] - Tr[rho^3]^2 / Tr[rho^2])``, the reciprocal of the
    Schur complement of the ``{rho, rho^2}`` block.
    """
    r2 = rho @ rho
    p2 = np.trace(r2).real
    p3 = np.trace(r2 @ rho).real
    p4 = np.trace(r2 @ r2).real
    return 1.0 / (p4 - p3**2 / p2)
