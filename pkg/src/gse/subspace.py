"""Subspace construction, matrix assembly and the two variational principles.

The mitigated state is ``rho_EM = P^dag A P / Tr[P^dag A P]`` with
``P = sum_i alpha_i sigma_i``. Coefficients come from the generalized
eigenproblem ``Hm alpha = E Sm alpha`` where

    Hm_ij = Tr[sigma_i^dag A sigma_j H],   Sm_ij = Tr[sigma_i^dag A sigma_j].

Every trace is evaluated exactly on dense matrices. The second moment
``K2_ij = Tr[sigma_i^dag A sigma_j H^2]`` is stored as well, so that the
variance matrix ``V(omega) = K2 - 2 omega Hm + omega^2 Sm`` can be rebuilt for
any reference energy without touching the states again.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import (
    AssemblyError,
    ContractViolation,
    DegenerateProjectionError,
    EmptySubspaceError,
    ImaginaryEnergyWarning,
    NonPSDError,
)
from .linalg import DEFAULT_CUTOFF, psd_sqrt, solve_generalized_eig
from .pauli import PauliHamiltonian, PauliString, as_observable
from .validation import check_square

KINDS = ("power", "power_plus", "vd", "fault", "general")
ASSEMBLY_RTOL = 1e-10


@dataclass(frozen=True)
class GeneralBasisTerm:
    """One product ``coef * U_1 rho_1 V_1 U_2 rho_2 V_2 ...``.

    ``factors`` is a sequence of ``(U, state, V)``. ``U``/``V`` may be None
    (identity), a :class:`PauliString`, a Pauli-sum or a dense matrix;
    ``state`` is an index into the state family or None for the identity,
    which lets operator-only bases such as ``H`` be written as a term.
    """

    coef: complex
    factors: tuple

    def __post_init__(self):
        if len(self.factors) < 1:
            raise ContractViolation("a basis term needs at least one factor")
        for f in self.factors:
            if len(f) != 3:
                raise ContractViolation("each factor is a (U, state, V) triple")


@dataclass(frozen=True)
class SubspaceSpec:
    """Declarative description of the bases ``{sigma_i}`` and the operator ``A``.

    Parameters
    ----------
    kind : {"power", "power_plus", "vd", "fault", "general"}
        ``vd`` is the single basis ``rho^{(M - a)/2}``, whose energy is the
        virtual-distillation estimate.
    M : int
        Copy budget for the power kinds.
    levels : tuple of float
        Noise levels of the fault family (metadata; the states carry them).
    terms : tuple
        For ``general``: one tuple of :class:`GeneralBasisTerm` per basis.
    A : None, "identity", "rho", ("rho_power", k) or ndarray
        ``None`` picks the kind's default (power: ``I`` for even ``M`` and
        ``rho`` for odd ``M``; others: ``I``).
    """

    kind: str
    M: int = 2
    levels: tuple = ()
    terms: tuple = ()
    A: object = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractViolation(f"unknown subspace kind {self.kind!r}")
        if self.kind in ("power", "power_plus", "vd") and self.M < 1:
            raise ContractViolation("copy budget M must be >= 1")
        if self.kind == "general" and not self.terms:
            raise ContractViolation("a general subspace needs at least one basis")

    @classmethod
    def power(cls, M, A=None):
        return cls("power", M=int(M), A=A)

    @classmethod
    def power_plus(cls, M, A=None):
        return cls("power_plus", M=int(M), A=A)

    @classmethod
    def vd(cls, M):
        return cls("vd", M=int(M))

    @classmethod
    def fault(cls, levels=(), A=None):
        return cls("fault", levels=tuple(levels), A=A)

    @classmethod
    def general(cls, bases, A=None):
        return cls("general", terms=tuple(tuple(b) for b in bases), A=A)

    @classmethod
    def conventional_qse(cls, hamiltonian):
        """``sigma in {I, H}`` with ``A = rho``."""
        return cls.general(
            [[GeneralBasisTerm(1.0, ((None, None, None),))], [GeneralBasisTerm(1.0, ((hamiltonian, None, None),))]],
            A="rho",
        )

    def default_A(self):
        if self.A is not None:
            return self.A
        if self.kind in ("power", "power_plus", "vd") and self.M % 2 == 1:
            return "rho"
        return "identity"

    def power_words(self):
        """``(m, h)`` per basis meaning ``rho^m H^h``, plus the power ``a`` of ``A = rho^a``."""
        if self.kind not in ("power", "power_plus", "vd"):
            raise ContractViolation("power words exist only for power subspaces")
        A = self.default_A()
        a = _A_power(A)
        if a is None:
            raise ContractViolation("power words need A = I or a power of rho")
        if a > self.M:
            raise ContractViolation(f"A = rho^{a} alone exceeds the copy budget M={self.M}")
        top = (self.M - a) // 2
        if self.kind == "vd":
            return [(top, 0)], a
        words = [(m, 0) for m in range(top + 1)]
        if self.kind == "power_plus":
            words += [(m, 1) for m in range(top + 1)]
        return words, a

    def to_dict(self):
        if self.kind == "general":
            raise ContractViolation("general subspaces are built in code, not serialized")
        A = self.A
        if isinstance(A, np.ndarray):
            raise ContractViolation("explicit A matrices are not serializable")
        return {"kind": self.kind, "M": self.M, "levels": list(self.levels), "A": A}


def _A_power(A):
    if isinstance(A, str):
        return {"identity": 0, "rho": 1}.get(A)
    if isinstance(A, tuple) and len(A) == 2 and A[0] == "rho_power":
        return int(A[1])
    return None


@dataclass
class SubspaceBasis:
    """Dense realization of a :class:`SubspaceSpec` on a concrete state family."""

    spec: SubspaceSpec
    sigmas: np.ndarray  # (D, d, d)
    A: np.ndarray
    labels: list
    words: list = None
    a_power: int = None

    @property
    def dim(self):
        return self.sigmas.shape[0]


@dataclass
class SubspaceMatrices:
    """``(Hm, Sm, Vm)`` plus the second-moment table and optional shot variances."""

    H_mat: np.ndarray
    S_mat: np.ndarray
    K2_mat: np.ndarray
    omega: float = 0.0
    var_H: np.ndarray = None
    var_S: np.ndarray = None

    @property
    def V_mat(self):
        return self.K2_mat - 2.0 * self.omega * self.H_mat + self.omega**2 * self.S_mat

    @property
    def dim(self):
        return self.H_mat.shape[0]

    def with_omega(self, omega):
        return replace(self, omega=float(omega))


@dataclass
class MitigationResult:
    energy: float
    coef: np.ndarray
    variance: float
    principle: str = "energy"
    omega_history: list = field(default_factory=list)
    kept_rank: int = 0
    selection_value: float = None
    rho_em: np.ndarray = None


def _as_dense(op, d):
    if op is None:
        return np.eye(d, dtype=complex)
    if isinstance(op, (PauliString, PauliHamiltonian)):
        M = as_observable(op).matrix()
    else:
        M = check_square(op, "operator")
    if M.shape != (d, d):
        raise ContractViolation(f"operator of shape {M.shape} does not act on dimension {d}")
    return M


def _family(rhos):
    if isinstance(rhos, np.ndarray) and rhos.ndim == 2:
        return [rhos]
    fam = [check_square(r, "state") for r in rhos]
    if not fam:
        raise ContractViolation("empty state family")
    if len({r.shape for r in fam}) != 1:
        raise ContractViolation("states in the family have different dimensions")
    return fam


def _powers(rho, top):
    out = [np.eye(rho.shape[0], dtype=complex)]
    for _ in range(top):
        out.append(out[-1] @ rho)
    return out


def _resolve_A(A, rho, d):
    if isinstance(A, str):
        if A == "identity":
            return np.eye(d, dtype=complex)
        if A == "rho":
            return rho.astype(complex)
        raise ContractViolation(f"unknown A operator {A!r}")
    k = _A_power(A)
    if k is not None:
        return np.linalg.matrix_power(rho, k).astype(complex)
    A = check_square(A, "A")
    if A.shape != (d, d):
        raise ContractViolation("A has the wrong dimension")
    return A


def build_bases(spec, rhos, hamiltonian=None):
    """Dense bases ``sigma_i`` and operator ``A`` for ``spec``.

    ``rhos`` is a single state (power kinds) or a list (fault / general; the
    first entry plays ``rho`` in ``A = rho``).
    """
    fam = _family(rhos)
    rho = fam[0]
    d = rho.shape[0]
    A_tag = spec.default_A()
    A = _resolve_A(A_tag, rho, d)

    if spec.kind in ("power", "power_plus", "vd"):
        words, a = spec.power_words()
        if spec.kind == "power_plus" and hamiltonian is None:
            raise ContractViolation("power_plus bases need the Hamiltonian")
        pw = _powers(rho, max(m for m, _ in words))
        Hm = as_observable(hamiltonian).matrix() if hamiltonian is not None else None
        sigmas = [pw[m] @ Hm if h else pw[m] for m, h in words]
        labels = [_power_label(m, h) for m, h in words]
        return SubspaceBasis(spec, np.array(sigmas), A, labels, words, a)

    if spec.kind == "fault":
        labels = [f"rho({lv:g})" for lv in spec.levels] if len(spec.levels) == len(fam) else [
            f"rho_{i}" for i in range(len(fam))
        ]
        return SubspaceBasis(spec, np.array(fam), A, labels)

    sigmas = []
    labels = []
    for b, terms in enumerate(spec.terms):
        acc = np.zeros((d, d), dtype=complex)
        for term in terms:
            prod = np.eye(d, dtype=complex)
            for U, state, V in term.factors:
                prod = prod @ _as_dense(U, d)
                if state is not None:
                    if not 0 <= state < len(fam):
                        raise ContractViolation(f"state index {state} outside the family")
                    prod = prod @ fam[state]
                prod = prod @ _as_dense(V, d)
            acc += complex(term.coef) * prod
        sigmas.append(acc)
        labels.append(f"general_{b}")
    return SubspaceBasis(spec, np.array(sigmas), A, labels)


def _power_label(m, h):
    base = "I" if m == 0 else ("rho" if m == 1 else f"rho^{m}")
    return base + (" H" if h else "")


def _check_and_symmetrize(M, name):
    scale = max(1.0, float(np.linalg.norm(M)))
    defect = float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0
    if defect > ASSEMBLY_RTOL * scale:
        raise AssemblyError(f"{name} is not Hermitian (defect {defect:.3e})")
    return 0.5 * (M + M.conj().T)


def gram(basis, O=None):
    """``[Tr[sigma_i^dag A sigma_j O]]_ij`` for a dense or Pauli observable (identity if None)."""
    sig = basis.sigmas
    R = np.einsum("ab,jbc->jac", basis.A, sig)
    if O is not None:
        O = O if isinstance(O, np.ndarray) else as_observable(O).matrix()
        R = R @ O
    # Tr[X Y] = sum(X^T * Y) and (sigma^dag)^T = conj(sigma)
    return np.einsum("iab,jab->ij", sig.conj(), R)


def assemble_matrices(basis, hamiltonian, omega=0.0):
    """Assemble ``(Hm, Sm, K2)`` for the given bases; hermiticity is asserted, then enforced."""
    Hd = hamiltonian if isinstance(hamiltonian, np.ndarray) else as_observable(hamiltonian).matrix()
    sig = basis.sigmas
    R0 = np.einsum("ab,jbc->jac", basis.A, sig)
    R1 = R0 @ Hd
    R2 = R1 @ Hd
    conj = sig.conj()
    S = np.einsum("iab,jab->ij", conj, R0)
    H = np.einsum("iab,jab->ij", conj, R1)
    K2 = np.einsum("iab,jab->ij", conj, R2)
    S = _check_and_symmetrize(S, "S")
    H = _check_and_symmetrize(H, "H")
    K2 = _check_and_symmetrize(K2, "K2")
    return SubspaceMatrices(H, S, K2, float(omega))


def _rayleigh(M, a):
    return complex(np.vdot(a, M @ a))


def _candidate(mats, a, principle, omega_history, kept, sel=None):
    norm = _rayleigh(mats.S_mat, a).real
    e = _rayleigh(mats.H_mat, a) / norm
    if abs(e.imag) > 1e-8 * max(1.0, abs(e.real)):
        warnings.warn(f"candidate energy has imaginary part {e.imag:.3e}", ImaginaryEnergyWarning, stacklevel=3)
    E = e.real
    var = _rayleigh(mats.K2_mat, a).real / norm - E**2
    return MitigationResult(
        energy=float(E),
        coef=a / np.sqrt(norm),
        variance=float(var),
        principle=principle,
        omega_history=list(omega_history),
        kept_rank=kept,
        selection_value=None if sel is None else float(sel),
    )


def solve_energy_principle(mats, cutoff=DEFAULT_CUTOFF, *, equilibrate=False):
    """All candidates of ``Hm a = E Sm a`` ordered by energy.

    ``variance`` on each candidate is the true energy variance
    ``<H^2> - E^2`` of the mitigated state.
    """
    sol = solve_generalized_eig(mats.H_mat, mats.S_mat, cutoff, equilibrate=equilibrate)
    return [
        _candidate(mats, sol.eigenvectors[:, k], "energy", [], sol.kept_rank, sol.eigenvalues[k])
        for k in range(len(sol))
    ]


def solve_variance_principle(mats, omega, cutoff=DEFAULT_CUTOFF, omega_iterations=2, *, equilibrate=False):
    """Minimize ``<(H - omega)^2>`` over the subspace, updating ``omega <- E``.

    Each pass solves ``V(omega) a = lam Sm a`` and keeps the candidate with
    the smallest ``lam``; its energy becomes the next reference. Only the
    stored moment tables are reused, no state is touched again.
    """
    if omega_iterations < 1:
        raise ContractViolation("omega_iterations must be >= 1")
    history = [float(omega)]
    result = None
    for _ in range(omega_iterations):
        m = mats.with_omega(history[-1])
        V = m.V_mat
        sol = solve_generalized_eig(V, m.S_mat, cutoff, equilibrate=equilibrate)
        lam, a = sol.pair(0)
        result = _candidate(m, a, "variance", [], sol.kept_rank, lam)
        history.append(result.energy)
    result.omega_history = history
    return result


def select_candidate(candidates, mode="min_variance", reference=None):
    """Pick one candidate: ``min_variance``, ``nearest`` (to ``reference``) or ``lowest``."""
    candidates = list(candidates)
    if not candidates:
        raise EmptySubspaceError("no candidates to select from")
    if mode == "min_variance":
        return min(candidates, key=lambda c: c.variance)
    if mode == "nearest":
        if reference is None:
            raise ContractViolation("nearest selection needs a reference energy")
        return min(candidates, key=lambda c: abs(c.energy - reference))
    if mode == "lowest":
        return min(candidates, key=lambda c: c.energy)
    raise ContractViolation(f"unknown selection mode {mode!r}")


def projector_operator(coef, basis):
    """``P = sum_i alpha_i sigma_i``."""
    coef = np.asarray(coef, dtype=complex)
    if coef.shape != (basis.dim,):
        raise ContractViolation(f"{coef.size} coefficients for a {basis.dim}-dimensional subspace")
    return np.tensordot(coef, basis.sigmas, axes=(0, 0))


def realize_mitigated_state(result, basis):
    """Dense ``rho_EM``; computed as ``B^dag B`` with ``B = sqrt(A) P`` so it is PSD by construction."""
    coef = result.coef if isinstance(result, MitigationResult) else result
    P = projector_operator(coef, basis)
    try:
        B = psd_sqrt(basis.A) @ P
        X = B.conj().T @ B
    except NonPSDError:
        X = P.conj().T @ basis.A @ P
    tr = np.trace(X).real
    if tr <= 1e-14:
        raise DegenerateProjectionError(f"Tr[P^dag A P] = {tr:.3e}")
    X = X / tr
    return 0.5 * (X + X.conj().T)


def mitigated_expectation(result, basis, O):
    """``a^dag O~ a / a^dag S a`` with ``O~_ij = Tr[sigma_i^dag A sigma_j O]``."""
    coef = result.coef if isinstance(result, MitigationResult) else np.asarray(result, dtype=complex)
    num = np.vdot(coef, gram(basis, O) @ coef)
    den = np.vdot(coef, gram(basis) @ coef)
    if abs(den) <= 1e-14:
        raise DegenerateProjectionError("vanishing normalization a^dag S a")
    return float((num / den).real)


def mitigate(spec, rhos, hamiltonian, *, principle="energy", selection="lowest", reference=None,
             omega=None, omega_iterations=2, cutoff=DEFAULT_CUTOFF, equilibrate=True, realize=True):
    """Build, assemble, solve and select in one call.

    Returns ``(result, basis, mats)``. For the variance principle ``omega``
    defaults to ``reference``.
    """
    basis = build_bases(spec, rhos, hamiltonian)
    mats = assemble_matrices(basis, hamiltonian)
    if principle == "energy":
        cands = solve_energy_principle(mats, cutoff, equilibrate=equilibrate)
        res = select_candidate(cands, selection, reference)
    elif principle == "variance":
        w = reference if omega is None else omega
        if w is None:
            raise ContractViolation("the variance principle needs an initial omega")
        res = solve_variance_principle(mats, w, cutoff, omega_iterations, equilibrate=equilibrate)
    else:
        raise ContractViolation(f"unknown principle {principle!r}")
    if realize:
        res.rho_em = realize_mitigated_state(res, basis)
    return res, basis, mats
