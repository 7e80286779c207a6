"""scikit-learn style wrappers around the mitigation methods.

``fit`` takes a noisy state (or a family of states), ``transform`` returns
the mitigated density matrix and ``predict`` evaluates observables on it.
Hyperparameters live in ``__init__`` so ``get_params``/``set_params`` and
``sklearn.base.clone`` work as usual. ``set_output`` wrapping is switched
off since the outputs are density matrices, not feature tables.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .baselines import extrapolated_effective_state, richardson_coefficients, vd_energy, vd_state
from .exceptions import ContractViolation
from .linalg import DEFAULT_CUTOFF
from .states import expectation
from .subspace import (
    SubspaceSpec,
    assemble_matrices,
    build_bases,
    mitigated_expectation,
    realize_mitigated_state,
    select_candidate,
    solve_energy_principle,
    solve_variance_principle,
)
from .validation import check_density_matrix


def _check_family(X):
    if isinstance(X, np.ndarray) and X.ndim == 2:
        return check_density_matrix(X)
    states = [check_density_matrix(x, name=f"state[{k}]") for k, x in enumerate(X)]
    if not states:
        raise ContractViolation("empty state family")
    return states


def _many(observables, fn):
    if isinstance(observables, (list, tuple)):
        return np.array([fn(o) for o in observables])
    return fn(observables)


class GeneralizedSubspaceExpansion(TransformerMixin, BaseEstimator, auto_wrap_output_keys=None):
    """Subspace-expansion mitigation of a noisy state family.

    Parameters
    ----------
    hamiltonian : PauliHamiltonian
    kind : {"power", "power_plus", "vd", "fault"}
    M : int
        Copy budget for the power kinds.
    A : optional
        Override of the positive operator (see :class:`SubspaceSpec`).
    principle : {"energy", "variance"}
    selection : {"lowest", "min_variance", "nearest"}
        Candidate choice under the energy principle.
    reference : float, optional
        Target energy for ``nearest`` and initial ``omega`` for the variance principle.
    omega_iterations : int
    cutoff : float
        Relative metric cutoff.
    equilibrate : bool
        Scale bases to unit metric diagonal before applying the cutoff.
    spec : SubspaceSpec, optional
        Full specification; overrides ``kind``/``M``/``A`` (needed for general subspaces).
    """

    def __init__(self, hamiltonian=None, kind="power", M=2, A=None, principle="energy", selection="lowest",
                 reference=None, omega_iterations=2, cutoff=DEFAULT_CUTOFF, equilibrate=True, spec=None):
        self.hamiltonian = hamiltonian
        self.kind = kind
        self.M = M
        self.A = A
        self.principle = principle
        self.selection = selection
        self.reference = reference
        self.omega_iterations = omega_iterations
        self.cutoff = cutoff
        self.equilibrate = equilibrate
        self.spec = spec

    def _spec(self):
        if self.spec is not None:
            return self.spec
        return SubspaceSpec(self.kind, M=self.M, A=self.A)

    def fit(self, X, y=None):
        if self.hamiltonian is None:
            raise ContractViolation("a Hamiltonian is required")
        states = _check_family(X)
        self.basis_ = build_bases(self._spec(), states, self.hamiltonian)
        self.matrices_ = assemble_matrices(self.basis_, self.hamiltonian)
        if self.principle == "energy":
            self.candidates_ = solve_energy_principle(self.matrices_, self.cutoff, equilibrate=self.equilibrate)
            self.result_ = select_candidate(self.candidates_, self.selection, self.reference)
        elif self.principle == "variance":
            if self.reference is None:
                raise ContractViolation("the variance principle needs `reference` as the initial omega")
            self.result_ = solve_variance_principle(
                self.matrices_, self.reference, self.cutoff, self.omega_iterations, equilibrate=self.equilibrate
            )
            self.candidates_ = [self.result_]
        else:
            raise ContractViolation(f"unknown principle {self.principle!r}")
        self.result_.rho_em = realize_mitigated_state(self.result_, self.basis_)
        self.energy_ = self.result_.energy
        self.coef_ = self.result_.coef
        self.variance_ = self.result_.variance
        self.kept_rank_ = self.result_.kept_rank
        self.rho_em_ = self.result_.rho_em
        return self

    def transform(self, X=None):
        """Mitigated state; with ``X`` the fitted coefficients are applied to a new family."""
        check_is_fitted(self, "coef_")
        if X is None:
            return self.rho_em_
        basis = build_bases(self._spec(), _check_family(X), self.hamiltonian)
        return realize_mitigated_state(self.coef_, basis)

    def predict(self, observables):
        """Mitigated expectation value(s) ``a^dag O~ a / a^dag S a``."""
        check_is_fitted(self, "coef_")
        return _many(observables, lambda o: mitigated_expectation(self.coef_, self.basis_, o))


class VirtualDistillation(TransformerMixin, BaseEstimator, auto_wrap_output_keys=None):
    """``rho^M / Tr[rho^M]`` estimates."""

    def __init__(self, hamiltonian=None, M=2):
        self.hamiltonian = hamiltonian
        self.M = M

    def fit(self, X, y=None):
        rho = check_density_matrix(X)
        self.rho_vd_ = vd_state(rho, self.M)
        if self.hamiltonian is not None:
            res = vd_energy(rho, self.M, self.hamiltonian)
            self.energy_ = res.energy
            self.numerator_ = res.numerator
            self.denominator_ = res.denominator
        return self

    def transform(self, X=None):
        check_is_fitted(self, "rho_vd_")
        return self.rho_vd_ if X is None else vd_state(check_density_matrix(X), self.M)

    def predict(self, observables):
        check_is_fitted(self, "rho_vd_")
        return _many(observables, lambda o: expectation(self.rho_vd_, o))


class RichardsonExtrapolator(TransformerMixin, BaseEstimator, auto_wrap_output_keys=None):
    """Zero-noise extrapolation with coefficients from the nominal stretch factors."""

    def __init__(self, lambdas=(1.0, 2.0, 3.0)):
        self.lambdas = lambdas

    def fit(self, X=None, y=None):
        self.coef_ = richardson_coefficients(self.lambdas)
        return self

    def predict(self, values):
        """Extrapolate; ``values`` has one row per stretch factor (extra axes are broadcast)."""
        check_is_fitted(self, "coef_")
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.coef_.size:
            raise ContractViolation("one value per stretch factor is required")
        return np.tensordot(self.coef_, values, axes=(0, 0))

    def transform(self, X):
        """Effective state ``sum beta_i rho_i`` (possibly unphysical)."""
        check_is_fitted(self, "coef_")
        return extrapolated_effective_state(X, self.lambdas)
