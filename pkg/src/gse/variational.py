"""Noiseless VQE / subspace-search VQE and noisy-state generation."""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .ansatz import AnsatzCircuit, StatevectorSimulator, prepare_ansatz_state
from .exceptions import ContractViolation, OptimizerDivergenceError
from .pauli import PauliHamiltonian
from .validation import check_random_state


def ssvqe_weights(K):
    """Strictly decreasing positive weights ``(K - k + 1) / K`` for ``k = 1..K``."""
    return np.array([(K - k + 1) / K for k in range(1, K + 1)])


def lowest_weight_basis_states(n_qubits, K):
    """The ``K`` computational states of lowest Hamming weight, ties by index."""
    if K > 2**n_qubits:
        raise ContractViolation(f"K={K} exceeds the Hilbert-space dimension")
    idx = sorted(range(2**n_qubits), key=lambda j: (bin(j).count("1"), j))
    return idx[:K]


@dataclass
class SsvqeProblem:
    hamiltonian: PauliHamiltonian
    ansatz: AnsatzCircuit
    K: int = 1
    weights: np.ndarray = None
    initial_states: list = None

    def __post_init__(self):
        n = self.ansatz.n_qubits
        if self.K < 1 or self.K > 2**n:
            raise ContractViolation(f"K={self.K} out of range")
        if self.weights is None:
            self.weights = ssvqe_weights(self.K)
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.weights) != self.K or np.any(self.weights <= 0) or np.any(np.diff(self.weights) >= 0):
            raise ContractViolation("weights must be positive and strictly decreasing")
        if self.initial_states is None:
            self.initial_states = lowest_weight_basis_states(n, self.K)
        if len(set(self.initial_states)) != self.K:
            raise ContractViolation("initial basis states must be K distinct indices")
        if self.ansatz.p_dep != 0:
            raise ContractViolation("optimization is performed on the noiseless circuit")


@dataclass
class OptimizedParameters:
    params: np.ndarray
    cost: float
    energies: np.ndarray
    n_iterations: int
    initial_cost: float
    seed: int = None
    initial_states: list = field(default_factory=list)

    def save(self, path):
        data = asdict(self)
        data["params"] = [float(x) for x in self.params]
        data["energies"] = [float(x) for x in self.energies]
        Path(path).write_text(json.dumps(data, indent=2))

    @classmethod
    def load(cls, path):
        data = json.loads(Path(path).read_text())
        data["params"] = np.asarray(data["params"])
        data["energies"] = np.asarray(data["energies"])
        return cls(**data)


def _single_start(sim, Hmat, weights, theta0, maxiter, gtol):
    def fun(theta):
        c, g = sim.cost_and_grad(theta, Hmat, weights)
        if not np.isfinite(c):
            raise OptimizerDivergenceError("non-finite variational cost")
        return c, g

    res = minimize(fun, theta0, jac=True, method="BFGS", options={"maxiter": maxiter, "gtol": gtol})
    return res


def optimize_ssvqe(problem, *, n_starts=4, seed=0, maxiter=5000, gtol=1e-6, init_params=None):
    """Minimize ``sum_k w_k <psi_k| U^dag H U |psi_k>`` with multi-start BFGS.

    Parameters are initialized uniformly in ``(-pi, pi)`` from a generator
    seeded with ``seed`` (one independent stream per start); the best start
    is returned. ``init_params`` adds a warm start.
    """
    sim = StatevectorSimulator(problem.ansatz, problem.initial_states)
    Hmat = problem.hamiltonian.matrix()
    w = problem.weights
    starts = []
    for child in np.random.SeedSequence(seed).spawn(n_starts):
        rng = check_random_state(child)
        starts.append(rng.uniform(-np.pi, np.pi, problem.ansatz.n_params))
    if init_params is not None:
        starts.insert(0, np.asarray(init_params, dtype=float))

    best = None
    for theta0 in starts:
        c0, _ = sim.cost_and_grad(theta0, Hmat, w)
        res = _single_start(sim, Hmat, w, theta0, maxiter, gtol)
        if best is None or res.fun < best[0].fun:
            best = (res, c0)
    res, c0 = best
    return OptimizedParameters(
        params=np.asarray(res.x),
        cost=float(res.fun),
        energies=sim.energies(res.x, Hmat),
        n_iterations=int(res.nit),
        initial_cost=float(c0),
        seed=seed,
        initial_states=list(problem.initial_states),
    )


def optimize_vqe(hamiltonian, ansatz, **kwargs):
    """Ground-state VQE: the ``K = 1`` case of :func:`optimize_ssvqe`."""
    return optimize_ssvqe(SsvqeProblem(hamiltonian, ansatz, K=1), **kwargs)


def generate_noisy_family(params, template, levels, initial=0):
    """One noisy state per error level, each level being the expected error count ``N_tot``."""
    circuit = template.with_params(params)
    out = []
    for level in levels:
        if level < 0:
            raise ContractViolation("noise levels must be nonnegative")
        p = circuit.p_dep_for_total_errors(level)
        out.append(prepare_ansatz_state(circuit.with_noise(p), initial))
    return out
