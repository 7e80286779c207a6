"""Hardware-efficient ansatz circuits and their simulation.

A circuit is an ordered list of gates. Noisy states are produced by exact
density-matrix simulation with a depolarizing channel after every gate on
every qubit it touches. Noiseless optimization uses a batched statevector
path with adjoint-mode gradients.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ContractViolation
from .states import apply_depolarizing, apply_single_qubit_unitary, basis_state

ROTATIONS = ("rx", "ry", "rz")


def rotation_matrix(kind, theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    if kind == "ry":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "rz":
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]], dtype=complex)
    raise ContractViolation(f"unknown rotation {kind!r}")


# d/dtheta R(theta) = _GENERATOR[kind] @ R(theta)
_GENERATOR = {
    "rx": -0.5j * np.array([[0, 1], [1, 0]], dtype=complex),
    "ry": -0.5j * np.array([[0, -1j], [1j, 0]], dtype=complex),
    "rz": -0.5j * np.array([[1, 0], [0, -1]], dtype=complex),
}


ENTANGLERS = ("cnot", "cz")


def _fixed_gate_action(n, gate):
    """``(perm, signs)`` with ``(G psi)[j] = signs[j] * psi[perm[j]]``."""
    j = np.arange(2**n)
    a, b = gate.qubits
    ba = (j >> (n - 1 - a)) & 1
    bb = (j >> (n - 1 - b)) & 1
    if gate.kind == "cz":
        return j, 1.0 - 2.0 * (ba & bb)
    if gate.kind == "cnot":
        return j ^ (ba << (n - 1 - b)), np.ones(2**n)
    raise ContractViolation(f"unknown entangler {gate.kind!r}")


@dataclass(frozen=True)
class Gate:
    """``kind`` is a rotation name (one qubit, one parameter) or an entangler.

    Entanglers act on ``qubits = (control, target)``.
    """

    kind: str
    qubits: tuple
    param: int = -1


@dataclass(frozen=True)
class AnsatzCircuit:
    """Parameterized circuit with a per-gate depolarizing probability."""

    n_qubits: int
    depth: int
    gates: tuple
    params: np.ndarray = field(default=None, compare=False)
    p_dep: float = 0.0

    def __post_init__(self):
        n_rot = sum(1 for g in self.gates if g.kind in ROTATIONS)
        if self.params is None:
            object.__setattr__(self, "params", np.zeros(n_rot))
        params = np.asarray(self.params, dtype=float).ravel()
        if params.size != n_rot:
            raise ContractViolation(f"circuit has {n_rot} rotations but {params.size} parameters")
        object.__setattr__(self, "params", params)
        if not 0.0 <= self.p_dep < 1.0:
            raise ContractViolation(f"p_dep={self.p_dep} outside [0, 1)")

    @classmethod
    def hardware_efficient(cls, n_qubits, depth, params=None, p_dep=0.0, rotation="ry", entangler="cnot"):
        """``depth`` layers of (rotation on every qubit, entangler ladder), then a closing rotation layer.

        The ladder acts on pairs ``(0, 1), (1, 2), ..., (n-2, n-1)``. An Ry/CZ
        circuit started from ``|0...0>`` cannot represent the Ising ground
        state however deep it is, hence the CNOT default.
        """
        if n_qubits < 1 or depth < 0:
            raise ContractViolation("need n_qubits >= 1 and depth >= 0")
        if rotation not in ROTATIONS or entangler not in ENTANGLERS:
            raise ContractViolation(f"unsupported gate set {rotation!r}/{entangler!r}")
        gates = []
        k = 0
        for _ in range(depth):
            for q in range(n_qubits):
                gates.append(Gate(rotation, (q,), k))
                k += 1
            for q in range(n_qubits - 1):
                gates.append(Gate(entangler, (q, q + 1)))
        for q in range(n_qubits):
            gates.append(Gate(rotation, (q,), k))
            k += 1
        return cls(n_qubits, depth, tuple(gates), params, p_dep)

    @property
    def n_params(self):
        return self.params.size

    @property
    def n_gates(self):
        return len(self.gates)

    def with_params(self, params):
        return replace(self, params=np.asarray(params, dtype=float))

    def with_noise(self, p_dep):
        return replace(self, p_dep=float(p_dep))

    def p_dep_for_total_errors(self, n_tot):
        """Per-gate probability such that ``n_gates * p_dep == n_tot``."""
        p = float(n_tot) / self.n_gates
        if not 0.0 <= p < 1.0:
            raise ContractViolation(f"N_tot={n_tot} requires p_dep={p:.3g} outside [0, 1)")
        return p

    def gate_matrix(self, gate):
        if gate.kind == "cz":
            return np.diag([1, 1, 1, -1]).astype(complex)
        if gate.kind == "cnot":
            return np.eye(4, dtype=complex)[[0, 1, 3, 2]]
        return rotation_matrix(gate.kind, self.params[gate.param])


def prepare_ansatz_state(circuit, initial=0):
    """Noisy output density matrix of ``circuit`` applied to ``|initial>``."""
    n = circuit.n_qubits
    rho = basis_state(n, initial)
    p = circuit.p_dep
    actions = {}
    for gate in circuit.gates:
        if gate.kind in ENTANGLERS:
            key = (gate.kind, gate.qubits)
            if key not in actions:
                actions[key] = _fixed_gate_action(n, gate)
            perm, s = actions[key]
            rho = rho[np.ix_(perm, perm)] * np.outer(s, s)
        else:
            (q,) = gate.qubits
            rho = apply_single_qubit_unitary(rho, circuit.gate_matrix(gate), q)
        if p > 0:
            for q in gate.qubits:
                rho = apply_depolarizing(rho, q, p)
    return 0.5 * (rho + rho.conj().T)


class StatevectorSimulator:
    """Noiseless batched simulation of a fixed circuit structure.

    Columns of the state batch are independent input states; this is what
    the subspace-search cost needs (one unitary, several orthogonal inputs).
    """

    def __init__(self, circuit, initial_states):
        self.circuit = circuit
        self.n = circuit.n_qubits
        self.initial = list(initial_states)
        d = 2**self.n
        psi0 = np.zeros((d, len(self.initial)), dtype=complex)
        for k, idx in enumerate(self.initial):
            psi0[idx, k] = 1.0
        self.psi0 = psi0
        self._fixed = {
            (g.kind, g.qubits): _fixed_gate_action(self.n, g) for g in circuit.gates if g.kind in ENTANGLERS
        }

    def _apply(self, psi, U, q):
        K = psi.shape[1]
        t = psi.reshape((2,) * self.n + (K,))
        t = np.moveaxis(np.tensordot(U, t, axes=(1, q)), 0, q)
        return t.reshape(psi.shape)

    def _gate(self, psi, gate, params, inverse=False):
        if gate.kind in ENTANGLERS:
            # both supported entanglers are self-inverse
            perm, s = self._fixed[gate.kind, gate.qubits]
            return psi[perm] * s[:, None]
        U = rotation_matrix(gate.kind, params[gate.param])
        if inverse:
            U = U.conj().T
        return self._apply(psi, U, gate.qubits[0])

    def states(self, params):
        psi = self.psi0
        for gate in self.circuit.gates:
            psi = self._gate(psi, gate, params)
        return psi

    def energies(self, params, H):
        psi = self.states(params)
        return np.real(np.einsum("ik,ij,jk->k", psi.conj(), H, psi))

    def cost_and_grad(self, params, H, weights):
        """Weighted energy sum and its exact gradient (adjoint method)."""
        w = np.asarray(weights, dtype=float)
        phi = self.states(params)
        Hphi = H @ phi
        cost = float(np.real(np.sum(w * np.einsum("ik,ik->k", phi.conj(), Hphi))))
        mu = Hphi * w
        grad = np.zeros(len(params))
        for gate in reversed(self.circuit.gates):
            if gate.kind in ROTATIONS:
                dphi = self._apply(phi, _GENERATOR[gate.kind], gate.qubits[0])
                grad[gate.param] += 2.0 * np.real(np.vdot(mu, dphi))
            phi = self._gate(phi, gate, params, inverse=True)
            mu = self._gate(mu, gate, params, inverse=True)
        return cost, grad
