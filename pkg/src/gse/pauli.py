"""Pauli strings, weighted Pauli sums and the transverse-field Ising model.

Qubit 0 is the most significant bit of a computational-basis index, which
matches ``np.kron(P_0, np.kron(P_1, ...))`` ordering.
"""

from functools import cached_property

import numpy as np

from .exceptions import ContractViolation

_LETTERS = "IXYZ"

# single-qubit products: (a, b) -> (phase, letter) with a*b = phase*letter
_PRODUCT = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}  # fmt: skip


class PauliString:
    """Tensor product of single-qubit Paulis, e.g. ``PauliString("XZI")``."""

    def __init__(self, letters):
        letters = str(letters).upper()
        if not letters or any(c not in _LETTERS for c in letters):
            raise ContractViolation(f"invalid Pauli string {letters!r}")
        self.letters = letters

    @classmethod
    def identity(cls, n_qubits):
        return cls("I" * n_qubits)

    @classmethod
    def from_sites(cls, n_qubits, sites):
        """Build from ``{site: letter}``, identity elsewhere."""
        chars = ["I"] * n_qubits
        for site, letter in sites.items():
            if not 0 <= site < n_qubits:
                raise ContractViolation(f"site {site} out of range for {n_qubits} qubits")
            chars[site] = letter
        return cls("".join(chars))

    @property
    def n_qubits(self):
        return len(self.letters)

    @property
    def is_identity(self):
        return set(self.letters) == {"I"}

    def __repr__(self):
        return f"PauliString({self.letters!r})"

    def __eq__(self, other):
        return isinstance(other, PauliString) and other.letters == self.letters

    def __hash__(self):
        return hash(self.letters)

    def __mul__(self, other):
        """Return ``(phase, PauliString)`` with ``self @ other = phase * result``."""
        if other.n_qubits != self.n_qubits:
            raise ContractViolation("Pauli strings act on different qubit counts")
        phase = 1
        out = []
        for a, b in zip(self.letters, other.letters):
            p, c = _PRODUCT[a, b]
            phase *= p
            out.append(c)
        return phase, PauliString("".join(out))

    @cached_property
    def _action(self):
        # P|j> = phase[j] |j ^ flip>
        n = self.n_qubits
        j = np.arange(2**n)
        flip = 0
        phase = np.ones(2**n, dtype=complex)
        for q, c in enumerate(self.letters):
            bit = (j >> (n - 1 - q)) & 1
            if c in "XY":
                flip |= 1 << (n - 1 - q)
            if c == "Z":
                phase *= 1 - 2 * bit
            elif c == "Y":
                phase *= 1j * (1 - 2 * bit)
        return flip, phase

    def matrix(self):
        d = 2**self.n_qubits
        flip, phase = self._action
        j = np.arange(d)
        M = np.zeros((d, d), dtype=complex)
        M[j ^ flip, j] = phase
        return M

    def expectation(self, rho):
        """``Tr[rho P]`` in O(d) using the permutation structure of ``P``."""
        rho = np.asarray(rho)
        d = 2**self.n_qubits
        if rho.shape != (d, d):
            raise ContractViolation(f"state of shape {rho.shape} does not match {self.n_qubits} qubits")
        flip, phase = self._action
        j = np.arange(d)
        return complex(np.sum(rho[j, j ^ flip] * phase))

    def commutes_with(self, other):
        anti = sum(
            1 for a, b in zip(self.letters, other.letters) if a != "I" and b != "I" and a != b
        )
        return anti % 2 == 0


class PauliHamiltonian:
    """Weighted sum of Pauli strings ``sum_a f_a P_a``.

    Coefficients are stored complex so that products of sums close under
    multiplication; a Hermitian sum has real coefficients after
    :meth:`simplify`.
    """

    def __init__(self, terms, n_qubits=None):
        collected = {}
        for coef, pauli in terms:
            if not isinstance(pauli, PauliString):
                pauli = PauliString(pauli)
            if n_qubits is None:
                n_qubits = pauli.n_qubits
            elif pauli.n_qubits != n_qubits:
                raise ContractViolation("terms act on different qubit counts")
            collected[pauli] = collected.get(pauli, 0) + complex(coef)
        if n_qubits is None:
            raise ContractViolation("empty Pauli sum needs an explicit n_qubits")
        self.n_qubits = int(n_qubits)
        self._terms = collected

    @classmethod
    def identity(cls, n_qubits, coef=1.0):
        return cls([(coef, PauliString.identity(n_qubits))])

    @property
    def terms(self):
        """List of ``(coefficient, PauliString)``; real coefficients where possible."""
        out = []
        for p, c in self._terms.items():
            out.append((c.real if abs(c.imag) <= 1e-14 * max(1.0, abs(c)) else c, p))
        return out

    @property
    def gamma(self):
        """Sum of absolute coefficients, an upper bound on ``||H||_op``."""
        return float(sum(abs(c) for c in self._terms.values()))

    def __len__(self):
        return len(self._terms)

    def __repr__(self):
        body = " + ".join(f"{c:.4g}*{p.letters}" for c, p in self.terms[:6])
        more = " + ..." if len(self) > 6 else ""
        return f"PauliHamiltonian({body}{more})"

    def simplify(self, atol=1e-14):
        return PauliHamiltonian(
            [(c, p) for p, c in self._terms.items() if abs(c) > atol], n_qubits=self.n_qubits
        )

    def __add__(self, other):
        if isinstance(other, PauliHamiltonian):
            return PauliHamiltonian(
                [(c, p) for p, c in self._terms.items()] + [(c, p) for p, c in other._terms.items()],
                n_qubits=self.n_qubits,
            )
        return self + PauliHamiltonian.identity(self.n_qubits, other)

    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other if isinstance(other, PauliHamiltonian) else -other)

    def __mul__(self, scalar):
        return PauliHamiltonian([(scalar * c, p) for p, c in self._terms.items()], n_qubits=self.n_qubits)

    __rmul__ = __mul__

    def __matmul__(self, other):
        out = []
        for pa, ca in self._terms.items():
            for pb, cb in other._terms.items():
                phase, pc = pa * pb
                out.append((ca * cb * phase, pc))
        return PauliHamiltonian(out, n_qubits=self.n_qubits).simplify()

    def power(self, k):
        """``H^k`` as a simplified Pauli sum (``H^0`` is the identity)."""
        out = PauliHamiltonian.identity(self.n_qubits)
        for _ in range(k):
            out = out @ self
        return out

    def matrix(self):
        cache = self.__dict__.get("_matrix")
        if cache is None:
            d = 2**self.n_qubits
            cache = np.zeros((d, d), dtype=complex)
            for p, c in self._terms.items():
                cache += c * p.matrix()
            self.__dict__["_matrix"] = cache
        return cache.copy()

    def expectation(self, rho):
        return complex(sum(c * p.expectation(rho) for p, c in self._terms.items()))


def build_tfi_hamiltonian(n_qubits, h):
    """Open-chain transverse-field Ising model ``-sum Z_r Z_{r+1} + h sum X_r``."""
    if int(n_qubits) < 2:
        raise ContractViolation("the Ising chain needs at least two sites")
    n = int(n_qubits)
    terms = [(-1.0, PauliString.from_sites(n, {r: "Z", r + 1: "Z"})) for r in range(n - 1)]
    terms += [(float(h), PauliString.from_sites(n, {r: "X"})) for r in range(n)]
    return PauliHamiltonian(terms, n_qubits=n)


def as_observable(O, n_qubits=None):
    """Coerce a PauliString / PauliHamiltonian / letter string to a PauliHamiltonian."""
    if isinstance(O, PauliHamiltonian):
        return O
    if isinstance(O, str):
        O = PauliString(O)
    if isinstance(O, PauliString):
        return PauliHamiltonian([(1.0, O)])
    raise ContractViolation(f"cannot interpret {type(O).__name__} as a Pauli observable")
