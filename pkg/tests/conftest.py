import numpy as np
import pytest

from gse.ansatz import AnsatzCircuit
from gse.pauli import build_tfi_hamiltonian
from gse.states import ground_state
from gse.variational import generate_noisy_family, optimize_vqe


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tfi4():
    return build_tfi_hamiltonian(4, 1.0)


@pytest.fixture(scope="session")
def vqe4(tfi4):
    """n = 4, h = 1, depth-6 VQE and its N_tot = 1.5 noisy output."""
    circuit = AnsatzCircuit.hardware_efficient(4, 6)
    opt = optimize_vqe(tfi4, circuit, seed=0)
    rho = generate_noisy_family(opt.params, circuit, [1.5])[0]
    E0, psi = ground_state(tfi4)
    return {"circuit": circuit, "opt": opt, "rho": rho, "E0": E0, "psi": psi}


def random_hermitian(rng, d, scale=1.0):
    X = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * 0.5 * (X + X.conj().T)


@pytest.fixture(scope="session")
def vqe8():
    """Full-size ground-state configuration: n = 8, h = 1, depth 12, N_tot = 1.5 (about 25 s)."""
    H = build_tfi_hamiltonian(8, 1.0)
    circuit = AnsatzCircuit.hardware_efficient(8, 12)
    opt = optimize_vqe(H, circuit, seed=0, n_starts=1)
    rho = generate_noisy_family(opt.params, circuit, [1.5])[0]
    return {"H": H, "circuit": circuit, "opt": opt, "rho": rho}
