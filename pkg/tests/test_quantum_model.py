import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gse.ansatz import AnsatzCircuit, StatevectorSimulator, prepare_ansatz_state
from gse.exceptions import ContractViolation
from gse.pauli import PauliHamiltonian, PauliString, build_tfi_hamiltonian
from gse.states import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    apply_depolarizing,
    basis_state,
    exact_spectrum,
    fidelity,
    ground_state,
    is_physical,
    pauli_expectation,
    pure_state,
    random_density_matrix,
    random_pure_state,
    trace_distance,
    two_point_correlator,
)

from conftest import random_hermitian

SINGLE = {"I": np.eye(2), "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


def kron_letters(s):
    out = np.eye(1)
    for c in s:
        out = np.kron(out, SINGLE[c])
    return out


@pytest.mark.parametrize("letters", ["X", "ZY", "XIZ", "YYXZ"])
def test_pauli_matrix_matches_kron(letters):
    assert np.allclose(PauliString(letters).matrix(), kron_letters(letters))


def test_pauli_product_phase():
    phase, p = PauliString("XZ") * PauliString("YZ")
    assert p == PauliString("ZI")
    assert np.allclose(phase * p.matrix(), PauliString("XZ").matrix() @ PauliString("YZ").matrix())
    assert PauliString("XX").commutes_with(PauliString("ZZ"))
    assert not PauliString("XI").commutes_with(PauliString("ZI"))


def test_pauli_rejects_bad_letters():
    with pytest.raises(ContractViolation):
        PauliString("XQ")


def test_pauli_expectation_matches_dense_trace(rng):
    rho = random_density_matrix(2, rng=rng)
    P = PauliString("XZ")
    assert pauli_expectation(rho, P) == pytest.approx(np.trace(rho @ kron_letters("XZ")).real, abs=1e-14)


def test_hamiltonian_power_matches_dense():
    H = build_tfi_hamiltonian(3, 0.7)
    for k in range(4):
        assert np.allclose(H.power(k).matrix(), np.linalg.matrix_power(H.matrix(), k), atol=1e-12)
    assert H.gamma == pytest.approx(2 + 3 * 0.7)


def test_tfi_two_sites():
    E0, _ = ground_state(build_tfi_hamiltonian(2, 1.0))
    assert E0 == pytest.approx(-np.sqrt(5), abs=1e-12)


def test_tfi_eight_sites_golden():
    # frozen from a 256x256 dense diagonalization
    E0, _ = ground_state(build_tfi_hamiltonian(8, 1.0))
    assert E0 == pytest.approx(-9.837951447459412, abs=1e-10)


def test_tfi_matches_free_fermions():
    from gse.oracles import free_fermion_spectrum

    e, _ = exact_spectrum(build_tfi_hamiltonian(5, 0.6))
    assert np.allclose(e, free_fermion_spectrum(5, 0.6), atol=1e-10)


def test_tfi_needs_two_sites():
    with pytest.raises(ContractViolation):
        build_tfi_hamiltonian(1, 1.0)


def test_depolarizing_matches_kraus_sum(rng):
    rho = random_density_matrix(2, rng=rng)
    p = 0.1
    for q in range(2):
        ref = (1 - p) * rho
        for P in (PAULI_X, PAULI_Y, PAULI_Z):
            K = np.kron(P, np.eye(2)) if q == 0 else np.kron(np.eye(2), P)
            ref = ref + p / 3 * K @ rho @ K
        assert np.allclose(apply_depolarizing(rho, q, p), ref, atol=1e-14)


def test_depolarizing_domain():
    with pytest.raises(ContractViolation):
        apply_depolarizing(basis_state(1, 0), 0, 1.0)
    with pytest.raises(ContractViolation):
        apply_depolarizing(basis_state(1, 0), 3, 0.1)


def gate_matrix_product(c):
    """Full unitary from explicitly embedded gate matrices (two qubits only)."""
    U = np.eye(4, dtype=complex)
    for g in c.gates:
        G = c.gate_matrix(g)
        if len(g.qubits) == 1:
            G = np.kron(G, np.eye(2)) if g.qubits[0] == 0 else np.kron(np.eye(2), G)
        U = G @ U
    return U


def test_ansatz_matches_matrix_product(rng):
    c = AnsatzCircuit.hardware_efficient(2, 1, params=rng.uniform(-np.pi, np.pi, 4))
    U = gate_matrix_product(c)
    psi0 = np.zeros(4)
    psi0[0] = 1
    assert np.allclose(prepare_ansatz_state(c, 0), pure_state(U @ psi0), atol=1e-10)


@pytest.mark.parametrize("entangler", ["cnot", "cz"])
def test_statevector_and_density_paths_agree(rng, entangler):
    c = AnsatzCircuit.hardware_efficient(3, 2, params=rng.uniform(-np.pi, np.pi, 9), entangler=entangler)
    sim = StatevectorSimulator(c, [0, 3])
    psi = sim.states(c.params)
    for k, idx in enumerate([0, 3]):
        assert np.allclose(pure_state(psi[:, k]), prepare_ansatz_state(c, idx), atol=1e-12)


def test_noise_calibration_and_purity_monotone(rng):
    c = AnsatzCircuit.hardware_efficient(3, 2, params=rng.uniform(-np.pi, np.pi, 9))
    assert c.n_gates * c.p_dep_for_total_errors(1.5) == pytest.approx(1.5)
    purities = [np.trace(r @ r).real for r in (prepare_ansatz_state(c.with_noise(c.p_dep_for_total_errors(x))) for x in (0.5, 1.0, 1.5))]
    assert purities[0] > purities[1] > purities[2]
    with pytest.raises(ContractViolation):
        c.p_dep_for_total_errors(c.n_gates * 2.0)


def test_fidelity_pure_state_oracle(rng):
    psi = random_pure_state(2, rng)
    sigma = random_density_matrix(2, rng=rng)
    assert fidelity(pure_state(psi), sigma) == pytest.approx(np.sqrt(np.vdot(psi, sigma @ psi).real), abs=1e-10)
    assert fidelity(sigma, sigma) == pytest.approx(1.0, abs=1e-7)


def test_fidelity_can_exceed_one_for_unphysical_input(rng):
    psi = random_pure_state(1, rng)
    gs = pure_state(psi)
    bad = 1.3 * gs - 0.3 * (np.eye(2) - gs)
    assert not is_physical(bad)
    assert fidelity(gs, bad) > 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_holder_inequality(seed):
    rng = np.random.default_rng(seed)
    a, b = random_density_matrix(2, rng=rng), random_density_matrix(2, rng=rng)
    O = random_hermitian(rng, 4)
    lhs = abs(np.trace(a @ O) - np.trace(b @ O))
    assert lhs <= 2 * trace_distance(a, b) * np.linalg.norm(O, 2) + 1e-12


def test_correlators_on_exact_ground_state():
    H = build_tfi_hamiltonian(4, 1.0)
    _, psi = ground_state(H)
    gs = pure_state(psi)
    for r in range(1, 4):
        for ax in "XZ":
            P = PauliString.from_sites(4, {0: ax, r: ax}).matrix()
            assert two_point_correlator(gs, ax, r) == pytest.approx(np.vdot(psi, P @ psi).real, abs=1e-12)
    assert two_point_correlator(gs, "Z", 0) == pytest.approx(1.0)
    with pytest.raises(ContractViolation):
        two_point_correlator(gs, "Y", 1)


def test_hamiltonian_algebra():
    A = PauliHamiltonian([(1.0, PauliString("XI")), (0.5, PauliString("ZZ"))])
    B = A @ A
    assert np.allclose(B.matrix(), A.matrix() @ A.matrix())
    assert np.allclose((A - A).simplify().matrix(), 0)
