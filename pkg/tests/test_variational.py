import numpy as np
import pytest

from gse.ansatz import AnsatzCircuit
from gse.exceptions import ContractViolation
from gse.pauli import build_tfi_hamiltonian
from gse.states import exact_spectrum
from gse.variational import (
    OptimizedParameters,
    SsvqeProblem,
    generate_noisy_family,
    lowest_weight_basis_states,
    optimize_ssvqe,
    optimize_vqe,
    ssvqe_weights,
)


def test_weights_positive_decreasing():
    w = ssvqe_weights(6)
    assert np.allclose(w, [6 / 6, 5 / 6, 4 / 6, 3 / 6, 2 / 6, 1 / 6])
    assert np.all(w > 0) and np.all(np.diff(w) < 0)


def test_lowest_weight_states():
    assert lowest_weight_basis_states(3, 5) == [0, 1, 2, 4, 3]
    with pytest.raises(ContractViolation):
        lowest_weight_basis_states(2, 5)


def test_single_bond_vqe():
    H = build_tfi_hamiltonian(2, 0.0)
    opt = optimize_vqe(H, AnsatzCircuit.hardware_efficient(2, 1), seed=0)
    assert opt.energies[0] == pytest.approx(-1.0, abs=1e-6)


def test_four_site_vqe_golden(vqe4):
    # frozen: depth-6 CNOT ladder reaches the exact ground energy
    assert vqe4["opt"].energies[0] == pytest.approx(-4.758770483143606, abs=1e-8)
    assert vqe4["opt"].energies[0] - vqe4["E0"] < 1e-3


def test_ssvqe_two_levels():
    H = build_tfi_hamiltonian(2, 1.0)
    opt = optimize_ssvqe(SsvqeProblem(H, AnsatzCircuit.hardware_efficient(2, 3), K=2), seed=0)
    e, _ = exact_spectrum(H)
    assert np.allclose(np.sort(opt.energies), e[:2], atol=1e-3)


def test_problem_validation():
    H = build_tfi_hamiltonian(2, 1.0)
    c = AnsatzCircuit.hardware_efficient(2, 1)
    with pytest.raises(ContractViolation):
        SsvqeProblem(H, c, K=2, weights=[0.5, 1.0])
    with pytest.raises(ContractViolation):
        SsvqeProblem(H, c.with_noise(0.01))
    with pytest.raises(ContractViolation):
        SsvqeProblem(H, c, K=5)


def test_params_roundtrip(tmp_path, vqe4):
    p = tmp_path / "params.json"
    vqe4["opt"].save(p)
    back = OptimizedParameters.load(p)
    assert np.array_equal(back.params, vqe4["opt"].params)
    assert back.initial_states == [0]


def test_noisy_family_purity(vqe4):
    rhos = generate_noisy_family(vqe4["opt"].params, vqe4["circuit"], [0.5, 1.0, 1.5])
    p = [np.trace(r @ r).real for r in rhos]
    assert p[0] > p[1] > p[2]
    for r in rhos:
        assert np.trace(r).real == pytest.approx(1.0)
    with pytest.raises(ContractViolation):
        generate_noisy_family(vqe4["opt"].params, vqe4["circuit"], [-0.1])


@pytest.mark.slow
def test_eight_site_state_fingerprint(vqe8):
    # frozen purity moments of the n = 8, depth-12, N_tot = 1.5 noisy state
    rho = vqe8["rho"]
    assert np.trace(rho @ rho).real == pytest.approx(0.03777653463116032, rel=1e-4)
    assert np.trace(rho @ rho @ rho).real == pytest.approx(0.005685906262874033, rel=1e-4)
