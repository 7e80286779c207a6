import numpy as np
import pytest

from gse.baselines import (
    ExtrapolationSpec,
    coherent_mismatch,
    dominant_vector,
    dominant_vector_energy,
    extrapolate_zero_noise,
    extrapolated_effective_state,
    richardson_coefficients,
    sample_noisy_lambdas,
    vd_energy,
    vd_state,
)
from gse.ansatz import prepare_ansatz_state
from gse.exceptions import ContractViolation
from gse.pauli import build_tfi_hamiltonian
from gse.states import exact_spectrum, pure_state, random_pure_state

H = build_tfi_hamiltonian(3, 1.0)


def test_vd_two_level_closed_form():
    e, V = exact_spectrum(H)
    p = 0.8
    rho = p * pure_state(V[:, 0]) + (1 - p) * pure_state(V[:, 2])
    for M in range(1, 6):
        ref = (p**M * e[0] + (1 - p) ** M * e[2]) / (p**M + (1 - p) ** M)
        assert vd_energy(rho, M, H).energy == pytest.approx(ref, abs=1e-12)


def test_vd_error_ratio(rng):
    e, V = exact_spectrum(H)
    # dominant vector is not an eigenstate of H; errors decay like (p1/p0)^M
    U = np.linalg.qr(rng.standard_normal((8, 3)) + 1j * rng.standard_normal((8, 3)))[0]
    p = np.array([0.7, 0.2, 0.1])
    rho = (U * p) @ U.conj().T
    E_dom = dominant_vector_energy(rho, H)
    err = [abs(vd_energy(rho, M, H).energy - E_dom) for M in range(8, 14)]
    ratios = np.array(err[1:]) / np.array(err[:-1])
    assert np.allclose(ratios, p[1] / p[0], rtol=0.05)


@pytest.mark.slow
def test_vd_converges_to_dominant(vqe8):
    E_dom = dominant_vector_energy(vqe8["rho"], vqe8["H"])
    assert vd_energy(vqe8["rho"], 12, vqe8["H"]).energy == pytest.approx(E_dom, abs=1e-6)


def test_coherent_mismatch(vqe4):
    # noise rotates the dominant vector slightly away from the ideal state
    assert 0 < coherent_mismatch(vqe4["rho"], vqe4["psi"]) < 0.05
    assert coherent_mismatch(pure_state(vqe4["psi"]), vqe4["psi"]) == pytest.approx(0.0, abs=1e-12)


def test_vd_state_and_validation(rng):
    rho = pure_state(random_pure_state(2, rng))
    assert np.allclose(vd_state(rho, 3), rho)
    with pytest.raises(ContractViolation):
        vd_energy(rho, 0, build_tfi_hamiltonian(2, 1.0))
    w, v = dominant_vector(rho)
    assert w == pytest.approx(1.0)


def test_richardson_closed_forms():
    assert np.array_equal(richardson_coefficients((1, 2)), [2.0, -1.0])
    assert np.array_equal(richardson_coefficients((1, 2, 3)), [3.0, -3.0, 1.0])
    with pytest.raises(ContractViolation):
        richardson_coefficients((1, 1, 2))


def test_extrapolation_cubic_residual():
    lam = np.array([1.0, 2.0, 3.0])
    c = 0.37
    vals = 1.5 - 0.2 * lam + 0.05 * lam**2 + c * lam**3
    beta = richardson_coefficients(lam)
    # quadratic part is reproduced exactly; the cubic leaves c * sum(beta lam^3) = c * 6
    assert extrapolate_zero_noise(vals, lam) - 1.5 == pytest.approx(c * beta @ lam**3, abs=1e-12)
    assert beta @ lam**3 == pytest.approx(6.0)


def test_noisy_lambda_statistics():
    spec = ExtrapolationSpec((1.0, 2.0, 3.0), epsilon=1.5, sigma=0.1, trials=1)
    rng = np.random.default_rng(7)
    draws = np.array([sample_noisy_lambdas(spec, rng) for _ in range(100_000)])
    lam = np.array(spec.lambdas)
    target_var = lam * spec.epsilon * spec.sigma**2
    se = np.sqrt(target_var / draws.shape[0])
    assert np.all(np.abs(draws.mean(0) - lam) < 3 * se)
    assert np.allclose(draws.var(0), target_var, rtol=0.05)


def test_zero_sigma_is_deterministic():
    spec = ExtrapolationSpec((1, 2, 3), 1.0, 0.0)
    assert np.array_equal(sample_noisy_lambdas(spec, 0), [1, 2, 3])


def test_spec_validation():
    with pytest.raises(ContractViolation):
        ExtrapolationSpec((1, 1))
    with pytest.raises(ContractViolation):
        ExtrapolationSpec((0.5, 2))
    with pytest.raises(ContractViolation):
        ExtrapolationSpec(sigma=-1)


def test_effective_state_can_be_unphysical(vqe4):
    c = vqe4["circuit"].with_params(vqe4["opt"].params)
    rhos = [
        prepare_ansatz_state(c.with_noise(c.p_dep_for_total_errors(x)))
        for x in (1.5, 3.0, 4.5)
    ]
    rho = extrapolated_effective_state(rhos, (1, 2, 3))
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(rho)[0] < 0


def test_fault_subspace_beats_physical_extrapolation(rng):
    # states linear in lambda extrapolate exactly to a physical rho0, which lies in the fault span
    from gse.subspace import SubspaceSpec, mitigate
    from gse.states import random_density_matrix

    H = build_tfi_hamiltonian(3, 1.0)
    rho0 = random_density_matrix(3, rank=2, rng=rng)
    lams = (1.0, 2.0, 3.0)
    rhos = [(1 - 0.1 * l) * rho0 + 0.1 * l * np.eye(8) / 8 for l in lams]
    ex = extrapolated_effective_state(rhos, lams)
    np.testing.assert_allclose(ex, rho0, atol=1e-12)
    res, _, _ = mitigate(SubspaceSpec.fault(lams), rhos, H)
    Hm = H.matrix()
    r2 = rho0 @ rho0
    e_distilled = np.trace(r2 @ Hm).real / np.trace(r2).real
    assert res.energy <= e_distilled + 1e-10
