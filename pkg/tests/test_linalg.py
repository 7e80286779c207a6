import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gse.exceptions import ContractViolation, EmptySubspaceError, NonPSDError
from gse.linalg import hermitian_eig, operator_norm_inverse, psd_power, psd_sqrt, solve_generalized_eig

from conftest import random_hermitian


def test_hermitian_eig_reconstructs(rng):
    M = random_hermitian(rng, 6)
    e, V = hermitian_eig(M)
    assert np.all(np.diff(e) >= 0)
    assert np.allclose(V.conj().T @ V, np.eye(6), atol=1e-12)
    assert np.allclose((V * e) @ V.conj().T, M, atol=1e-10)


def test_hermitian_eig_rejects_non_hermitian(rng):
    with pytest.raises(ContractViolation):
        hermitian_eig(rng.standard_normal((3, 3)) + 1j * np.eye(3))


def test_generalized_identity_metric_matches_standard(rng):
    H = random_hermitian(rng, 5)
    sol = solve_generalized_eig(H, np.eye(5))
    assert sol.kept_rank == 5
    assert np.allclose(sol.eigenvalues, np.linalg.eigvalsh(H), atol=1e-12)


def test_generalized_rank_deficient_projection(rng):
    # 3x3 pair with one null metric direction
    B = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    S = B @ B.conj().T
    H = random_hermitian(rng, 3)
    sol = solve_generalized_eig(H, S, 1e-8)
    assert sol.kept_rank == 2
    # brute force: restrict to range(S)
    Q, _ = np.linalg.qr(B)
    Hr, Sr = Q.conj().T @ H @ Q, Q.conj().T @ S @ Q
    ref = np.sort(np.linalg.eigvals(np.linalg.solve(Sr, Hr)).real)
    assert np.allclose(np.sort(sol.eigenvalues), ref, atol=1e-8)


def test_generalized_eigenvectors_are_metric_normalized(rng):
    H = random_hermitian(rng, 4)
    Y = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    S = Y @ Y.conj().T + 0.1 * np.eye(4)
    sol = solve_generalized_eig(H, S, 0.0)
    A = sol.eigenvectors
    assert np.allclose(A.conj().T @ S @ A, np.eye(4), atol=1e-10)
    assert np.allclose(H @ A, S @ A * sol.eigenvalues, atol=1e-10)


def test_empty_subspace_raises():
    with pytest.raises(EmptySubspaceError):
        solve_generalized_eig(np.eye(2), np.zeros((2, 2)))


def test_equilibrate_is_invariant_on_wellconditioned(rng):
    H = random_hermitian(rng, 4)
    S = np.diag([100.0, 1.0, 0.01, 3.0]).astype(complex)
    a = solve_generalized_eig(H, S, 0.0).eigenvalues
    b = solve_generalized_eig(H, S, 0.0, equilibrate=True).eigenvalues
    assert np.allclose(np.sort(a), np.sort(b), atol=1e-10)


def test_psd_sqrt_squares_back(rng):
    Y = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    P = Y @ Y.conj().T
    R = psd_sqrt(P)
    assert np.allclose(R @ R, P, atol=1e-9)
    assert np.allclose(R, R.conj().T)


def test_psd_sqrt_rejects_negative():
    with pytest.raises(NonPSDError):
        psd_sqrt(np.diag([1.0, -0.5]))
    assert np.allclose(psd_sqrt(np.diag([1.0, -0.5]), clamp_negative=True), np.diag([1.0, 0.0]))


def test_psd_power_and_inverse_norm():
    S = np.diag([4.0, 0.25, 1e-12])
    assert np.allclose(psd_power(S[:2, :2], 0.5), np.diag([2.0, 0.5]))
    assert operator_norm_inverse(S, 1e-8) == pytest.approx(4.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_generalized_eigenvalues_real_and_sorted(d, seed):
    rng = np.random.default_rng(seed)
    H = random_hermitian(rng, d)
    Y = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    sol = solve_generalized_eig(H, Y @ Y.conj().T)
    assert np.isrealobj(sol.eigenvalues)
    assert np.all(np.diff(sol.eigenvalues) >= -1e-12)
