"""Self-checks against independent constructions.

Each oracle returns ``(passed, detail)``; they back the ``gse oracle``
command and are reused by the test suite.
"""

import itertools

import numpy as np

from .ansatz import AnsatzCircuit, StatevectorSimulator, prepare_ansatz_state
from .baselines import ExtrapolationSpec, extrapolated_effective_state, richardson_coefficients, vd_energy
from .linalg import solve_generalized_eig
from .pauli import build_tfi_hamiltonian
from .shots import explicit_shift_moments, shift_moments
from .states import exact_spectrum, fidelity, ground_state, pure_state, random_density_matrix
from .subspace import SubspaceSpec, mitigate
from .validation import derive_rng


def free_fermion_spectrum(n_qubits, h):
    """Open-chain Ising spectrum from the singular values of the bidiagonal coupling matrix."""
    T = np.diag(np.full(n_qubits, float(h))) + np.diag(np.ones(n_qubits - 1), 1)
    s = np.linalg.svd(T, compute_uv=False)
    levels = [-s.sum() + 2 * sum(c) for r in range(n_qubits + 1) for c in itertools.combinations(s, r)]
    return np.sort(levels)


def check_tfi_spectrum(seed=0):
    worst = 0.0
    for n, h in ((2, 0.5), (3, 1.0), (4, 1.0), (5, 1.7)):
        e, _ = exact_spectrum(build_tfi_hamiltonian(n, h))
        worst = max(worst, float(np.max(np.abs(e - free_fermion_spectrum(n, h)))))
    return worst < 1e-10, f"max |E_dense - E_free_fermion| = {worst:.2e}"


def check_cyclic_shift(seed=0):
    worst = 0.0
    for M in (1, 2, 3):
        for n in (1, 2):
            if n * M > 6:
                continue
            rng = derive_rng(seed, M, n)
            rhos = [random_density_matrix(n, rng=rng) for _ in range(M)]
            X = rng.standard_normal((2**n, 2**n))
            O = X + X.T
            Qs = [random_density_matrix(n, rng=rng) for _ in range(M)]
            a = np.array(shift_moments(rhos, O, Qs))
            b = np.array(explicit_shift_moments(rhos, O, Qs))
            worst = max(worst, float(np.max(np.abs(a - b))))
    return worst < 1e-10, f"max |closed form - explicit permutation matrix| = {worst:.2e}"


def check_richardson(seed=0):
    worst = 0.0
    for lam in ((1, 2), (1, 2, 3), (1, 1.5, 2, 4)):
        beta = richardson_coefficients(lam)
        powers = np.vander(np.asarray(lam, float), len(lam), increasing=True).T
        target = np.zeros(len(lam))
        target[0] = 1.0
        worst = max(worst, float(np.max(np.abs(powers @ beta - target))))
    return worst < 1e-10, f"max Vandermonde residual = {worst:.2e}"


def check_vd_equivalence(seed=0):
    """The single-basis power subspace reproduces VD."""
    rng = derive_rng(seed, 0)
    H = build_tfi_hamiltonian(3, 1.0)
    rho = random_density_matrix(3, rank=3, rng=rng)
    worst = 0.0
    for M in range(1, 7):
        res, _, _ = mitigate(SubspaceSpec.vd(M), rho, H)
        worst = max(worst, abs(res.energy - vd_energy(rho, M, H).energy))
    return worst < 1e-10, f"max |E_vd-subspace - E_VD| = {worst:.2e}"


def check_physicality(seed=0):
    """GSE states stay physical; the Richardson combination of noisy states need not."""
    rng = derive_rng(seed, 0)
    H = build_tfi_hamiltonian(3, 1.0)
    _, psi = ground_state(H)
    gs = pure_state(psi)
    c = AnsatzCircuit.hardware_efficient(3, 2, params=rng.uniform(-np.pi, np.pi, 9))
    rhos = [prepare_ansatz_state(c.with_noise(c.p_dep_for_total_errors(0.4 * l))) for l in (1, 2, 3)]
    res, _, _ = mitigate(SubspaceSpec.fault((1, 2, 3)), rhos, H)
    f_gse = fidelity(gs, res.rho_em)
    w = np.linalg.eigvalsh(res.rho_em)
    ex = extrapolated_effective_state(rhos, ExtrapolationSpec().lambdas)
    ok = f_gse <= 1 + 1e-9 and w[0] >= -1e-10 and abs(np.trace(res.rho_em).real - 1) < 1e-10
    return ok, f"F_GSE = {f_gse:.6f}, min eig = {w[0]:.1e}; min eig of extrapolated state = {np.linalg.eigvalsh(ex)[0]:.2e}"


def check_perturbation(seed=0):
    from .experiments import perturbation_instances, quadratic_ratio

    ratios = [quadratic_ratio(H0, S0, dH, dS)[0] for _, H0, S0, dH, dS in perturbation_instances(seed, 30, (2, 3, 4), 1e-3)]
    ok = all(2 <= r <= 8 for r in ratios)
    return ok, f"remainder(t)/remainder(t/2) in [{min(ratios):.3f}, {max(ratios):.3f}]"


def check_gradient(seed=0):
    rng = derive_rng(seed, 0)
    H = build_tfi_hamiltonian(3, 0.8).matrix()
    c = AnsatzCircuit.hardware_efficient(3, 2)
    sim = StatevectorSimulator(c, [0, 1])
    theta = rng.uniform(-np.pi, np.pi, c.n_params)
    w = np.array([1.0, 0.5])
    _, g = sim.cost_and_grad(theta, H, w)
    fd = np.zeros_like(g)
    step = 1e-6
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = step
        fd[k] = (sim.cost_and_grad(theta + e, H, w)[0] - sim.cost_and_grad(theta - e, H, w)[0]) / (2 * step)
    err = float(np.max(np.abs(g - fd)))
    return err < 1e-7, f"max |adjoint - central difference| = {err:.2e}"


def check_generalized_eig(seed=0):
    rng = derive_rng(seed, 0)
    X = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    H = X + X.conj().T
    Y = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    S = Y @ Y.conj().T + np.eye(5)
    sol = solve_generalized_eig(H, S, 0.0)
    A = sol.eigenvectors
    res = np.max(np.abs(H @ A - S @ A * sol.eigenvalues))
    orth = np.max(np.abs(A.conj().T @ S @ A - np.eye(sol.kept_rank)))
    return max(res, orth) < 1e-10, f"residual {res:.1e}, S-orthonormality {orth:.1e}"


ORACLES = {
    "tfi-spectrum": check_tfi_spectrum,
    "cyclic-shift": check_cyclic_shift,
    "richardson": check_richardson,
    "vd-equivalence": check_vd_equivalence,
    "physicality": check_physicality,
    "perturbation": check_perturbation,
    "gradient": check_gradient,
    "generalized-eig": check_generalized_eig,
}
