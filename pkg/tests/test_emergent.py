import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prequantum import (ContractViolation, ConfigurationError, IncoherentFixedPointWarning,
                        IntegratorSettings, SamplingError, Scenario, build_hamiltonian,
                        classify_fixed_point, compare_emergent_phase, emergent_energy,
                        integrate_beable_flow, integrate_single, interference_ensemble,
                        limit_cycle_period, mode_phase, row_lattice, schrodinger_evolve)
from prequantum.emergent import beat_frequency, match_eigenvalue
from prequantum.flow import FixedPointReport, kappa_for_resolution
from prequantum.operators import commuting_set_from_table, random_unitary
from conftest import random_hermitian


def diag_set(rows, seed=0):
    rows = np.asarray(rows, dtype=float)
    U = random_unitary(rows.shape[1], np.random.default_rng(seed))
    return commuting_set_from_table(rows, U)


def report(omega, j, coherent=True):
    return FixedPointReport(np.asarray(omega, float), np.asarray(j), coherent, 0.0, True, 1e-8)


@pytest.fixture(scope="module")
def coherent_run():
    """Beable run on rows (1, 2), (5, 7) settling at the coherent column (2, 7)."""
    cset = diag_set([[1.0, 2.0], [5.0, 7.0]])
    M = np.eye(2)
    lat = row_lattice(M, cset.eigen_table)
    kappa = kappa_for_resolution(lat, 1e-10, 40.0)
    s = IntegratorSettings(rel_tol=1e-10, abs_tol=1e-12, convergence_eps=1e-11)
    sc = Scenario(kappa=kappa, M_star=M, omega0=[1.9, 6.8], phi0=[0.0, 0.0],
                  t_span=(0.0, 150.0), integrator=s, output_interval=0.01)
    traj = integrate_beable_flow(sc, lat)
    return cset, lat, traj, classify_fixed_point(traj.omega_final, lat, 1e-8)


# -- Hamiltonians --------------------------------------------------------------

def test_general_identity_selection_gives_first_operator():
    cset = diag_set([[1.0, 2.0, 3.0], [4.0, 0.0, -1.0]], seed=1)
    H = build_hamiltonian("general", [1, 0], np.eye(2), cset)
    np.testing.assert_allclose(H.matrix, cset.operators[0], atol=1e-15)
    assert H.t_rescale is None


def test_uniform_sum_has_column_sum_spectrum():
    cset = diag_set([[1.0, 2.0], [5.0, 7.0]], seed=2)
    H = build_hamiltonian("uniform", [1, 1], np.eye(2), cset)
    np.testing.assert_allclose(np.linalg.eigvalsh(H.matrix), [6.0, 9.0], atol=1e-12)
    assert H.t_rescale == 1


def test_general_example_spectrum():
    cset = diag_set([[1.0, 2.0], [5.0, 7.0]], seed=3)
    H = build_hamiltonian("general", [2, 3], np.eye(2), cset)
    np.testing.assert_allclose(np.linalg.eigvalsh(H.matrix), [17.0, 25.0], atol=1e-12)


def test_dominant_uses_first_row_and_n1():
    cset = diag_set([[1.0, 2.0], [5.0, 7.0]], seed=4)
    M = np.array([[1.0, 0.5], [0.0, 1.0]])
    H = build_hamiltonian("dominant", [3, 1], M, cset)
    np.testing.assert_allclose(H.matrix, cset.operators[0] + 0.5 * cset.operators[1], atol=1e-14)
    assert H.t_rescale == 3


def test_hamiltonian_is_hermitian(rng):
    cset = diag_set(rng.uniform(-1, 1, (3, 4)), seed=5)
    M = rng.standard_normal((3, 3))
    for case, n in (("uniform", [2, 2, 2]), ("dominant", [5, 1, -1]), ("general", [1, -2, 3])):
        H = build_hamiltonian(case, n, M, cset).matrix
        assert np.max(np.abs(H - H.conj().T)) <= 1e-12


def test_uniform_needs_equal_components():
    with pytest.raises(ContractViolation):
        build_hamiltonian("uniform", [1, 2], np.eye(2), diag_set([[1, 2], [3, 4]]))


def test_unknown_case():
    with pytest.raises(ContractViolation):
        build_hamiltonian("mixed", [1, 1], np.eye(2), diag_set([[1, 2], [3, 4]]))


# -- energies ------------------------------------------------------------------

def test_energy_examples():
    rep = report([1.0, 2.0], [0, 0])
    assert emergent_energy(rep, "general", [1, 1]) == 3.0
    assert emergent_energy(rep, "dominant", [1, 1]) == 1.0
    assert emergent_energy(rep, "uniform", [4, 4]) == 3.0


def test_energy_warns_for_incoherent_point():
    rep = report([1.0, 2.0], [1, 0], coherent=False)
    with pytest.warns(IncoherentFixedPointWarning):
        emergent_energy(rep, "uniform", [1, 1])


def test_energy_needs_converged_report():
    rep = FixedPointReport(np.array([0.5]), np.array([0]), True, 0.5, False, 1e-6)
    with pytest.raises(ContractViolation):
        emergent_energy(rep, "general", [1])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), N=st.integers(1, 3), d=st.integers(1, 4))
def test_coherent_energy_is_an_eigenvalue(seed, N, d):
    rng = np.random.default_rng(seed)
    cset = diag_set(rng.uniform(-1, 1, (N, d)), seed=seed)
    M = rng.standard_normal((N, N)) + 2 * np.eye(N)
    n = rng.integers(-3, 4, N)
    j = int(rng.integers(d))
    lat = row_lattice(M, cset.eigen_table)
    rep = classify_fixed_point(lat.lam[:, j], lat)
    E = emergent_energy(rep, "general", n)
    expected = (n @ M) @ cset.eigen_table.values[:, j]
    assert abs(E - expected) <= 1e-8
    H = build_hamiltonian("general", n, M, cset)
    assert match_eigenvalue(H, E)[3] <= 1e-8


# -- Schrodinger reference -----------------------------------------------------

def test_eigenstate_picks_up_phase():
    psi = schrodinger_evolve(np.diag([1.0, 2.0]), [1.0, 0.0], 0.7)
    np.testing.assert_allclose(psi, [np.exp(-0.7j), 0.0], atol=1e-15)


def test_zero_time_is_identity(rng):
    H = random_hermitian(rng, 4)
    psi0 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    np.testing.assert_allclose(schrodinger_evolve(H, psi0, 0.0), psi0, atol=1e-14)


def test_array_time_matches_scalar(rng):
    H = random_hermitian(rng, 3)
    psi0 = np.array([1.0, 1j, 0.0])
    t = np.array([0.0, 0.5, 2.0])
    batch = schrodinger_evolve(H, psi0, t)
    assert batch.shape == (3, 3)
    np.testing.assert_allclose(batch[2], schrodinger_evolve(H, psi0, 2.0), atol=1e-14)


def test_evolution_matches_matrix_exponential(rng):
    from scipy.linalg import expm

    H = random_hermitian(rng, 5)
    psi0 = rng.standard_normal(5) + 0j
    np.testing.assert_allclose(schrodinger_evolve(H, psi0, 3.3), expm(-3.3j * H) @ psi0, atol=1e-11)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 6), t=st.floats(-100, 100))
def test_evolution_preserves_norm(seed, d, t):
    rng = np.random.default_rng(seed)
    H = random_hermitian(rng, d)
    psi0 = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    assert abs(np.linalg.norm(schrodinger_evolve(H, psi0, t)) - np.linalg.norm(psi0)) <= 1e-12


def test_zero_state_rejected():
    with pytest.raises(ConfigurationError):
        schrodinger_evolve(np.eye(2), [0.0, 0.0], 1.0)


# -- mode phases ---------------------------------------------------------------

def test_zero_mode_is_constant(coherent_run):
    _, _, traj, _ = coherent_run
    assert np.all(mode_phase(traj, [0, 0]).theta == 0.0)


def test_mode_doubling_is_exact(coherent_run):
    _, _, traj, _ = coherent_run
    a = mode_phase(traj, [1, 3]).theta
    b = mode_phase(traj, [2, 6]).theta
    np.testing.assert_array_equal(b, 2 * a)


def test_mode_additivity(coherent_run):
    # n.phi is a floating-point dot product, so additivity holds to rounding
    _, _, traj, _ = coherent_run
    n, m = np.array([1, -2]), np.array([3, 1])
    lhs = mode_phase(traj, n + m).theta
    rhs = mode_phase(traj, n).theta + mode_phase(traj, m).theta
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(lhs))


def test_tail_slope_is_mode_frequency(coherent_run):
    _, _, traj, rep = coherent_run
    mode = mode_phase(traj, [2, 3])
    assert mode.slope == pytest.approx(2 * 2.0 + 3 * 7.0, abs=1e-7)
    tail = traj.tail()
    slope = np.polyfit(mode.times[tail], mode.theta[tail], 1)[0]
    assert abs(slope - 25.0) <= 1e-6


def test_coarse_sampling_is_rejected():
    s = IntegratorSettings()
    traj = integrate_single([10.0, 20.0], 1.0, 19.0, 0.0, s, (0, 5), output_interval=0.5)
    with pytest.raises(SamplingError):
        mode_phase(traj, [1])


def test_mode_requires_matching_length(coherent_run):
    with pytest.raises(ConfigurationError):
        mode_phase(coherent_run[2], [1])


# -- phase comparison ----------------------------------------------------------

def test_general_phase_law(coherent_run):
    cset, lat, traj, rep = coherent_run
    assert rep.coherent and rep.j.tolist() == [1, 1]
    n = [2, 3]
    H = build_hamiltonian("general", n, np.eye(2), cset)
    t_c = traj.t_converged
    cmp = compare_emergent_phase(mode_phase(traj, n), H, rep, window=(t_c, t_c + 50.0))
    assert cmp.E_star == pytest.approx(25.0, abs=1e-8)
    assert cmp.eigen_gap <= 1e-8
    assert cmp.max_phase_dev <= 1e-6 * 50.0
    assert cmp.max_schrodinger_dev <= 1e-6 * 50.0


def test_uniform_phase_law_with_rescaling(coherent_run):
    cset, lat, traj, rep = coherent_run
    n = [3, 3]
    H = build_hamiltonian("uniform", n, np.eye(2), cset)
    cmp = compare_emergent_phase(mode_phase(traj, n), H, rep)
    assert cmp.E_star == pytest.approx(9.0, abs=1e-8)
    assert cmp.max_phase_dev <= 1e-6 * (cmp.window[1] - cmp.window[0])


def test_null_sector_has_no_deviation(coherent_run):
    cset, _, traj, rep = coherent_run
    H = build_hamiltonian("general", [0, 0], np.eye(2), cset)
    assert compare_emergent_phase(mode_phase(traj, [0, 0]), H, rep).max_phase_dev == 0.0


def test_comparison_rejects_mismatched_vectors(coherent_run):
    cset, _, traj, rep = coherent_run
    H = build_hamiltonian("general", [1, 1], np.eye(2), cset)
    with pytest.raises(ContractViolation):
        compare_emergent_phase(mode_phase(traj, [1, 2]), H, rep)


def test_window_must_start_after_convergence(coherent_run):
    cset, _, traj, rep = coherent_run
    H = build_hamiltonian("general", [1, 1], np.eye(2), cset)
    with pytest.raises(ContractViolation):
        compare_emergent_phase(mode_phase(traj, [1, 1]), H, rep, window=(0.0, 10.0))


# -- periods and interference --------------------------------------------------

def test_period_of_converged_single_run(tight):
    traj = integrate_single([1.0, 2.0], 1.0, 1.6, 0.0, tight, (0, 60))
    assert limit_cycle_period(traj) == pytest.approx(math.pi, rel=1e-3)
    faster = integrate_single([1.0, 2.0], 3.0, 1.6, 0.0, tight, (0, 60))
    assert limit_cycle_period(faster) == pytest.approx(limit_cycle_period(traj), rel=1e-3)


def test_negative_frequency_period():
    s = IntegratorSettings(rel_tol=1e-11, abs_tol=1e-13, convergence_eps=1e-9)
    traj = integrate_single([-2.0, 1.0], 1.0, -1.5, 0.0, s, (0, 60))
    assert limit_cycle_period(traj) == pytest.approx(math.pi, rel=1e-3)


def test_zero_frequency_has_no_finite_period(tight):
    traj = integrate_single([0.0, 1.0], 1.0, 0.2, 0.0, tight, (0, 60))
    assert traj.converged
    assert limit_cycle_period(traj) == math.inf


def test_single_branch_intensity_is_one():
    I = interference_ensemble([1.0], [1.7], 3, np.linspace(0, 50, 501))
    assert np.max(np.abs(I - 1.0)) <= 1e-12


def test_two_branch_intensity_closed_form():
    t = np.linspace(0, 20, 2001)
    I = interference_ensemble([0.5, 0.5], [1.0, 1.3], 2, t)
    np.testing.assert_allclose(I, 0.5 * (1 + np.cos(2 * 0.3 * t)), atol=1e-14)
    assert I[0] == pytest.approx(1.0, abs=1e-15)
    assert beat_frequency(t, I) == pytest.approx(0.6, rel=1e-3)


@pytest.mark.parametrize("p", [[0.5, 0.6], [1.0, 0.0], [0.5 + 2e-9, 0.5]])
def test_invalid_weights(p):
    with pytest.raises(ConfigurationError):
        interference_ensemble(p, [1.0, 2.0], 1, [0.0])
