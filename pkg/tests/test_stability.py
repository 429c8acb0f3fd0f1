import numpy as np
import pytest

from frachybrid import scenarios, stability
from frachybrid.stability import (
    INCONCLUSIVE,
    STABLE,
    FrequencyGrid,
    HBeta,
    beta_range,
    hbeta_build,
    matignon_check,
    multi_check,
    pairwise_lyapunov_oracle,
    phase_sweep_thm3,
    phase_sweep_thm4,
    reset_stability,
    spr_phase_check,
    thm1_predicate,
    thm2_predicate,
)
from frachybrid.sysmodel import RationalTF, SwitchingSystem

from conftest import random_hurwitz

SMALL = FrequencyGrid(1e-3, 1e3, 400)


def test_second_mode_eigenvalues():
    lam = np.linalg.eigvals(scenarios.EXAMPLE3_A2)
    np.testing.assert_allclose(sorted(lam.imag), [-0.4472136, 0.4472136], atol=1e-7)
    np.testing.assert_allclose(lam.real, -0.01, atol=1e-12)


def test_matignon_admits_unstable_integer_spectrum():
    A = np.array([[1.0, -10.0], [10.0, 1.0]])
    assert matignon_check(A, 0.5)[0]
    assert not matignon_check(A, 1.0)[0]
    ok, margin = matignon_check(-np.eye(2), 1.0)
    assert ok and margin == pytest.approx(np.pi / 2)


def test_thm1_at_order_one_is_lyapunov():
    A = np.array([[-1.0, 2.0], [0.0, -3.0]])
    P = np.eye(2)
    S = A.T @ P + P @ A
    assert thm1_predicate(A, P, 1.0) == bool(np.linalg.eigvalsh(S).max() < 0)
    with pytest.raises(ValueError):
        thm1_predicate(A, P, 0.5)


def test_thm2_on_symmetric_hurwitz():
    A = np.array([[-2.0, 0.5], [0.5, -1.0]])
    assert thm2_predicate(A, np.eye(2), 0.6)
    with pytest.raises(ValueError):
        thm2_predicate(A, -np.eye(2), 0.6)


def test_oracle_certificate_is_valid():
    A1 = np.array([[-1.0, 0.2], [0.0, -2.0]])
    A2 = np.array([[-1.5, 0.0], [0.3, -1.0]])
    P = pairwise_lyapunov_oracle(A1, A2, 0.7)
    assert P is not None
    assert thm2_predicate(A1, P, 0.7) and thm2_predicate(A2, P, 0.7)


def test_identical_pair_has_zero_delta():
    A = np.array([[-0.1, 0.1], [-2.0, -0.1]])
    rep = phase_sweep_thm4(A, A, 0.5, SMALL)
    assert rep.verdict == STABLE
    assert rep.max_delta == 0.0 and rep.margin == pytest.approx(np.pi / 2)


def test_thm3_is_twice_thm4_at_order_one():
    A1, A2 = scenarios.EXAMPLE3_A1, scenarios.EXAMPLE3_A2
    r4 = phase_sweep_thm4(A1, A2, 1.0, SMALL)
    r3 = phase_sweep_thm3(A1, A2, 1.0, FrequencyGrid(1e-3, 1e3, 400))
    w = r4.omega
    d3 = np.interp(np.log(w), np.log(r3.omega), r3.delta)
    np.testing.assert_allclose(d3, 2 * r4.delta, atol=1e-6)


def test_sweep_is_monotone_in_refinement_grid():
    rep = phase_sweep_thm4(scenarios.EXAMPLE3_A1, scenarios.EXAMPLE3_A2, 0.5)
    assert np.all(np.diff(rep.omega) > 0)
    assert rep.omega[0] == 1e-4 and rep.omega[-1] == 1e4
    assert rep.omega.size >= 4000


def test_matignon_failure_short_circuits():
    bad = np.array([[0.5, 0.0], [0.0, -1.0]])
    rep = phase_sweep_thm4(bad, -np.eye(2), 0.5, SMALL)
    assert rep.verdict == INCONCLUSIVE and "Matignon" in rep.reason


def test_thm4_range_guard():
    with pytest.raises(ValueError):
        phase_sweep_thm4(-np.eye(2), -np.eye(2), 1.2)


def test_multi_check_counts():
    A = scenarios.EXAMPLE3_A1
    three = SwitchingSystem(0.5, (("a", A), ("b", A), ("c", A)))
    reps, verdict = multi_check(three, "all_pairs", grid=SMALL)
    assert len(reps) == 3 and verdict == STABLE
    assert all(r.max_delta == 0 for r in reps)
    reps, _ = multi_check(three, "consecutive", grid=SMALL)
    assert [r.labels for r in reps] == [("a", "b"), ("b", "c")]
    reps, verdict = multi_check(SwitchingSystem(0.5, (("a", A),)), grid=SMALL)
    assert reps == [] and verdict == STABLE


def test_singular_determinant_detected():
    n = 2
    pencil = (np.zeros((n, n), complex), np.zeros((n, n), complex), np.zeros((n, n), complex))
    with pytest.raises(stability.SingularityOnGrid):
        stability._units(pencil, np.array([1.0, 2.0]))


def test_frequency_grid_validation():
    with pytest.raises(ValueError):
        FrequencyGrid(1.0, 0.5)
    with pytest.raises(ValueError):
        FrequencyGrid(points=8)


# --------------------------------------------------------------------------
# reset side


def analytic_family(beta):
    # Re H(jw) numerator is 2 beta + (3 - beta) w^2: SPR exactly for 0 <= beta <= 3
    return RationalTF((beta, 1.0), (2.0, 3.0, 1.0))


def test_spr_analytic_family():
    assert reset_stability(analytic_family, 1.0).spr
    assert not reset_stability(analytic_family, 3.5).spr
    assert not reset_stability(analytic_family, -0.5).spr


def test_beta_range_analytic_upper_endpoint():
    ivs = beta_range(analytic_family, 0.5, 5.0, step=0.1)
    assert len(ivs) == 1
    iv = ivs[0]
    assert iv.lower == 0.5 and iv.lower_closed
    # near beta = 3 the phase is -pi/2 + (3 - beta)/w; at w_max = 1e4 the 1e-6
    # tie tolerance moves the detected endpoint to 3 - 1e-6 * 1e4 = 2.99
    assert iv.upper == pytest.approx(2.99, abs=2e-3) and iv.upper_closed


def test_unstable_h_reported():
    spr, _, reason, *_ = spr_phase_check(RationalTF((1.0,), (-1.0, 1.0)))
    assert not spr and reason == "unstable pole"


def test_hbeta_matches_direct_resolvent():
    rcl = scenarios.fci_loop()
    H = hbeta_build(rcl, 0.4)
    C, T, B = H.as_triple()
    np.testing.assert_array_equal(C, [[0.4, 0, 0.4, 0, 1.0]])
    np.testing.assert_array_equal(B[:, 0], [0, 0, 0, 0, 1.0])
    s = 0.7j
    direct = (C @ np.linalg.solve(s * np.eye(5) - T, B))[0, 0]
    assert H(s)[0] == pytest.approx(direct, rel=1e-12)
    # exponent 1/(2 - 0.5) = 2/3
    from frachybrid.matfun import principal_matrix_power
    np.testing.assert_allclose(T, -principal_matrix_power(-rcl.A_cl, 2 / 3).real, atol=1e-12)


def test_fore_rational_denominator_is_loop_polynomial():
    for b in (0.0, 1.0, 2.5):
        rcl = scenarios.fore_loop(b)
        charpoly = np.poly(rcl.A_cl)[::-1]
        np.testing.assert_allclose(scenarios.fore_hbeta_family(b)(1.0).den, charpoly, atol=1e-12)


def test_hbeta_requires_single_reset_state():
    rcl = scenarios.fore_loop(1.0)
    with pytest.raises(ValueError):
        hbeta_build(rcl, 1.0, P_R=[[-1.0]])


def test_hbeta_callable_vectorised():
    H = HBeta(np.array([[1.0]]), np.array([[-2.0]]), np.array([[1.0]]))
    np.testing.assert_allclose(H(np.array([0.0, 1j])), [0.5, 1 / (2 + 1j)])


def test_fci_half_is_asymptotically_stable():
    rep = reset_stability(scenarios.fci_loop(), 0.5)
    assert rep.verdict == stability.ASYMPTOTICALLY_STABLE


def test_random_transformed_pairs_consistent():
    # oracle success implies sweep success (sufficient direction), small sample
    rng = np.random.default_rng(21)
    hits = 0
    for _ in range(30):
        A1, A2 = random_hurwitz(rng, 2, 0.3), random_hurwitz(rng, 2, 0.3)
        A2 = A1 + 0.1 * np.outer(rng.standard_normal(2), rng.standard_normal(2))
        if not (matignon_check(A2, 0.5)[0]):
            continue
        if pairwise_lyapunov_oracle(A1, A2, 0.5) is not None:
            hits += 1
            assert phase_sweep_thm4(A1, A2, 0.5, SMALL).stable
    assert hits > 0
