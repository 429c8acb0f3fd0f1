from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frachybrid import scenarios, sysmodel
from frachybrid.sysmodel import (
    FractionalLTI,
    PseudoPolynomial,
    augment_base_order,
    companion_matrix,
    pade_coefficients,
    pade_delay,
    realize_commensurate,
)


def leverrier(A):
    """Characteristic polynomial by the Faddeev-LeVerrier recursion, ascending."""
    n = A.shape[0]
    c = [1.0]
    M = np.zeros_like(A)
    for k in range(1, n + 1):
        M = A @ M + c[-1] * np.eye(n)
        c.append(-np.trace(A @ M) / k)
    return np.array(c[::-1])


def test_realize_spec_example():
    lti = realize_commensurate(PseudoPolynomial(0.5, (6.0, 5.0, 1.0)))
    np.testing.assert_array_equal(lti.A, [[0.0, 1.0], [-6.0, -5.0]])
    np.testing.assert_array_equal(lti.B, [[0.0], [1.0]])
    np.testing.assert_array_equal(lti.C, [[1.0, 0.0]])
    assert lti.alpha == 0.5


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=7))
def test_companion_characteristic_polynomial(lower):
    coeffs = np.array(lower + [1.0])
    A = companion_matrix(coeffs)
    np.testing.assert_allclose(leverrier(A), coeffs, atol=1e-9 * max(1, np.abs(coeffs).max() ** len(lower)))


def test_companion_roots_match_polynomial_roots():
    coeffs = np.array([2.0, -1.0, 0.5, 3.0, 1.0])
    got = np.sort_complex(np.linalg.eigvals(companion_matrix(coeffs)))
    want = np.sort_complex(np.polynomial.polynomial.polyroots(coeffs))
    np.testing.assert_allclose(got, want, atol=1e-9)


def test_pseudo_polynomial_must_be_monic():
    with pytest.raises(ValueError):
        PseudoPolynomial(0.5, (1.0, 2.0))
    with pytest.raises(ValueError):
        PseudoPolynomial(1.5, (1.0, 1.0))


def test_pseudo_polynomial_evaluation():
    p = PseudoPolynomial(0.5, (6.0, 5.0, 1.0))
    assert p(4.0) == pytest.approx(6 + 5 * 2 + 4)


def test_pade_first_order():
    tf = pade_delay(0.592, 1)
    np.testing.assert_allclose(tf.num, [1.0, -0.296])
    np.testing.assert_allclose(tf.den, [1.0, 0.296])


def test_pade_third_order_coefficients():
    np.testing.assert_allclose(pade_coefficients(3), [1.0, 0.5, 0.1, 1 / 120])


@pytest.mark.parametrize("m", range(1, 11))
def test_pade_symmetry_and_all_pass(m):
    T = 0.8
    tf = pade_delay(T, m)
    signs = (-1.0) ** np.arange(m + 1)
    np.testing.assert_allclose(np.array(tf.num), signs * np.array(tf.den), rtol=1e-15)
    w = np.logspace(-2, 2, 25)
    np.testing.assert_allclose(np.abs(tf(1j * w)), 1.0, atol=1e-12)


def test_pade_low_frequency_phase():
    tf = pade_delay(0.5, 3)
    w = 0.1
    assert np.angle(tf(1j * w)) == pytest.approx(-0.5 * w, abs=1e-9)


def test_pade_guards():
    assert pade_delay(0.0, 3).num == (1.0,)
    for m in (0, 11, 2.5):
        with pytest.raises(ValueError):
            pade_delay(1.0, m)
    with pytest.raises(ValueError):
        pade_delay(-1.0, 2)


def test_fore_loop_printed_matrices():
    rcl = scenarios.fore_loop(1.0)
    np.testing.assert_array_equal(rcl.A_cl, [[0, 1, 0], [0, -0.2, 1], [-1, -1, -1]])
    np.testing.assert_array_equal(rcl.C_cl, [[1, 1, 0]])
    np.testing.assert_array_equal(rcl.A_R, np.diag([1.0, 1.0, 0.0]))


def test_reset_map_idempotent():
    rcl = scenarios.fore_loop(2.0)
    np.testing.assert_array_equal(rcl.A_R @ rcl.A_R, rcl.A_R)
    x = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal((np.eye(3) - rcl.A_R) @ x, [0, 0, 3.0])
    assert rcl.on_surface([0.5, 0.5, 1.0], 1.0)
    assert not rcl.on_surface([0.5, 0.5, 0.0], 1.0)


def test_reset_loop_rejects_wrong_reset_map():
    rcl = scenarios.fore_loop(1.0)
    with pytest.raises(ValueError):
        sysmodel.ResetClosedLoop(1.0, rcl.A_cl, rcl.B_cl, rcl.C_cl, 2, 0, 1, 1, rcl.C_p, np.eye(3))


def test_fci_printed_matrices():
    rcl = scenarios.fci_loop()
    want = np.array([[0, 1, 0, 0, 0], [0, 0, 1, 0, 0], [0, 0, 0, 1, 0],
                     [0, 0, -0.2, 0, 1], [-1, 0, -1, 0, 0]], dtype=float)
    np.testing.assert_array_equal(rcl.A_cl, want)
    np.testing.assert_array_equal(rcl.C_cl, [[1, 0, 1, 0, 0]])
    assert rcl.alpha == 0.5 and rcl.n_plant == 4 and rcl.n_reset_states == 1


def test_servo_augmented_printed_structure():
    rcl = scenarios.servo_fpci_augmented(paper_rounded=True)
    A = rcl.A_cl
    np.testing.assert_array_equal(A[:3, 1:4], np.eye(3))
    np.testing.assert_array_equal(A[3], [-1.7415, 0, 0, 0, 20.4295, 0, 0])
    np.testing.assert_array_equal(A[4:6, 5:7], np.eye(2))
    np.testing.assert_array_equal(A[6], [-1, 0, 0, 0, 0, 0, 0])
    np.testing.assert_array_equal(rcl.B_cl[:, 0], [0, 0, 0, 1.5246, 0, 0, 1])
    np.testing.assert_array_equal(rcl.C_cl, [[1, 0, 0, 0, 0, 0, 0]])
    assert rcl.alpha == 0.25


def test_servo_primitive_constants():
    rcl = scenarios.servo_fpci_loop()
    assert rcl.A_cl[0, 0] == pytest.approx(-1.7415, abs=5e-5)
    assert rcl.A_cl[0, 1] == pytest.approx(20.4295, abs=5e-5)
    assert rcl.B_cl[0, 0] == pytest.approx(0.1021, abs=5e-5)


def test_augment_spectrum_property():
    rng = np.random.default_rng(9)
    A = rng.standard_normal((3, 3))
    lti = FractionalLTI(1.0, A, np.ones((3, 1)), np.eye(3)[:1], np.zeros((1, 1)))
    aug, heads = augment_base_order(lti, orders=[1, 1, 1], base_den=3)
    assert aug.n == 9 and heads == [0, 3, 6] and aug.alpha == pytest.approx(1 / 3)
    mu = np.linalg.eigvals(aug.A) ** 3
    for lam in np.linalg.eigvals(A):
        assert np.min(np.abs(mu - lam)) < 1e-6


def test_augment_mixed_orders():
    lti = FractionalLTI(1.0, [[-1.0, 2.0], [-1.0, 0.0]], [[0.5], [1.0]], [[1.0, 0.0]], [[0.0]])
    aug, heads = augment_base_order(lti, orders=[1, Fraction(3, 4)])
    assert aug.n == 7 and heads == [0, 4]
    np.testing.assert_array_equal(aug.B[:, 0], [0, 0, 0, 0.5, 0, 0, 1.0])


def test_augment_rejects_large_denominator():
    lti = FractionalLTI(1.0, [[-1.0]], [[1.0]], [[1.0]], [[0.0]])
    with pytest.raises(ValueError):
        augment_base_order(lti, orders=[Fraction(1, 17)])


def test_smartwheel_dimension_and_constants():
    poly = scenarios.build_smartwheel(5, 3)
    assert poly.degree == 24
    pole, kp, ki = scenarios.smartwheel_constants()
    assert ki == pytest.approx(19.7382, abs=1e-4)
    assert kp == pytest.approx(7.11858, abs=1e-5)
    assert pole == pytest.approx(22.222222, abs=1e-6)
    assert scenarios.build_smartwheel(5, 3, pade_in="s").degree == 51
    with pytest.raises(IndexError):
        scenarios.build_smartwheel(14)


def test_smartwheel_first_pade_factor():
    # j = 1 has no extra delay: the lambda^0 coefficient is beta * k_i * N(0)/D_lead
    poly = scenarios.build_smartwheel(1, 3)
    tf = pade_delay(scenarios.SW_BASE_DELAY, 3)
    _, _, ki = scenarios.smartwheel_constants()
    assert poly.coeffs[0] == pytest.approx(1.6 * ki * tf.num[0] / tf.den[-1], rel=1e-12)


def test_multicontroller_mode_denominator():
    mode = scenarios.multicontroller_mode(1.0, 0.2, 1.0, 3.0, 0.5)
    # s^{3/2} + (tau + a) s^{1/2} + b at base 1/2
    np.testing.assert_allclose(leverrier(mode.A), [3.0, 1.2, 0.0, 1.0], atol=1e-12)
    assert mode.alpha == 0.5
    np.testing.assert_array_equal(mode.B[:, 0], [0, 0, 1.0])
    np.testing.assert_array_equal(mode.B[:, 1], [0, 0, 3.0])


def test_multicontroller_jump_map_involution():
    scen = scenarios.build_multicontroller(*scenarios.DEFAULT_MULTICONTROLLER)
    x = np.arange(3.0)
    x1, m1 = scen.jump_map(x, 1)
    x2, m2 = scen.jump_map(x1, m1)
    assert m1 == 2 and m2 == 1
    np.testing.assert_array_equal(x2, x)


def test_multicontroller_requires_common_base():
    with pytest.raises(ValueError):
        scenarios.build_multicontroller((1, 1, 1, 1, 0.5), (1, 1, 1, 1, 1 / 3))
    with pytest.raises(ValueError):
        scenarios.build_multicontroller((1, 1, 1, 1, 0.5), (1, 1, 1, 1, 0.5), eps=0.0)


def test_reference_kinds():
    assert sysmodel.Reference("step", 2.0)(5.0) == 2.0
    assert sysmodel.Reference("sine", 1.0, 2.0)(np.pi / 4) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        sysmodel.Reference("ramp")


def test_rational_tf_trims_and_normalizes():
    tf = sysmodel.RationalTF((2.0, 0.0, 0.0), (4.0, 2.0, 0.0))
    assert tf.num == (2.0,) and tf.den == (4.0, 2.0)
    n = tf.normalized()
    assert n.den == (1.0, 0.5)
    np.testing.assert_allclose(tf.poles(), [-2.0])
