"""Built-in systems: the two-subsystem switching pair, the networked
SmartWheel family, the servo with a fractional proportional-Clegg
integrator, the FORE / CI / FCI reset loops and the hysteresis
multi-controller.  Everything is computed from primitive parameters;
``paper_rounded=True`` substitutes the rounded published constants.
"""

from fractions import Fraction

import numpy as np

from .sysmodel import (
    FractionalLTI,
    HybridScenario,
    PseudoPolynomial,
    RationalTF,
    Reference,
    ResetClosedLoop,
    SwitchingSystem,
    assemble_reset_loop,
    augment_base_order,
    companion_matrix,
    pade_delay,
)

EXAMPLE3_A1 = np.array([[-0.1, 0.1], [-2.0, -0.1]])
EXAMPLE3_A2 = np.array([[-0.01, 2.0], [-0.1, -0.01]])

# plant gain and time constant, PI gains, base delay
SW_PLANT_GAIN = 0.1484
SW_PLANT_TC = 0.045
SW_KP = 2.1586
SW_KI = 5.9853
SW_BASE_DELAY = 0.592
SW_TAU = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2)
SW_BETA = (1.6, 1.35, 1.3, 1.15, 1.0, 0.9, 0.8, 0.7, 0.65, 0.6, 0.55, 0.5, 0.45)
SW_BASE_ORDER = 0.1

SERVO_K = 0.93
SERVO_T = 0.61
SERVO_KP = 0.067
SERVO_KI = 13.4
SERVO_ALPHA = 0.75


def build_example3_pair():
    return SwitchingSystem(1.0, (("A1", EXAMPLE3_A1.copy()), ("A2", EXAMPLE3_A2.copy())))


def smartwheel_constants(paper_rounded=False):
    """(pole, proportional, integral) terms of the SmartWheel characteristic polynomial."""
    if paper_rounded:
        return 22.22, 7.12, 19.74
    gain = SW_PLANT_GAIN / SW_PLANT_TC
    return 1.0 / SW_PLANT_TC, gain * SW_KP, gain * SW_KI


def build_smartwheel(j, m=3, paper_rounded=False, pade_in="lambda"):
    """Characteristic pseudo-polynomial of SmartWheel subsystem ``j`` (1..13).

    Built as ``P_d (l^21 + p l^11) + beta_j P_n (k_p l^10 + k_i)`` in
    ``l = s**0.1``.  With ``pade_in="lambda"`` the Padé polynomials are
    placed directly on powers of ``l``, which yields the published
    realization dimension ``m + 21``; ``pade_in="s"`` substitutes
    ``s = l**10`` instead (dimension ``10 m + 21``).
    """
    if not 1 <= j <= 13:
        raise IndexError(f"SmartWheel index must lie in 1..13, got {j}")
    if pade_in not in ("lambda", "s"):
        raise ValueError("pade_in must be 'lambda' or 's'")
    P = np.polynomial.polynomial
    pole, kp, ki = smartwheel_constants(paper_rounded)
    pade = pade_delay(SW_BASE_DELAY + SW_TAU[j - 1], m)
    num, den = np.asarray(pade.num), np.asarray(pade.den)
    if pade_in == "s":
        num = _stretch(num, 10)
        den = _stretch(den, 10)
    loop = np.zeros(22)
    loop[21], loop[11] = 1.0, pole
    ctrl = np.zeros(11)
    ctrl[10], ctrl[0] = kp, ki
    coeffs = P.polyadd(P.polymul(den, loop), SW_BETA[j - 1] * P.polymul(num, ctrl))
    coeffs = coeffs / coeffs[-1]
    coeffs[-1] = 1.0
    return PseudoPolynomial(SW_BASE_ORDER, tuple(coeffs))


def _stretch(c, k):
    out = np.zeros(k * (len(c) - 1) + 1)
    out[::k] = c
    return out


def build_smartwheel_family(m=3, paper_rounded=False, pade_in="lambda"):
    subs = []
    for j in range(1, 14):
        poly = build_smartwheel(j, m, paper_rounded, pade_in)
        subs.append((f"j{j}", companion_matrix(poly.coeffs)))
    return SwitchingSystem(SW_BASE_ORDER, tuple(subs))


# --------------------------------------------------------------------------
# reset loops


def servo_fpci_loop(paper_rounded=False):
    """Two-state servo loop with the FPCI; plant integer order, reset order 3/4."""
    K, T, Kp, Ki = SERVO_K, SERVO_T, SERVO_KP, SERVO_KI
    if paper_rounded:
        A = [[-1.7415, 20.4295], [-1.0, 0.0]]
        B = [0.1021, 1.0]
    else:
        A = [[-(1 + K * Kp) / T, K * Ki / T], [-1.0, 0.0]]
        B = [K * Kp / T, 1.0]
    return ResetClosedLoop(SERVO_ALPHA, A, B, [[1.0, 0.0]], 1, 0, 1, 1, [[1.0]])


def servo_fpci_augmented(paper_rounded=False):
    """Seven-state base-1/4 form of the servo loop; the last state is reset.

    With ``paper_rounded`` the plant-row input entry is the published
    1.5246 (= K/T) instead of the K*Kp/T carried by the two-state loop.
    """
    loop = servo_fpci_loop(paper_rounded)
    lti = FractionalLTI(1.0, loop.A_cl, loop.B_cl, loop.C_cl, np.zeros((1, 1)))
    aug, _ = augment_base_order(lti, orders=[1, Fraction(3, 4)])
    B = aug.B.copy()
    if paper_rounded:
        B[3, 0] = 1.5246
    return ResetClosedLoop(aug.alpha, aug.A, B, aug.C, 4, 0, 3, 1, aug.C[:, :4])


def _reset_demo_plant():
    # C(s) P(s) = (s + 1) / (s^2 + 0.2 s): chain realization, output x1 + x2
    Ap = [[0.0, 1.0], [0.0, -0.2]]
    Bp = [[0.0], [1.0]]
    Cp = [[1.0, 1.0]]
    return Ap, Bp, Cp


def fore_loop(b=1.0):
    """Integer-order loop with the first-order reset element 1/(s+b)."""
    reset = ([[-b]], [[1.0]], [[1.0]], [[0.0]], 1)
    return assemble_reset_loop(_reset_demo_plant(), reset, alpha=1.0)


def ci_loop():
    return fore_loop(0.0)


def fci_loop():
    """Base-1/2 loop with the fractional Clegg integrator 1/s^0.5 (5 states)."""
    integer = fore_loop(0.0)
    lti = FractionalLTI(1.0, integer.A_cl, integer.B_cl, integer.C_cl, np.zeros((1, 1)))
    aug, _ = augment_base_order(lti, orders=[1, 1, Fraction(1, 2)])
    return ResetClosedLoop(aug.alpha, aug.A, aug.B, aug.C, 4, 0, 1, 1, aug.C[:, :4])


def fore_hbeta_family(b=1.0):
    """Published rational H_beta for the FORE / CI loop: beta -> RationalTF."""

    def family(beta):
        return RationalTF((0.8 * beta, 0.2, 1.0), (1.0, 1.0 + 0.2 * b, b + 0.2, 1.0))

    family.description = f"(s^2+0.2s+0.8beta)/(s^3+({b}+0.2)s^2+(1+0.2*{b})s+1)"
    return family


# --------------------------------------------------------------------------
# hysteresis multi-controller


def multicontroller_mode(K, tau, kp, ki, alpha):
    """Closed loop ``(a s^alpha + b)/(s^(alpha+1) + (tau+a) s^alpha + b)``
    realized at base ``1/den(alpha)`` with output ``y = x1``.

    The numerator enters through the input ``U = a D^alpha r + b r``; the
    two columns of B act on the input vector ``(D^alpha r, r)``.
    """
    a, b = K * kp, K * ki
    q = Fraction(alpha).limit_denominator(64)
    if abs(float(q) - alpha) > 1e-12:
        raise ValueError(f"alpha {alpha} is not a small rational")
    v, u = q.denominator, q.numerator
    n = u + v
    coeffs = np.zeros(n + 1)
    coeffs[n], coeffs[u], coeffs[0] = 1.0, tau + a, b
    A = companion_matrix(coeffs)
    B = np.zeros((n, 2))
    B[-1] = a, b
    C = np.zeros((1, n))
    C[0, 0] = 1.0
    return FractionalLTI(1.0 / v, A, B, C, np.zeros((1, 2)))


def build_multicontroller(params1, params2, eps=0.05, reference=None):
    """Two-mode hysteresis switching scenario.

    ``params_i = (K_i, tau_i, kp_i, ki_i, alpha_i)``.  Mode 1 flows while
    ``y < r + eps``, mode 2 while ``y > r - eps``; a jump toggles the mode
    and keeps the continuous state.
    """
    if not eps > 0:
        raise ValueError("hysteresis band eps must be positive")
    modes = [multicontroller_mode(*params1), multicontroller_mode(*params2)]
    if modes[0].alpha != modes[1].alpha or modes[0].n != modes[1].n:
        raise ValueError("modes must share base order and state dimension")
    if params1[4] != params2[4]:
        raise ValueError("modes must share the controller order alpha")
    reference = reference or Reference("step", 1.0)

    def flow(y, mode, r):
        return y < r + eps if mode == 1 else y > r - eps

    def jump(y, mode, r):
        return y >= r + eps if mode == 1 else y <= r - eps

    def jump_map(x, mode):
        return x, 3 - mode

    def guard(y, r, mode):
        # positive while flowing, crosses zero at the band edge
        return (r + eps) - y if mode == 1 else y - (r - eps)

    family = SwitchingSystem(modes[0].alpha, (("mode1", modes[0].A), ("mode2", modes[1].A)))
    return HybridScenario(family, 2, modes, flow, jump, jump_map, reference, guard,
                          input_order=float(params1[4]))


DEFAULT_MULTICONTROLLER = (
    (1.0, 0.2, 1.0, 3.0, 0.5),
    (2.0, 1.0, 1.0, 1.0, 0.5),
)
