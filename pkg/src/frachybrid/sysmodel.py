"""System types and realizations for commensurate fractional-order models.

Covers fractional LTI state space, pseudo-polynomials and their companion
realization, diagonal Padé delay approximants, reset closed-loop assembly
and augmentation of mixed-order systems to a common base order.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Callable, Optional, Sequence

import numpy as np

MAX_BASE_DENOMINATOR = 16


def _mat(x, name, shape=None):
    a = np.atleast_2d(np.asarray(x, dtype=float))
    if a.ndim != 2:
        raise ValueError(f"{name} must be a matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    if shape is not None:
        for got, want in zip(a.shape, shape):
            if want is not None and got != want:
                raise ValueError(f"{name} has shape {a.shape}, expected {shape}")
    return a


@dataclass(frozen=True)
class FractionalLTI:
    """``D^alpha x = A x + B u``, ``y = C x + D u``."""

    alpha: float
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        A = _mat(self.A, "A")
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("A must be square")
        B = _mat(self.B, "B").reshape(n, -1) if np.size(self.B) else np.zeros((n, 0))
        C = _mat(self.C, "C")
        if C.shape[1] != n:
            raise ValueError("C column count must match A")
        D = _mat(self.D, "D", (C.shape[0], B.shape[1]))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def n(self):
        return self.A.shape[0]


@dataclass(frozen=True)
class PseudoPolynomial:
    """Monic ``sum_k coeffs[k] * s**(k*base_order)``, coefficients ascending."""

    base_order: float
    coeffs: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        if len(c) < 2:
            raise ValueError("pseudo-polynomial needs degree >= 1")
        if not 0 < self.base_order <= 1:
            raise ValueError(f"base_order must lie in (0, 1], got {self.base_order}")
        if not all(np.isfinite(c)):
            raise ValueError("non-finite coefficient")
        if c[-1] != 1.0:
            raise ValueError(f"pseudo-polynomial must be monic, leading coefficient {c[-1]}")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, s):
        lam = np.asarray(s, dtype=complex) ** self.base_order
        return np.polynomial.polynomial.polyval(lam, self.coeffs)


@dataclass(frozen=True)
class SwitchingSystem:
    alpha: float
    subsystems: tuple  # of (label, A)

    def __post_init__(self):
        subs = tuple((str(label), _mat(A, f"A[{label}]")) for label, A in self.subsystems)
        if not subs:
            raise ValueError("switching system needs at least one subsystem")
        n = subs[0][1].shape[0]
        for label, A in subs:
            if A.shape != (n, n):
                raise ValueError(f"subsystem {label!r} has shape {A.shape}, expected {(n, n)}")
        if not 0 < self.alpha < 2:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        object.__setattr__(self, "subsystems", subs)

    @property
    def n(self):
        return self.subsystems[0][1].shape[0]

    @property
    def labels(self):
        return [label for label, _ in self.subsystems]

    @property
    def matrices(self):
        return [A for _, A in self.subsystems]


@dataclass(frozen=True)
class ResetClosedLoop:
    """Closed reset loop with state ordering (plant, controller, reset controller).

    The last ``n_reset_states`` coordinates are the ones zeroed by ``A_R``.
    """

    alpha: float
    A_cl: np.ndarray
    B_cl: np.ndarray
    C_cl: np.ndarray
    n_plant: int
    n_controller: int
    n_reset_controller: int
    n_reset_states: int
    C_p: np.ndarray
    A_R: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.n_plant + self.n_controller + self.n_reset_controller
        if min(self.n_plant, self.n_controller, self.n_reset_controller, self.n_reset_states) < 0:
            raise ValueError("state counts must be non-negative")
        if self.n_reset_states > self.n_reset_controller:
            raise ValueError("n_reset_states exceeds reset controller order")
        if not 0 < self.alpha < 2:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        A = _mat(self.A_cl, "A_cl", (n, n))
        B = np.asarray(self.B_cl, dtype=float).reshape(n, 1)
        C = _mat(self.C_cl, "C_cl", (1, n))
        Cp = np.asarray(self.C_p, dtype=float).reshape(1, self.n_plant)
        AR = np.eye(n)
        AR[n - self.n_reset_states:, n - self.n_reset_states:] = 0.0
        if self.A_R is not None and not np.array_equal(_mat(self.A_R, "A_R", (n, n)), AR):
            raise ValueError("A_R must be blockdiag(I, 0) on the trailing reset states")
        for name, val in (("A_cl", A), ("B_cl", B), ("C_cl", C), ("C_p", Cp), ("A_R", AR)):
            object.__setattr__(self, name, val)

    @property
    def n(self):
        return self.A_cl.shape[0]

    def on_surface(self, x, r, tol=1e-12):
        """Membership of the reset surface: ``C_cl x = r`` and ``(I - A_R) x != 0``."""
        x = np.asarray(x, dtype=float)
        hit = abs(float((self.C_cl @ x)[0]) - r) <= tol
        return hit and np.linalg.norm(x - self.A_R @ x) > tol

    def reset_surface(self):
        return {"C_cl": self.C_cl.tolist(), "reset_states": self.n_reset_states,
                "condition": "C_cl x = r and (I - A_R) x != 0"}


@dataclass(frozen=True)
class RationalTF:
    """Ratio of polynomials in s, coefficients in ascending powers."""

    num: tuple
    den: tuple

    def __post_init__(self):
        num = np.trim_zeros(np.asarray(self.num, dtype=float), "b")
        den = np.trim_zeros(np.asarray(self.den, dtype=float), "b")
        if den.size == 0:
            raise ValueError("denominator is identically zero")
        if num.size == 0:
            num = np.zeros(1)
        object.__setattr__(self, "num", tuple(num.tolist()))
        object.__setattr__(self, "den", tuple(den.tolist()))

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        P = np.polynomial.polynomial
        return P.polyval(s, self.num) / P.polyval(s, self.den)

    def evaluate(self, s):
        return self(s)

    def poles(self):
        return np.polynomial.polynomial.polyroots(self.den).astype(complex)

    def normalized(self):
        """Scale so that ``den(0) == 1`` when possible, else leading den == 1."""
        ref = self.den[0] if self.den[0] != 0 else self.den[-1]
        return RationalTF(tuple(v / ref for v in self.num), tuple(v / ref for v in self.den))


@dataclass(frozen=True)
class Reference:
    kind: str = "step"
    amplitude: float = 1.0
    frequency: float = 0.0

    def __post_init__(self):
        if self.kind not in ("step", "sine"):
            raise ValueError(f"reference kind must be 'step' or 'sine', got {self.kind!r}")

    def __call__(self, t):
        if self.kind == "step":
            return self.amplitude
        return self.amplitude * np.sin(self.frequency * t)


@dataclass
class HybridScenario:
    """Hybrid automaton over a finite set of modes (numbered from 1).

    ``guard(y, r, mode)`` is a signed distance whose sign change marks the
    band-edge crossing; it is what the simulator interpolates on.
    """

    subsystem_family: object
    mode_count: int
    modes: Sequence[FractionalLTI]
    flow_predicate: Callable
    jump_predicate: Callable
    jump_map: Callable
    reference: Reference
    guard: Optional[Callable] = None
    input_order: Optional[float] = None


# --------------------------------------------------------------------------
# realizations


def companion_matrix(coeffs):
    """Bottom-row companion of a monic polynomial (ascending coefficients)."""
    c = np.asarray(coeffs, dtype=float)
    n = c.size - 1
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -c[:-1]
    return A


def realize_commensurate(poly):
    """Controllable-canonical realization of a pseudo-polynomial in ``lambda = s**base``.

    ``det(lambda I - A)`` equals the polynomial; ``B`` is the last unit
    column, ``C`` picks the first state.
    """
    if not isinstance(poly, PseudoPolynomial):
        poly = PseudoPolynomial(*poly)
    n = poly.degree
    A = companion_matrix(poly.coeffs)
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    C = np.zeros((1, n))
    C[0, 0] = 1.0
    return FractionalLTI(poly.base_order, A, B, C, np.zeros((1, 1)))


def pade_coefficients(m):
    """``N_m(x)`` coefficients: ``(2m-k)! m! / ((2m)! k! (m-k)!)``."""
    return [factorial(2 * m - k) * factorial(m) / (factorial(2 * m) * factorial(k) * factorial(m - k))
            for k in range(m + 1)]


def pade_delay(T, m=3):
    """Diagonal Padé approximant of ``exp(-T s)`` of order m (1..10)."""
    if not 1 <= int(m) <= 10 or int(m) != m:
        raise ValueError(f"Padé order must be an integer in 1..10, got {m}")
    if not T >= 0:
        raise ValueError(f"delay must be non-negative, got {T}")
    m = int(m)
    if T == 0:
        return RationalTF((1.0,), (1.0,))
    c = pade_coefficients(m)
    num = tuple(ck * (-T) ** k for k, ck in enumerate(c))
    den = tuple(ck * T ** k for k, ck in enumerate(c))
    return RationalTF(num, den)


def assemble_reset_loop(plant, reset_ctrl, alpha, controller=None):
    """Close a SISO loop around plant, optional linear controller and reset element.

    ``plant`` is ``(A_p, B_p, C_p)``, ``controller`` ``(A_c, B_c, C_c)`` and
    ``reset_ctrl`` ``(A_r, B_r, C_r, D_r, n_reset_states)``.
    """
    Ap, Bp, Cp = (np.atleast_2d(np.asarray(v, dtype=float)) for v in plant)
    Ar, Br, Cr, Dr = (np.atleast_2d(np.asarray(v, dtype=float)) for v in reset_ctrl[:4])
    n_reset = int(reset_ctrl[4])
    n_p, n_r = Ap.shape[0], Ar.shape[0]
    Bp, Br = Bp.reshape(n_p, 1), Br.reshape(n_r, 1)
    Cp, Cr = Cp.reshape(1, n_p), Cr.reshape(1, n_r)
    Dr = Dr.reshape(1, 1)
    if Ap.shape != (n_p, n_p) or Ar.shape != (n_r, n_r):
        raise ValueError("incompatible plant/reset dimensions")
    if controller is None:
        A = np.block([[Ap - Bp @ Dr @ Cp, Bp @ Cr],
                      [-Br @ Cp, Ar]])
        B = np.vstack([Bp @ Dr, Br])
        C = np.hstack([Cp, np.zeros((1, n_r))])
        n_c = 0
    else:
        Ac, Bc, Cc = (np.atleast_2d(np.asarray(v, dtype=float)) for v in controller)
        n_c = Ac.shape[0]
        if Ac.shape != (n_c, n_c):
            raise ValueError("incompatible controller dimensions")
        Bc, Cc = Bc.reshape(n_c, 1), Cc.reshape(1, n_c)
        A = np.block([[Ap, Bp @ Cc, np.zeros((n_p, n_r))],
                      [-Bc @ Dr @ Cp, Ac, Bc @ Cr],
                      [-Br @ Cp, np.zeros((n_r, n_c)), Ar]])
        B = np.vstack([np.zeros((n_p, 1)), Bc @ Dr, Br])
        C = np.hstack([Cp, np.zeros((1, n_c + n_r))])
    return ResetClosedLoop(alpha, A, B, C, n_p, n_c, n_r, n_reset, Cp)


def _as_fraction(x):
    f = Fraction(x).limit_denominator(1000)
    if abs(float(f) - x) > 1e-12:
        raise ValueError(f"order {x} is not a small rational")
    return f


def base_denominator(orders, cap=MAX_BASE_DENOMINATOR):
    v = 1
    for q in orders:
        d = _as_fraction(q).denominator
        v = v * d // np.gcd(v, d)
    if v > cap:
        raise ValueError(f"common base denominator {v} exceeds cap {cap}")
    return int(v)


def augment_base_order(sys, orders=None, base_den=None):
    """Rewrite a (possibly mixed-order) system at common base order ``1/v``.

    State i of order ``u_i/v`` becomes a chain ``x_i, D^{1/v} x_i, ...`` of
    ``u_i`` states joined by ones on the super-diagonal; the original row
    of A drives the last link, columns map to the chain heads.

    Returns ``(FractionalLTI, chain_heads)``.
    """
    n = sys.n
    orders = [sys.alpha] * n if orders is None else list(orders)
    if len(orders) != n:
        raise ValueError("need one order per state")
    v = base_denominator(orders) if base_den is None else int(base_den)
    if v > MAX_BASE_DENOMINATOR:
        raise ValueError(f"base denominator {v} exceeds cap {MAX_BASE_DENOMINATOR}")
    links = []
    for q in orders:
        u = _as_fraction(q) * v
        if u.denominator != 1 or u <= 0:
            raise ValueError(f"order {q} is not a positive multiple of 1/{v}")
        links.append(int(u))
    heads = np.cumsum([0] + links[:-1])
    N = int(sum(links))
    A = np.zeros((N, N))
    B = np.zeros((N, sys.B.shape[1]))
    C = np.zeros((sys.C.shape[0], N))
    for i, (h, u) in enumerate(zip(heads, links)):
        for k in range(u - 1):
            A[h + k, h + k + 1] = 1.0
        tail = h + u - 1
        A[tail, heads] = sys.A[i, :]
        B[tail, :] = sys.B[i, :]
    C[:, heads] = sys.C
    return FractionalLTI(1.0 / v, A, B, C, sys.D.copy()), list(map(int, heads))
