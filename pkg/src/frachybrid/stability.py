"""Stability certificates for fractional-order switching and reset systems.

Switching families are checked through common-Lyapunov predicates and,
pairwise, through the phase difference of characteristic determinants
along the imaginary axis.  Reset loops are checked through strict
positive realness of the H_beta transfer function built from the
transformed closed-loop matrix.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from . import kernels
from .matfun import (
    GridTooCoarseError,
    calA_transform,
    complex_eigendecomposition,
    is_positive_definite,
    solve_lyapunov,
    unwrapped_phase,
)
from .sysmodel import RationalTF, ResetClosedLoop, SwitchingSystem

HALF_PI = np.pi / 2
TIE_TOL = 1e-6
REFINE_ROUNDS = 4

STABLE = "Stable"
INCONCLUSIVE = "Inconclusive"
ASYMPTOTICALLY_STABLE = "AsymptoticallyStable"


class SingularityOnGrid(ValueError):
    """A characteristic determinant vanished at a grid frequency."""


@dataclass(frozen=True)
class FrequencyGrid:
    w_min: float = 1e-4
    w_max: float = 1e4
    points: int = 4000

    def __post_init__(self):
        if not (0 < self.w_min < self.w_max) or not np.isfinite(self.w_max):
            raise ValueError("need 0 < w_min < w_max < inf")
        if self.points < 16:
            raise ValueError("a frequency grid needs at least 16 points")

    def samples(self):
        w = np.logspace(np.log10(self.w_min), np.log10(self.w_max), self.points)
        w[0], w[-1] = self.w_min, self.w_max
        return w


@dataclass
class PhaseSweepReport:
    grid: FrequencyGrid
    omega: np.ndarray
    phase_a: np.ndarray
    phase_b: np.ndarray
    delta: np.ndarray
    max_delta: float
    margin: float
    verdict: str
    refined: bool
    labels: tuple = ("A1", "A2")
    reason: str = ""
    matignon_margins: tuple = ()

    @property
    def stable(self):
        return self.verdict == STABLE


@dataclass
class ResetStabilityReport:
    beta: float
    P_R: np.ndarray
    max_abs_phase: float
    spr: bool
    verdict: str
    reason: str = ""
    omega: Optional[np.ndarray] = field(default=None, repr=False)
    phase: Optional[np.ndarray] = field(default=None, repr=False)
    magnitude: Optional[np.ndarray] = field(default=None, repr=False)


# --------------------------------------------------------------------------
# Lyapunov-side predicates


def matignon_check(A, alpha):
    """Sector test: stable iff every eigenvalue has ``|arg| > alpha*pi/2``."""
    if not 0 < alpha < 2:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    lam = complex_eigendecomposition(np.asarray(A, dtype=float)).eigenvalues
    margin = float(np.min(np.abs(np.angle(lam))) - alpha * HALF_PI)
    return margin > 0, margin


def _sym_pd(P, n):
    P = np.asarray(P, dtype=float)
    if P.shape != (n, n):
        raise ValueError(f"P must be {n}x{n}, got {P.shape}")
    if not is_positive_definite(P):
        raise ValueError("P must be symmetric positive definite")
    return P


def thm1_block(A, P, alpha):
    """Block LMI matrix for orders in [1, 2); negative definite means the predicate holds."""
    if not 1 <= alpha < 2:
        raise ValueError(f"alpha must lie in [1, 2), got {alpha}")
    A = np.asarray(A, dtype=float)
    P = _sym_pd(P, A.shape[0])
    phi = alpha * HALF_PI
    s, c = np.sin(phi), np.cos(phi)
    if alpha == 1:
        c = 0.0
    S = A.T @ P + P @ A
    K = A.T @ P - P @ A
    return np.block([[S * s, K * c], [-K * c, S * s]])


def thm1_predicate(A, P, alpha):
    M = thm1_block(A, P, alpha)
    return bool(np.linalg.eigvalsh((M + M.T) / 2).max() < 0)


def _negdef(M):
    return bool(np.linalg.eigvalsh((M + M.T) / 2).max() < 0)


def thm2_predicate(A, P, alpha):
    """``T^T P + P T < 0`` with ``T = -(-A)^(1/(2-alpha))``, for orders in (0, 1]."""
    T = calA_transform(A, alpha)
    P = _sym_pd(P, T.shape[0])
    return _negdef(T.T @ P + P @ T)


def pairwise_lyapunov_oracle(A1, A2, alpha):
    """Search a few candidate common P for the transformed pair.

    Candidates: the Lyapunov solution of each transformed matrix with
    Q = I, then their average.  Returns None when none works, which proves
    nothing.
    """
    T1, T2 = calA_transform(A1, alpha), calA_transform(A2, alpha)
    n = T1.shape[0]
    P1 = solve_lyapunov(T1, np.eye(n))
    P2 = solve_lyapunov(T2, np.eye(n))
    for P in (P1, P2, 0.5 * (P1 + P2)):
        if is_positive_definite(P) and _negdef(T1.T @ P + P @ T1) and _negdef(T2.T @ P + P @ T2):
            return P
    return None


# --------------------------------------------------------------------------
# phase-difference sweeps


def _thm4_pencil(A, alpha):
    T = calA_transform(A, alpha)
    n = T.shape[0]
    # det(T - jw I)
    return T.astype(complex), -1j * np.eye(n), np.zeros((n, n), complex)


def _thm3_pencil(A, alpha):
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    s = np.sin(alpha * HALF_PI)
    # det(A^2 - w^2 I - 2 j w sin(phi) A)
    return (A @ A).astype(complex), -2j * s * A.astype(complex), -np.eye(n, dtype=complex)


def _units(pencil, omega):
    units, logs = kernels.pencil_logdet(*pencil, np.ascontiguousarray(omega, dtype=float))
    if np.any(units == 0) or np.any(~np.isfinite(logs)):
        k = int(np.nonzero((units == 0) | ~np.isfinite(logs))[0][0])
        raise SingularityOnGrid(f"characteristic determinant vanishes at omega={omega[k]:.6g}")
    return units


def _midpoints(omega, intervals):
    """Geometric midpoints of ``[omega[k-1], omega[k]]`` for each k in ``intervals``."""
    ks = np.unique(np.clip(np.asarray(sorted(intervals), dtype=int), 1, omega.size - 1))
    return np.sqrt(omega[ks - 1] * omega[ks]) if ks.size else np.zeros(0)


def _merge(omega, values, new_omega, new_values):
    w = np.concatenate([omega, new_omega])
    order = np.argsort(w, kind="stable")
    return w[order], [np.concatenate([v, nv])[order] for v, nv in zip(values, new_values)]


def _coarse_steps(*unit_arrays):
    bad = set()
    for u in unit_arrays:
        steps = np.abs(np.angle(u[1:] / u[:-1]))
        bad.update((np.nonzero(steps > HALF_PI)[0] + 1).tolist())
    return bad


def _sweep(pencil_a, pencil_b, grid, labels, alpha, A1, A2):
    ok1, m1 = matignon_check(A1, alpha)
    ok2, m2 = matignon_check(A2, alpha)
    if not (ok1 and ok2):
        empty = np.zeros(0)
        return PhaseSweepReport(grid, empty, empty, empty, empty, float("nan"), float("nan"),
                                INCONCLUSIVE, False, labels,
                                reason="subsystem fails the Matignon sector condition",
                                matignon_margins=(m1, m2))
    omega = grid.samples()
    ua, ub = _units(pencil_a, omega), _units(pencil_b, omega)
    refined = False
    previous = None
    for _ in range(REFINE_ROUNDS):
        coarse = _coarse_steps(ua, ub)
        delta = np.abs(unwrapped_phase(ua, max_step=None) - unwrapped_phase(ub, max_step=None))
        peak = float(delta.max())
        if not coarse and previous is not None and abs(peak - previous) < 1e-9:
            break
        previous = peak
        k = int(np.argmax(delta))
        mids = _midpoints(omega, coarse | {k, k + 1})
        if mids.size == 0:
            break
        refined = True
        omega, (ua, ub) = _merge(omega, (ua, ub), mids,
                                 (_units(pencil_a, mids), _units(pencil_b, mids)))
    reason = ""
    try:
        pa, pb = unwrapped_phase(ua), unwrapped_phase(ub)
    except GridTooCoarseError as exc:
        pa, pb = unwrapped_phase(ua, max_step=None), unwrapped_phase(ub, max_step=None)
        reason = f"unwrapping still coarse after refinement ({len(exc.indices)} steps)"
    delta = np.abs(pa - pb)
    max_delta = float(delta.max())
    margin = HALF_PI - max_delta
    verdict = STABLE if margin > TIE_TOL and not reason else INCONCLUSIVE
    if not reason and verdict == INCONCLUSIVE:
        reason = "phase difference reaches pi/2"
    return PhaseSweepReport(grid, omega, pa, pb, delta, max_delta, margin, verdict,
                            refined, labels, reason, (m1, m2))


def phase_sweep_thm4(A1, A2, alpha, grid=None, labels=("A1", "A2")):
    """Phase difference of ``det(T_i - jw I)`` for orders in (0, 1]."""
    grid = grid or FrequencyGrid()
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    ok = matignon_check(A1, alpha)[0] and matignon_check(A2, alpha)[0]
    pa = _thm4_pencil(A1, alpha) if ok else None
    pb = _thm4_pencil(A2, alpha) if ok else None
    return _sweep(pa, pb, grid, labels, alpha, A1, A2)


def phase_sweep_thm3(A1, A2, alpha, grid=None, labels=("A1", "A2")):
    """Phase difference of ``det(A_i^2 - w^2 I - 2jw sin(alpha pi/2) A_i)``.

    Stated for orders in [1, 2); orders below 1 are accepted because the
    published SmartWheel conditions use this form at alpha = 0.1.
    """
    grid = grid or FrequencyGrid()
    if not 0 < alpha < 2:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    return _sweep(_thm3_pencil(A1, alpha), _thm3_pencil(A2, alpha), grid, labels, alpha, A1, A2)


def default_form(alpha):
    return "thm4" if alpha <= 1 else "thm3"


def multi_check(sys: SwitchingSystem, mode="consecutive", form=None, grid=None):
    """Pairwise sweeps over a switching family.

    Returns ``(reports, aggregate_verdict)``.  ``consecutive`` checks
    pairs (j-1, j); ``all_pairs`` checks every unordered pair.
    """
    form = form or default_form(sys.alpha)
    sweep = {"thm3": phase_sweep_thm3, "thm4": phase_sweep_thm4}.get(form)
    if sweep is None:
        raise ValueError(f"unknown form {form!r}")
    labels, mats = sys.labels, sys.matrices
    if mode == "consecutive":
        pairs = [(i - 1, i) for i in range(1, len(mats))]
    elif mode == "all_pairs":
        pairs = list(combinations(range(len(mats)), 2))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if not pairs:
        ok = matignon_check(mats[0], sys.alpha)[0]
        return [], STABLE if ok else INCONCLUSIVE
    reports = []
    for i, j in pairs:
        try:
            reports.append(sweep(mats[i], mats[j], sys.alpha, grid, (labels[i], labels[j])))
        except Exception as exc:
            raise type(exc)(f"pair ({labels[i]}, {labels[j]}): {exc}") from exc
    verdict = STABLE if all(r.stable for r in reports) else INCONCLUSIVE
    return reports, verdict


# --------------------------------------------------------------------------
# reset systems


@dataclass(frozen=True)
class HBeta:
    """State-space H_beta(s) = C (sI - T)^-1 B."""

    C: np.ndarray
    T: np.ndarray
    B: np.ndarray

    def __call__(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        n = self.T.shape[0]
        stack = s[:, None, None] * np.eye(n)[None] - self.T[None]
        rhs = np.broadcast_to(self.B.astype(complex), (s.size,) + self.B.shape)
        x = np.linalg.solve(stack, rhs)
        return (self.C @ x)[:, 0, 0]

    evaluate = __call__

    def poles(self):
        return np.linalg.eigvals(self.T)

    def as_triple(self):
        return self.C, self.T, self.B


def hbeta_build(rcl: ResetClosedLoop, beta, P_R=None):
    """H_beta for a reset loop: row ``[beta C_p, 0, P_R]`` against the transformed A_cl."""
    nr = rcl.n_reset_states
    if nr < 1:
        raise ValueError("H_beta needs at least one reset state")
    if nr != 1:
        raise NotImplementedError("phase test implemented for a single reset state")
    P_R = np.eye(nr) if P_R is None else np.atleast_2d(np.asarray(P_R, dtype=float))
    if P_R.shape != (nr, nr) or not is_positive_definite(P_R):
        raise ValueError("P_R must be symmetric positive definite of size n_reset_states")
    if not 0 < rcl.alpha <= 1:
        raise ValueError("H_beta construction needs 0 < alpha <= 1")
    T = calA_transform(rcl.A_cl, rcl.alpha)
    n = rcl.n
    n_mid = n - rcl.n_plant - nr
    # one output row per reset state: [beta_i C_p, 0, P_R row i]
    betas = np.broadcast_to(np.asarray(beta, dtype=float).reshape(-1, 1), (nr, 1))
    C = np.hstack([betas * rcl.C_p, np.zeros((nr, n_mid)), P_R])
    B = np.vstack([np.zeros((n - nr, nr)), np.eye(nr)])
    return HBeta(C, T, B)


def spr_phase_check(H, grid=None):
    """Phase form of strict positive realness.

    Returns ``(spr, max_abs_phase, reason, omega, phase, magnitude)``.
    Poles must lie in the open left half-plane, then
    ``|arg H(jw)| < pi/2`` on the grid (with the tie tolerance).
    """
    grid = grid or FrequencyGrid()
    poles = np.asarray(H.poles())
    omega = grid.samples()
    if poles.size and np.max(poles.real) >= 0:
        if np.any(np.abs(poles.real) < 1e-12):
            reason = "pole on the imaginary axis"
        else:
            reason = "unstable pole"
        return False, float("nan"), reason, omega, None, None
    values = np.asarray(H(1j * omega))
    if np.any(values == 0):
        return False, float("nan"), "zero of H on the grid", omega, None, None
    for _ in range(REFINE_ROUNDS):
        steps = np.abs(np.angle(values[1:] / values[:-1]))
        coarse = np.nonzero(steps > HALF_PI)[0] + 1
        if coarse.size == 0:
            break
        mids = _midpoints(omega, coarse.tolist())
        omega, (values,) = _merge(omega, (values,), mids, (np.asarray(H(1j * mids)),))
    phase = unwrapped_phase(values, max_step=None)
    max_abs = float(np.max(np.abs(phase)))
    spr = max_abs < HALF_PI - TIE_TOL
    reason = "" if spr else "phase leaves (-pi/2, pi/2)"
    return spr, max_abs, reason, omega, phase, np.abs(values)


def reset_stability(system, beta, P_R=None, grid=None):
    """H_beta condition for a reset loop, or for a callable ``beta -> H`` family."""
    if isinstance(system, ResetClosedLoop):
        H = hbeta_build(system, beta, P_R)
        P_R = np.eye(system.n_reset_states) if P_R is None else np.atleast_2d(P_R)
    else:
        H = system(beta)
        P_R = np.eye(1) if P_R is None else np.atleast_2d(P_R)
    spr, max_abs, reason, omega, phase, mag = spr_phase_check(H, grid)
    verdict = ASYMPTOTICALLY_STABLE if spr else INCONCLUSIVE
    return ResetStabilityReport(float(beta), P_R, max_abs, spr, verdict, reason, omega, phase, mag)


@dataclass(frozen=True)
class BetaInterval:
    lower: float
    upper: float
    lower_closed: bool
    upper_closed: bool

    def __str__(self):
        lb = "[" if self.lower_closed else "("
        ub = "]" if self.upper_closed else ")"
        return f"{lb}{self.lower:.6g}, {self.upper:.6g}{ub}"

    def to_dict(self):
        return {"lower": self.lower, "upper": self.upper,
                "lower_closed": self.lower_closed, "upper_closed": self.upper_closed}


def beta_range(system, beta_min, beta_max, step=0.01, grid=None, P_R=None):
    """Maximal beta intervals on which the H_beta condition holds.

    Scans a uniform beta grid, then bisects every verdict change down to
    width ``step/100``.  A refined boundary is reported open on the
    failing side and closed on the passing side; scan edges are closed.
    """
    if not beta_min < beta_max:
        raise ValueError("need beta_min < beta_max")
    if not step > 0:
        raise ValueError("step must be positive")
    grid = grid or FrequencyGrid()

    def ok(beta):
        try:
            return reset_stability(system, beta, P_R, grid).spr
        except (ValueError, np.linalg.LinAlgError):
            return False

    count = int(np.floor((beta_max - beta_min) / step + 1e-9))
    betas = beta_min + step * np.arange(count + 1)
    if betas[-1] < beta_max - 1e-12:
        betas = np.append(betas, beta_max)
    flags = [ok(b) for b in betas]
    tol = step / 100

    def bisect(lo, hi):
        # flags differ at lo and hi; return (last at lo's verdict, first at hi's verdict)
        f_lo = ok(lo)
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if ok(mid) == f_lo:
                lo = mid
            else:
                hi = mid
        return lo, hi

    intervals = []
    start = None
    for k, flag in enumerate(flags):
        if flag and start is None:
            if k == 0:
                start = (float(betas[0]), True)
            else:
                fail, _ = bisect(betas[k - 1], betas[k])
                start = (float(fail), False)
        if start is not None and (not flag or k == len(flags) - 1):
            if flag:
                end = (float(betas[k]), True)
            else:
                last, _ = bisect(betas[k - 1], betas[k])
                end = (float(last), True)
            intervals.append(BetaInterval(start[0], end[0], start[1], end[1]))
            start = None
    return intervals
