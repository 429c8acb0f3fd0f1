"""Grünwald-Letnikov simulation of fractional-order hybrid trajectories.

The flow uses the Caputo-style deviation form of the GL sum, so constant
equilibria are exact and the order-one scheme is forward Euler.  Reset
and switching events are located by interpolation inside a step; the step
is truncated at the event and integration resumes from there.
"""

from dataclasses import dataclass, field
from math import exp, lgamma, log
from typing import Optional

import mpmath
import numpy as np
from scipy.optimize import brentq
from scipy.signal import fftconvolve

from . import kernels
from .sysmodel import FractionalLTI, HybridScenario, Reference, ResetClosedLoop

MAX_EVENTS = 10_000


class SimulationError(RuntimeError):
    """Simulation aborted; ``trajectory`` holds what was computed."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class DivergenceError(SimulationError):
    pass


class EventLimitError(SimulationError):
    pass


@dataclass(frozen=True)
class SimConfig:
    h: float = 1e-3
    T: float = 20.0
    memory: Optional[int] = 4000
    scheme: str = "explicit"
    reset_memory_policy: str = "clear"

    def __post_init__(self):
        if not (self.h > 0 and self.T > 0 and self.h <= self.T):
            raise ValueError("need 0 < h <= T")
        if self.memory is not None and self.memory < 1:
            raise ValueError("memory length must be >= 1 or None")
        if self.scheme not in ("explicit", "implicit"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.reset_memory_policy not in ("clear", "retain"):
            raise ValueError(f"unknown reset memory policy {self.reset_memory_policy!r}")

    @property
    def steps(self):
        return int(round(self.T / self.h))


@dataclass(frozen=True)
class Event:
    time: float
    kind: str
    pre_state: np.ndarray
    post_state: np.ndarray
    mode_before: int
    mode_after: int


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    outputs: np.ndarray
    modes: np.ndarray
    events: list = field(default_factory=list)


def gl_weights(alpha, n):
    """``c_0 = 1``, ``c_j = (1 - (1 + alpha)/j) c_{j-1}`` for j = 1..n."""
    c = np.empty(n + 1)
    c[0] = 1.0
    for j in range(1, n + 1):
        c[j] = (1.0 - (1.0 + alpha) / j) * c[j - 1]
    return c


def mittag_leffler(alpha, z, tol=1e-15, max_terms=100_000):
    """One-parameter Mittag-Leffler function by its power series.

    For large |z| the alternating terms far exceed the result, so the sum
    falls back to multiprecision with enough digits to absorb the
    cancellation.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if abs(z) > 20:
        raise ValueError("series evaluation is limited to |z| <= 20")
    if z == 0:
        return 1.0
    # log10 of the largest term magnitude
    lz = log(abs(z))
    peak, k = 0.0, 0
    while True:
        val = k * lz - lgamma(alpha * k + 1)
        peak = max(peak, val)
        if k > 2 and val < peak - 80:
            break
        k += 1
    peak /= log(10)
    if peak < 3:
        total, k = 0.0, 0
        while True:
            term = (-1.0 if (z < 0 and k % 2) else 1.0) * exp(k * lz - lgamma(alpha * k + 1))
            total += term
            if abs(term) < tol * max(abs(total), 1.0) and k > 2:
                return total
            k += 1
            if k > max_terms:
                raise ArithmeticError("Mittag-Leffler series did not reach tolerance")
    with mpmath.workdps(int(peak) + 30):
        zz = mpmath.mpf(z)
        total, k = mpmath.mpf(0), 0
        while True:
            term = zz ** k / mpmath.gamma(alpha * k + 1)
            total += term
            if abs(term) < tol * max(abs(total), mpmath.mpf("1e-300")) and k > 2:
                return float(total)
            k += 1
            if k > max_terms:
                raise ArithmeticError("Mittag-Leffler series did not reach tolerance")


class _History:
    """Deviation history ``x_k - origin`` with a growable buffer."""

    def __init__(self, x0, capacity, alpha, memory):
        n = x0.size
        self.dev = np.zeros((capacity + 1, n))
        self.origin = x0.astype(float).copy()
        self.k = 0
        self.memory = 0 if memory is None else int(memory)
        wlen = capacity if memory is None else min(capacity, memory)
        self.weights = gl_weights(alpha, wlen)
        self.alpha = alpha

    def _grow(self):
        extra = self.dev.shape[0]
        self.dev = np.vstack([self.dev, np.zeros_like(self.dev)])
        if self.memory == 0:
            self.weights = gl_weights(self.alpha, self.weights.size - 1 + extra)

    def memory_term(self):
        """``origin - sum_j c_j dev[k+1-j]`` for the next sample k+1."""
        return self.origin - kernels.gl_history_sum(self.weights, self.dev, self.k + 1, self.memory)

    def push(self, x):
        if self.k + 1 >= self.dev.shape[0]:
            self._grow()
        self.k += 1
        self.dev[self.k] = x - self.origin

    def replace_last(self, x):
        self.dev[self.k] = x - self.origin

    def restart(self, coords, value):
        """Fresh initial condition for ``coords``: new origin, zero history."""
        self.origin[coords] = value[coords]
        self.dev[: self.k + 1, coords] = 0.0


class _Stepper:
    def __init__(self, A, B, alpha, h, scheme):
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float).reshape(self.A.shape[0], -1)
        self.ha = h ** alpha
        self.scheme = scheme
        if scheme == "implicit":
            M = np.eye(self.A.shape[0]) - self.ha * self.A
            if abs(np.linalg.det(M)) < 1e-14:
                raise SimulationError("implicit step matrix is singular")
            self.lu = np.linalg.inv(M)

    def step(self, hist, x_prev, u_prev, u_next):
        base = hist.memory_term()
        # overflow is reported by the caller's finiteness check
        with np.errstate(over="ignore", invalid="ignore"):
            if self.scheme == "explicit":
                return base + self.ha * (self.A @ x_prev + self.B @ u_prev)
            return self.lu @ (base + self.ha * (self.B @ u_next))


def _as_input(u, m):
    if u is None:
        return lambda t: np.zeros(m)
    if callable(u):
        return lambda t: np.atleast_1d(np.asarray(u(t), dtype=float)).reshape(m)
    val = np.atleast_1d(np.asarray(u, dtype=float)).reshape(m)
    return lambda t: val


def _finish(times, states, C, modes, events, D=None, inputs=None):
    X = np.asarray(states)
    y = (X @ C.T)[:, 0] if C is not None and C.size else np.zeros(len(times))
    return Trajectory(np.asarray(times), X, y, np.asarray(modes, dtype=int), events)


def _check_finite(x, times, states, C, modes, events):
    if not np.all(np.isfinite(x)):
        raise DivergenceError(f"non-finite state at t={times[-1]:.6g}",
                              _finish(times, states, C, modes, events))


def simulate_fractional_lti(sys: FractionalLTI, u=None, x0=None, cfg=None):
    """Integrate ``D^alpha x = A x + B u`` on a uniform grid."""
    cfg = cfg or SimConfig()
    n, m = sys.n, sys.B.shape[1]
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(n)
    uf = _as_input(u, m)
    N = cfg.steps
    hist = _History(x0, N, sys.alpha, cfg.memory)
    stepper = _Stepper(sys.A, sys.B, sys.alpha, cfg.h, cfg.scheme)
    times, states, modes = [0.0], [x0.copy()], [1]
    x = x0.copy()
    for k in range(1, N + 1):
        t_prev, t = (k - 1) * cfg.h, k * cfg.h
        x = stepper.step(hist, x, uf(t_prev), uf(t))
        times.append(t)
        states.append(x)
        modes.append(1)
        _check_finite(x, times, states, sys.C, modes, [])
        hist.push(x)
    return _finish(times, states, sys.C, modes, [])


def _locate(g, t0, t1, x0, x1):
    """Crossing of ``g(t, x)`` on the segment, x linearly interpolated."""

    def f(theta):
        return g(t0 + theta * (t1 - t0), x0 + theta * (x1 - x0))

    f0, f1 = f(0.0), f(1.0)
    if f0 == 0:
        theta = 0.0
    elif f1 == 0:
        theta = 1.0
    else:
        theta = brentq(f, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return t0 + theta * (t1 - t0), x0 + theta * (x1 - x0)


def simulate_reset(rcl: ResetClosedLoop, reference=None, cfg=None, x0=None):
    """Reset loop driven by ``r``: flow with input r, jump ``x+ = A_R x`` on e = 0 crossings."""
    cfg = cfg or SimConfig()
    ref = reference if reference is not None else Reference("step", 1.0)
    if isinstance(ref, (int, float)):
        ref = Reference("step", float(ref))
    n = rcl.n
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(n)
    C = rcl.C_cl
    AR = rcl.A_R
    reset_coords = np.arange(n - rcl.n_reset_states, n)
    N = cfg.steps
    hist = _History(x, N + 64, rcl.alpha, cfg.memory)
    stepper = _Stepper(rcl.A_cl, rcl.B_cl, rcl.alpha, cfg.h, cfg.scheme)

    def err(t, xx):
        return ref(t) - float((C @ xx)[0])

    times, states, modes, events = [0.0], [x.copy()], [1], []
    t, anchor, since = 0.0, 0.0, 0
    e_sign = np.sign(err(0.0, x))
    last_event_step = -2
    step = 0
    while t < cfg.T - 1e-12:
        step += 1
        t_next = anchor + (since + 1) * cfg.h
        x_new = stepper.step(hist, x, np.array([ref(t)]), np.array([ref(t_next)]))
        _check_finite(x_new, times + [t_next], states + [x_new], C, modes + [1], events)
        e_new = err(t_next, x_new)
        s_new = np.sign(e_new)
        fired = False
        if (s_new != 0 and e_sign != 0 and s_new != e_sign and step - last_event_step > 1):
            t_e, pre = _locate(err, t, t_next, x, x_new)
            post = AR @ pre
            if np.linalg.norm(pre - post) > 1e-12:
                events.append(Event(t_e, "reset", pre.copy(), post.copy(), 1, 1))
                if len(events) > MAX_EVENTS:
                    raise EventLimitError("more than 10^4 reset events",
                                          _finish(times, states, C, modes, events))
                if t_e > t:
                    times.append(t_e)
                    states.append(post)
                    modes.append(1)
                    hist.push(post)
                else:
                    # crossing at the start of the step: overwrite that sample
                    states[-1] = post
                    hist.replace_last(post)
                if cfg.reset_memory_policy == "clear" and reset_coords.size:
                    hist.restart(reset_coords, post)
                x, t = post, t_e
                anchor, since = t_e, 0
                last_event_step = step
                fired = True
        if s_new != 0:
            e_sign = s_new
        if fired:
            continue
        times.append(t_next)
        states.append(x_new)
        modes.append(1)
        hist.push(x_new)
        x, t = x_new, t_next
        since += 1
    return _finish(times, states, C, modes, events)


def _reference_inputs(ref, cfg, order, width):
    """Per-sample input vectors: ``r`` alone, or ``(D^order r, r)`` for two columns."""
    N = cfg.steps
    r = np.array([ref(k * cfg.h) for k in range(N + 1)], dtype=float)
    if width == 1:
        return r[:, None]
    if width != 2:
        raise ValueError("switched modes take r or (D^q r, r) as input")
    if order is None:
        raise ValueError("two-input modes need the scenario's input_order")
    L = N if cfg.memory is None else min(N, cfg.memory)
    dr = fftconvolve(gl_weights(order, L), r)[: N + 1] / cfg.h ** order
    return np.column_stack([dr, r])


def simulate_switched(scenario: HybridScenario, cfg=None, x0=None):
    """Hysteresis switching between modes sharing one state vector.

    Jumps leave x unchanged, so the time grid stays uniform: the crossing
    time is interpolated for the event log and the new mode drives the
    following step.  ``modes[k]`` and ``outputs[k]`` refer to the mode
    that produced sample k.  Modes with a two-column B are driven by
    ``(D^q r, r)`` with ``q = scenario.input_order``; the derivative is the
    GL sum of the sampled reference, taken as zero before t = 0.
    """
    cfg = cfg or SimConfig()
    modes_sys = list(scenario.modes)
    alpha = modes_sys[0].alpha
    n = modes_sys[0].n
    ref = scenario.reference
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(n)
    steppers = [_Stepper(s.A, s.B, alpha, cfg.h, cfg.scheme) for s in modes_sys]
    hist = _History(x, cfg.steps, alpha, cfg.memory)
    mode = 1

    def output(xx, md):
        return float((modes_sys[md - 1].C @ xx)[0])

    times, states, mode_log, outputs, events = [0.0], [x.copy()], [mode], [output(x, mode)], []

    def partial():
        return Trajectory(np.asarray(times), np.asarray(states), np.asarray(outputs),
                          np.asarray(mode_log), events)

    drive = _reference_inputs(ref, cfg, scenario.input_order, modes_sys[0].B.shape[1])
    for k in range(1, cfg.steps + 1):
        t, t_next = (k - 1) * cfg.h, k * cfg.h
        x_new = steppers[mode - 1].step(hist, x, drive[k - 1], drive[k])
        if not np.all(np.isfinite(x_new)):
            raise DivergenceError(f"non-finite state at t={t_next:.6g}", partial())
        y_new = output(x_new, mode)
        times.append(t_next)
        states.append(x_new)
        mode_log.append(mode)
        outputs.append(y_new)
        hist.push(x_new)
        if scenario.jump_predicate(y_new, mode, ref(t_next)):
            md = mode

            def g(tt, xx):
                return scenario.guard(output(xx, md), ref(tt), md)

            if g(t, x) > 0:
                t_e, pre = _locate(g, t, t_next, x, x_new)
            else:
                t_e, pre = t_next, x_new.copy()
            post, new_mode = scenario.jump_map(pre, mode)
            events.append(Event(t_e, "switch", pre.copy(), np.array(post, dtype=float), mode, new_mode))
            if len(events) > MAX_EVENTS:
                raise EventLimitError("more than 10^4 switches (chattering)", partial())
            mode = new_mode
        x = x_new
    return partial()


@dataclass(frozen=True)
class StepMetrics:
    overshoot: Optional[float]
    settling_time: Optional[float]
    steady_state_error: Optional[float]


def metrics(traj: Trajectory, reference=1.0, band=0.02):
    """Overshoot and steady-state error as fractions of the reference, 2% settling time."""
    y = np.asarray(traj.outputs, dtype=float)
    t = np.asarray(traj.times, dtype=float)
    r = float(reference)
    if not np.all(np.isfinite(y)) or r == 0:
        return StepMetrics(None, None, None)
    overshoot = max(0.0, float((y.max() - r) / r)) if r > 0 else max(0.0, float((r - y.min()) / -r))
    outside = np.nonzero(np.abs(y - r) > band * abs(r))[0]
    if outside.size == 0:
        settling = 0.0
    elif outside[-1] == y.size - 1:
        return StepMetrics(overshoot, None, None)
    else:
        # time of the last exit from the band, linearly interpolated
        k = outside[-1]
        edge = r + np.sign(y[k] - r) * band * abs(r)
        frac = (y[k] - edge) / (y[k] - y[k + 1]) if y[k] != y[k + 1] else 0.0
        settling = float(t[k] + frac * (t[k + 1] - t[k]))
    sse = float(abs(y[-1] - r) / abs(r))
    return StepMetrics(overshoot, settling, sse)
