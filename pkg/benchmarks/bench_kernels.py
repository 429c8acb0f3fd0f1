"""Compare the compiled and pure-Python kernel backends.

Times the two hot kernels in isolation and two end-to-end workloads that
lean on them (a long-memory GL simulation and the SmartWheel pairwise
sweeps).  Run with ``python benchmarks/bench_kernels.py [--repeat N]``.
"""

import argparse
import time

import numpy as np

from frachybrid import hybridsim, kernels, scenarios, stability
from frachybrid.sysmodel import FractionalLTI


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads():
    rng = np.random.default_rng(0)
    weights = hybridsim.gl_weights(0.5, 20000)
    dev = rng.standard_normal((20001, 7))
    n = 24
    M0, M1, M2 = (rng.standard_normal((n, n)).astype(complex) for _ in range(3))
    omegas = np.logspace(-4, 4, 4000)
    servo = scenarios.servo_fpci_augmented()
    servo_lti = FractionalLTI(servo.alpha, servo.A_cl, servo.B_cl, servo.C_cl, [[0.0]])
    family = scenarios.build_smartwheel_family(m=3)

    def history():
        for k in range(1, 20001, 20):
            kernels.gl_history_sum(weights, dev, k, 0)

    return {
        "gl_history_sum x1000 (n=7, up to 20000 lags)": history,
        "pencil_logdet (24x24, 4000 frequencies)": lambda: kernels.pencil_logdet(M0, M1, M2, omegas),
        "simulate 7-state loop, T=10, full memory": lambda: hybridsim.simulate_fractional_lti(
            servo_lti, 1.0, None, hybridsim.SimConfig(h=1e-3, T=10.0, memory=None)),
        "SmartWheel 12 pairwise sweeps": lambda: stability.multi_check(family, "consecutive", "thm3"),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; timing the python backend only")
    previous = kernels.backend_name()
    rows = []
    try:
        for name, fn in workloads().items():
            timing = {}
            for b in backends:
                kernels.set_backend(b)
                timing[b] = best_of(fn, args.repeat)
            rows.append((name, timing))
    finally:
        kernels.set_backend(previous)
    width = max(len(r[0]) for r in rows)
    print(f"{'workload':<{width}}  " + "  ".join(f"{b:>10}" for b in backends) + "   speedup")
    for name, timing in rows:
        cells = "  ".join(f"{timing[b]:>9.4f}s" for b in backends)
        speed = timing["python"] / timing["compiled"] if "compiled" in timing else float("nan")
        print(f"{name:<{width}}  {cells}   {speed:6.2f}x")


if __name__ == "__main__":
    main()
