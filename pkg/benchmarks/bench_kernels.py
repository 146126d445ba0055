"""Compare the compiled and pure-Python loop kernels on one scenario.

    python benchmarks/bench_kernels.py [--duration 200] [--repeat 3]

Reports wall time per backend, steps per second, the speed-up and the
largest difference between the two logs, once for the full loop and once
for the kernel alone (supervisor disabled).
"""

import argparse
import time
from dataclasses import replace

import numpy as np

from ftdp import kernel
from ftdp.scenario import Scenario
from ftdp.sim import run
from ftdp.thrusters import FaultEvent


def best_of(sc, backend, repeat):
    best, log = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        log = run(sc, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, log


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--duration", type=float, default=200.0, help="simulated seconds")
    p.add_argument("--repeat", type=int, default=3, help="runs per backend; the fastest counts")
    args = p.parse_args(argv)

    faults = [FaultEvent(args.duration / 2, 3, 0.7)] if args.duration > 80 else []
    full = Scenario(duration=args.duration, faults=faults)
    print(f"scenario: {full.n_steps} steps of {full.dt} s, faults: {len(faults)}")
    for label, sc in (("full loop", full), ("kernel only", replace(full, fdi_enabled=False))):
        print(f"-- {label}")
        t_py, log_py = best_of(sc, kernel.PyLoopKernel, args.repeat)
        print(f"python  {t_py:8.3f} s  {sc.n_steps / t_py:12,.0f} steps/s")
        if kernel.CyLoopKernel is None:
            print("cython  not built (pip install -e . --no-build-isolation with Cython present)")
            continue
        t_cy, log_cy = best_of(sc, kernel.CyLoopKernel, args.repeat)
        print(f"cython  {t_cy:8.3f} s  {sc.n_steps / t_cy:12,.0f} steps/s")
        diff = np.abs(log_py.data - log_cy.data).max()
        print(f"speed-up {t_py / t_cy:.1f}x; max log difference {diff:.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
