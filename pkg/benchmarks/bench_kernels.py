#!/usr/bin/env python3
"""Time the JIT-compiled kernels against the pure-python fallback.

The same workload runs in two subprocesses -- one with ``LAB_NUMBA=1`` and
one with ``LAB_NUMBA=0`` -- because the backend is chosen at import time.
Each subprocess warms every kernel before starting its timers, so JIT
compilation is excluded from the numbers.

Usage::

    python3 benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json
import time

import numpy as np

from ietlab import kernels
from ietlab.flow import aaronson_experiment, lyapunov_experiment
from ietlab.geometry import MetricParams, canonicalize
from ietlab.iet import CountableIET
from ietlab.measure import invariance_check, sample_mu
from ietlab.roof import choose_b_and_check

iet = CountableIET.block_rotation()
spec = choose_b_and_check(iet)[0]
params = MetricParams(delta=0.25)

# warm every code path once so compilation never lands inside a timer
lyapunov_experiment(spec, params, 200, 1, 0)
aaronson_experiment(spec, 200, 1, 0)
sample_mu(spec, 1000, seed=0)
invariance_check(spec, count=1000, seed=0)

timings = {"numba": bool(kernels.NUMBA_ENABLED)}

t = time.perf_counter()
lyapunov_experiment(spec, params, 50_000, 10, seed=1)
timings["cocycle_orbits_5e5_steps"] = time.perf_counter() - t

t = time.perf_counter()
aaronson_experiment(spec, 100_000, 10, seed=2)
timings["birkhoff_sums_1e6_steps"] = time.perf_counter() - t

t = time.perf_counter()
sample_mu(spec, 200_000, seed=3)
timings["rejection_sampler_2e5"] = time.perf_counter() - t

t = time.perf_counter()
invariance_check(spec, count=100_000, seed=4)
timings["invariance_check_1e5"] = time.perf_counter() - t

rng = np.random.default_rng(5)
pts = [iet.locate(float(x)) for x in rng.random(20_000)]
ys = rng.uniform(-4.0, 4.0, size=20_000)
t = time.perf_counter()
for p, y in zip(pts, ys):
    canonicalize(spec, p, float(y))
timings["canonicalize_2e4"] = time.perf_counter() - t

print(json.dumps(timings))
"""


def run_side(lab_numba: str) -> dict:
    env = dict(os.environ, LAB_NUMBA=lab_numba)
    proc = subprocess.run([sys.executable, "-c", WORKLOAD],
                          capture_output=True, text=True, env=env,
                          timeout=1800, check=True)
    return json.loads(proc.stdout)


def main() -> int:
    print("timing JIT side (LAB_NUMBA=1) ...", flush=True)
    jit = run_side("1")
    print("timing pure-python side (LAB_NUMBA=0) ...", flush=True)
    pure = run_side("0")

    if not jit.pop("numba"):
        print("warning: numba unavailable; both columns ran pure python")
    pure.pop("numba")

    name_w = max(len(k) for k in jit)
    header = f"{'workload':<{name_w}}  {'jit (s)':>9}  {'pure (s)':>9}  {'speedup':>8}"
    print()
    print(header)
    print("-" * len(header))
    for key in jit:
        ratio = pure[key] / jit[key] if jit[key] > 0 else float("inf")
        print(f"{key:<{name_w}}  {jit[key]:>9.3f}  {pure[key]:>9.3f}  "
              f"{ratio:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
