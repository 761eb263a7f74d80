"""Compiled kernels vs the NumPy fallback on the integrator hot loop.

Each backend runs in its own interpreter (the fallback is forced with
``HAMHOPF_PURE=1``) and integrates the default oscillator over a few periods.
Usage: ``python3 benchmarks/bench_integrator.py [--periods N] [--repeat R]``.
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, math, time
import numpy as np
from hamhopf.dynamics import integrate, flow_jacobian
from hamhopf.kernels import BACKEND
from hamhopf.models import OscillatorParams, coupled_oscillator_family, default_interaction

fam = coupled_oscillator_family(OscillatorParams(f_coeffs=default_interaction()))
h, P = fam.hamiltonian(0.99), fam.poisson
v = 0.1 * np.random.default_rng(0).standard_normal(8)
T = {periods} * 2 * math.pi
dt = 2 * math.pi / 2000
best_run = best_jac = float("inf")
for _ in range({repeat}):
    t0 = time.perf_counter()
    tr = integrate(h, P, v, T, dt, record_every=100)
    best_run = min(best_run, time.perf_counter() - t0)
    t0 = time.perf_counter()
    x, S = flow_jacobian(h, P, v, 2 * math.pi, dt)
    best_jac = min(best_jac, time.perf_counter() - t0)
print(json.dumps({{"backend": BACKEND, "integrate_s": best_run, "flow_jacobian_s": best_jac,
                  "final_state": tr.states[-1].tolist()}}))
"""


def run(pure: bool, periods: int, repeat: int) -> dict:
    env = dict(os.environ)
    env["HAMHOPF_PURE"] = "1" if pure else "0"
    code = WORKER.format(periods=periods, repeat=repeat)
    out = subprocess.run([sys.executable, "-c", code], env=env, check=True, capture_output=True, text=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--periods", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    fast = run(False, args.periods, args.repeat)
    slow = run(True, args.periods, args.repeat)
    diff = max(abs(a - b) for a, b in zip(fast["final_state"], slow["final_state"]))
    print(f"{'backend':<10}{'integrate [s]':>16}{'flow_jacobian [s]':>20}")
    for r in (fast, slow):
        print(f"{r['backend']:<10}{r['integrate_s']:>16.4f}{r['flow_jacobian_s']:>20.4f}")
    if fast["backend"] == slow["backend"]:
        print("compiled extension unavailable; both runs used the fallback")
    else:
        print(f"speedup: integrate x{slow['integrate_s'] / fast['integrate_s']:.1f}, "
              f"flow_jacobian x{slow['flow_jacobian_s'] / fast['flow_jacobian_s']:.1f}")
    print(f"max final-state difference between backends: {diff:.1e}")


if __name__ == "__main__":
    main()
