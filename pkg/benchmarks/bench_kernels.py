"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--n 4] [--steps 1024] [--repeat 5]

The backend is fixed at import time by ``CSPATH_DISABLE_NUMBA``, so each
backend runs in its own interpreter and reports best-of-``repeat`` wall times
as JSON; the parent prints both side by side and checks that the results
agree.  Compilation happens in an untimed warm-up call.
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def best_of(fn, repeat):
    fn()
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def measure(n, steps, repeat):
    from cspath import _kernels as K
    from cspath.core import random_smooth
    from cspath.oracles import slice_matrices
    from cspath.propagator import evolve

    H = random_smooth(n, 1.0, seed=1)
    L, Q, Rb = slice_matrices(random_smooth(n, 1.0, seed=2), 1.0, steps)
    v = np.full(n, 0.3 + 0.1j)
    w = np.full(n, -0.2 + 0.2j)
    _, hist = evolve(H, steps=steps, record=True)
    _, B = H.sample(hist.times)
    gamma = np.linalg.solve(hist.final.abar, hist.final.bbar)

    cases = {
        "rk4_propagate": lambda: evolve(H, steps=steps).alpha,
        "path_integral_slices": lambda: K.path_integral_slices(L, Q, Rb, v, w)[0],
        # the compiled loops directly, so small n shows the crossover
        "trace_integrand": lambda: (K._trace_integrand_loop if K.USE_NUMBA else K._trace_integrand_vec)(
            hist.alpha, hist.beta, B, gamma),
        "dsym_integrand": lambda: (K._dsym_integrand_loop if K.USE_NUMBA else K._dsym_integrand_vec)(
            hist.alpha, hist.beta, B),
    }
    out = {}
    for name, fn in cases.items():
        t, r = best_of(fn, repeat)
        r = np.atleast_1d(np.asarray(r)).ravel()
        out[name] = {"seconds": t, "re": r.real.tolist(), "im": r.imag.tolist()}
    return out


def run_child(disable, args):
    env = dict(os.environ)
    if disable:
        env["CSPATH_DISABLE_NUMBA"] = "1"
    else:
        env.pop("CSPATH_DISABLE_NUMBA", None)
    cmd = [sys.executable, __file__, "--child", "--n", str(args.n), "--steps", str(args.steps),
           "--repeat", str(args.repeat)]
    res = subprocess.run(cmd, env=env, check=True, capture_output=True, text=True)
    return json.loads(res.stdout)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--steps", type=int, default=1024)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = p.parse_args()
    if args.child:
        json.dump(measure(args.n, args.steps, args.repeat), sys.stdout)
        return

    fast = run_child(False, args)
    slow = run_child(True, args)
    print(f"n={args.n} nodes={args.steps} repeat={args.repeat}")
    print(f"{'kernel':<22}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>9}{'max |diff|':>12}")
    for name in fast:
        a, b = fast[name], slow[name]
        ra = np.array(a["re"]) + 1j * np.array(a["im"])
        rb = np.array(b["re"]) + 1j * np.array(b["im"])
        diff = float(np.max(np.abs(ra - rb)))
        print(f"{name:<22}{1e3 * a['seconds']:>12.2f}{1e3 * b['seconds']:>12.2f}"
              f"{b['seconds'] / a['seconds']:>9.1f}{diff:>12.1e}")


if __name__ == "__main__":
    main()
