"""Benchmark the compiled kernels against the pure-numpy fallback.

The hot paths (geodesic + Jacobi integration, the frame ODE stepper, and
conjugate-point scans) run here twice: once in the current process (numba
kernels, unless NORMALGEO_NO_NUMBA is set) and once in a subprocess with
NORMALGEO_NO_NUMBA=1, which routes every catalog metric through the
vectorized numpy path and leaves the frame ODE stepper uncompiled.

Usage:
    python bench/benchmark.py [--quick] [--repeats N]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _workloads(quick):
    from normalgeo.expansion import integrate_frame_ode
    from normalgeo.geodesics import detect_conjugate, normal_chart, pullback_metric_normal
    from normalgeo.metrics import catalog_construct

    sphere = catalog_construct("sphere_polar", R=1.0, n=2)
    stereo = catalog_construct("constant_curvature_stereographic", K=-1.0, n=3)
    chart_s = normal_chart(sphere, np.array([np.pi / 2, 0.0]))
    chart_t = normal_chart(stereo, np.array([0.1, 0.0, 0.05]))
    n_pull = 4 if quick else 16
    ode_steps = 2000 if quick else 10000

    def pullback_sphere():
        for k in range(n_pull):
            r = 0.2 + 1.0 * (k + 1) / n_pull
            pullback_metric_normal(chart_s, np.array([0.0, r]))

    def pullback_stereo_3d():
        for k in range(max(2, n_pull // 2)):
            r = 0.1 + 0.5 * (k + 1) / n_pull
            pullback_metric_normal(chart_t, np.array([r, 0.2 * r, -0.1 * r]))

    def frame_ode():
        integrate_frame_ode(1.0, 3, 0.8, steps=ode_steps, with_b=True)

    def conjugate_scan():
        detect_conjugate(chart_s, np.array([0.0, 1.0]), 3.5, refine_tol=1e-5)

    return {
        "pullback sphere n=2": pullback_sphere,
        "pullback stereographic n=3": pullback_stereo_3d,
        f"frame ODE ({ode_steps} steps, n=3, rank-4)": frame_ode,
        "conjugate-point scan": conjugate_scan,
    }


def _time_all(quick, repeats):
    out = {}
    loads = _workloads(quick)
    for name, fn in loads.items():
        fn()  # warm up (numba compilation, caches)
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        out[name] = best
    return out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--_worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args(argv)

    if args._worker:
        print(json.dumps(_time_all(args.quick, args.repeats)))
        return 0

    from normalgeo import _env

    mode = "numba kernels" if _env.USE_NUMBA else "numpy fallback"
    print(f"timing current process ({mode}) ...")
    here = _time_all(args.quick, args.repeats)

    if not _env.USE_NUMBA:
        print("NORMALGEO_NO_NUMBA is set; nothing to compare against.")
        for name, t in here.items():
            print(f"  {name}: {t * 1e3:8.2f} ms")
        return 0

    print("timing numpy fallback (subprocess with NORMALGEO_NO_NUMBA=1) ...")
    cmd = [sys.executable, os.path.abspath(__file__), "--_worker",
           "--repeats", str(args.repeats)]
    if args.quick:
        cmd.append("--quick")
    env = dict(os.environ, NORMALGEO_NO_NUMBA="1")
    proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
    if proc.returncode != 0:
        sys.stderr.write(proc.stderr)
        return 1
    fallback = json.loads(proc.stdout.strip().splitlines()[-1])

    width = max(len(k) for k in here)
    print(f"\n{'workload'.ljust(width)}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for name in here:
        a, b = here[name], fallback[name]
        print(f"{name.ljust(width)}  {a * 1e3:8.2f}ms  {b * 1e3:8.2f}ms  {b / a:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
