"""Compare the compiled and pure-numpy backends on the grid-scan kernel.

Runs itself in a subprocess per backend (the backend is chosen once at
import via the TRAJSYNC_BACKEND environment variable), times full grid
evaluations at several sample counts and end-effector counts, and prints a
side-by-side table.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import json
import math
import os
import subprocess
import sys
import time

CASES = [
    # (n_samples, n_ee, rotation term in the metric)
    (10_000, 1, True),
    (100_000, 1, True),
    (1_000_000, 1, True),
    (100_000, 6, True),
    (1_000_000, 6, True),
    (100_000, 6, False),
    (1_000_000, 6, False),
]


def run_worker(backend: str, repeats: int) -> dict:
    import numpy as np

    from trajsync._kernels import BACKEND, grid_distances, segment_coefficients, warmup
    from trajsync.metric_core import grid_parameters

    assert BACKEND == backend, f"wanted {backend}, got {BACKEND}"
    warmup()
    rng = np.random.default_rng(42)
    results = {}
    for n_samples, n_ee, with_rotation in CASES:
        vs = rng.normal(0, 100, (n_ee, 3))
        vf = vs + rng.normal(0, 80, (n_ee, 3))
        vy = vs + rng.normal(0, 30, (n_ee, 3))
        qs = rng.normal(0, 1, (n_ee, 4))
        qs /= np.linalg.norm(qs, axis=1, keepdims=True)
        qf = rng.normal(0, 1, (n_ee, 4))
        qf /= np.linalg.norm(qf, axis=1, keepdims=True)
        qy = rng.normal(0, 1, (n_ee, 4))
        qy /= np.linalg.norm(qy, axis=1, keepdims=True)
        p_e = np.full(n_ee, 25.0)
        r_e = np.full(n_ee, math.radians(45.0) if with_rotation else math.inf)
        coeffs = segment_coefficients(vs, vf, vy, qs, qf, qy, p_e, r_e)
        ts = grid_parameters(n_samples)
        best = math.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            dists = grid_distances(ts, coeffs, math.inf)
            best = min(best, time.perf_counter() - t0)
        key = f"{n_samples}x{n_ee}{'r' if with_rotation else 't'}"
        results[key] = {
            "seconds": best,
            "checksum": float(dists.sum()),
        }
    return results


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--worker", choices=("numba", "numpy"))
    args = parser.parse_args()

    if args.worker:
        print(json.dumps(run_worker(args.worker, args.repeats)))
        return 0

    timings = {}
    for backend in ("numpy", "numba"):
        env = dict(os.environ, TRAJSYNC_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, __file__, "--worker", backend,
             "--repeats", str(args.repeats)],
            env=env,
            capture_output=True,
            text=True,
        )
        if proc.returncode != 0:
            print(f"{backend} worker failed:\n{proc.stderr}", file=sys.stderr)
            return 1
        timings[backend] = json.loads(proc.stdout.strip().splitlines()[-1])

    print(f"{'samples':>9} {'limbs':>5} {'metric':>11} {'numpy':>11} {'numba':>11} {'speedup':>8}")
    for n_samples, n_ee, with_rotation in CASES:
        key = f"{n_samples}x{n_ee}{'r' if with_rotation else 't'}"
        t_np = timings["numpy"][key]["seconds"]
        t_nb = timings["numba"][key]["seconds"]
        c_np = timings["numpy"][key]["checksum"]
        c_nb = timings["numba"][key]["checksum"]
        agree = math.isclose(c_np, c_nb, rel_tol=1e-9)
        note = "" if agree else "  CHECKSUM MISMATCH"
        metric = "rot+trans" if with_rotation else "trans-only"
        print(
            f"{n_samples:>9} {n_ee:>5} {metric:>11} {t_np * 1e3:>9.2f}ms "
            f"{t_nb * 1e3:>9.2f}ms {t_np / t_nb:>7.1f}x{note}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
