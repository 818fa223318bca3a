"""Brute-force oracles and randomized sweeps for the clamp and its metrics.

The clamp oracle re-solves randomized instances on a fixed one-million-sample
grid using direct evaluation (translation by explicit interpolation, rotation
by sine-weight spherical interpolation dots), deliberately avoiding the
precomputed-coefficient route the library kernels use, so the two
implementations share no code path beyond quaternion sign alignment.

Suites are deterministic: every instance derives from a fixed seed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .metric_core import (
    ClampConfig,
    NoSolution,
    Solution,
    hypersphere_clamp,
    sample_count,
)
from .multi_ee import (
    MultiMetricParams,
    MultiPose,
    clamp_stacked,
    stacked_distance,
    stacked_interp,
)
from .se3 import (
    FLAT_ARC_ANGLE,
    Pose,
    Se3MetricParams,
    aligned_quat,
    quat_conj,
    quat_from_axis_angle,
    quat_mul,
    quat_normalize,
    rotations_equal,
    slerp,
)

ORACLE_SAMPLES = 1_000_000

# Scan chunks grow geometrically: feasible-t instances usually resolve close
# to t = 1, so early chunks are small; infeasible ones amortize into big ones.
_CHUNK_FIRST = 8_192
_CHUNK_MAX = 262_144


def _chunk_bounds(n_samples: int):
    lo = 0
    size = _CHUNK_FIRST
    while lo < n_samples:
        hi = min(lo + size, n_samples)
        yield lo, hi
        lo = hi
        size = min(size * 2, _CHUNK_MAX)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str
    wall_s: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name}: {status} ({self.detail}; {self.wall_s:.1f} s)"


def _descending_grid(n: int) -> np.ndarray:
    return 1.0 - np.arange(n, dtype=np.float64) / (n - 1)


def oracle_scan_1d(
    y: float, s: float, f: float, p: float, n_samples: int = ORACLE_SAMPLES
) -> tuple[bool, float, float]:
    """Dense descending-grid scan of |y - lerp(t)| / p.

    Returns (feasible, t, dist): the largest feasible t when one exists,
    otherwise the nearest sample (ties to larger t).
    """
    best_dist = math.inf
    best_t = 1.0
    for lo, hi in _chunk_bounds(n_samples):
        idx = np.arange(lo, hi, dtype=np.float64)
        ts = 1.0 - idx / (n_samples - 1)
        dists = np.abs(y - (s + ts * (f - s))) / p
        feasible = dists <= 1.0
        if feasible.any():
            j = int(np.argmax(feasible))
            return True, float(ts[j]), float(dists[j])
        j = int(np.argmin(dists))
        if dists[j] < best_dist:
            best_dist = float(dists[j])
            best_t = float(ts[j])
    return False, best_t, best_dist


def _limb_constants(start: Pose, final: Pose, target: Pose):
    """Per-limb scan constants for the direct-evaluation route."""
    q_f = aligned_quat(start.q, final.q)
    dot_sf = min(1.0, max(-1.0, float(np.dot(start.q, q_f))))
    omega = math.acos(dot_sf)
    c1 = float(np.dot(start.q, target.q))
    c2 = float(np.dot(q_f, target.q))
    return start.v, final.v, target.v, omega, dot_sf, c1, c2


def _chunk_dists_se3(
    ts: np.ndarray, consts, params: Se3MetricParams
) -> np.ndarray:
    vs, vf, vy, omega, dot_sf, c1, c2 = consts
    seg = vf - vs
    diff = (vy[None, :] - vs[None, :]) - ts[:, None] * seg[None, :]
    d2 = np.einsum("ij,ij->i", diff, diff) / (params.p_e * params.p_e)
    if math.isinf(params.r_e):
        return np.sqrt(d2)
    if omega >= FLAT_ARC_ANGLE:
        sin_om = math.sin(omega)
        w1 = np.sin((1.0 - ts) * omega) / sin_om
        w2 = np.sin(ts * omega) / sin_om
        rd = np.abs(w1 * c1 + w2 * c2)
    else:
        lerp_dot = (1.0 - ts) * c1 + ts * c2
        norm = np.sqrt(
            (1.0 - ts) ** 2 + ts**2 + 2.0 * ts * (1.0 - ts) * dot_sf
        )
        rd = np.abs(lerp_dot) / norm
    angle = 2.0 * np.arccos(np.minimum(1.0, rd))
    return np.sqrt(d2 + (angle / params.r_e) ** 2)


def oracle_scan_stacked(
    target: MultiPose,
    start: MultiPose,
    final: MultiPose,
    params: MultiMetricParams,
    n_samples: int = ORACLE_SAMPLES,
) -> tuple[bool, float, float]:
    """Dense descending-grid scan of the stacked distance.

    Same return convention as oracle_scan_1d.
    """
    consts = [
        _limb_constants(s, f, y)
        for s, f, y in zip(start.poses, final.poses, target.poses)
    ]
    k = params.norm_order
    best_dist = math.inf
    best_t = 1.0
    for lo, hi in _chunk_bounds(n_samples):
        idx = np.arange(lo, hi, dtype=np.float64)
        ts = 1.0 - idx / (n_samples - 1)
        per_ee = np.stack(
            [
                _chunk_dists_se3(ts, c, p)
                for c, p in zip(consts, params.per_ee)
            ]
        )
        if math.isinf(k):
            dists = per_ee.max(axis=0)
        else:
            dists = (per_ee**k).sum(axis=0) ** (1.0 / k)
        feasible = dists <= 1.0
        if feasible.any():
            j = int(np.argmax(feasible))
            return True, float(ts[j]), float(dists[j])
        j = int(np.argmin(dists))
        if dists[j] < best_dist:
            best_dist = float(dists[j])
            best_t = float(ts[j])
    return False, best_t, best_dist


def _random_pose(rng: np.random.Generator, scale: float = 100.0) -> Pose:
    v = rng.normal(0.0, scale, 3)
    q = quat_normalize(rng.normal(0.0, 1.0, 4))
    return Pose(v, q)


def _random_metric(rng: np.random.Generator, n: int) -> MultiMetricParams:
    per_ee = []
    for _ in range(n):
        p_e = float(rng.uniform(5.0, 50.0))
        if rng.uniform() < 0.25:
            r_e = math.inf
        else:
            r_e = float(rng.uniform(math.radians(10.0), math.radians(90.0)))
        per_ee.append(Se3MetricParams(p_e=p_e, r_e=r_e))
    norm_order = math.inf if rng.uniform() < 0.7 else 2.0
    return MultiMetricParams(tuple(per_ee), norm_order=norm_order)


def _perturbed_target(
    rng: np.random.Generator,
    start: MultiPose,
    final: MultiPose,
    params: MultiMetricParams,
    far: bool,
) -> MultiPose:
    u = float(rng.uniform(0.0, 1.0))
    on_path = stacked_interp(u, start, final)
    poses = []
    for pose, p in zip(on_path.poses, params.per_ee):
        radial = rng.uniform(1.4, 3.0) if far else rng.uniform(0.0, 0.8)
        direction = rng.normal(0.0, 1.0, 3)
        direction /= np.linalg.norm(direction)
        v = pose.v + direction * radial * p.p_e
        if math.isinf(p.r_e):
            q = quat_normalize(rng.normal(0.0, 1.0, 4))
        else:
            axis = rng.normal(0.0, 1.0, 3)
            axis /= np.linalg.norm(axis)
            rot_frac = rng.uniform(0.0, 0.5) if not far else rng.uniform(0.0, 0.3)
            dq = quat_from_axis_angle(axis, rot_frac * p.r_e)
            q = quat_mul(dq, pose.q)
        poses.append(Pose(v, q))
    return MultiPose(start.names, tuple(poses))


def run_clamp_oracle_suite(
    n_instances: int = 1000, seed: int = 20260821, oracle_samples: int = ORACLE_SAMPLES
) -> SuiteResult:
    """Randomized clamp instances vs the dense oracle.

    For every instance the clamp's t must land within one of its own grid
    steps, 1/(I-1), of the oracle's t, and feasible/no-feasible verdicts
    must agree.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    # Weighted toward the cheap strata; the oracle's dense scan costs grow
    # with the end-effector count. Every stratum keeps a deterministic share
    # of no-feasible-sample instances (full scans) via the modulus below.
    n_1d = int(n_instances * 0.62)
    remaining = n_instances - n_1d
    se3_counts = {1: remaining * 10 // 19, 2: remaining * 6 // 19}
    se3_counts[6] = remaining - se3_counts[1] - se3_counts[2]
    far_modulus = {1: 5, 2: 6, 6: 8}

    checked = 0
    max_dt = 0.0
    failures: list[str] = []

    def lerp1(t, s, f):
        return s + t * (f - s)

    for i in range(n_1d):
        p = float(rng.uniform(1.0, 20.0))
        s = float(rng.normal(0.0, 50.0))
        length = float(rng.uniform(0.3, 8.0)) * p
        f = s + length * (1.0 if rng.uniform() < 0.5 else -1.0)
        far = rng.uniform() < 0.2
        u = float(rng.uniform(0.0, 1.0))
        offset = (rng.uniform(1.4, 3.0) if far else rng.uniform(0.0, 0.8)) * p
        y = lerp1(u, s, f) + offset * (1.0 if rng.uniform() < 0.5 else -1.0)
        cfg = ClampConfig()
        metric = lambda a, b: abs(a - b) / p
        n = sample_count(s, f, metric, cfg)
        got = hypersphere_clamp(y, s, f, lerp1, metric, n)
        want_feasible, want_t, _ = oracle_scan_1d(y, s, f, p, oracle_samples)
        checked += 1
        if isinstance(got, Solution) != want_feasible:
            failures.append(
                f"1d[{i}]: verdict mismatch (clamp "
                f"{'Solution' if isinstance(got, Solution) else 'NoSolution'}, "
                f"oracle {'feasible' if want_feasible else 'infeasible'})"
            )
            continue
        if isinstance(got, Solution):
            dt = abs(got.t - want_t)
            max_dt = max(max_dt, dt * (n - 1))
            if dt > 1.0 / (n - 1) + 1e-12:
                failures.append(f"1d[{i}]: |dt|={dt:.3e} > 1/(I-1)={1/(n-1):.3e}")

    for n_ee, count in se3_counts.items():
        for i in range(count):
            params = _random_metric(rng, n_ee)
            names = tuple(f"ee{j}" for j in range(n_ee))
            start = MultiPose(names, tuple(_random_pose(rng) for _ in range(n_ee)))
            # Keep segments a few ball-radii long so sample counts stay modest.
            finals = []
            for pose, p in zip(start.poses, params.per_ee):
                direction = rng.normal(0.0, 1.0, 3)
                direction /= np.linalg.norm(direction)
                v = pose.v + direction * float(rng.uniform(0.5, 6.0)) * p.p_e
                axis = rng.normal(0.0, 1.0, 3)
                axis /= np.linalg.norm(axis)
                angle = float(rng.uniform(0.0, math.pi / 2))
                q = quat_mul(quat_from_axis_angle(axis, angle), pose.q)
                finals.append(Pose(v, q))
            final = MultiPose(names, tuple(finals))
            far = i % far_modulus[n_ee] == far_modulus[n_ee] - 1
            target = _perturbed_target(rng, start, final, params, far)
            cfg = ClampConfig()
            n = sample_count(
                start, final, lambda a, b: stacked_distance(a, b, params), cfg
            )
            got = clamp_stacked(target, start, final, params, n)
            want_feasible, want_t, _ = oracle_scan_stacked(
                target, start, final, params, oracle_samples
            )
            checked += 1
            label = f"se3x{n_ee}[{i}]"
            if isinstance(got, Solution) != want_feasible:
                failures.append(
                    f"{label}: verdict mismatch (clamp "
                    f"{'Solution' if isinstance(got, Solution) else 'NoSolution'}, "
                    f"oracle {'feasible' if want_feasible else 'infeasible'})"
                )
                continue
            if isinstance(got, Solution):
                dt = abs(got.t - want_t)
                max_dt = max(max_dt, dt * (n - 1))
                if dt > 1.0 / (n - 1) + 1e-12:
                    failures.append(
                        f"{label}: |dt|={dt:.3e} > 1/(I-1)={1/(n-1):.3e}"
                    )

    wall = time.perf_counter() - t0
    if failures:
        detail = f"{len(failures)} mismatches of {checked}: " + "; ".join(failures[:5])
        return SuiteResult("clamp-oracle", False, detail, wall)
    detail = (
        f"{checked}/{checked} instances, max |dt| = {max_dt:.3f} grid steps, "
        "NoSolution verdicts agree"
    )
    return SuiteResult("clamp-oracle", True, detail, wall)


def run_metric_axiom_suite(
    n_triples: int = 10_000, seed: int = 7_311_036, tol: float = 1e-9
) -> SuiteResult:
    """Nonnegativity, identity, symmetry, triangle inequality.

    Swept for the weighted-Euclidean vector metric, the single-pose metric,
    and the stacked metric (finite rotation weights, so they are true
    metrics rather than translation-only pseudometrics).
    """
    from .metric_core import weighted_euclidean
    from .se3 import se3_distance

    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    violations = 0
    worst = 0.0

    def check(dab, dba, daa, dac, dbc, label):
        nonlocal violations, worst
        if dab < 0 or daa > tol or abs(dab - dba) > tol:
            violations += 1
            return
        excess = dac - (dab + dbc)
        worst = max(worst, excess)
        if excess > tol:
            violations += 1

    deltas = rng.uniform(0.5, 30.0, size=(n_triples, 4))
    xs = rng.normal(0.0, 40.0, size=(n_triples, 3, 4))
    for i in range(n_triples):
        delta = deltas[i]
        a, b, c = xs[i]
        dab = weighted_euclidean(a, b, delta)
        check(
            dab,
            weighted_euclidean(b, a, delta),
            weighted_euclidean(a, a, delta),
            weighted_euclidean(a, c, delta),
            weighted_euclidean(b, c, delta),
            f"vec[{i}]",
        )

    n_pose = n_triples
    for i in range(n_pose):
        params = Se3MetricParams(
            p_e=float(rng.uniform(5.0, 50.0)),
            r_e=float(rng.uniform(math.radians(10.0), math.radians(170.0))),
        )
        a, b, c = (_random_pose(rng) for _ in range(3))
        check(
            se3_distance(a, b, params),
            se3_distance(b, a, params),
            se3_distance(a, a, params),
            se3_distance(a, c, params),
            se3_distance(b, c, params),
            f"pose[{i}]",
        )

    n_stacked = n_triples
    names = ("ee0", "ee1", "ee2")
    for i in range(n_stacked):
        per_ee = tuple(
            Se3MetricParams(
                p_e=float(rng.uniform(5.0, 50.0)),
                r_e=float(rng.uniform(math.radians(10.0), math.radians(170.0))),
            )
            for _ in range(3)
        )
        params = MultiMetricParams(per_ee, norm_order=math.inf if i % 2 else 2.0)
        a, b, c = (
            MultiPose(names, tuple(_random_pose(rng) for _ in range(3)))
            for _ in range(3)
        )
        check(
            stacked_distance(a, b, params),
            stacked_distance(b, a, params),
            stacked_distance(a, a, params),
            stacked_distance(a, c, params),
            stacked_distance(b, c, params),
            f"stacked[{i}]",
        )

    wall = time.perf_counter() - t0
    total = n_triples + n_pose + n_stacked
    passed = violations == 0
    detail = f"{violations} violations over {total} triples, worst triangle excess {worst:.2e}"
    return SuiteResult("metric-axioms", passed, detail, wall)


def run_slerp_suite(
    n_cases: int = 2000, seed: int = 998_241, tol: float = 1e-8
) -> SuiteResult:
    """Spherical interpolation vs an axis-angle oracle.

    The oracle composes the start rotation with a fraction of the relative
    rotation recovered through atan2 (a different route than the acos-based
    sine weights). Also checks endpoint exactness, sign invariance, and
    constant angular velocity.
    """
    from .se3 import relative_rotation_angle

    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures = 0
    for i in range(n_cases):
        q_a = quat_normalize(rng.normal(0.0, 1.0, 4))
        q_b = quat_normalize(rng.normal(0.0, 1.0, 4))
        t = float(rng.uniform(0.0, 1.0))

        q_b_aligned = aligned_quat(q_a, q_b)
        rel = quat_mul(quat_conj(q_a), q_b_aligned)
        xyz = rel[1:]
        sin_half = float(np.linalg.norm(xyz))
        angle = 2.0 * math.atan2(sin_half, float(rel[0]))
        if sin_half > 1e-12:
            axis = xyz / sin_half
            expected = quat_mul(q_a, quat_from_axis_angle(axis, t * angle))
        else:
            expected = q_a
        got = slerp(q_a, q_b, t)
        dev = float(np.abs(aligned_quat(expected, got) - expected).max())
        worst = max(worst, dev)
        if dev > tol:
            failures += 1

        if not np.array_equal(slerp(q_a, q_b, 0.0), q_a):
            failures += 1
        if not rotations_equal(slerp(q_a, q_b, 1.0), q_b, tol=1e-12):
            failures += 1
        if not rotations_equal(slerp(q_a, -q_b, t), got, tol=tol):
            failures += 1

        t2 = float(rng.uniform(0.0, 1.0))
        got2 = slerp(q_a, q_b, t2)
        expected_angle = abs(t2 - t) * angle
        actual_angle = relative_rotation_angle(got, got2)
        if abs(actual_angle - expected_angle) > tol:
            failures += 1
        worst = max(worst, abs(actual_angle - expected_angle))

    wall = time.perf_counter() - t0
    passed = failures == 0
    detail = f"{n_cases} cases, {failures} failures, max deviation {worst:.2e}"
    return SuiteResult("slerp", passed, detail, wall)


ALL_SUITES = {
    "clamp-oracle": run_clamp_oracle_suite,
    "metric-axioms": run_metric_axiom_suite,
    "slerp": run_slerp_suite,
}
