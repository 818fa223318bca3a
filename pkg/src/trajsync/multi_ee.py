"""Stacking n end-effector trajectories and metrics into one space.

All end effectors share a single trajectory parameter t; that shared t is
what synchronizes them. Distances are combined with a k-norm over the
per-effector SE(3) distances; the default is the max (k = infinity), which
makes the slowest or most disturbed limb gate everyone's progress.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .metric_core import ClampOutcome, GridEvalFn, hypersphere_clamp
from .se3 import Pose, Se3MetricParams, se3_distance, se3_interp


@dataclass(frozen=True)
class MultiPose:
    """Ordered poses of n named end effectors (the stacked state)."""

    names: tuple[str, ...]
    poses: tuple[Pose, ...]

    def __post_init__(self):
        names = tuple(self.names)
        poses = tuple(self.poses)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "poses", poses)
        if len(names) == 0:
            raise ValueError("MultiPose needs at least one end effector")
        if len(names) != len(poses):
            raise ValueError(
                f"{len(names)} names but {len(poses)} poses"
            )
        if len(set(names)) != len(names):
            raise ValueError(f"end-effector names must be unique: {names}")

    def __len__(self) -> int:
        return len(self.poses)

    def pose_of(self, name: str) -> Pose:
        return self.poses[self.names.index(name)]

    def replace_pose(self, name: str, pose: Pose) -> "MultiPose":
        i = self.names.index(name)
        poses = self.poses[:i] + (pose,) + self.poses[i + 1 :]
        return MultiPose(self.names, poses)

    def translations(self) -> np.ndarray:
        """(n, 3) array of translations."""
        return np.stack([p.v for p in self.poses])

    def quaternions(self) -> np.ndarray:
        """(n, 4) array of unit quaternions."""
        return np.stack([p.q for p in self.poses])


def multi_pose(pairs: Sequence[tuple[str, Pose]]) -> MultiPose:
    """Build a MultiPose from (name, pose) pairs."""
    return MultiPose(tuple(n for n, _ in pairs), tuple(p for _, p in pairs))


@dataclass(frozen=True)
class MultiMetricParams:
    """Per-effector ball parameters plus the stacking norm order.

    ``norm_order`` may be any k >= 1 or math.inf (the default, taking the
    max of the per-effector distances).
    """

    per_ee: tuple[Se3MetricParams, ...]
    norm_order: float = math.inf

    def __post_init__(self):
        per_ee = tuple(self.per_ee)
        object.__setattr__(self, "per_ee", per_ee)
        if len(per_ee) == 0:
            raise ValueError("per_ee must not be empty")
        if not self.norm_order >= 1:
            raise ValueError(f"norm_order must be >= 1, got {self.norm_order}")

    @staticmethod
    def uniform(
        n: int, p_e: float, r_e: float = math.inf, norm_order: float = math.inf
    ) -> "MultiMetricParams":
        return MultiMetricParams(tuple(Se3MetricParams(p_e, r_e) for _ in range(n)), norm_order)


def _check_names(a: MultiPose, b: MultiPose):
    if a.names != b.names:
        raise ValueError(f"end-effector mismatch: {a.names} vs {b.names}")


def stacked_interp(t: float, start: MultiPose, final: MultiPose) -> MultiPose:
    """Component-wise SE(3) interpolation at one shared parameter t."""
    _check_names(start, final)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"trajectory parameter must lie in [0, 1], got {t}")
    if t == 0.0:
        return start
    if t == 1.0:
        return final
    poses = tuple(
        se3_interp(t, s, f) for s, f in zip(start.poses, final.poses)
    )
    return MultiPose(start.names, poses)


def stacked_distance(x: MultiPose, y: MultiPose, params: MultiMetricParams) -> float:
    """k-norm of the per-effector SE(3) distances."""
    _check_names(x, y)
    if len(params.per_ee) != len(x):
        raise ValueError(
            f"{len(params.per_ee)} metric params for {len(x)} end effectors"
        )
    dists = [
        se3_distance(a, b, p) for a, b, p in zip(x.poses, y.poses, params.per_ee)
    ]
    if math.isinf(params.norm_order):
        return max(dists)
    return float(np.linalg.norm(dists, ord=params.norm_order))


def per_ee_distances(x: MultiPose, y: MultiPose, params: MultiMetricParams) -> tuple[float, ...]:
    _check_names(x, y)
    return tuple(
        se3_distance(a, b, p) for a, b, p in zip(x.poses, y.poses, params.per_ee)
    )


def stacked_grid_eval(params: MultiMetricParams) -> GridEvalFn:
    """Batch grid evaluator for LERP/SLERP segments under ``params``.

    Returns a callable (Y, S, F, ts) -> distances backed by the kernels in
    ``_kernels``; equal to evaluating ``stacked_distance`` against
    ``stacked_interp`` sample by sample, to within ~1e-12.
    """
    p_e = np.array([p.p_e for p in params.per_ee])
    r_e = np.array([p.r_e for p in params.per_ee])
    k = float(params.norm_order)

    def grid_eval(Y: MultiPose, S: MultiPose, F: MultiPose, ts: np.ndarray) -> np.ndarray:
        _check_names(S, F)
        _check_names(Y, S)
        if len(params.per_ee) != len(Y):
            raise ValueError(
                f"{len(params.per_ee)} metric params for {len(Y)} end effectors"
            )
        coeffs = _kernels.segment_coefficients(
            S.translations(),
            F.translations(),
            Y.translations(),
            S.quaternions(),
            F.quaternions(),
            Y.quaternions(),
            p_e,
            r_e,
        )
        return _kernels.grid_distances(np.ascontiguousarray(ts), coeffs, k)

    return grid_eval


def clamp_stacked(
    state: MultiPose,
    start: MultiPose,
    final: MultiPose,
    params: MultiMetricParams,
    n_samples: int,
) -> ClampOutcome:
    """Hypersphere clamp specialized to stacked LERP/SLERP segments."""
    return hypersphere_clamp(
        state,
        start,
        final,
        stacked_interp,
        lambda a, b: stacked_distance(a, b, params),
        n_samples,
        grid_eval=stacked_grid_eval(params),
    )
