"""Hypersphere clamping over an arbitrary metric space and trajectory function.

The clamp picks the farthest-along point of a trajectory that stays within
unit distance of the current state. Metrics are pre-scaled so the allowed
deviation is exactly the unit ball; there is no separate radius argument.

Works with any point type: a trajectory function ``traj(t, S, F) -> point``
and a metric ``d(a, b) -> float`` define the space. Callers with a
vectorizable space can pass ``grid_eval`` to replace the per-sample Python
loop with a batch evaluation of the whole grid (see ``multi_ee``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, Union

import numpy as np

Point = Any
TrajectoryFn = Callable[[float, Point, Point], Point]
MetricFn = Callable[[Point, Point], float]
# (Y, S, F, ts) -> distances from Y to traj(ts[i], S, F); must match the
# metric to ~1e-12 so either path picks the same grid point.
GridEvalFn = Callable[[Point, Point, Point, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ClampConfig:
    """Sampling configuration for the clamp grid.

    ``step_distance`` is the spacing between consecutive samples measured by
    the metric (0.01 gives about 100 samples per unit-ball radius).
    ``enforce_monotonic_t`` is consumed by the controller layer, not by the
    raw clamp.
    """

    step_distance: float = 0.01
    min_samples: int = 2
    max_samples: int = 1_000_000
    enforce_monotonic_t: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.step_distance) and self.step_distance > 0):
            raise ValueError(f"step_distance must be > 0, got {self.step_distance}")
        if self.min_samples < 2:
            raise ValueError(f"min_samples must be >= 2, got {self.min_samples}")
        if self.max_samples < self.min_samples:
            raise ValueError("max_samples must be >= min_samples")


@dataclass(frozen=True)
class Solution:
    """Clamp hit: the farthest grid point within the unit ball."""

    point: Point
    t: float
    dist: float


@dataclass(frozen=True)
class NoSolution:
    """No grid point lies within the unit ball; carries the nearest sample
    found so recovery strategies can use it."""

    nearest_point: Point
    nearest_t: float
    nearest_dist: float


ClampOutcome = Union[Solution, NoSolution]


def grid_parameters(n_samples: int) -> np.ndarray:
    """The descending sample grid t_i = 1 - i/(I-1), endpoints included."""
    if n_samples < 2:
        raise ValueError(f"sample count must be >= 2, got {n_samples}")
    return 1.0 - np.arange(n_samples, dtype=np.float64) / (n_samples - 1)


def sample_count(start: Point, final: Point, d: MetricFn, cfg: ClampConfig) -> int:
    """Number of grid samples for the segment: ceil(d(S,F) / step_distance),
    clamped to [min_samples, max_samples]."""
    span = d(start, final)
    raw = math.ceil(span / cfg.step_distance)
    return int(min(max(raw, cfg.min_samples), cfg.max_samples))


def weighted_euclidean(x1, x2, delta_e) -> float:
    """2-norm of the component-wise quotient (x1 - x2) / delta_e.

    Each component of ``delta_e`` is the allowed deviation along that axis,
    stretching the unit ball into an axis-aligned ellipsoid.
    """
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    delta_e = np.asarray(delta_e, dtype=np.float64)
    if x1.shape != x2.shape or x1.shape != delta_e.shape:
        raise ValueError(
            f"shape mismatch: {x1.shape} vs {x2.shape} vs {delta_e.shape}"
        )
    if not (delta_e > 0).all():
        raise ValueError("every component of delta_e must be > 0")
    return float(np.linalg.norm((x1 - x2) / delta_e))


def hypersphere_clamp(
    state: Point,
    start: Point,
    final: Point,
    traj: TrajectoryFn,
    d: MetricFn,
    n_samples: int,
    grid_eval: Optional[GridEvalFn] = None,
) -> ClampOutcome:
    """Clamp the trajectory onto the unit ball centered at ``state``.

    Scans the grid t = 1 ... 0 (descending, both endpoints included) and
    returns a Solution at the first sample within distance 1 of ``state``.
    If no sample qualifies, returns NoSolution carrying the sample of
    minimal distance (ties resolved toward larger t).

    With ``grid_eval`` the distances for the whole grid are computed in one
    batch call; the outcome is identical to the sequential scan.
    """
    if n_samples < 2:
        raise ValueError(f"sample count must be >= 2, got {n_samples}")

    if grid_eval is not None:
        ts = grid_parameters(n_samples)
        dists = np.asarray(grid_eval(state, start, final, ts), dtype=np.float64)
        if dists.shape != ts.shape:
            raise ValueError("grid_eval returned wrong number of distances")
        feasible = dists <= 1.0
        if feasible.any():
            i = int(np.argmax(feasible))
            t = float(ts[i])
            return Solution(traj(t, start, final), t, float(dists[i]))
        i = int(np.argmin(dists))  # first minimum = largest t
        t = float(ts[i])
        return NoSolution(traj(t, start, final), t, float(dists[i]))

    denom = n_samples - 1
    best_dist = math.inf
    best_t = 1.0
    best_point = None
    for i in range(n_samples):
        t = 1.0 - i / denom
        point = traj(t, start, final)
        dist = d(point, state)
        if dist <= 1.0:
            return Solution(point, t, dist)
        if dist < best_dist:
            best_dist = dist
            best_t = t
            best_point = point
    return NoSolution(best_point, best_t, best_dist)
