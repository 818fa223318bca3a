"""Stateful per-step command generation over stacked SE(3) trajectories.

Two front ends share the clamp core: waypoint-path tracking (piecewise
LERP/SLERP segments, each re-parameterized to [0, 1]) and speed integration
(a fresh micro-segment from the last command every step). When no trajectory
sample lies within the unit ball, a recovery strategy takes over; the default
one retraces to the last valid command, then resumes the original segment.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .metric_core import ClampConfig, NoSolution, Solution, sample_count
from .multi_ee import (
    MultiMetricParams,
    MultiPose,
    clamp_stacked,
    stacked_distance,
    stacked_interp,
)
from .se3 import Pose


class Mode(str, enum.Enum):
    TRACKING = "tracking"
    RECOVERING = "recovering"
    WAITING = "waiting"


class RecoveryStrategy(enum.Enum):
    # Retrace to the last in-ball command, then continue the original segment.
    RETURN_TO_LAST_VALID = "return_to_last_valid"
    # Emit the nearest trajectory sample even though it is outside the ball.
    NEAREST_SAMPLE = "nearest_sample"
    # Abandon the segment start: re-target the segment end from where we are.
    RESTART_TO_F = "restart_to_f"


@dataclass(frozen=True)
class PathSpec:
    """Piecewise LERP/SLERP path through waypoints, optionally looping.

    Consecutive identical waypoints produce zero-length segments, which are
    skipped at construction.
    """

    waypoints: tuple[MultiPose, ...]
    loop: bool = False

    def __post_init__(self):
        waypoints = tuple(self.waypoints)
        object.__setattr__(self, "waypoints", waypoints)
        if len(waypoints) < 2:
            raise ValueError("a path needs at least 2 waypoints")
        names = waypoints[0].names
        for i, w in enumerate(waypoints):
            if w.names != names:
                raise ValueError(
                    f"waypoint {i} names {w.names} differ from {names}"
                )
        pairs = []
        for i in range(len(waypoints) - 1):
            if not _same_multipose(waypoints[i], waypoints[i + 1]):
                pairs.append((i, i + 1))
        if self.loop and not _same_multipose(waypoints[-1], waypoints[0]):
            pairs.append((len(waypoints) - 1, 0))
        if not pairs:
            raise ValueError("path has no extent: all waypoints coincide")
        object.__setattr__(self, "_segments", tuple(pairs))

    @property
    def names(self) -> tuple[str, ...]:
        return self.waypoints[0].names

    def segment_count(self) -> int:
        return len(self._segments)

    def segment(self, index: int) -> tuple[MultiPose, MultiPose]:
        """Endpoints of the segment at an absolute (ever-increasing) index.

        Looping paths wrap modulo the segment count; non-looping paths clamp
        to the final segment.
        """
        n = len(self._segments)
        i = index % n if self.loop else min(index, n - 1)
        a, b = self._segments[i]
        return self.waypoints[a], self.waypoints[b]

    def is_last_segment(self, index: int) -> bool:
        return not self.loop and index >= len(self._segments) - 1


def _same_multipose(a: MultiPose, b: MultiPose) -> bool:
    return all(
        np.array_equal(pa.v, pb.v) and np.array_equal(pa.q, pb.q)
        for pa, pb in zip(a.poses, b.poses)
    )


@dataclass(frozen=True)
class SpeedInput:
    """Translational speed command, mm/s (rotation rate is fixed at zero)."""

    linear_velocity: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.linear_velocity, dtype=np.float64)
        if v.shape != (3,):
            raise ValueError(f"speed must be a 3-vector, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("speed components must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "linear_velocity", v)


@dataclass(frozen=True)
class ControllerState:
    """Value-type controller state; step functions return updated copies.

    ``t_floor`` guards against within-segment backsliding when the clamp
    config enables monotonic t; it resets at segment changes and at recovery
    start (``resume_t_floor`` stashes the segment's floor while recovering).
    ``segment_t`` is the last reported parameter of the *tracking* segment;
    it holds still during recovery and waiting.
    """

    mode: Mode
    segment_index: int
    t_floor: float
    last_command: MultiPose
    last_valid_point: MultiPose
    recovery_path: Optional[tuple[MultiPose, MultiPose]] = None
    segment_override: Optional[tuple[MultiPose, MultiPose]] = None
    resume_t_floor: float = 0.0
    segment_t: float = 0.0
    # Segment index segment_t refers to; lags segment_index by one on the
    # step that completes a segment (the command still lies on the old one).
    command_segment: int = 0

    @staticmethod
    def initial(state: MultiPose) -> "ControllerState":
        return ControllerState(
            mode=Mode.TRACKING,
            segment_index=0,
            t_floor=0.0,
            last_command=state,
            last_valid_point=state,
        )


# Library users driving the controller directly get monotonic t by default;
# the raw clamp keeps it off so bare library calls stay stateless.
_DEFAULT_CFG = ClampConfig(enforce_monotonic_t=True)


def _active_segment(state: ControllerState, path: PathSpec) -> tuple[MultiPose, MultiPose]:
    if state.segment_override is not None:
        return state.segment_override
    return path.segment(state.segment_index)


def _floored(
    outcome: Solution,
    state: ControllerState,
    cfg: ClampConfig,
    start: MultiPose,
    final: MultiPose,
    sensed: MultiPose,
    metric: MultiMetricParams,
) -> tuple[float, MultiPose] | None:
    """Apply the monotonic-t floor to a clamp hit.

    Returns None when the floored sample falls outside the unit ball around
    the sensed state: refusing to backslide must never cost safety, so such a
    step is treated as a miss and handed to recovery instead.
    """
    t = outcome.t
    if cfg.enforce_monotonic_t and t < state.t_floor:
        t = state.t_floor
        point = stacked_interp(t, start, final)
        if stacked_distance(point, sensed, metric) > 1.0:
            return None
        return t, point
    return t, outcome.point


def step_tracking(
    state: ControllerState,
    sensed: MultiPose,
    path: PathSpec,
    metric: MultiMetricParams,
    cfg: ClampConfig | None = None,
    strategy: RecoveryStrategy = RecoveryStrategy.RETURN_TO_LAST_VALID,
) -> tuple[ControllerState, MultiPose]:
    """One waypoint-tracking step: clamp the current segment against the
    sensed state and emit the resulting command.

    Reaching t = 1 advances to the next segment (wrapping when the path
    loops). A clamp miss hands control to ``handle_no_solution``.
    """
    cfg = _DEFAULT_CFG if cfg is None else cfg
    if sensed.names != path.names:
        raise ValueError(f"state names {sensed.names} do not match path {path.names}")
    if state.mode is Mode.RECOVERING:
        return _step_recovery(state, sensed, path, metric, cfg)

    start, final = _active_segment(state, path)
    n = sample_count(start, final, lambda a, b: stacked_distance(a, b, metric), cfg)
    outcome = clamp_stacked(sensed, start, final, metric, n)
    if isinstance(outcome, NoSolution):
        return handle_no_solution(
            state, sensed, strategy, metric, cfg, outcome=outcome, path=path
        )

    floored = _floored(outcome, state, cfg, start, final, sensed, metric)
    if floored is None:
        blocked = NoSolution(
            nearest_point=stacked_interp(state.t_floor, start, final),
            nearest_t=state.t_floor,
            nearest_dist=stacked_distance(
                stacked_interp(state.t_floor, start, final), sensed, metric
            ),
        )
        return handle_no_solution(
            state, sensed, strategy, metric, cfg, outcome=blocked, path=path
        )
    t, command = floored
    new = replace(
        state,
        mode=Mode.TRACKING,
        t_floor=t,
        last_command=command,
        last_valid_point=command,
        segment_t=t,
        command_segment=state.segment_index,
    )
    if t == 1.0:
        done_override = state.segment_override is not None
        advance = done_override or not path.is_last_segment(state.segment_index)
        if advance:
            new = replace(
                new,
                segment_index=state.segment_index + 1,
                segment_override=None,
                t_floor=0.0,
            )
    return new, command


def step_speed(
    state: ControllerState,
    sensed: MultiPose,
    speed: SpeedInput,
    dt: float,
    metric: MultiMetricParams,
    cfg: ClampConfig | None = None,
) -> tuple[ControllerState, MultiPose]:
    """One speed-integration step.

    The target is the last command with its translation offset by speed*dt
    (rotation untouched); the clamp runs on that micro-segment. On a miss the
    controller holds the last command and waits: no recovery strategy here,
    the next step simply retries from the same command.
    """
    cfg = _DEFAULT_CFG if cfg is None else cfg
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if sensed.names != state.last_command.names:
        raise ValueError("state names do not match the controller's")
    start = state.last_command
    offset = speed.linear_velocity * dt
    final = MultiPose(
        start.names, tuple(Pose(p.v + offset, p.q) for p in start.poses)
    )
    n = sample_count(start, final, lambda a, b: stacked_distance(a, b, metric), cfg)
    outcome = clamp_stacked(sensed, start, final, metric, n)
    if isinstance(outcome, NoSolution):
        return replace(state, mode=Mode.WAITING), state.last_command

    command = outcome.point
    new = replace(
        state,
        mode=Mode.TRACKING,
        t_floor=0.0,
        last_command=command,
        last_valid_point=command,
        segment_t=outcome.t,
        command_segment=state.segment_index,
    )
    return new, command


def handle_no_solution(
    state: ControllerState,
    sensed: MultiPose,
    strategy: RecoveryStrategy,
    metric: MultiMetricParams,
    cfg: ClampConfig | None = None,
    *,
    outcome: NoSolution,
    path: PathSpec,
) -> tuple[ControllerState, MultiPose]:
    """Dispatch a clamp miss to the chosen recovery strategy.

    RETURN_TO_LAST_VALID starts a fresh trajectory from (a snapshot of) the
    sensed state back to the last valid command and clamps along it each step
    until reached, then resumes the original segment. NEAREST_SAMPLE emits
    the nearest trajectory sample as-is. RESTART_TO_F swaps the current
    segment for (sensed snapshot) -> F and stays in tracking.
    """
    cfg = _DEFAULT_CFG if cfg is None else cfg
    if strategy is RecoveryStrategy.RETURN_TO_LAST_VALID:
        entering = replace(
            state,
            mode=Mode.RECOVERING,
            recovery_path=(sensed, state.last_valid_point),
            resume_t_floor=state.t_floor,
            t_floor=0.0,
        )
        return _step_recovery(entering, sensed, path, metric, cfg)

    if strategy is RecoveryStrategy.NEAREST_SAMPLE:
        command = outcome.nearest_point
        new = replace(state, mode=Mode.TRACKING, last_command=command)
        return new, command

    if strategy is RecoveryStrategy.RESTART_TO_F:
        _, final = _active_segment(state, path)
        override = (sensed, final)
        n = sample_count(sensed, final, lambda a, b: stacked_distance(a, b, metric), cfg)
        hit = clamp_stacked(sensed, sensed, final, metric, n)
        # t=0 is the sensed state itself (distance 0), so this cannot miss.
        assert isinstance(hit, Solution)
        command = hit.point
        new = replace(
            state,
            mode=Mode.TRACKING,
            segment_override=override,
            t_floor=hit.t,
            last_command=command,
            last_valid_point=command,
            segment_t=hit.t,
            command_segment=state.segment_index,
        )
        if hit.t == 1.0:
            new = replace(
                new,
                segment_index=state.segment_index + 1,
                segment_override=None,
                t_floor=0.0,
            )
        return new, command

    raise ValueError(f"unknown recovery strategy: {strategy}")


def _step_recovery(
    state: ControllerState,
    sensed: MultiPose,
    path: PathSpec,
    metric: MultiMetricParams,
    cfg: ClampConfig,
) -> tuple[ControllerState, MultiPose]:
    rec_start, rec_final = state.recovery_path
    n = sample_count(rec_start, rec_final, lambda a, b: stacked_distance(a, b, metric), cfg)
    outcome = clamp_stacked(sensed, rec_start, rec_final, metric, n)
    floored = None
    if isinstance(outcome, Solution):
        floored = _floored(outcome, state, cfg, rec_start, rec_final, sensed, metric)
    if floored is None:
        # The state moved again while recovering: replan from where it is now.
        state = replace(state, recovery_path=(sensed, rec_final), t_floor=0.0)
        rec_start = sensed
        n = sample_count(rec_start, rec_final, lambda a, b: stacked_distance(a, b, metric), cfg)
        outcome = clamp_stacked(sensed, rec_start, rec_final, metric, n)
        assert isinstance(outcome, Solution)
        floored = (outcome.t, outcome.point)

    t, command = floored
    new = replace(
        state,
        t_floor=t,
        last_command=command,
        last_valid_point=command,
    )
    if t == 1.0:
        # Back at the last valid command, within the ball: resume the segment.
        new = replace(
            new,
            mode=Mode.TRACKING,
            recovery_path=None,
            t_floor=state.resume_t_floor,
            resume_t_floor=0.0,
        )
    return new, command
