"""
Deterministic 2D waypoint-racing simulator with elastic control periods.

The policy chooses controls and how long to hold them; the simulator snaps
that duration to the physics grid, integrates the kinematic car with
explicit Euler, and pays 1/100 per waypoint passed.
"""

import logging
import math
from typing import Optional, Protocol, Tuple

import numpy as np

from moseac.core.config import K_LENGTH, LOOKAHEAD_WAYPOINTS, WAYPOINT_FEATURE_SCALE
from moseac.core.errors import ContractViolation
from moseac.envsim.track import PathGeometry
from moseac.schemas.track import (
    ZERO_ACTION, CarPhysics, CarState, DurationRange, ElasticAction,
    StepResult, StepStatus, TrackSpec,
)

logger = logging.getLogger(__name__)

# Slack for durations produced by squashing, which can land one ulp outside the range.
_DURATION_SLACK = 1e-12


class VariableStepEnv(Protocol):
    """What the trainer and evaluator need from an environment."""

    supports_state_injection: bool

    def reset(self, seed: int) -> StepResult: ...

    def step(self, action: ElasticAction) -> StepResult: ...

    def get_state(self) -> CarState: ...

    def set_state(self, state: CarState) -> StepResult: ...


class ElasticRaceEnv:
    supports_state_injection = True

    def __init__(self, track: TrackSpec, physics: Optional[CarPhysics] = None,
                 durations: Optional[DurationRange] = None, k_length: int = K_LENGTH,
                 start_jitter: float = 0.0):
        if k_length < 1:
            raise ContractViolation("k_length must be at least 1")
        self.track = track
        self.physics = physics or CarPhysics()
        self.durations = durations or DurationRange()
        self.k_length = k_length
        self.start_jitter = start_jitter
        self.geometry = PathGeometry(track)
        self._state: Optional[CarState] = None
        self._status = StepStatus.RUNNING

    def clone(self) -> "ElasticRaceEnv":
        return ElasticRaceEnv(self.track, self.physics, self.durations, self.k_length, self.start_jitter)

    # ===============================================================
    # EPISODE CONTROL
    # ===============================================================

    def reset(self, seed: int) -> StepResult:
        x, y, heading = self.track.start_pose
        if self.start_jitter > 0.0:
            offset = np.random.default_rng(seed).uniform(-self.start_jitter, self.start_jitter)
            x -= offset * math.sin(heading)
            y += offset * math.cos(heading)
        self._state = CarState(x=x, y=y, heading=heading, speed=0.0, last_passed_index=0,
                               step_count=0, progress=0.0, substeps=0,
                               history=(ZERO_ACTION, ZERO_ACTION))
        self._status = StepStatus.RUNNING
        return StepResult(observation=self.observe(self._state), task_reward=0.0, elapsed=0.0)

    def get_state(self) -> CarState:
        if self._state is None:
            raise ContractViolation("environment has not been reset")
        return self._state

    def set_state(self, state: CarState) -> StepResult:
        """State injection; the episode continues from `state` as if it had been reached."""
        self._state = state
        self._status = StepStatus.RUNNING
        return StepResult(observation=self.observe(state), task_reward=0.0, elapsed=0.0)

    def snap_duration(self, duration: float) -> Tuple[int, float]:
        """Clamp to [d_min, d_max] and round to the physics grid; returns (substeps, seconds)."""
        d_min, d_max = self.durations.d_min, self.durations.d_max
        if duration < d_min or duration > d_max:
            if duration < d_min - _DURATION_SLACK or duration > d_max + _DURATION_SLACK:
                logger.warning(f"⚠️ Duration {duration:.6f}s outside [{d_min:.6f}, {d_max:.6f}], clamping")
            duration = min(max(duration, d_min), d_max)
        substeps = max(1, int(round(duration / self.track.inner_dt)))
        return substeps, substeps * self.track.inner_dt

    def step(self, action: ElasticAction) -> StepResult:
        if self._state is None:
            raise ContractViolation("step before reset")
        if self._status is not StepStatus.RUNNING:
            raise ContractViolation(f"step after episode end ({self._status.value})")

        substeps, elapsed = self.snap_duration(action.duration)
        s = self._state
        x, y, heading, speed = s.x, s.y, s.heading, s.speed
        last, progress = s.last_passed_index, s.progress
        status = StepStatus.RUNNING
        passed = 0

        p = self.physics
        dt = self.track.inner_dt
        throttle = max(action.gas, 0.0)
        braking = max(action.brake, 0.0)
        turn = math.tan(action.steer * p.steer_max) / p.wheelbase
        final_index = len(self.track.waypoints) - 1

        for _ in range(substeps):
            accel = p.a_max * throttle - p.b_max * braking - p.c_drag * speed
            x, y, heading, speed = (
                x + speed * math.cos(heading) * dt,
                y + speed * math.sin(heading) * dt,
                heading + speed * turn * dt,
                min(max(speed + accel * dt, 0.0), p.v_max),
            )
            if status is not StepStatus.RUNNING:
                continue

            arc, _, distance = self.geometry.project(x, y, last)
            if distance > self.track.corridor_half_width:
                status = StepStatus.OFF_TRACK
                continue
            progress = max(progress, arc)
            while last < final_index and self.geometry.arc[last + 1] <= arc:
                last += 1
                passed += 1
            if last == final_index:
                status = StepStatus.SUCCESS

        step_count = s.step_count + 1
        if status is StepStatus.RUNNING and step_count >= self.k_length:
            status = StepStatus.TIMEOUT

        features = (action.gas, action.brake, action.steer, self.durations.normalize(elapsed))
        self._state = CarState(x=x, y=y, heading=heading, speed=speed, last_passed_index=last,
                               step_count=step_count, progress=progress,
                               substeps=s.substeps + substeps, history=(features, s.history[0]))
        self._status = status
        return StepResult(observation=self.observe(self._state), task_reward=passed / 100.0,
                          elapsed=elapsed, substeps=substeps, status=status)

    # ===============================================================
    # OBSERVATION
    # ===============================================================

    def observe(self, state: CarState) -> np.ndarray:
        """
        23 features, each clamped to [-1, 1]:
        speed (1), heading error sin/cos (2), next 5 waypoints in the car frame (10),
        lateral offset (1), step fraction (1), previous action (4), action before that (4).
        """
        points = self.geometry.points
        final_index = len(points) - 1
        cos_h, sin_h = math.cos(state.heading), math.sin(state.heading)

        tx, ty = points[min(state.last_passed_index + 1, final_index)]
        error = math.atan2(ty - state.y, tx - state.x) - state.heading
        features = [state.speed / self.physics.v_max, math.sin(error), math.cos(error)]

        for k in range(1, LOOKAHEAD_WAYPOINTS + 1):
            wx, wy = points[min(state.last_passed_index + k, final_index)]
            dx, dy = wx - state.x, wy - state.y
            features.append((cos_h * dx + sin_h * dy) / WAYPOINT_FEATURE_SCALE)
            features.append((-sin_h * dx + cos_h * dy) / WAYPOINT_FEATURE_SCALE)

        _, lateral, _ = self.geometry.project(state.x, state.y, state.last_passed_index)
        features.append(lateral / self.track.corridor_half_width)
        features.append(state.step_count / self.k_length)
        for action in state.history:
            features.extend(action)

        return np.clip(np.asarray(features, dtype=np.float64), -1.0, 1.0)

