import math
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from moseac.core.config import A_MAX, B_MAX, C_DRAG, D_MAX, D_MIN, INNER_DT, STEER_MAX, V_MAX, WHEELBASE

ActionTuple = Tuple[float, float, float, float]
ZERO_ACTION: ActionTuple = (0.0, 0.0, 0.0, 0.0)

# ===============================================================
# TRACK
# ===============================================================


class TrackSpec(BaseModel):
    """
    Ordered waypoints plus corridor width. A closed course repeats its first
    point as its last one; waypoint 0 is the start and counts as passed.
    """
    model_config = ConfigDict(frozen=True)

    waypoints: Tuple[Tuple[float, float], ...] = Field(..., min_length=2, description="(x, y) in meters, in driving order")
    corridor_half_width: float = Field(..., gt=0, description="Allowed lateral distance to the path polyline, meters")
    inner_dt: float = Field(default=INNER_DT, gt=0, description="Physics substep, seconds")
    start_pose: Optional[Tuple[float, float, float]] = Field(
        default=None, description="(x, y, heading). Defaults to waypoint 0 heading toward waypoint 1"
    )

    @model_validator(mode="after")
    def check_geometry(self) -> "TrackSpec":
        for index, (a, b) in enumerate(zip(self.waypoints[:-1], self.waypoints[1:])):
            if a == b:
                raise ValueError(f"waypoints {index} and {index + 1} coincide")
        if self.start_pose is None:
            (x0, y0), (x1, y1) = self.waypoints[0], self.waypoints[1]
            object.__setattr__(self, "start_pose", (x0, y0, math.atan2(y1 - y0, x1 - x0)))
        return self

    @property
    def n_targets(self) -> int:
        """Waypoints that can be passed for reward (all but the start)."""
        return len(self.waypoints) - 1

    def points(self) -> np.ndarray:
        return np.asarray(self.waypoints, dtype=np.float64)

    def mirrored(self) -> "TrackSpec":
        """Reflection across the x-axis."""
        x, y, heading = self.start_pose
        return TrackSpec(
            waypoints=tuple((px, -py) for px, py in self.waypoints),
            corridor_half_width=self.corridor_half_width,
            inner_dt=self.inner_dt,
            start_pose=(x, -y, -heading),
        )


# ===============================================================
# CAR AND ACTIONS
# ===============================================================


class ElasticAction(BaseModel):
    """Controls plus the duration the policy wants them held for."""
    model_config = ConfigDict(frozen=True)

    gas: float = Field(..., ge=-1.0, le=1.0)
    brake: float = Field(..., ge=-1.0, le=1.0)
    steer: float = Field(..., ge=-1.0, le=1.0)
    duration: float = Field(..., gt=0, description="Seconds; clamped to [D_min, D_max] by the simulator")

    def as_tuple(self) -> ActionTuple:
        return (self.gas, self.brake, self.steer, self.duration)


class CarState(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: float
    y: float
    heading: float = Field(..., description="Radians")
    speed: float = Field(..., ge=0.0, description="m/s")
    last_passed_index: int = Field(..., ge=0)
    step_count: int = Field(..., ge=0)
    progress: float = Field(default=0.0, description="Arc length of the projection on the path, meters")
    substeps: int = Field(default=0, ge=0, description="Physics substeps integrated this episode")
    history: Tuple[ActionTuple, ActionTuple] = Field(
        default=(ZERO_ACTION, ZERO_ACTION), description="Most recent action first; zeros after reset"
    )


class StepStatus(str, Enum):
    RUNNING = "running"
    SUCCESS = "success"
    OFF_TRACK = "off_track"
    TIMEOUT = "timeout"


class StepResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    observation: np.ndarray
    task_reward: float = Field(..., ge=0.0, description="Waypoints newly passed / 100")
    elapsed: float = Field(..., ge=0.0, description="Snapped duration actually simulated, seconds")
    substeps: int = Field(default=0, ge=0)
    status: StepStatus = StepStatus.RUNNING

    @property
    def done(self) -> bool:
        return self.status is not StepStatus.RUNNING


class DurationRange(BaseModel):
    model_config = ConfigDict(frozen=True)

    d_min: float = Field(default=D_MIN, gt=0)
    d_max: float = Field(default=D_MAX, gt=0)

    @model_validator(mode="after")
    def check_order(self) -> "DurationRange":
        if self.d_min >= self.d_max:
            raise ValueError(f"d_min ({self.d_min}) must be below d_max ({self.d_max})")
        return self

    def normalize(self, duration: float) -> float:
        return (duration - self.d_min) / (self.d_max - self.d_min)


class CarPhysics(BaseModel):
    """Kinematic car constants."""
    model_config = ConfigDict(frozen=True)

    a_max: float = Field(default=A_MAX, ge=0, description="Full-gas acceleration, m/s^2")
    b_max: float = Field(default=B_MAX, ge=0, description="Full-brake deceleration, m/s^2")
    c_drag: float = Field(default=C_DRAG, ge=0, description="Linear drag, 1/s")
    v_max: float = Field(default=V_MAX, gt=0, description="Speed cap, m/s")
    wheelbase: float = Field(default=WHEELBASE, gt=0, description="Meters")
    steer_max: float = Field(default=STEER_MAX, gt=0, description="Steering angle at |steer| = 1, radians")
