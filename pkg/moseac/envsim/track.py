import logging
import math
from pathlib import Path
from typing import List, Tuple

import numpy as np
from pydantic import ValidationError

from moseac.core.config import DEFAULT_TRACK_PATH, INNER_DT, TRACK_MAGIC
from moseac.core.errors import ConfigurationError
from moseac.schemas.track import TrackSpec

logger = logging.getLogger(__name__)


def make_track(waypoints, corridor_half_width: float, inner_dt: float = INNER_DT,
               start_pose=None) -> TrackSpec:
    try:
        return TrackSpec(waypoints=tuple(tuple(map(float, p)) for p in waypoints),
                         corridor_half_width=corridor_half_width,
                         inner_dt=inner_dt, start_pose=start_pose)
    except ValidationError as exc:
        raise ConfigurationError(f"Invalid track: {exc.errors()[0]['msg']}") from exc


def parse_track(text: str, source: str = "<string>") -> TrackSpec:
    """
    `track-v1 <corridor_half_width> <inner_dt>` followed by one `x y` pair per line.
    """
    lines = [line.strip() for line in text.splitlines()]
    lines = [line for line in lines if line and not line.startswith("#")]
    if not lines:
        raise ConfigurationError(f"{source}: empty track file")

    header = lines[0].split()
    if len(header) != 3 or header[0] != TRACK_MAGIC:
        raise ConfigurationError(f"{source}: header must be '{TRACK_MAGIC} <corridor_half_width> <inner_dt>'")
    try:
        half_width, inner_dt = float(header[1]), float(header[2])
    except ValueError:
        raise ConfigurationError(f"{source}: non-numeric header values")

    points: List[Tuple[float, float]] = []
    for number, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 2:
            raise ConfigurationError(f"{source}: line {number} must hold 'x y'")
        try:
            points.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise ConfigurationError(f"{source}: line {number} is not numeric")

    return make_track(points, half_width, inner_dt)


def load_track(path: Path = DEFAULT_TRACK_PATH) -> TrackSpec:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Track file not found: {path}")
    track = parse_track(path.read_text(encoding="utf-8"), source=str(path))
    logger.debug(f"Loaded track {path} with {len(track.waypoints)} waypoints")
    return track


def dump_track(track: TrackSpec) -> str:
    lines = [f"{TRACK_MAGIC} {track.corridor_half_width!r} {track.inner_dt!r}"]
    lines += [f"{x!r} {y!r}" for x, y in track.waypoints]
    return "\n".join(lines) + "\n"


def stadium_track(n_waypoints: int = 20, straight: float = 60.0, radius: float = 15.0,
                  corridor_half_width: float = 6.0, inner_dt: float = INNER_DT) -> TrackSpec:
    """
    Closed course: bottom straight driven in +x, a 180 degree left turn, the top
    straight back, and a second turn. Waypoints are evenly spaced by arc length,
    starting at the beginning of the bottom straight; the start point is repeated
    at the end to close the lap.
    """
    perimeter = 2.0 * straight + 2.0 * math.pi * radius
    half = straight / 2.0
    points = []
    for k in range(n_waypoints + 1):
        s = (k % n_waypoints) * perimeter / n_waypoints
        if s <= straight:
            points.append((-half + s, -radius))
        elif s <= straight + math.pi * radius:
            angle = -math.pi / 2.0 + (s - straight) / radius
            points.append((half + radius * math.cos(angle), radius * math.sin(angle)))
        elif s <= 2.0 * straight + math.pi * radius:
            points.append((half - (s - straight - math.pi * radius), radius))
        else:
            angle = math.pi / 2.0 + (s - 2.0 * straight - math.pi * radius) / radius
            points.append((-half + radius * math.cos(angle), radius * math.sin(angle)))
    return make_track(points, corridor_half_width, inner_dt)


class PathGeometry:
    """Precomputed polyline data: segment vectors, lengths and waypoint arc lengths."""

    def __init__(self, track: TrackSpec):
        points = track.points()
        self.points = points
        self.segments = np.diff(points, axis=0)
        self.lengths = np.hypot(self.segments[:, 0], self.segments[:, 1])
        self.arc = np.concatenate([[0.0], np.cumsum(self.lengths)])
        self.n_segments = len(self.lengths)

    def project(self, x: float, y: float, last_passed: int) -> Tuple[float, float, float]:
        """
        Nearest point on the segments around the current progress.
        Returns (arc length, signed lateral offset, distance); left of the
        driving direction is positive.
        """
        lo = max(0, last_passed - 1)
        hi = min(self.n_segments, last_passed + 3)
        best = None
        for j in range(lo, hi):
            ax, ay = self.points[j]
            dx, dy = self.segments[j]
            length = self.lengths[j]
            t = ((x - ax) * dx + (y - ay) * dy) / (length * length)
            t = min(1.0, max(0.0, t))
            cx, cy = ax + t * dx, ay + t * dy
            distance = math.hypot(x - cx, y - cy)
            if best is None or distance < best[2]:
                lateral = (dx * (y - ay) - dy * (x - ax)) / length
                best = (self.arc[j] + t * length, lateral, distance)
        return best
