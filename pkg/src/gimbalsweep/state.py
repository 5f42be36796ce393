from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def wrap_angle(a: float) -> float:
    """Map an angle to (-pi, pi]."""
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


@dataclass(frozen=True)
class UavState:
    """Vehicle pose: ground position (x, y), altitude z (m) and heading psi (rad)."""

    x: float
    y: float
    z: float
    psi: float = 0.0

    def __post_init__(self):
        if not self.z > 0:
            raise ValueError(f"altitude must be positive, got {self.z}")
        object.__setattr__(self, "psi", wrap_angle(float(self.psi)))

    @property
    def xy(self):
        return (self.x, self.y)


def bearing(x0, y0, x1, y1) -> float:
    return math.atan2(y1 - y0, x1 - x0)


@dataclass(frozen=True)
class Trajectory:
    """Ordered waypoints; ``cost`` is the polyline length in meters."""

    waypoints: tuple
    cost: float = 0.0

    def __post_init__(self):
        wps = tuple(self.waypoints)
        if not wps:
            raise ValueError("trajectory needs at least one waypoint")
        object.__setattr__(self, "waypoints", wps)
        object.__setattr__(self, "cost", polyline_length([(w.x, w.y) for w in wps]))

    @classmethod
    def from_points(cls, points, z: float, psi0: float = 0.0) -> Trajectory:
        """Build from (x, y) points; each waypoint takes the heading of its outgoing leg."""
        pts = [(float(x), float(y)) for x, y in points]
        heads = []
        last = psi0
        for i in range(len(pts)):
            j = i + 1 if i + 1 < len(pts) else i
            k = i if i + 1 < len(pts) else i - 1
            if k >= 0 and pts[j] != pts[k]:
                last = bearing(*pts[k], *pts[j])
            heads.append(last)
        return cls(tuple(UavState(x, y, z, h) for (x, y), h in zip(pts, heads)))

    def __len__(self):
        return len(self.waypoints)

    def __getitem__(self, i) -> UavState:
        return self.waypoints[i]

    @property
    def xy(self):
        return np.array([(w.x, w.y) for w in self.waypoints], dtype=float)


def polyline_length(points) -> float:
    total = 0.0
    for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
        total += math.hypot(x1 - x0, y1 - y0)
    return total


def cumulative_lengths(traj: Trajectory) -> np.ndarray:
    xy = traj.xy
    seg = np.hypot(*np.diff(xy, axis=0).T) if len(xy) > 1 else np.zeros(0)
    return np.concatenate([[0.0], np.cumsum(seg)])


def pose_at(traj: Trajectory, s: float, cum: np.ndarray | None = None) -> tuple[UavState, int]:
    """Pose at arc length ``s`` (clamped to the plan) and the index of the next waypoint."""
    if cum is None:
        cum = cumulative_lengths(traj)
    n = len(traj)
    if n == 1 or s <= 0.0:
        return traj[0], min(1, n - 1)
    if s >= cum[-1]:
        return traj[n - 1], n - 1
    i = int(np.searchsorted(cum, s, side="right"))  # cum[i-1] <= s < cum[i]
    a, b = traj[i - 1], traj[i]
    seg = cum[i] - cum[i - 1]
    r = (s - cum[i - 1]) / seg
    pose = UavState(a.x + r * (b.x - a.x), a.y + r * (b.y - a.y), a.z + r * (b.z - a.z),
                    bearing(a.x, a.y, b.x, b.y))
    return pose, i


def sample_poses(traj: Trajectory, spacing: float) -> list[UavState]:
    """Poses every ``spacing`` meters of arc length, including both ends."""
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    cum = cumulative_lengths(traj)
    total = float(cum[-1])
    n = int(math.floor(total / spacing + 1e-9))
    ss = [k * spacing for k in range(n + 1)]
    if total - ss[-1] > 1e-9:
        ss.append(total)
    return [pose_at(traj, s, cum)[0] for s in ss]
