"""Range-dependent detector rates and camera ground footprints."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .state import UavState

# Upper frustum edge must stay at least this far below the horizon.
GRAZING_MARGIN = 1e-3


@dataclass(frozen=True)
class SensorModel:
    """Piecewise-linear detection model plus camera and gimbal geometry.

    tpr is ``p_peak`` out to ``alpha``, falls linearly to ``p_floor`` at
    ``beta`` and stays there. Slope and intercept follow from continuity.
    ``pitch`` is measured below the horizon. ``psi_min``/``psi_max`` are the
    gimbal yaw limits relative to the vehicle heading.
    """

    alpha: float = 300.0
    beta: float = 800.0
    p_peak: float = 0.9
    p_floor: float = 0.5
    fov_h: float = math.radians(40.0)
    fov_v: float = math.radians(30.0)
    pitch: float = math.radians(20.0)
    psi_min: float = math.radians(-30.0)
    psi_max: float = math.radians(30.0)

    def __post_init__(self):
        if not 0 < self.alpha < self.beta:
            raise ValueError("need 0 < alpha < beta")
        if self.p_floor != 0.5:
            raise ValueError("p_floor must be exactly 0.5 so far cells are not updated")
        if not 0.5 <= self.p_peak <= 1.0:
            raise ValueError("p_peak must lie in [0.5, 1]")
        if not 0 < self.pitch < math.pi / 2:
            raise ValueError("pitch must lie in (0, pi/2)")
        for name in ("fov_h", "fov_v"):
            if not 0 < getattr(self, name) < math.pi:
                raise ValueError(f"{name} must lie in (0, pi)")
        if self.pitch - self.fov_v / 2.0 < GRAZING_MARGIN:
            raise ValueError("pitch must exceed half the vertical fov (footprint would be unbounded)")
        if not self.psi_min <= self.psi_max:
            raise ValueError("psi_min must not exceed psi_max")

    @property
    def a(self) -> float:
        return (self.p_floor - self.p_peak) / (self.beta - self.alpha)

    @property
    def b(self) -> float:
        return self.p_peak - self.a * self.alpha

    def tpr_at_range(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ValueError("range must be non-negative")
        out = np.where(r <= self.alpha, self.p_peak,
                       np.where(r >= self.beta, self.p_floor, self.a * r + self.b))
        return float(out) if out.ndim == 0 else out

    def rates_at_range(self, r):
        """(tpr, fpr, tnr, fnr); tnr has the same shape as tpr."""
        tpr = self.tpr_at_range(r)
        return tpr, 1.0 - tpr, tpr, 1.0 - tpr

    def slant_range(self, uav: UavState, x, y):
        return np.sqrt((np.asarray(x) - uav.x) ** 2 + (np.asarray(y) - uav.y) ** 2 + uav.z ** 2)

    def footprint(self, uav: UavState, gimbal_yaw: float = 0.0) -> FootprintTrapezoid:
        return instantaneous_footprint(uav, gimbal_yaw, self)


def tpr_at_range(model: SensorModel, r):
    return model.tpr_at_range(r)


def rates_at_range(model: SensorModel, r):
    return model.rates_at_range(r)


def _rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def polygon_area(verts) -> float:
    v = np.asarray(verts, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(x[:-1] @ y[1:] - x[1:] @ y[:-1] + x[-1] * y[0] - x[0] * y[-1])


def points_in_convex(verts, px, py, slack: float = 0.0):
    """Vectorised inside test for a counter-clockwise convex polygon."""
    v = np.asarray(verts, dtype=float)
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    inside = np.ones(np.broadcast(px, py).shape, dtype=bool)
    n = len(v)
    for i in range(n):
        x0, y0 = v[i]
        x1, y1 = v[(i + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        norm = math.hypot(ex, ey)
        if norm == 0.0:
            continue
        cross = (ex * (py - y0) - ey * (px - x0)) / norm
        inside &= cross >= -slack
    return inside


@dataclass(frozen=True)
class FootprintTrapezoid:
    """Ground quadrilateral, vertices counter-clockwise starting near-right.

    Order is near-right, far-right, far-left, near-left with "right" meaning
    the clockwise side of the viewing direction.
    """

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(4, 2)
        object.__setattr__(self, "vertices", v)
        if abs(polygon_area(v)) <= 0.0:
            raise ValueError("footprint has zero area")

    near_right = property(lambda self: self.vertices[0])
    far_right = property(lambda self: self.vertices[1])
    far_left = property(lambda self: self.vertices[2])
    near_left = property(lambda self: self.vertices[3])

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    def contains(self, px, py, slack: float = 0.0):
        return points_in_convex(self.vertices, px, py, slack)

    def cells_inside(self, grid):
        """(rows, cols) index arrays of grid cells whose centres are inside."""
        v = self.vertices
        x0, y0, _, _ = grid.bounds
        cs = grid.cell_size
        c_lo = max(0, int(math.floor((v[:, 0].min() - x0) / cs)))
        c_hi = min(grid.n_cols, int(math.ceil((v[:, 0].max() - x0) / cs)) + 1)
        r_lo = max(0, int(math.floor((v[:, 1].min() - y0) / cs)))
        r_hi = min(grid.n_rows, int(math.ceil((v[:, 1].max() - y0) / cs)) + 1)
        if c_lo >= c_hi or r_lo >= r_hi:
            empty = np.zeros(0, dtype=int)
            return empty, empty
        cols = np.arange(c_lo, c_hi)
        rows = np.arange(r_lo, r_hi)
        cc, rr = np.meshgrid(cols, rows)
        px = x0 + (cc + 0.5) * cs
        py = y0 + (rr + 0.5) * cs
        mask = self.contains(px, py)
        return rr[mask], cc[mask]


def _local_corners(altitude: float, model: SensorModel) -> np.ndarray:
    """Footprint corners in the camera-yaw frame (x forward, y left)."""
    if model.pitch - model.fov_v / 2.0 < GRAZING_MARGIN:
        raise ValueError("upper frustum edge is at or above the horizon; footprint unbounded")
    th = model.pitch
    th_h = math.tan(model.fov_h / 2.0)
    tv = math.tan(model.fov_v / 2.0)
    out = []
    for t, s in ((-tv, -th_h), (tv, -th_h), (tv, th_h), (-tv, th_h)):
        # ray = forward + s*left + t*up, camera pitched down by th
        dx = math.cos(th) + t * math.sin(th)
        dz = -math.sin(th) + t * math.cos(th)
        lam = altitude / -dz
        out.append((lam * dx, lam * s))
    return np.array(out)


def instantaneous_footprint(uav: UavState, gimbal_yaw: float, model: SensorModel) -> FootprintTrapezoid:
    local = _local_corners(uav.z, model)
    world = local @ _rot(uav.psi + gimbal_yaw).T + np.array([uav.x, uav.y])
    return FootprintTrapezoid(world)


def swept_trapezoid(uav: UavState, psi1: float, psi2: float, model: SensorModel) -> FootprintTrapezoid:
    """Outline swept by the footprint while the gimbal pans from psi1 to psi2.

    The near edge joins the outer near corners of the two extreme footprints,
    the sides extend their outer side edges, and the far edge sits at the
    furthest reach of either footprint measured along the mid-sweep
    direction, so both extreme footprints lie inside.
    """
    if psi1 > psi2:
        raise ValueError("psi1 must not exceed psi2")
    f1 = instantaneous_footprint(uav, psi1, model)
    if psi1 == psi2:
        return f1
    f2 = instantaneous_footprint(uav, psi2, model)
    mid = uav.psi + 0.5 * (psi1 + psi2)
    m = np.array([math.cos(mid), math.sin(mid)])
    c = np.array([uav.x, uav.y])
    reach = max(float(np.max((f1.vertices - c) @ m)), float(np.max((f2.vertices - c) @ m)))
    # a far corner of some intermediate footprint may point straight along m
    far_local = _local_corners(uav.z, model)[2]
    corner_off = math.atan2(far_local[1], far_local[0])
    if 0.5 * (psi2 - psi1) >= corner_off:
        reach = max(reach, float(np.hypot(*far_local)))

    def extend(near, far):
        along = float((far - near) @ m)
        if along <= 0.0:
            raise ValueError("sweep too wide for a bounded trapezoid")
        k = (reach - float((near - c) @ m)) / along
        return near + k * (far - near)

    return FootprintTrapezoid(np.array([
        f1.near_right,
        extend(f1.near_right, f1.far_right),
        extend(f2.near_left, f2.far_left),
        f2.near_left,
    ]))
