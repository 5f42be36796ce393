"""Planning-horizon polygon, layer lines across it, and grid traversal."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .belief_map import BeliefGrid, CellIndex
from .sensor_model import FootprintTrapezoid, points_in_convex, polygon_area

_TOL = 1e-9


@dataclass(frozen=True)
class HorizonPolygon:
    """Convex outline of the current and future swept footprints.

    ``origin`` lies on the vehicle path and ``axis`` points along it, so a
    point's lateral offset is its signed distance left (+) or right (-) of
    the path. ``half_upper``/``half_lower`` are the largest offsets reached
    on each side (both non-negative).
    """

    vertices: np.ndarray
    origin: np.ndarray
    axis: np.ndarray
    half_upper: float
    half_lower: float

    @property
    def normal(self) -> np.ndarray:
        return np.array([-self.axis[1], self.axis[0]])

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    def half_height(self, is_upper: bool) -> float:
        return self.half_upper if is_upper else self.half_lower

    def lateral_offset(self, x, y):
        return (np.asarray(x) - self.origin[0]) * self.normal[0] + \
               (np.asarray(y) - self.origin[1]) * self.normal[1]

    def contains(self, px, py, slack: float = 0.0):
        return points_in_convex(self.vertices, px, py, slack)


def _centroid(v):
    return np.asarray(v, dtype=float).mean(axis=0)


def build_horizon_polygon(f_current: FootprintTrapezoid, f_future: FootprintTrapezoid,
                          current_xy=None, future_xy=None) -> HorizonPolygon:
    """Convex hull of both trapezoids, framed by the current-to-future path chord.

    The frame origin is ``current_xy`` (default: current trapezoid centroid).
    Without ``future_xy`` the axis follows the shift between trapezoid
    centroids, falling back to the current footprint's viewing direction when
    they coincide.
    """
    pts = np.vstack([f_current.vertices, f_future.vertices])
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise ValueError("degenerate horizon polygon") from exc
    verts = pts[hull.vertices]
    if polygon_area(verts) < 0:
        verts = verts[::-1]

    c_cur, c_fut = _centroid(f_current.vertices), _centroid(f_future.vertices)
    start = c_cur if current_xy is None else np.asarray(current_xy, float)
    if future_xy is None:
        d = c_fut - c_cur
    else:
        d = np.asarray(future_xy, float) - start
    if np.hypot(*d) < _TOL:
        v = f_current.vertices
        d = 0.5 * (v[1] + v[2]) - 0.5 * (v[0] + v[3])
    axis = d / np.hypot(*d)
    normal = np.array([-axis[1], axis[0]])
    off = (verts - start) @ normal
    return HorizonPolygon(verts, start, axis, max(float(off.max()), 0.0), max(float(-off.min()), 0.0))


def layer_y(layer: int, layer_ht: float, is_upper: bool, half_height: float) -> float:
    """Signed lateral offset of a layer line, outermost (layer 0) first."""
    if layer < 0:
        raise ValueError("layer must be non-negative")
    mag = max(half_height - layer * layer_ht, 0.0)
    return mag if is_upper else -mag


def layer_endpoints(poly: HorizonPolygon, cur_y: float):
    """Where the path-parallel line at lateral offset ``cur_y`` crosses the polygon.

    Returns ``(start, end)`` ordered along the path axis, or None if the line
    misses.
    """
    n = poly.normal
    verts = poly.vertices
    offs = (verts - poly.origin) @ n
    hits = []
    k = len(verts)
    for i in range(k):
        a, b = verts[i], verts[(i + 1) % k]
        la, lb = offs[i] - cur_y, offs[(i + 1) % k] - cur_y
        if abs(la) <= _TOL:
            hits.append(a)
        if abs(lb) <= _TOL:
            hits.append(b)
        if (la < -_TOL and lb > _TOL) or (la > _TOL and lb < -_TOL):
            hits.append(a + (la / (la - lb)) * (b - a))
    if not hits:
        return None
    hits = np.array(hits)
    t = (hits - poly.origin) @ poly.axis
    return hits[int(np.argmin(t))], hits[int(np.argmax(t))]


def _clip_unit(a, b, xmax, ymax):
    """Liang-Barsky clip of segment a->b to [0, xmax] x [0, ymax]; t-range or None."""
    t0, t1 = 0.0, 1.0
    d = b - a
    for p, q in ((-d[0], a[0]), (d[0], xmax - a[0]), (-d[1], a[1]), (d[1], ymax - a[1])):
        if p == 0.0:
            if q < 0.0:
                return None
            continue
        r = q / p
        if p < 0.0:
            t0 = max(t0, r)
        else:
            t1 = min(t1, r)
        if t0 > t1:
            return None
    # touching the boundary at a single point is not a crossing
    return (t0, t1) if t0 < t1 else None


def _start_index(coord, step, n):
    i = math.floor(coord)
    if step < 0 and i == coord:
        i -= 1
    return min(max(i, 0), n - 1)


def bresenham_cells(v_start, v_end, grid: BeliefGrid) -> list[CellIndex]:
    """Every in-grid cell the segment passes through, ordered start to end.

    Supercover traversal: a cell is listed when the segment crosses its
    interior, so no cell is skipped where the line clips a corner region.
    Passing exactly through a grid vertex steps diagonally.
    """
    cs = grid.cell_size
    a = (np.asarray(v_start, float) - (grid.origin_x, grid.origin_y)) / cs
    b = (np.asarray(v_end, float) - (grid.origin_x, grid.origin_y)) / cs
    nc, nr = grid.n_cols, grid.n_rows

    if np.array_equal(a, b):
        if 0 <= a[0] < nc and 0 <= a[1] < nr:
            return [CellIndex(int(math.floor(a[0])), int(math.floor(a[1])))]
        return []

    clip = _clip_unit(a, b, nc, nr)
    if clip is None:
        return []
    d = b - a
    p0 = a + clip[0] * d
    p1 = a + clip[1] * d
    d = p1 - p0
    if not np.any(d):
        return []

    step_x = 1 if d[0] > 0 else (-1 if d[0] < 0 else 0)
    step_y = 1 if d[1] > 0 else (-1 if d[1] < 0 else 0)
    ix, iy = _start_index(p0[0], step_x, nc), _start_index(p0[1], step_y, nr)

    if step_x:
        t_max_x = ((ix + (step_x > 0)) - p0[0]) / d[0]
        t_dx = abs(1.0 / d[0])
    else:
        t_max_x = t_dx = math.inf
    if step_y:
        t_max_y = ((iy + (step_y > 0)) - p0[1]) / d[1]
        t_dy = abs(1.0 / d[1])
    else:
        t_max_y = t_dy = math.inf

    out = [CellIndex(ix, iy)]
    while min(t_max_x, t_max_y) < 1.0 - 1e-12:
        if t_max_x < t_max_y:
            ix += step_x
            t_max_x += t_dx
        elif t_max_y < t_max_x:
            iy += step_y
            t_max_y += t_dy
        else:
            ix += step_x
            iy += step_y
            t_max_x += t_dx
            t_max_y += t_dy
        if not (0 <= ix < nc and 0 <= iy < nr):
            break
        out.append(CellIndex(ix, iy))
    return out
