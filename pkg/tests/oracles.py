"""Independent reference computations used by the tests.

Everything here is written from first principles with plain Python floats
and loops, without calling into the package, so tests compare two separate
derivations of the same quantity.
"""

import math


def entropy(p):
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def posterior(p, l_pos, l_neg):
    den = l_pos * p + l_neg * (1.0 - p)
    return p if den == 0.0 else l_pos * p / den


def assumed_delta_h(p, tpr, fpr, tnr, fnr, thr=0.5):
    if p >= thr:
        q = posterior(p, tpr, fpr)
    else:
        q = posterior(p, fnr, tnr)
    return entropy(p) - entropy(q)


def tpr(r, alpha=300.0, beta=800.0, peak=0.9, floor=0.5):
    if r <= alpha:
        return peak
    if r >= beta:
        return floor
    return peak + (floor - peak) * (r - alpha) / (beta - alpha)


def segment_hits_rect(ax, ay, bx, by, x0, y0, x1, y1):
    """Does the closed segment a-b touch the open interior of the rectangle?

    Slab test on the segment parameter; touching only an edge or corner does
    not count, matching the supercover convention of "passes through".
    """
    t0, t1 = 0.0, 1.0
    for a, d, lo, hi in ((ax, bx - ax, x0, x1), (ay, by - ay, y0, y1)):
        if d == 0.0:
            if not lo < a < hi:
                return False
            continue
        ta, tb = (lo - a) / d, (hi - a) / d
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 >= t1:
            return False
    return True


def rect_oracle_cells(a, b, n_cols, n_rows, cell, ox=0.0, oy=0.0):
    """All cells whose interior the segment passes through (O(N^2) scan).

    A degenerate segment (a point) yields the cell containing it.
    """
    ax, ay = a
    bx, by = b
    if ax == bx and ay == by:
        c, r = math.floor((ax - ox) / cell), math.floor((ay - oy) / cell)
        return {(c, r)} if 0 <= c < n_cols and 0 <= r < n_rows else set()
    out = set()
    for r in range(n_rows):
        for c in range(n_cols):
            x0, y0 = ox + c * cell, oy + r * cell
            if segment_hits_rect(ax, ay, bx, by, x0, y0, x0 + cell, y0 + cell):
                out.add((c, r))
    return out


def polyline_point(points, s):
    """Point at arc length s along a polyline, clamped to the ends, plus heading."""
    acc = 0.0
    last_heading = None
    for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
        L = math.hypot(x1 - x0, y1 - y0)
        if L == 0.0:
            continue
        last_heading = math.atan2(y1 - y0, x1 - x0)
        if acc + L >= s:
            f = (s - acc) / L
            return x0 + f * (x1 - x0), y0 + f * (y1 - y0), last_heading
        acc += L
    x, y = points[-1]
    return x, y, last_heading


def triangle_wave(t, lo, hi, rate, y0=0.0, up=True):
    """Yaw of a gimbal reflecting between lo and hi, by unfolding the motion."""
    span = hi - lo
    # unfolded coordinate u in [0, 2*span): u < span moving up from lo
    u0 = (y0 - lo) if up else (2 * span - (y0 - lo))
    u = (u0 + rate * t) % (2 * span)
    return lo + u if u <= span else hi - (u - span)


def rect_oracle_cells_np(a, b, n_cols, n_rows, cell, ox=0.0, oy=0.0):
    """Vectorised version of rect_oracle_cells for non-degenerate segments."""
    import numpy as np

    ax, ay = a
    bx, by = b
    cc, rr = np.meshgrid(np.arange(n_cols), np.arange(n_rows))
    x0, y0 = ox + cc * cell, oy + rr * cell
    t0 = np.zeros(cc.shape)
    t1 = np.ones(cc.shape)
    ok = np.ones(cc.shape, dtype=bool)
    for a_, d, lo in ((ax, bx - ax, x0), (ay, by - ay, y0)):
        hi = lo + cell
        if d == 0.0:
            ok &= (lo < a_) & (a_ < hi)
            continue
        ta, tb = (lo - a_) / d, (hi - a_) / d
        t0 = np.maximum(t0, np.minimum(ta, tb))
        t1 = np.minimum(t1, np.maximum(ta, tb))
    ok &= t0 < t1
    return set(zip(cc[ok].tolist(), rr[ok].tolist()))


def convex_chord(verts, base, direction, slack=1e-9):
    """Parameter range (t0, t1) where base + t*direction lies in a CCW convex polygon.

    The polygon is grown by ``slack`` meters so a line lying along an edge
    keeps that edge as its chord despite rounding.
    """
    t0, t1 = -math.inf, math.inf
    n = len(verts)
    for i in range(n):
        (x0, y0), (x1, y1) = verts[i], verts[(i + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        # inside: cross(e, p - v0) >= 0, linear in t
        c0 = ex * (base[1] - y0) - ey * (base[0] - x0) + slack * math.hypot(ex, ey)
        c1 = ex * direction[1] - ey * direction[0]
        if abs(c1) < 1e-15:
            if c0 < 0.0:
                return None
            continue
        t = -c0 / c1
        if c1 > 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
    return (t0, t1) if t0 <= t1 else None
