"""Zero-level-set extraction by per-triangle linear contouring.

A P1 field is linear on each triangle, so its zero set there is a straight
segment with endpoints on the edges.  Vertices with value exactly 0 count as
positive, which makes the contour deterministic.  Segments are oriented with
the negative region to the left, so the signed shoelace sum of the segments
is the area enclosed by the contour (the area where the field is negative).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import NodalField
from .mesh import Mesh


@dataclass
class LevelSet:
    """Oriented segments (x1, y1, x2, y2) tracing {u_h = 0}."""

    segments: np.ndarray
    time: float = 0.0
    tag: str = ""

    @property
    def n_segments(self) -> int:
        return self.segments.shape[0]


def _edge_crossing(mesh: Mesh, values: np.ndarray, a: int, b: int) -> np.ndarray:
    # Interpolate in canonical vertex order so shared edges give bitwise
    # identical points in both adjacent triangles.
    if a > b:
        a, b = b, a
    va, vb = values[a], values[b]
    t = va / (va - vb)
    pa, pb = mesh.vertices[a], mesh.vertices[b]
    return pa + t * (pb - pa)


def zero_level_set(u: NodalField, time: float = 0.0, tag: str = "") -> LevelSet:
    """Extract the zero contour of a P1 field as oriented segments."""
    mesh = u.mesh
    values = u.values
    tri = mesh.triangles
    signs = values[tri] >= 0.0  # value 0 counts as positive
    n_pos = signs.sum(axis=1)
    mixed = np.flatnonzero((n_pos > 0) & (n_pos < 3))

    segments = []
    for k in mixed:
        verts = tri[k]
        crossings = []
        for i in range(3):
            a, b = verts[i], verts[(i + 1) % 3]
            if (values[a] >= 0.0) != (values[b] >= 0.0):
                crossings.append(_edge_crossing(mesh, values, a, b))
        if len(crossings) != 2:
            continue
        p, q = crossings
        # Orient along (-gy, gx) where (gx, gy) is the in-triangle gradient,
        # putting the negative side on the left.
        pts = mesh.vertices[verts]
        e1 = pts[1] - pts[0]
        e2 = pts[2] - pts[0]
        det = e1[0] * e2[1] - e1[1] * e2[0]
        d1 = values[verts[1]] - values[verts[0]]
        d2 = values[verts[2]] - values[verts[0]]
        gx = (d1 * e2[1] - d2 * e1[1]) / det
        gy = (-d1 * e2[0] + d2 * e1[0]) / det
        direction = np.array([-gy, gx])
        if (q - p) @ direction >= 0.0:
            segments.append((p[0], p[1], q[0], q[1]))
        else:
            segments.append((q[0], q[1], p[0], p[1]))

    arr = np.array(segments, dtype=np.float64).reshape(-1, 4)
    return LevelSet(segments=arr, time=time, tag=tag)


def enclosed_area(ls: LevelSet) -> float:
    """Signed area bounded by the contour, negative region counted positive.

    Shoelace sum over the oriented segments: for a closed loop with the
    negative region inside (away from the domain boundary) this is that
    region's area; a loop enclosing a positive island contributes its area
    negatively.  Additive over multiple loops.
    """
    s = ls.segments
    if s.size == 0:
        return 0.0
    return float(0.5 * np.sum(s[:, 0] * s[:, 3] - s[:, 2] * s[:, 1]))


def is_closed(ls: LevelSet, decimals: int = 9) -> bool:
    """True when every segment endpoint is shared by exactly two segments.

    Endpoints are matched after rounding; segments of near-zero length (a
    contour grazing a vertex) are ignored.
    """
    s = ls.segments
    if s.size == 0:
        return False
    lengths = np.hypot(s[:, 2] - s[:, 0], s[:, 3] - s[:, 1])
    s = s[lengths > 10.0 ** (-decimals)]
    if s.size == 0:
        return False
    pts = np.round(np.vstack([s[:, :2], s[:, 2:]]), decimals)
    _, counts = np.unique(pts, axis=0, return_counts=True)
    return bool(np.all(counts % 2 == 0))
