"""Structured right-triangle meshes of rectangles.

Every cell of an nx-by-ny grid is split along the same diagonal, so all
triangles are right triangles with legs parallel to the axes.  Non-obtuse
triangles make every off-diagonal stiffness entry nonpositive, which the
implicit time stepper's stability relies on.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import MeshError

Bounds = tuple[float, float, float, float]

DEFAULT_BOUNDS: Bounds = (-1.0, 1.0, -1.0, 1.0)


@dataclass(frozen=True)
class Mesh:
    """Triangulation of a rectangle.

    Vertices are ordered lexicographically by (y, x); triangles are
    counterclockwise vertex-index triples.  Instances are immutable and safe
    to share across workers.
    """

    vertices: np.ndarray   # (n_vertices, 2) float64
    triangles: np.ndarray  # (n_triangles, 3) int32, CCW
    nx: int
    ny: int
    bounds: Bounds

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def dx(self) -> float:
        return (self.bounds[1] - self.bounds[0]) / self.nx

    @property
    def dy(self) -> float:
        return (self.bounds[3] - self.bounds[2]) / self.ny

    def vertex_index(self, i: int, j: int) -> int:
        """Global index of grid vertex (i, j), 0 <= i <= nx, 0 <= j <= ny."""
        return j * (self.nx + 1) + i


def build_rect_mesh(nx: int, ny: int, bounds: Bounds = DEFAULT_BOUNDS) -> Mesh:
    """Triangulate [xmin, xmax] x [ymin, ymax] with 2*nx*ny right triangles.

    Each grid cell is split along the diagonal from its lower-left to its
    upper-right corner, the same direction in every cell.
    """
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise MeshError(f"subdivision counts must be positive integers, got nx={nx}, ny={ny}")
    nx, ny = int(nx), int(ny)
    xmin, xmax, ymin, ymax = (float(b) for b in bounds)
    if not (xmax > xmin and ymax > ymin):
        raise MeshError(f"degenerate rectangle bounds {bounds}")

    xs = np.linspace(xmin, xmax, nx + 1)
    ys = np.linspace(ymin, ymax, ny + 1)
    X, Y = np.meshgrid(xs, ys)  # row index j (y), column index i (x)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny))
    v00 = (jj * (nx + 1) + ii).ravel()
    v10 = v00 + 1
    v01 = v00 + (nx + 1)
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])  # right angle at v10
    upper = np.column_stack([v00, v11, v01])  # right angle at v01
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int32)
    triangles[0::2] = lower
    triangles[1::2] = upper

    return Mesh(vertices=vertices, triangles=triangles, nx=nx, ny=ny,
                bounds=(xmin, xmax, ymin, ymax))


def triangle_areas(mesh: Mesh) -> np.ndarray:
    """Signed areas of all triangles (positive for CCW orientation)."""
    p = mesh.vertices[mesh.triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def mesh_size(mesh: Mesh) -> dict[str, float]:
    """Return h_max/h_min (max/min triangle diameter) and total area."""
    p = mesh.vertices[mesh.triangles]
    edges = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]])
    lengths = np.linalg.norm(edges, axis=2)
    diam = lengths.max(axis=0)
    return {
        "h_max": float(diam.max()),
        "h_min": float(diam.min()),
        "area": float(triangle_areas(mesh).sum()),
    }


def boundary_vertices(mesh: Mesh) -> np.ndarray:
    """Boolean mask of vertices on the rectangle boundary."""
    xmin, xmax, ymin, ymax = mesh.bounds
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    return (x == xmin) | (x == xmax) | (y == ymin) | (y == ymax)


def check_mesh(mesh: Mesh, rtol: float = 1e-12) -> None:
    """Validate the structural invariants; raise MeshError on violation.

    Checks orientation, the vertex/triangle counting formulas, and that the
    triangle areas tile the rectangle.
    """
    areas = triangle_areas(mesh)
    if not np.all(areas > 0):
        k = int(np.argmin(areas))
        raise MeshError(f"triangle {k} has non-positive signed area {areas[k]}")
    if mesh.n_vertices != (mesh.nx + 1) * (mesh.ny + 1):
        raise MeshError("vertex count does not match (nx+1)*(ny+1)")
    if mesh.n_triangles != 2 * mesh.nx * mesh.ny:
        raise MeshError("triangle count does not match 2*nx*ny")
    xmin, xmax, ymin, ymax = mesh.bounds
    rect_area = (xmax - xmin) * (ymax - ymin)
    if abs(areas.sum() - rect_area) > rtol * rect_area:
        raise MeshError(f"triangle areas sum to {areas.sum()}, expected {rect_area}")


def dump_mesh_csv(mesh: Mesh, directory: str) -> tuple[str, str]:
    """Write vertices.csv (x,y) and triangles.csv (v0,v1,v2) for debugging."""
    os.makedirs(directory, exist_ok=True)
    vpath = os.path.join(directory, "vertices.csv")
    tpath = os.path.join(directory, "triangles.csv")
    with open(vpath, "w") as f:
        f.write("x,y\n")
        for x, y in mesh.vertices:
            f.write(f"{x:.17g},{y:.17g}\n")
    with open(tpath, "w") as f:
        f.write("v0,v1,v2\n")
        for a, b, c in mesh.triangles:
            f.write(f"{a},{b},{c}\n")
    return vpath, tpath
