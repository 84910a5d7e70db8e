"""P1 finite element operators on triangle meshes.

Assembles the mass matrix M and stiffness matrix K with exact element
integration and provides the discrete operators built from them: nodal
interpolation, L2 projection, the discrete Laplacian and its inverse on
mean-zero fields, the discrete H^-1 inner product, and the usual norms.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AssemblyError, LinearSolveError, MeanZeroError
from .mesh import Mesh, triangle_areas

# Degree-5 symmetric 7-point triangle quadrature (barycentric coords, weights
# summing to 1).  Used for L2-projection right-hand sides.
_Q7_A = (6.0 - np.sqrt(15.0)) / 21.0
_Q7_B = (6.0 + np.sqrt(15.0)) / 21.0
_Q7_WA = (155.0 - np.sqrt(15.0)) / 1200.0
_Q7_WB = (155.0 + np.sqrt(15.0)) / 1200.0
TRI_QUAD_POINTS = np.array(
    [[1 / 3, 1 / 3, 1 / 3],
     [1 - 2 * _Q7_A, _Q7_A, _Q7_A], [_Q7_A, 1 - 2 * _Q7_A, _Q7_A], [_Q7_A, _Q7_A, 1 - 2 * _Q7_A],
     [1 - 2 * _Q7_B, _Q7_B, _Q7_B], [_Q7_B, 1 - 2 * _Q7_B, _Q7_B], [_Q7_B, _Q7_B, 1 - 2 * _Q7_B]])
TRI_QUAD_WEIGHTS = np.array([9 / 40, _Q7_WA, _Q7_WA, _Q7_WA, _Q7_WB, _Q7_WB, _Q7_WB])


@dataclass
class NodalField:
    """Coefficient vector of a P1 function, tied to its mesh."""

    values: np.ndarray
    mesh: Mesh

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != (self.mesh.n_vertices,):
            raise ValueError(
                f"field has {self.values.shape} values for a mesh with "
                f"{self.mesh.n_vertices} vertices")
        if not np.all(np.isfinite(self.values)):
            k = int(np.flatnonzero(~np.isfinite(self.values))[0])
            raise ValueError(f"non-finite value at vertex {k}")

    def copy(self) -> "NodalField":
        return NodalField(self.values.copy(), self.mesh)


class FieldNorms(NamedTuple):
    l2: float
    h1_semi: float
    h1: float
    linf: float


class AssembledOperators:
    """Mass/stiffness matrices for a mesh plus cached factorizations.

    Immutable after construction.  The mass factorization is computed lazily
    and reused across time steps and sample paths.
    """

    def __init__(self, mesh: Mesh, M: sp.csr_matrix, K: sp.csr_matrix):
        self.mesh = mesh
        self.M = M
        self.K = K
        self._mass_lu = None
        # Row sums of M are the integrals of the basis functions.
        self.basis_integrals = np.asarray(M.sum(axis=1)).ravel()

    @property
    def n(self) -> int:
        return self.mesh.n_vertices

    @property
    def area(self) -> float:
        return float(self.basis_integrals.sum())

    def solve_mass(self, b: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
        """Solve M x = b with the cached factorization; verify the residual."""
        if self._mass_lu is None:
            self._mass_lu = spla.splu(self.M.tocsc())
        x = self._mass_lu.solve(b)
        scale = np.linalg.norm(b)
        if scale > 0 and np.linalg.norm(self.M @ x - b) > rtol * scale:
            raise LinearSolveError("mass solve residual exceeds tolerance")
        return x

    def l2_mean(self, values: np.ndarray) -> float:
        """L2 mean (v, 1)/|D| of a coefficient vector."""
        return float(self.basis_integrals @ values) / self.area

    def solve_stiffness_meanzero(self, b: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
        """Solve K x = b for b orthogonal to constants; return the (x,1)=0 solution.

        Conjugate gradients restricted to the complement of the kernel: the
        right-hand side is purged of its constant component and CG is started
        at zero, so iterates stay orthogonal to the kernel; the L2 mean of the
        solution is removed afterwards.
        """
        n = b.shape[0]
        b = b - b.sum() / n
        bnorm = np.linalg.norm(b)
        if bnorm == 0.0:
            return np.zeros(n)
        x, info = spla.cg(self.K, b, rtol=min(rtol, 1e-13), atol=0.0,
                          maxiter=40 * n)
        if np.linalg.norm(self.K @ x - b) > rtol * bnorm:
            raise LinearSolveError(
                f"singular stiffness solve stalled (cg info={info})")
        x = x - self.l2_mean(x)
        return x


def assemble(mesh: Mesh) -> AssembledOperators:
    """Assemble the P1 mass and stiffness matrices with exact integration."""
    tri = mesh.triangles
    p = mesh.vertices[tri]  # (nt, 3, 2)
    areas = triangle_areas(mesh)
    scale = mesh.dx * mesh.dy
    if np.any(areas <= 1e-14 * scale):
        k = int(np.argmin(areas))
        raise AssemblyError(f"degenerate triangle {k} (area {areas[k]})")

    # Barycentric gradient coefficients: phi_i = (a_i + b_i x + c_i y)/(2A).
    x, y = p[..., 0], p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)

    k_local = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) \
        / (4.0 * areas)[:, None, None]
    m_template = (np.ones((3, 3)) + np.eye(3)) / 12.0
    m_local = areas[:, None, None] * m_template[None, :, :]

    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = mesh.n_vertices
    M = sp.coo_matrix((m_local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K = sp.coo_matrix((k_local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return AssembledOperators(mesh, M, K)


def interpolate(f: Callable[[np.ndarray, np.ndarray], np.ndarray], mesh: Mesh) -> NodalField:
    """Nodal interpolation: the P1 function matching f at every vertex."""
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    vals = f(x, y)
    vals = np.broadcast_to(np.asarray(vals, dtype=np.float64), x.shape).copy()
    if not np.all(np.isfinite(vals)):
        k = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise ValueError(
            f"initial datum evaluates to {vals[k]} at vertex {k} "
            f"({x[k]:.6g}, {y[k]:.6g})")
    return NodalField(vals, mesh)


def apply_double_well(u: NodalField) -> NodalField:
    """Nodewise derivative of the double-well potential: u^3 - u."""
    v = u.values
    return NodalField(v * v * v - v, u.mesh)


def load_vector(f, mesh: Mesh) -> np.ndarray:
    """Right-hand side (f, phi_i) by the degree-5 seven-point triangle rule."""
    tri = mesh.triangles
    p = mesh.vertices[tri]
    areas = triangle_areas(mesh)
    b = np.zeros(mesh.n_vertices)
    for lam, w in zip(TRI_QUAD_POINTS, TRI_QUAD_WEIGHTS):
        pts = np.einsum("k,nkd->nd", lam, p)
        fvals = np.asarray(f(pts[:, 0], pts[:, 1]), dtype=np.float64)
        fvals = np.broadcast_to(fvals, (len(tri),))
        common = w * areas * fvals
        for i in range(3):
            np.add.at(b, tri[:, i], common * lam[i])
    return b


def l2_project(f, ops: AssembledOperators, rtol: float = 1e-12) -> NodalField:
    """L2 projection of f: solve M x = (f, phi_i)."""
    b = load_vector(f, ops.mesh)
    x = ops.solve_mass(b, rtol=rtol)
    return NodalField(x, ops.mesh)


def discrete_laplacian(z: NodalField, ops: AssembledOperators) -> NodalField:
    """Field y with (y, v) = -(grad z, grad v) for all P1 v."""
    y = ops.solve_mass(-(ops.K @ z.values))
    return NodalField(y, ops.mesh)


def inv_discrete_laplacian(z: NodalField, ops: AssembledOperators,
                           rtol: float = 1e-12) -> NodalField:
    """Field q with (grad q, grad v) = (z, v) for all v and (q, 1) = 0.

    Requires z to have zero L2 mean.  Composing with the discrete Laplacian
    gives back -z: the two operators invert each other up to sign convention.
    """
    b = ops.M @ z.values
    znorm = float(np.sqrt(max(z.values @ b, 0.0)))
    if abs(b.sum()) > 1e-10 * max(znorm, 1e-300):
        raise MeanZeroError(
            f"input has L2 mean {b.sum() / ops.area:.3e}; "
            "the inverse Laplacian is defined on mean-zero fields only")
    q = ops.solve_stiffness_meanzero(b, rtol=rtol)
    return NodalField(q, ops.mesh)


def h_minus1_inner(z1: NodalField, z2: NodalField, ops: AssembledOperators) -> float:
    """Discrete H^-1 inner product of two mean-zero fields."""
    q2 = inv_discrete_laplacian(z2, ops)
    return float(z1.values @ (ops.M @ q2.values))


def h_minus1_norm(z: NodalField, ops: AssembledOperators) -> float:
    q = inv_discrete_laplacian(z, ops)
    return float(np.sqrt(max(z.values @ (ops.M @ q.values), 0.0)))


def norms(z: NodalField, ops: AssembledOperators) -> FieldNorms:
    """L2, H1 seminorm, full H1 norm, and vertex max of a P1 field."""
    v = z.values
    l2sq = float(v @ (ops.M @ v))
    h1sq = float(v @ (ops.K @ v))
    return FieldNorms(
        l2=np.sqrt(max(l2sq, 0.0)),
        h1_semi=np.sqrt(max(h1sq, 0.0)),
        h1=np.sqrt(max(l2sq + h1sq, 0.0)),
        linf=float(np.abs(v).max()) if v.size else 0.0,
    )


def check_nonlinear_form(u: NodalField, ops: AssembledOperators) -> float:
    """Quadratic form sum_ij u_i^3 u_j K_ij.

    Nonnegative whenever K has nonpositive off-diagonals and is diagonally
    dominant; this is the structural fact that makes the implicit treatment
    of the double-well term stable.
    """
    v = u.values
    return float((v * v * v) @ (ops.K @ v))


def nonlinear_form_scale(u: NodalField, ops: AssembledOperators) -> float:
    """Sum of |u_i^3 u_j K_ij|: the round-off scale of check_nonlinear_form."""
    v = np.abs(u.values)
    absK = sp.csr_matrix((np.abs(ops.K.data), ops.K.indices, ops.K.indptr),
                         shape=ops.K.shape)
    return float((v * v * v) @ (absK @ v))


def dump_matrix_coo(A: sp.spmatrix, path: str) -> str:
    """Write a matrix as 'row col value' text lines for cross-checking."""
    coo = A.tocoo()
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as f:
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            f.write(f"{r} {c} {v:.17g}\n")
    return path


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str


def verify_operators(ops: AssembledOperators, n_random: int = 1000,
                     seed: int = 0, rtol: float = 1e-12) -> list[CheckResult]:
    """Run the structural property suite on assembled matrices.

    Returns one result per check; used by the `check` CLI command and by the
    acceptance tests.  Does not raise: callers inspect the `ok` flags.
    """
    M, K = ops.M, ops.K
    n = ops.n
    results: list[CheckResult] = []

    def add(name, ok, detail):
        results.append(CheckResult(name, bool(ok), detail))

    xmin, xmax, ymin, ymax = ops.mesh.bounds
    rect_area = (xmax - xmin) * (ymax - ymin)
    total = float(M.sum())
    add("mass_total", abs(total - rect_area) <= rtol * rect_area,
        f"sum_ij M_ij = {total:.15g}, domain area {rect_area:.15g}")

    add("mass_nonnegative", M.data.min() >= 0.0,
        f"min mass entry {M.data.min():.3e}")
    add("mass_symmetric", abs(M - M.T).max() <= rtol * abs(M).max(),
        "|M - M^T| within tolerance")
    add("stiffness_symmetric", abs(K - K.T).max() <= rtol * abs(K).max(),
        "|K - K^T| within tolerance")

    row_scale = np.asarray(abs(K).sum(axis=1)).ravel()
    row_sums = np.asarray(K.sum(axis=1)).ravel()
    worst = np.abs(row_sums) - 1e-12 * row_scale
    add("stiffness_rowsums", np.all(np.abs(row_sums) <= 1e-12 * row_scale),
        f"max |row sum| - tol*scale = {worst.max():.3e}")

    diag = K.diagonal()
    offdiag_max = 0.0
    Koff = K - sp.diags(diag)
    if Koff.nnz:
        offdiag_max = float(Koff.data.max())
    add("stiffness_offdiag_sign", offdiag_max <= 1e-12 * max(row_scale.max(), 1.0),
        f"max off-diagonal entry {offdiag_max:.3e}")

    abs_off = np.asarray(abs(Koff).sum(axis=1)).ravel()
    margin = diag - abs_off
    add("stiffness_diag_dominant", np.all(margin >= -1e-12 * row_scale),
        f"min (K_kk - sum|K_ik|) = {margin.min():.3e}")

    kernel_resid = np.abs(K @ np.ones(n)).max()
    add("stiffness_kernel_constants", kernel_resid <= 1e-12 * row_scale.max(),
        f"max |K 1| = {kernel_resid:.3e}")

    rng = np.random.default_rng(seed)
    q_min = np.inf
    q_margin = np.inf
    for _ in range(n_random):
        u = NodalField(rng.uniform(-2.0, 2.0, size=n), ops.mesh)
        q = check_nonlinear_form(u, ops)
        scale = nonlinear_form_scale(u, ops)
        q_min = min(q_min, q)
        q_margin = min(q_margin, q + 1e-12 * scale)
    add("nonlinear_form_nonnegative", q_margin >= 0.0,
        f"min Q(u) over {n_random} random fields = {q_min:.3e}")

    # Operator identities on a few random fields.
    ok_round = True
    ok_galerkin = True
    for _ in range(5):
        z = rng.standard_normal(n)
        z -= ops.l2_mean(z)
        zf = NodalField(z, ops.mesh)
        q = inv_discrete_laplacian(zf, ops)
        back = discrete_laplacian(q, ops)
        err = np.linalg.norm(back.values + z) / max(np.linalg.norm(z), 1e-300)
        ok_round &= err <= 1e-9
        y = discrete_laplacian(zf, ops)
        v = rng.standard_normal(n)
        lhs = y.values @ (M @ v)
        rhs = -(z @ (K @ v))
        ok_galerkin &= abs(lhs - rhs) <= 1e-10 * max(abs(lhs), abs(rhs), 1.0)
    add("inverse_laplacian_roundtrip", ok_round, "relative error <= 1e-9")
    add("galerkin_identity", ok_galerkin, "(Lap_h z, v) = -(grad z, grad v)")

    return results
