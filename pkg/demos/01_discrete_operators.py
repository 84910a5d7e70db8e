#!/usr/bin/env python3
"""Tour of the discrete operators on a structured triangulation.

Builds a mesh of the square [-1,1]^2, assembles the P1 mass and stiffness
matrices, and walks through the identities the solver relies on: the sign
structure of the stiffness matrix, the discrete Laplacian pair, the H^-1
inner product, and the nonnegativity of the double-well quadratic form.
"""
import numpy as np

from schfem import (NodalField, assemble, build_rect_mesh, check_nonlinear_form,
                    discrete_laplacian, h_minus1_norm, interpolate,
                    inv_discrete_laplacian, mesh_size, norms)

mesh = build_rect_mesh(16, 16)
ops = assemble(mesh)
sizes = mesh_size(mesh)
print(f"mesh: {mesh.n_vertices} vertices, {mesh.n_triangles} right triangles, "
      f"h = {sizes['h_max']:.4f}")

# The mass matrix integrates the partition of unity: sum of all entries is
# the domain area; the stiffness matrix annihilates constants.
print(f"sum_ij M_ij = {ops.M.sum():.15f}  (domain area 4)")
print(f"max |K 1|   = {np.abs(ops.K @ np.ones(ops.n)).max():.2e}")

# Right triangles with axis-parallel legs make K diagonally dominant with
# nonpositive off-diagonals; this is what keeps the implicit double-well
# term dissipative.
i = mesh.vertex_index(8, 8)
row = ops.K.getrow(i).toarray().ravel()
print(f"interior stiffness row: diagonal {row[i]:.1f}, "
      f"axis neighbors {row[i - 1]:.1f}, diagonal neighbors {row[i - 18]:.1f}")

rng = np.random.default_rng(0)
u = NodalField(rng.uniform(-2, 2, ops.n), mesh)
print(f"double-well form Q(u) = {check_nonlinear_form(u, ops):.6f}  (never negative)")

# Discrete Laplacian and its inverse are adjoint constructions through M and
# K; composing them returns the (sign-flipped) input on mean-zero fields.
z = rng.standard_normal(ops.n)
z -= ops.l2_mean(z)
zf = NodalField(z, mesh)
q = inv_discrete_laplacian(zf, ops)
back = discrete_laplacian(q, ops)
print(f"round-trip error |(-Lap)(inv z) - z| = "
      f"{np.linalg.norm(back.values + z) / np.linalg.norm(z):.2e}")
print(f"H^-1 norm of z: {h_minus1_norm(zf, ops):.4f}  vs  L2 norm "
      f"{norms(zf, ops).l2:.4f}")

# Nodal interpolation is exact for P1 data.
linear = interpolate(lambda x, y: 0.5 * x - y, mesh)
print(f"|grad(0.5x - y)|^2 integrated exactly: "
      f"{linear.values @ (ops.K @ linear.values):.6f}  (expect {4 * (0.25 + 1)})")
