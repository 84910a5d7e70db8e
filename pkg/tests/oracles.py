"""Independent oracles used by the test suite.

These deliberately avoid the package's assembly/quadrature code paths:
element integrals come from sympy symbolic integration, and domain integrals
from a dense tensor-product Gauss-Legendre rule.
"""
from __future__ import annotations

import numpy as np
import sympy as sp


def element_matrices_exact(p0, p1, p2):
    """Exact P1 mass and stiffness 3x3 element matrices via symbolic integration."""
    x, y, s, t = sp.symbols("x y s t")
    pts = [tuple(map(sp.nsimplify, p)) for p in (p0, p1, p2)]
    V = sp.Matrix([[1, px, py] for px, py in pts])
    C = V.inv()  # column i holds the coefficients of shape function i
    phis = [C[0, i] + C[1, i] * x + C[2, i] * y for i in range(3)]
    grads = [(C[1, i], C[2, i]) for i in range(3)]

    # parametrize the triangle: (x, y) = p0 + s (p1 - p0) + t (p2 - p0)
    xs = pts[0][0] + s * (pts[1][0] - pts[0][0]) + t * (pts[2][0] - pts[0][0])
    ys = pts[0][1] + s * (pts[1][1] - pts[0][1]) + t * (pts[2][1] - pts[0][1])
    jac = sp.Abs((pts[1][0] - pts[0][0]) * (pts[2][1] - pts[0][1])
                 - (pts[2][0] - pts[0][0]) * (pts[1][1] - pts[0][1]))
    area = sp.Rational(1, 2) * jac

    M = sp.zeros(3, 3)
    K = sp.zeros(3, 3)
    for i in range(3):
        for j in range(3):
            integrand = (phis[i] * phis[j]).subs({x: xs, y: ys}) * jac
            M[i, j] = sp.integrate(sp.integrate(integrand, (t, 0, 1 - s)), (s, 0, 1))
            K[i, j] = (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]) * area
    return (np.array(M.evalf(17), dtype=np.float64),
            np.array(K.evalf(17), dtype=np.float64))


def assemble_exact(mesh):
    """Dense reference assembly of M and K from the sympy element oracle."""
    n = mesh.n_vertices
    M = np.zeros((n, n))
    K = np.zeros((n, n))
    for tri in mesh.triangles:
        p = mesh.vertices[tri]
        Me, Ke = element_matrices_exact(p[0], p[1], p[2])
        for a in range(3):
            for b in range(3):
                M[tri[a], tri[b]] += Me[a, b]
                K[tri[a], tri[b]] += Ke[a, b]
    return M, K


def integrate_2d(f, bounds, n=200):
    """Tensor-product Gauss-Legendre integral of f over a rectangle."""
    xmin, xmax, ymin, ymax = bounds
    xg, wx = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (xmax - xmin) * xg + 0.5 * (xmax + xmin)
    y = 0.5 * (ymax - ymin) * xg + 0.5 * (ymax + ymin)
    X, Y = np.meshgrid(x, y)
    vals = f(X, Y)
    return float(wx @ vals @ wx) * 0.25 * (xmax - xmin) * (ymax - ymin)
