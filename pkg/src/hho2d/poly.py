"""Scaled monomial bases on cells and faces, mass matrices, L2 projection.

Cell bases are the monomials ((x-x_T)/h_T)^a ((y-y_T)/h_T)^b with a+b <= k,
graded by total degree; face bases are powers of the normalized tangential
coordinate t = (x - x_F).tau_F / h_F.  Bases of different degrees on the same
geometry are nested: the degree-l basis is the leading slice of the
degree-(l+1) basis, which the reconstruction operators rely on.
"""

from functools import lru_cache

import numpy as np

from .quadrature import polygon_rule, segment_rule

#: Largest supported polynomial degree for local bases.
KMAX = 6


class DegreeError(ValueError):
    pass


def check_degree(k):
    if not 0 <= k <= KMAX:
        raise DegreeError(f"polynomial degree {k} outside [0, {KMAX}]")


@lru_cache(maxsize=None)
def monomial_exponents(k):
    """Exponent pairs (a, b), a+b <= k, by total degree then descending a."""
    return tuple((d - b, b) for d in range(k + 1) for b in range(d + 1))


def space_dim(k):
    return (k + 1) * (k + 2) // 2


class CellBasis:
    """Scaled monomial basis of P^k on a cell."""

    def __init__(self, center, h, k, cell=None):
        check_degree(k)
        self.center = np.asarray(center, dtype=float)
        self.h = float(h)
        self.k = k
        self.cell = cell
        self.exponents = np.array(monomial_exponents(k))
        self.dim = len(self.exponents)
        self.mass = None  # filled by make_cell_basis

    def eval(self, points):
        """Basis values at ``points``; shape (npts, dim)."""
        pts = (np.atleast_2d(points) - self.center) / self.h
        a = self.exponents[:, 0]
        b = self.exponents[:, 1]
        return pts[:, 0:1] ** a[None, :] * pts[:, 1:2] ** b[None, :]

    def grad(self, points):
        """Analytic gradients at ``points``; shape (npts, dim, 2)."""
        pts = (np.atleast_2d(points) - self.center) / self.h
        x = pts[:, 0:1]
        y = pts[:, 1:2]
        a = self.exponents[:, 0][None, :]
        b = self.exponents[:, 1][None, :]
        with np.errstate(invalid="ignore"):
            gx = np.where(a > 0, a * x ** np.maximum(a - 1, 0) * y**b, 0.0)
            gy = np.where(b > 0, b * x**a * y ** np.maximum(b - 1, 0), 0.0)
        return np.stack([gx, gy], axis=-1) / self.h

    def condition_number(self):
        return float(np.linalg.cond(self.mass))


class FaceBasis:
    """Monomial basis t^a, a <= k, in the normalized tangential coordinate."""

    def __init__(self, midpoint, tangent, h, k, face=None):
        check_degree(k)
        self.midpoint = np.asarray(midpoint, dtype=float)
        self.tangent = np.asarray(tangent, dtype=float)
        self.h = float(h)
        self.k = k
        self.face = face
        self.dim = k + 1
        self.mass = None

    def param(self, points):
        return (np.atleast_2d(points) - self.midpoint) @ self.tangent / self.h

    def eval(self, points):
        t = self.param(points)
        return t[:, None] ** np.arange(self.dim)[None, :]

    def condition_number(self):
        return float(np.linalg.cond(self.mass))


def cell_rule(mesh, cell, degree):
    """Quadrature over a cell, assembled on its centroid fan."""
    return polygon_rule(
        mesh.cell_vertices(cell), mesh.cell_centroid[cell], degree
    )


def face_rule(mesh, face, degree):
    a, b = mesh.vertices[mesh.faces[face]]
    return segment_rule(a, b, degree)


def make_cell_basis(mesh, cell, k):
    """Cell basis with its mass matrix (assembled exactly)."""
    basis = CellBasis(mesh.cell_centroid[cell], mesh.cell_diameter[cell], k, cell=cell)
    rule = cell_rule(mesh, cell, 2 * k)
    vals = basis.eval(rule.points)
    basis.mass = (vals * rule.weights[:, None]).T @ vals
    return basis


def make_face_basis(mesh, face, k):
    """Face basis with its mass matrix; the tangent points from the
    lexicographically smaller vertex to the larger one."""
    basis = FaceBasis(
        mesh.face_midpoint[face],
        mesh.face_tangent(face),
        mesh.face_length[face],
        k,
        face=face,
    )
    rule = face_rule(mesh, face, 2 * k)
    vals = basis.eval(rule.points)
    basis.mass = (vals * rule.weights[:, None]).T @ vals
    return basis


def l2_project(f, basis, rule):
    """Coefficients of the L2 projection of ``f`` onto ``basis``.

    ``f`` maps an (n, 2) array of points to an (n,) array of values; the
    rule must integrate products of f with the basis accurately (for
    polynomial f of degree d this means exactness >= k + d).
    """
    vals = basis.eval(rule.points)
    rhs = vals.T @ (rule.weights * np.asarray(f(rule.points), dtype=float))
    return np.linalg.solve(basis.mass, rhs)


def eval_poly(basis, coeffs, points):
    """Evaluate a polynomial given by ``coeffs`` on ``basis`` at points."""
    return basis.eval(points) @ coeffs


def eval_poly_grad(basis, coeffs, points):
    return np.einsum("nid,i->nd", basis.grad(points), coeffs)
