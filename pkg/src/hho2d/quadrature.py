"""Quadrature rules on segments, triangles and polygonal cells.

Cell rules are assembled from simplex rules over the centroid fan of the
polygon; face rules are Gauss-Legendre on the segment.  All rules carry a
declared exactness degree and have strictly positive weights.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

#: Largest supported exactness degree.
QMAX = 40


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    """Points (physical coordinates), weights and declared exactness degree."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def integrate(self, f):
        return float(self.weights @ f(self.points))


def _check_degree(degree):
    if not 0 <= degree <= QMAX:
        raise QuadratureError(f"quadrature degree {degree} outside [0, {QMAX}]")


@lru_cache(maxsize=None)
def _ref_segment(degree):
    n = degree // 2 + 1
    t, w = leggauss(n)
    # map [-1, 1] -> [0, 1]
    return (t + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=None)
def _ref_triangle(degree):
    # Collapsed rule on the unit triangle {x,y >= 0, x+y <= 1} via the map
    # (u, v) -> (u(1-v), uv) with Jacobian u.  The radial direction uses
    # Gauss-Jacobi with weight u so the Jacobian is absorbed exactly.
    n = degree // 2 + 1
    tu, wu = roots_jacobi(n, 0.0, 1.0)
    u = (tu + 1.0) / 2.0
    wu = wu / 4.0  # t = 2u - 1 and weight (1+t) = 2u give d(weight) = 4 u du
    v, wv = _ref_segment(degree)
    x = np.outer(u, 1.0 - v).ravel()
    y = np.outer(u, v).ravel()
    w = np.outer(wu, wv).ravel()
    return np.column_stack([x, y]), w


def segment_rule(a, b, degree):
    """Rule on the segment [a, b] exact for 1D polynomials of degree <= degree."""
    _check_degree(degree)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t, w = _ref_segment(degree)
    pts = a[None, :] + t[:, None] * (b - a)[None, :]
    return QuadratureRule(pts, w * np.linalg.norm(b - a), degree)


def triangle_rule(v0, v1, v2, degree):
    """Rule on the triangle (v0, v1, v2) exact for total degree <= degree."""
    _check_degree(degree)
    v0 = np.asarray(v0, dtype=float)
    e1 = np.asarray(v1, dtype=float) - v0
    e2 = np.asarray(v2, dtype=float) - v0
    det = e1[0] * e2[1] - e1[1] * e2[0]
    if det <= 0.0:
        raise QuadratureError("triangle is degenerate or negatively oriented")
    ref_pts, ref_w = _ref_triangle(degree)
    pts = v0[None, :] + np.outer(ref_pts[:, 0], e1) + np.outer(ref_pts[:, 1], e2)
    return QuadratureRule(pts, ref_w * det, degree)


def polygon_rule(vertices, centroid, degree):
    """Rule on a polygon star-shaped w.r.t. ``centroid`` (fan of triangles)."""
    vertices = np.asarray(vertices, dtype=float)
    nv = len(vertices)
    pieces = [
        triangle_rule(centroid, vertices[i], vertices[(i + 1) % nv], degree)
        for i in range(nv)
    ]
    pts = np.vstack([r.points for r in pieces])
    w = np.concatenate([r.weights for r in pieces])
    return QuadratureRule(pts, w, degree)
