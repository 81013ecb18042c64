"""Manufactured solutions with analytic derivatives and power-law sources.

For the flux a(grad u) = |grad u|^(p-2) grad u the source is
f = -div a = -( m^(p-2) Lap(u) + (p-2) m^(p-4) g.Hg ),  m = |grad u|,
with the continuous extension 0 where the gradient vanishes (p > 2).
Derivatives are hand-coded; no numerical differentiation of exact solutions.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ManufacturedSolution:
    """Exact solution with gradient, Hessian and p-Laplace source."""

    name: str
    u: callable
    grad: callable
    hessian: callable
    laplacian: callable
    neumann_compatible: bool = False

    def source(self, p):
        """Source f with -div(|grad u|^(p-2) grad u) = f."""

        def f(pts):
            g = self.grad(pts)
            h = self.hessian(pts)
            lap = self.laplacian(pts)
            m2 = np.sum(g * g, axis=-1)
            ghg = np.einsum("nd,nde,ne->n", g, h, g)
            with np.errstate(divide="ignore", invalid="ignore"):
                term = m2 ** ((p - 2.0) / 2.0) * lap + (p - 2.0) * m2 ** (
                    (p - 4.0) / 2.0
                ) * ghg
            if p != 2.0:
                term = np.where(m2 > 0.0, term, 0.0)
            return -term

        return f

    def dirichlet_trace(self):
        return self.u


def _exp_solution():
    # u = exp(x1 + pi x2); the closed-form source is
    # f = -(p-1) (1+pi^2)^(p/2) exp((p-1)(x1+pi*x2))
    pi = np.pi

    def u(pts):
        pts = np.atleast_2d(pts)
        return np.exp(pts[:, 0] + pi * pts[:, 1])

    def grad(pts):
        e = u(pts)
        return np.column_stack([e, pi * e])

    def hessian(pts):
        e = u(pts)
        h = np.empty((len(e), 2, 2))
        h[:, 0, 0] = e
        h[:, 0, 1] = h[:, 1, 0] = pi * e
        h[:, 1, 1] = pi * pi * e
        return h

    def laplacian(pts):
        return (1.0 + pi * pi) * u(pts)

    return ManufacturedSolution("exp", u, grad, hessian, laplacian)


def _cospi_solution():
    # u = cos(pi x1) cos(pi x2): zero mean on the unit square and
    # grad(u).n = 0 on its boundary, so the p-Laplace flux satisfies the
    # homogeneous Neumann condition for every p and the source integrates
    # to zero exactly.
    pi = np.pi

    def u(pts):
        pts = np.atleast_2d(pts)
        return np.cos(pi * pts[:, 0]) * np.cos(pi * pts[:, 1])

    def grad(pts):
        pts = np.atleast_2d(pts)
        cx, cy = np.cos(pi * pts[:, 0]), np.cos(pi * pts[:, 1])
        sx, sy = np.sin(pi * pts[:, 0]), np.sin(pi * pts[:, 1])
        return -pi * np.column_stack([sx * cy, cx * sy])

    def hessian(pts):
        pts = np.atleast_2d(pts)
        cx, cy = np.cos(pi * pts[:, 0]), np.cos(pi * pts[:, 1])
        sx, sy = np.sin(pi * pts[:, 0]), np.sin(pi * pts[:, 1])
        h = np.empty((len(cx), 2, 2))
        h[:, 0, 0] = -pi * pi * cx * cy
        h[:, 0, 1] = h[:, 1, 0] = pi * pi * sx * sy
        h[:, 1, 1] = -pi * pi * cx * cy
        return h

    def laplacian(pts):
        return -2.0 * pi * pi * u(pts)

    return ManufacturedSolution(
        "cospi", u, grad, hessian, laplacian, neumann_compatible=True
    )


REGISTRY = {sol.name: sol for sol in (_exp_solution(), _cospi_solution())}


def get_solution(name):
    if name not in REGISTRY:
        raise KeyError(
            f"unknown manufactured solution {name!r}; available: {sorted(REGISTRY)}"
        )
    return REGISTRY[name]
