"""Manufactured-solution convergence studies with slope regression."""

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from ..assembly import Discretization, Problem
from ..dofs import BoundaryCondition
from ..flux import plaplace
from ..manufactured import get_solution
from ..mesh import MeshFamilySpec, generate_mesh_family
from ..solver import SolveOptions, continuation_solve
from .norms import gradient_error

CSV_COLUMNS = ("level", "h", "ndof", "err_grad_p", "order")


@dataclass
class ConvergenceRow:
    level: int
    h: float
    ndof: int
    error: float
    order: float = None


@dataclass
class ConvergenceTable:
    family: str
    k: int
    l: int
    p: float
    rows: list = field(default_factory=list)
    slope: float = None
    failed_level: int = None
    meta: dict = field(default_factory=dict)

    def finalize(self, window=3):
        hs = np.array([r.h for r in self.rows])
        errs = np.array([r.error for r in self.rows])
        for i in range(1, len(self.rows)):
            if errs[i] > 0.0 and errs[i - 1] > 0.0:
                self.rows[i].order = float(
                    np.log(errs[i] / errs[i - 1]) / np.log(hs[i] / hs[i - 1])
                )
        if len(self.rows) >= window:
            self.slope = fit_slope(hs[-window:], errs[-window:])
        return self


def fit_slope(hs, errors):
    """Least-squares slope of log(error) against log(h)."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if len(hs) < 2:
        raise ValueError("slope regression needs at least two points")
    if np.any(errors <= 0.0):
        raise ValueError("slope regression needs positive errors")
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])


def convergence_study(
    family,
    k,
    p,
    levels,
    l=None,
    solution="exp",
    bc_kind="dirichlet",
    opts=None,
    quad_degree=None,
    kernel=None,
):
    """Solve the manufactured problem on a refinement sequence.

    Each level solves the power-law problem by continuation (sources and
    Dirichlet data follow the stage exponent, so every stage targets the
    same exact solution).  On solver failure the partial table is returned
    with ``failed_level`` set.
    """
    l = k if l is None else l
    opts = opts or SolveOptions()
    exact = get_solution(solution)
    table = ConvergenceTable(
        family=family,
        k=k,
        l=l,
        p=p,
        meta={"solution": solution, "bc": bc_kind, "levels": list(levels)},
    )
    for level in levels:
        mesh = generate_mesh_family(MeshFamilySpec(family, level))
        disc = Discretization(mesh, k, l, quad_degree=quad_degree)
        if bc_kind == "dirichlet":
            bc = BoundaryCondition.dirichlet(exact.dirichlet_trace())
        elif bc_kind == "neumann":
            if not exact.neumann_compatible:
                raise ValueError(
                    f"solution {solution!r} is not Neumann-compatible"
                )
            bc = BoundaryCondition.neumann()
        else:
            raise ValueError(f"unknown bc kind {bc_kind!r}")

        def make_problem(stage_p):
            return Problem(
                disc, plaplace(stage_p), exact.source(stage_p), bc, kernel=kernel
            )

        t0 = time.perf_counter()
        try:
            sol, report = continuation_solve(make_problem, p, opts=opts)
        except Exception:
            table.failed_level = level
            break
        err = gradient_error(disc, sol.coeffs, exact.u, p)
        table.rows.append(
            ConvergenceRow(
                level=level,
                h=mesh.h,
                ndof=sol.dofmap.n_unknowns,
                error=err,
            )
        )
        table.meta.setdefault("timings", []).append(time.perf_counter() - t0)
        table.meta.setdefault("newton_iterations", []).append(report.iterations)
    return table.finalize()


def write_table_csv(table, path):
    """CSV with columns level,h,ndof,err_grad_p,order."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in table.rows:
            writer.writerow(
                [
                    row.level,
                    f"{row.h:.16e}",
                    row.ndof,
                    f"{row.error:.16e}",
                    "" if row.order is None else f"{row.order:.6f}",
                ]
            )


def write_table_gnuplot(table, path):
    """Two-column (h, error) data for log-log regression plots."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in table.rows:
            fh.write(f"{row.h:.16e} {row.error:.16e}\n")


def table_to_dict(table):
    return {
        "family": table.family,
        "k": table.k,
        "l": table.l,
        "p": table.p,
        "slope": table.slope,
        "failed_level": table.failed_level,
        "rows": [
            {
                "level": r.level,
                "h": r.h,
                "ndof": r.ndof,
                "err_grad_p": r.error,
                "order": r.order,
            }
            for r in table.rows
        ],
        "meta": table.meta,
    }


def write_table_json(table, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(table_to_dict(table), fh, indent=2)
