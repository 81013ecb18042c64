"""Newton solution of the discrete problem, with continuation in p.

The Newton step solves J delta = -r with a direct sparse factorization,
either on all unknowns or on the statically condensed face system (the two
paths produce identical steps).  Backtracking halves the step until the
residual 2-norm decreases.  For p < 2 the Jacobian (and only the Jacobian)
uses a regularized law; convergence is always declared on the exact
residual.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import splu


class SolverError(RuntimeError):
    def __init__(self, message, stage=None):
        super().__init__(message if stage is None else f"stage p={stage}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class SolveOptions:
    # convergence is declared at ||r|| <= max(atol, rtol * ||load||); the
    # load-relative part keeps the target above the floating-point floor of
    # the assembly for strongly scaled problems (the floor grows ~1/h)
    atol: float = 1e-10
    rtol: float = 1e-11
    max_iter: int = 50
    backtrack_factor: float = 0.5
    max_backtracks: int = 30
    armijo: float = 1e-4
    continuation: tuple = None  # p values, must end at the target
    condense: bool = True
    eps_scale: float = 1e-8  # Jacobian regularization scale for p < 2

    def __post_init__(self):
        if self.atol <= 0.0 and self.rtol <= 0.0:
            raise ValueError("at least one of atol, rtol must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtracking factor must lie in (0, 1)")


@dataclass
class StageReport:
    p: float
    iterations: int = 0
    residuals: list = field(default_factory=list)
    backtracks: int = 0
    converged: bool = False


@dataclass
class SolveReport:
    stages: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def converged(self):
        return bool(self.stages) and all(s.converged for s in self.stages)

    @property
    def iterations(self):
        return sum(s.iterations for s in self.stages)


def _jacobian_law(problem, sol):
    """Regularized law for the Newton matrix when p < 2."""
    law = problem.law
    if law.p >= 2.0 or law.eps > 0.0:
        return None  # assemble with the law itself
    scale = 1.0
    for grp in problem.disc.groups:
        g = np.einsum("qcj,mj->mqc", grp.ops.grad_vals, sol.coeffs[grp.full_idx])
        if g.size:
            scale = max(scale, float(np.abs(g).max()))
    eps_opts = getattr(problem, "_eps_scale", 1e-8)
    return law.with_eps(eps_opts * scale)


def _newton_step(problem, sol, opts):
    law_jac = _jacobian_law(problem, sol)
    if opts.condense:
        r, schur, rhs, recover = problem.assemble_condensed(sol, law_jac=law_jac)
        try:
            lu = splu(schur.tocsc())
        except RuntimeError as exc:
            raise SolverError(f"singular condensed Jacobian: {exc}") from None
        delta = recover(lu.solve(-rhs))
    else:
        system = problem.assemble_system(sol, law_jac=law_jac)
        r = system.residual
        try:
            lu = splu(system.jacobian.tocsc())
        except RuntimeError as exc:
            raise SolverError(f"singular Jacobian: {exc}") from None
        delta = lu.solve(-r)
    return r, delta


def newton_solve(problem, u0=None, opts=None):
    """Solve the nonlinear problem by damped Newton iteration.

    Returns (solution, StageReport).  Raises SolverError when the iteration
    exceeds max_iter, the line search stagnates, or a Jacobian is singular.
    """
    opts = opts or SolveOptions()
    problem._eps_scale = opts.eps_scale
    sol = u0.copy() if u0 is not None else problem.initial_solution()
    sol.dofmap = problem.dofmap
    report = StageReport(p=problem.law.p)

    rnorm = float(np.linalg.norm(problem.residual(sol)))
    report.residuals.append(rnorm)
    tol = max(opts.atol, opts.rtol * float(np.linalg.norm(problem.load_full)))
    while rnorm > tol:
        if report.iterations >= opts.max_iter:
            raise SolverError(
                f"no convergence in {opts.max_iter} iterations "
                f"(residual {rnorm:.3e})",
                stage=problem.law.p,
            )
        _, delta = _newton_step(problem, sol, opts)
        alpha = 1.0
        for attempt in range(opts.max_backtracks + 1):
            trial = sol.copy()
            trial.add_update(alpha * delta)
            trial_norm = float(np.linalg.norm(problem.residual(trial)))
            if np.isfinite(trial_norm) and trial_norm <= (1.0 - opts.armijo * alpha) * rnorm:
                break
            alpha *= opts.backtrack_factor
            report.backtracks += 1
        else:
            raise SolverError(
                f"line search stagnated at residual {rnorm:.3e}",
                stage=problem.law.p,
            )
        sol = trial
        rnorm = trial_norm
        report.iterations += 1
        report.residuals.append(rnorm)
    report.converged = True
    return sol, report


def default_schedule(target_p):
    """Continuation schedule from the linear problem towards target_p."""
    if target_p == 2.0:
        return (2.0,)
    if target_p > 2.0:
        steps = [2.0 + i for i in range(int(np.ceil(target_p - 2.0)))]
        return tuple(steps) + (float(target_p),)
    steps = []
    p = 2.0
    while p - 0.2 > target_p + 1e-12:
        p = round(p - 0.2, 12)
        steps.append(p)
    return (2.0,) + tuple(steps) + (float(target_p),)


def continuation_solve(make_problem, target_p, opts=None, u0=None):
    """Warm-started sequence of solves ending at the target exponent.

    ``make_problem(p)`` must build the discrete problem for exponent p on a
    fixed discretization (the DOF layout may not change between stages).
    """
    opts = opts or SolveOptions()
    schedule = opts.continuation or default_schedule(target_p)
    if len(schedule) == 0:
        raise SolverError("empty continuation schedule")
    if abs(schedule[-1] - target_p) > 1e-12:
        raise SolverError(
            f"continuation schedule {schedule} does not end at target {target_p}"
        )
    t0 = time.perf_counter()
    report = SolveReport()
    sol = u0
    for p in schedule:
        problem = make_problem(float(p))
        try:
            sol, stage = newton_solve(problem, u0=sol, opts=opts)
        except SolverError as exc:
            exc.stage = p
            raise
        report.stages.append(stage)
    report.wall_time = time.perf_counter() - t0
    return sol, report
