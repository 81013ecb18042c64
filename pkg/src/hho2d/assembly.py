"""Global discretization, nonlinear assembly and static condensation.

Cells with bit-identical translation-reduced geometry share one set of local
operators; assembly batches over these groups.  The residual of the discrete
problem at the current state and its Jacobian are assembled element-wise,
with Dirichlet face blocks held fixed in the full coefficient vector and a
single scalar multiplier enforcing the zero-mean constraint in the Neumann
case.  Assembly order is deterministic (groups by first cell, cells
ascending), so repeated evaluation is bit-identical in serial.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .dofs import BoundaryCondition, BoundaryError, DiscreteSolution, DofMap
from .local import build_local_operators, cell_shape, validate_degrees
from .poly import space_dim


class AssemblyError(RuntimeError):
    pass


@dataclass
class CellGroup:
    """Cells sharing one LocalOperators instance."""

    ops: object
    cells: np.ndarray  # cell ids, ascending
    full_idx: np.ndarray  # (m, nloc) indices into the full vector
    origins: np.ndarray  # (m, 2) cell centroids


class Discretization:
    """Mesh plus local HHO operators for every cell, grouped by shape."""

    def __init__(self, mesh, k, l=None, quad_degree=None):
        l = k if l is None else l
        validate_degrees(k, l)
        self.mesh = mesh
        self.k = k
        self.l = l
        self.cell_dim = space_dim(l)
        self.face_dim = k + 1
        self.full_size = mesh.n_cells * self.cell_dim + mesh.n_faces * self.face_dim

        by_key = {}
        self.ops_of_cell = [None] * mesh.n_cells
        members = {}
        for c in range(mesh.n_cells):
            shape = cell_shape(mesh, c)
            key = shape.key
            ops = by_key.get(key)
            if ops is None:
                ops = build_local_operators(shape, k, l, quad_degree)
                by_key[key] = ops
                members[key] = []
            members[key].append(c)
            self.ops_of_cell[c] = ops

        # face -> (owner cell, local slot) for face-wise interpolation
        self.face_owner_slot = np.empty((mesh.n_faces, 2), dtype=np.int64)
        for c in range(mesh.n_cells):
            for slot, f in enumerate(mesh.cell_faces[c]):
                if mesh.face_cells[f, 0] == c:
                    self.face_owner_slot[f] = (c, slot)

        self.groups = []
        for key, cells in sorted(members.items(), key=lambda kv: kv[1][0]):
            cells = np.array(cells, dtype=np.int64)
            ops = by_key[key]
            full_idx = np.empty((len(cells), ops.nloc), dtype=np.int64)
            for row, c in enumerate(cells):
                full_idx[row] = self._cell_full_indices(c)
            self.groups.append(
                CellGroup(
                    ops=ops,
                    cells=cells,
                    full_idx=full_idx,
                    origins=mesh.cell_centroid[cells],
                )
            )

    def _cell_full_indices(self, cell):
        out = [
            np.arange(
                cell * self.cell_dim, (cell + 1) * self.cell_dim, dtype=np.int64
            )
        ]
        base = self.mesh.n_cells * self.cell_dim
        for f in self.mesh.cell_faces[cell]:
            out.append(
                np.arange(
                    base + f * self.face_dim,
                    base + (f + 1) * self.face_dim,
                    dtype=np.int64,
                )
            )
        return np.concatenate(out)

    def face_full_slice(self, face):
        base = self.mesh.n_cells * self.cell_dim
        return slice(base + face * self.face_dim, base + (face + 1) * self.face_dim)

    def interpolate(self, v):
        """Global interpolation: cell and face L2 projections of ``v``."""
        out = np.zeros(self.full_size)
        for c in range(self.mesh.n_cells):
            ops = self.ops_of_cell[c]
            origin = self.mesh.cell_centroid[c]
            vals = np.asarray(v(ops.points + origin), dtype=float)
            nl = ops.dim_l
            rhs = ops.cell_vals[:, :nl].T @ (ops.weights * vals)
            lo = c * self.cell_dim
            out[lo : lo + nl] = np.linalg.solve(ops.mass[:nl, :nl], rhs)
        for f in range(self.mesh.n_faces):
            c, slot = self.face_owner_slot[f]
            ft = self.ops_of_cell[c].faces[slot]
            fvals = np.asarray(v(ft.points + self.mesh.cell_centroid[c]), dtype=float)
            out[self.face_full_slice(f)] = ft.proj @ fvals
        return out

    def local_vector(self, coeffs, cell):
        return coeffs[self._cell_full_indices(cell)]


@dataclass
class AssembledSystem:
    """Residual, sparse Jacobian and load vector in unknown ordering."""

    residual: np.ndarray
    jacobian: sp.csr_matrix
    load: np.ndarray


class Problem:
    """Discrete nonlinear problem: law, source and boundary conditions."""

    def __init__(self, disc, law, source, bc, kernel=None):
        self.disc = disc
        self.law = law
        self.source = source
        self.bc = bc
        self.kernel = kernel
        self.dofmap = DofMap(disc.mesh, disc.k, disc.l, bc)
        self.load_full = self._assemble_load()
        if bc.kind == "neumann":
            self.mean_full = self._assemble_mean_vector()
            self._check_neumann_compatibility()
        else:
            self.mean_full = None
        self.boundary_values = self._project_boundary_data()

    # -- setup ---------------------------------------------------------
    def _assemble_load(self):
        load = np.zeros(self.disc.full_size)
        nl = self.disc.cell_dim
        for grp in self.disc.groups:
            pts = grp.ops.points[None, :, :] + grp.origins[:, None, :]
            fv = np.asarray(self.source(pts.reshape(-1, 2)), dtype=float)
            fv = fv.reshape(len(grp.cells), -1)
            contrib = np.einsum(
                "mq,q,qi->mi", fv, grp.ops.weights, grp.ops.cell_vals[:, :nl]
            )
            cols = grp.full_idx[:, :nl]
            np.add.at(load, cols.ravel(), contrib.ravel())
        return load

    def _assemble_mean_vector(self):
        mean = np.zeros(self.disc.full_size)
        nl = self.disc.cell_dim
        for grp in self.disc.groups:
            cvec = grp.ops.weights @ grp.ops.cell_vals[:, :nl]
            np.add.at(
                mean,
                grp.full_idx[:, :nl].ravel(),
                np.broadcast_to(cvec, (len(grp.cells), nl)).ravel(),
            )
        return mean

    def _check_neumann_compatibility(self):
        total = 0.0
        total_abs = 0.0
        for grp in self.disc.groups:
            pts = grp.ops.points[None, :, :] + grp.origins[:, None, :]
            fv = np.asarray(self.source(pts.reshape(-1, 2)), dtype=float)
            fv = fv.reshape(len(grp.cells), -1)
            total += float(np.sum(fv @ grp.ops.weights))
            total_abs += float(np.sum(np.abs(fv) @ grp.ops.weights))
        if abs(total) > 1e-10 * max(total_abs, 1e-300):
            raise BoundaryError(
                f"Neumann source is not compatible: integral {total:.3e} "
                f"exceeds 1e-10 of the L1 norm {total_abs:.3e}"
            )

    def _project_boundary_data(self):
        """Dirichlet face coefficients pi_F^k g (zero when homogeneous)."""
        values = {}
        if self.bc.kind != "dirichlet" or self.bc.g is None:
            return values
        mesh = self.disc.mesh
        for f in np.flatnonzero(self.dofmap.dirichlet_faces):
            c, slot = self.disc.face_owner_slot[f]
            ft = self.disc.ops_of_cell[c].faces[slot]
            fvals = np.asarray(
                self.bc.g(ft.points + mesh.cell_centroid[c]), dtype=float
            )
            values[int(f)] = ft.proj @ fvals
        return values

    def initial_solution(self):
        """Zero state with Dirichlet boundary data applied."""
        sol = DiscreteSolution.zeros(self.dofmap)
        for f, coeffs in self.boundary_values.items():
            sol.coeffs[self.disc.face_full_slice(f)] = coeffs
        return sol

    # -- assembly ------------------------------------------------------
    def _law_pair(self, law_jac=None):
        law_res = self.law
        law_jac = law_jac or law_res
        if law_jac.p < 2.0 and law_jac.eps == 0.0:
            raise AssemblyError(
                "Newton for p < 2 requires a regularized Jacobian law "
                "(use law.with_eps)"
            )
        return law_res, law_jac

    def _group_systems(self, sol, want_jac, law_jac=None):
        law_res, law_jac = self._law_pair(law_jac)
        for grp in self.disc.groups:
            U = sol.coeffs[grp.full_idx]
            R, J = kernels.group_system(
                grp.ops,
                U,
                law_res,
                law_jac,
                grp.origins,
                want_jac,
                backend=self.kernel,
            )
            if not np.all(np.isfinite(R)):
                bad = int(grp.cells[~np.isfinite(R).all(axis=1)][0])
                raise AssemblyError(f"non-finite residual contribution in cell {bad}")
            yield grp, R, J

    def residual(self, sol):
        """Nonlinear residual on the unknowns (load subtracted)."""
        dm = self.dofmap
        r = np.zeros(dm.n_unknowns)
        for grp, R, _ in self._group_systems(sol, want_jac=False):
            unk = dm.unknown_index[grp.full_idx]
            keep = unk >= 0
            np.add.at(r, unk[keep], R[keep])
        self._finish_residual(r, sol)
        return r

    def _finish_residual(self, r, sol):
        dm = self.dofmap
        mask = dm.unknown_index >= 0
        nbody = dm.n_unknowns - (1 if dm.has_multiplier else 0)
        r[:nbody] -= self.load_full[mask]
        if dm.has_multiplier:
            r[:nbody] += sol.multiplier * self.mean_full[mask]
            r[-1] = float(self.mean_full @ sol.coeffs)

    def assemble_system(self, sol, law_jac=None):
        """Residual and sparse Jacobian over all unknowns."""
        dm = self.dofmap
        r = np.zeros(dm.n_unknowns)
        rows, cols, vals = [], [], []
        for grp, R, J in self._group_systems(sol, want_jac=True, law_jac=law_jac):
            unk = dm.unknown_index[grp.full_idx]
            keep = unk >= 0
            np.add.at(r, unk[keep], R[keep])
            m, nloc = unk.shape
            rr = np.broadcast_to(unk[:, :, None], (m, nloc, nloc))
            cc = np.broadcast_to(unk[:, None, :], (m, nloc, nloc))
            keep2 = (rr >= 0) & (cc >= 0)
            rows.append(rr[keep2])
            cols.append(cc[keep2])
            vals.append(J[keep2])
        self._finish_residual(r, sol)
        if dm.has_multiplier:
            unk_mean = dm.unknown_index >= 0
            idx = dm.unknown_index[unk_mean]
            mvals = self.mean_full[unk_mean]
            nz = mvals != 0.0
            rows.append(idx[nz])
            cols.append(np.full(nz.sum(), dm.n_unknowns - 1, dtype=np.int64))
            vals.append(mvals[nz])
            rows.append(np.full(nz.sum(), dm.n_unknowns - 1, dtype=np.int64))
            cols.append(idx[nz])
            vals.append(mvals[nz])
        jac = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dm.n_unknowns, dm.n_unknowns),
        ).tocsr()
        mask = dm.unknown_index >= 0
        load = np.zeros(dm.n_unknowns)
        load[: mask.sum()] = self.load_full[mask]
        return AssembledSystem(residual=r, jacobian=jac, load=load)

    def assemble_condensed(self, sol, law_jac=None):
        """Schur complement onto face (and multiplier) unknowns.

        Returns (residual, schur, rhs, recover) where ``recover`` maps the
        face-side Newton increment to the full increment on all unknowns;
        the step is algebraically identical to the uncondensed one.
        """
        dm = self.dofmap
        nl = self.disc.cell_dim
        ncu = dm.n_cell_unknowns
        nfu = dm.n_unknowns - ncu  # face unknowns (+ multiplier)
        r = np.zeros(dm.n_unknowns)
        rows, cols, vals = [], [], []
        recover_data = []

        systems = list(self._group_systems(sol, want_jac=True, law_jac=law_jac))
        for grp, R, J in systems:
            unk = dm.unknown_index[grp.full_idx]
            keep = unk >= 0
            np.add.at(r, unk[keep], R[keep])
        self._finish_residual(r, sol)

        r_mu = r[-1] if dm.has_multiplier else 0.0
        mu_col = nfu - 1 if dm.has_multiplier else None
        rhs = np.zeros(nfu)
        if dm.has_multiplier:
            rhs[-1] = r_mu

        for grp, R, J in systems:
            unk = dm.unknown_index[grp.full_idx]
            m, nloc = unk.shape
            A = J[:, :nl, :nl]
            B = J[:, :nl, nl:]
            C = J[:, nl:, :nl]
            D = J[:, nl:, nl:]
            r_c = r[unk[:, :nl]]  # cell rows are always unknowns
            stacked = np.concatenate([B, r_c[:, :, None]], axis=2)
            if dm.has_multiplier:
                cvec = self.mean_full[grp.full_idx[:, :nl]]
                stacked = np.concatenate([stacked, cvec[:, :, None]], axis=2)
            try:
                X = np.linalg.solve(A, stacked)
            except np.linalg.LinAlgError:
                bad = self._singular_cell(A, grp)
                raise AssemblyError(
                    f"singular cell block during condensation in cell {bad}"
                ) from None
            XB = X[:, :, : B.shape[2]]
            xr = X[:, :, B.shape[2]]
            S_loc = D - np.einsum("mik,mkj->mij", C, XB)
            rhs_loc = C @ xr[:, :, None]

            funk = unk[:, nl:] - ncu  # face-side unknown ids, -1 stays <0
            valid = funk >= 0
            rr = np.broadcast_to(funk[:, :, None], S_loc.shape)
            cc = np.broadcast_to(funk[:, None, :], S_loc.shape)
            keep2 = (rr >= 0) & (cc >= 0)
            rows.append(rr[keep2])
            cols.append(cc[keep2])
            vals.append(S_loc[keep2])
            np.add.at(rhs, funk[valid], -rhs_loc[:, :, 0][valid])

            xc = None
            if dm.has_multiplier:
                xc = X[:, :, -1]
                s_fmu = -np.einsum("mik,mk->mi", C, xc)
                rows.append(rr[:, :, 0][valid])
                cols.append(np.full(int(valid.sum()), mu_col, dtype=np.int64))
                vals.append(s_fmu[valid])
                rows.append(np.full(int(valid.sum()), mu_col, dtype=np.int64))
                cols.append(rr[:, :, 0][valid])
                s_muf = -np.einsum("mk,mkj->mj", cvec, XB)
                # multiplier couples to cells only: Schur row gets -c^T A^-1 B
                vals.append(s_muf[valid])
                rows.append(np.array([mu_col]))
                cols.append(np.array([mu_col]))
                vals.append(np.array([-float(np.einsum("mk,mk->", cvec, xc))]))
                rhs[-1] -= float(np.einsum("mk,mk->", cvec, xr))
            recover_data.append((grp, unk, XB, xr, xc, funk))

        if dm.has_multiplier:
            rhs[:-1] += r[ncu:-1]
        else:
            rhs += r[ncu:]
        schur = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(nfu, nfu),
        ).tocsr()

        def recover(delta_face):
            delta = np.zeros(dm.n_unknowns)
            if dm.has_multiplier:
                delta[ncu:-1] = delta_face[:-1]
                delta[-1] = delta_face[-1]
                dmu = delta_face[-1]
            else:
                delta[ncu:] = delta_face
                dmu = 0.0
            for grp, unk, XB, xr, xc, funk in recover_data:
                df = np.where(funk >= 0, delta_face[np.maximum(funk, 0)], 0.0)
                dc = -(xr + np.einsum("mik,mk->mi", XB, df))
                if xc is not None:
                    dc -= xc * dmu
                delta[unk[:, :nl]] = dc
            return delta

        return r, schur, rhs, recover

    def _singular_cell(self, A, grp):
        for i in range(A.shape[0]):
            if not np.isfinite(np.linalg.cond(A[i])) or np.linalg.cond(A[i]) > 1e15:
                return int(grp.cells[i])
        return int(grp.cells[0])

    def mean_value(self, sol):
        """Integral of the broken-polynomial part of the solution."""
        if self.mean_full is not None:
            return float(self.mean_full @ sol.coeffs)
        total = 0.0
        nl = self.disc.cell_dim
        for grp in self.disc.groups:
            cvec = grp.ops.weights @ grp.ops.cell_vals[:, :nl]
            total += float(np.sum(sol.coeffs[grp.full_idx[:, :nl]] @ cvec))
        return total


# -- spec-facing wrappers ----------------------------------------------
def build_dof_map(mesh, k, l, bc):
    return DofMap(mesh, k, l, bc)


def assemble_system(problem, sol):
    return problem.assemble_system(sol)


def apply_boundary_conditions(problem):
    """Fixed Dirichlet blocks as {face: coefficients} (empty for Neumann)."""
    return dict(problem.boundary_values)


def static_condense(problem, sol):
    return problem.assemble_condensed(sol)
