"""Per-element machinery: DOF layout, interpolation, reconstructions.

Everything is computed on a translation-reduced ``CellShape`` (vertices
relative to the cell centroid): scaled monomial bases only see relative
coordinates, so congruent cells produce identical operators and the builder
output can be shared between them.  The degrees are the face degree k and
the cell degree l in {k-1, k, k+1} (l = k-1 requires k >= 1).

The local DOF vector is laid out as [cell block (dim P^l) | one block of
size k+1 per face, in cell-loop order].
"""

from dataclasses import dataclass, field

import numpy as np

from .poly import CellBasis, FaceBasis, check_degree, space_dim
from .quadrature import polygon_rule, segment_rule


class VariantError(ValueError):
    pass


def validate_degrees(k, l):
    check_degree(k)
    if l not in (k - 1, k, k + 1):
        raise VariantError(f"cell degree l = {l} must be one of k-1, k, k+1")
    if l < 0:
        raise VariantError("the variant l = k-1 requires k >= 1")
    check_degree(l)


@dataclass(frozen=True)
class CellShape:
    """Geometry of one cell relative to its centroid.

    Face entries follow the cell loop; tangents point from the
    lexicographically smaller face endpoint to the larger one (the global
    convention), normals point outward.
    """

    verts: np.ndarray
    h: float
    area: float
    face_mid: np.ndarray
    face_tangent: np.ndarray
    face_length: np.ndarray
    face_normal: np.ndarray
    key: bytes = None

    @property
    def n_faces(self):
        return len(self.verts)


def cell_shape(mesh, cell):
    """Extract the translation-reduced geometry snapshot of a cell.

    The sharing key is computed from first-vertex-relative coordinates of
    the original vertex table, which are bit-identical for exact translates
    (structured dyadic meshes); centroid-relative data would carry
    cell-dependent rounding.
    """
    centroid = mesh.cell_centroid[cell]
    verts_abs = mesh.cell_vertices(cell)
    fids = mesh.cell_faces[cell]
    signs = mesh.cell_face_sign[cell]
    tangents = np.array([mesh.face_tangent(f) for f in fids])
    key = (
        (verts_abs - verts_abs[0]).tobytes()
        + (mesh.face_midpoint[fids] - verts_abs[0]).tobytes()
        + tangents.tobytes()
        + np.float64(mesh.cell_diameter[cell]).tobytes()
    )
    return CellShape(
        verts=verts_abs - centroid,
        h=float(mesh.cell_diameter[cell]),
        area=float(mesh.cell_area[cell]),
        face_mid=mesh.face_midpoint[fids] - centroid,
        face_tangent=tangents,
        face_length=mesh.face_length[fids].copy(),
        face_normal=signs[:, None] * mesh.face_normal[fids],
        key=key,
    )


@dataclass
class FaceTables:
    """Evaluation tables of one face at the elevated quadrature points."""

    h: float
    length: float
    normal: np.ndarray
    points: np.ndarray  # relative to the cell centroid
    weights: np.ndarray
    basis_vals: np.ndarray  # face basis (nq, k+1)
    cell_trace: np.ndarray  # cell basis of P^(k+1) (nq, N_{k+1})
    stab: np.ndarray = None  # local dofs -> values of pi_F(v_F - P_T v)
    proj: np.ndarray = None  # values on points -> face L2 coefficients


@dataclass
class LocalOperators:
    """Reconstruction matrices and quadrature tables for one cell shape."""

    shape: CellShape
    k: int
    l: int
    quad_degree: int

    dim_l: int = 0
    dim_k: int = 0
    dim_kp1: int = 0
    nloc: int = 0

    basis: CellBasis = None  # degree k+1; lower degrees are leading slices
    face_bases: list = None
    mass: np.ndarray = None  # (N_{k+1}, N_{k+1})

    gradient: np.ndarray = None  # G: dofs -> P^k(T)^2 coefficients
    potential: np.ndarray = None  # p_T: dofs -> P^(k+1) coefficients
    second_potential: np.ndarray = None  # P_T: dofs -> P^(k+1) coefficients
    stab_diff: list = None  # D_F: dofs -> P^k(F) coefficients, per face

    weights: np.ndarray = None
    points: np.ndarray = None  # relative to centroid
    cell_vals: np.ndarray = None  # (nq, N_{k+1})
    cell_grads: np.ndarray = None  # (nq, N_{k+1}, 2)
    grad_vals: np.ndarray = None  # E: (nq, 2, nloc), values of G_T
    faces: list = field(default_factory=list)

    @property
    def cell_slice(self):
        return slice(0, self.dim_l)

    def face_slice(self, i):
        lo = self.dim_l + i * (self.k + 1)
        return slice(lo, lo + self.k + 1)

    def interpolate(self, v, origin=(0.0, 0.0)):
        """Local interpolation: cell and face L2 projections of ``v``.

        ``origin`` is the cell centroid in physical coordinates; ``v`` is
        evaluated at the shifted quadrature points.
        """
        origin = np.asarray(origin, dtype=float)
        out = np.empty(self.nloc)
        vals = np.asarray(v(self.points + origin), dtype=float)
        nl = self.dim_l
        rhs = self.cell_vals[:, :nl].T @ (self.weights * vals)
        out[: self.dim_l] = np.linalg.solve(self.mass[:nl, :nl], rhs)
        for i, ft in enumerate(self.faces):
            fvals = np.asarray(v(ft.points + origin), dtype=float)
            out[self.face_slice(i)] = ft.proj @ fvals
        return out

    def project_cell(self, v, degree, origin=(0.0, 0.0)):
        """L2 projection of ``v`` onto P^degree(T) (degree <= k+1)."""
        origin = np.asarray(origin, dtype=float)
        n = space_dim(degree)
        vals = np.asarray(v(self.points + origin), dtype=float)
        rhs = self.cell_vals[:, :n].T @ (self.weights * vals)
        return np.linalg.solve(self.mass[:n, :n], rhs)

    def gradient_values(self, dofs):
        """Values of G_T applied to a local DOF vector, shape (nq, 2)."""
        return np.einsum("qcj,j->qc", self.grad_vals, dofs)

    def stab_values(self, dofs):
        """Per-face values of pi_F(v_F - P_T v) at the face points."""
        return [ft.stab @ dofs for ft in self.faces]

    def stab_bilinear(self, u, v, p):
        """s_T(u, v) with the exact (unregularized) scalar nonlinearity."""
        total = 0.0
        for ft in self.faces:
            du = ft.stab @ u
            dv = ft.stab @ v
            sg = np.abs(du) ** (p - 2.0) * du if p != 2.0 else du
            if p < 2.0:
                sg = np.where(du != 0.0, sg, 0.0)
            total += ft.h ** (1.0 - p) * np.sum(ft.weights * sg * dv)
        return float(total)

    def norms(self, dofs, p):
        """Local seminorms of a DOF vector.

        Returns the hybrid W^{1,p} seminorm, the stabilization seminorm
        s_T(v,v)^{1/p}, and the L^p norms of G_T v and of grad p_T v.
        """
        w = self.weights
        nl = self.dim_l
        gradT = np.einsum("qid,i->qd", self.cell_grads[:, :nl, :], dofs[:nl])
        cell_term = float(w @ np.linalg.norm(gradT, axis=1) ** p)
        face_term = 0.0
        for i, ft in enumerate(self.faces):
            diff = ft.basis_vals @ dofs[self.face_slice(i)] - ft.cell_trace[
                :, :nl
            ] @ dofs[:nl]
            face_term += ft.h ** (1.0 - p) * float(ft.weights @ np.abs(diff) ** p)
        seminorm = (cell_term + face_term) ** (1.0 / p)

        gvals = self.gradient_values(dofs)
        norm_G = float(w @ np.linalg.norm(gvals, axis=1) ** p) ** (1.0 / p)

        pgrad = np.einsum("qid,i->qd", self.cell_grads, self.potential @ dofs)
        norm_pgrad = float(w @ np.linalg.norm(pgrad, axis=1) ** p) ** (1.0 / p)

        s_val = self.stab_bilinear(dofs, dofs, p)
        return {
            "seminorm_1p": seminorm,
            "stab": max(s_val, 0.0) ** (1.0 / p),
            "grad_recon": norm_G,
            "grad_potential": norm_pgrad,
        }


def _face_rule_rel(shape, i, degree):
    mid = shape.face_mid[i]
    tang = shape.face_tangent[i]
    half = 0.5 * shape.face_length[i] * tang
    return segment_rule(mid - half, mid + half, degree)


def build_gradient_reconstruction(shape, k, l, basis, mass, face_data):
    """Matrix of the discrete gradient G_T : dofs -> P^k(T)^2.

    Defined by (G_T v, phi)_T = (grad v_T, phi)_T
    + sum_F (v_F - v_T, phi . n_TF)_F for all phi in P^k(T)^2.
    """
    nk = space_dim(k)
    nl = space_dim(l)
    nloc = nl + shape.n_faces * (k + 1)
    rule = polygon_rule(shape.verts, (0.0, 0.0), 2 * k + 2)
    vals = basis.eval(rule.points)[:, :nk]
    grads = basis.grad(rule.points)[:, :nl, :]

    rhs = np.zeros((2 * nk, nloc))
    w = rule.weights
    for c in range(2):
        rhs[c * nk : (c + 1) * nk, :nl] = vals.T @ (w[:, None] * grads[:, :, c])

    for i, (fb, frule) in enumerate(face_data):
        n = shape.face_normal[i]
        tr_k = basis.eval(frule.points)[:, :nk]
        tr_l = basis.eval(frule.points)[:, :nl]
        fvals = fb.eval(frule.points)
        fw = frule.weights
        lo = nl + i * (k + 1)
        for c in range(2):
            block = tr_k.T * (fw * n[c])
            rhs[c * nk : (c + 1) * nk, lo : lo + k + 1] += block @ fvals
            rhs[c * nk : (c + 1) * nk, :nl] -= block @ tr_l

    mk = mass[:nk, :nk]
    out = np.empty_like(rhs)
    out[:nk] = np.linalg.solve(mk, rhs[:nk])
    out[nk:] = np.linalg.solve(mk, rhs[nk:])
    return out


def build_potential_reconstruction(shape, k, l, basis, gradient):
    """Matrix of p_T : dofs -> P^(k+1)(T).

    grad p_T v is the L2 projection of G_T v onto grad P^(k+1)(T) and the
    mean of p_T v matches the mean of v_T; the constant mode is fixed by
    substituting the mean constraint for the (trivial) constant-test row.
    """
    nk = space_dim(k)
    nl = space_dim(l)
    nkp1 = space_dim(k + 1)
    nloc = gradient.shape[1]
    rule = polygon_rule(shape.verts, (0.0, 0.0), 2 * k + 2)
    w = rule.weights
    grads = basis.grad(rule.points)  # (nq, nkp1, 2)
    vals_k = basis.eval(rule.points)[:, :nk]
    vals_kp1 = basis.eval(rule.points)

    stiff = np.einsum("qid,q,qjd->ij", grads, w, grads)
    # (G_T v, grad w)_T rows through the vector-basis coefficients of G_T v
    cmat = np.empty((nkp1, 2 * nk))
    for c in range(2):
        cmat[:, c * nk : (c + 1) * nk] = grads[:, :, c].T @ (w[:, None] * vals_k)
    rhs = cmat @ gradient

    # mean constraint replaces the constant-mode row
    stiff[0, :] = w @ vals_kp1
    rhs[0, :] = 0.0
    rhs[0, :nl] = w @ vals_kp1[:, :nl]
    return np.linalg.solve(stiff, rhs)


def build_second_potential(k, l, mass, potential):
    """Matrix of P_T v = v_T + (p_T v - pi^l_T p_T v), valued in P^(k+1)."""
    nl = space_dim(l)
    nkp1 = space_dim(k + 1)
    nloc = potential.shape[1]
    proj_l = np.zeros((nkp1, nkp1))
    proj_l[:nl, :] = np.linalg.solve(mass[:nl, :nl], mass[:nl, :])
    out = (np.eye(nkp1) - proj_l) @ potential
    out[:nl, :nl] += np.eye(nl)
    return out


def build_stabilization(shape, k, l, basis, second_potential, face_data):
    """Per-face difference operators D_F : dofs -> pi^k_F(v_F - P_T v)."""
    nl = space_dim(l)
    nloc = second_potential.shape[1]
    mats = []
    for i, (fb, frule) in enumerate(face_data):
        fvals = fb.eval(frule.points)
        fw = frule.weights
        fmass = (fvals * fw[:, None]).T @ fvals
        trace = basis.eval(frule.points)  # P^(k+1) trace on the face
        rhs = (fvals * fw[:, None]).T @ trace
        d = -np.linalg.solve(fmass, rhs) @ second_potential
        lo = nl + i * (k + 1)
        d[:, lo : lo + k + 1] += np.eye(k + 1)
        mats.append(d)
    return mats


def build_local_operators(shape, k, l=None, quad_degree=None):
    """Assemble all local operators and quadrature tables for one shape."""
    if l is None:
        l = k
    validate_degrees(k, l)
    if quad_degree is None:
        quad_degree = 2 * k + 10

    nl, nk, nkp1 = space_dim(l), space_dim(k), space_dim(k + 1)
    ops = LocalOperators(shape=shape, k=k, l=l, quad_degree=quad_degree)
    ops.dim_l, ops.dim_k, ops.dim_kp1 = nl, nk, nkp1
    ops.nloc = nl + shape.n_faces * (k + 1)

    basis = CellBasis((0.0, 0.0), shape.h, k + 1)
    mrule = polygon_rule(shape.verts, (0.0, 0.0), 2 * (k + 1))
    mvals = basis.eval(mrule.points)
    basis.mass = (mvals * mrule.weights[:, None]).T @ mvals
    ops.basis = basis
    ops.mass = basis.mass

    face_bases = []
    face_build = []
    for i in range(shape.n_faces):
        fb = FaceBasis(
            shape.face_mid[i], shape.face_tangent[i], shape.face_length[i], k
        )
        frule = _face_rule_rel(shape, i, 2 * k + 2)
        fvals = fb.eval(frule.points)
        fb.mass = (fvals * frule.weights[:, None]).T @ fvals
        face_bases.append(fb)
        face_build.append((fb, frule))
    ops.face_bases = face_bases

    ops.gradient = build_gradient_reconstruction(
        shape, k, l, basis, basis.mass, face_build
    )
    ops.potential = build_potential_reconstruction(shape, k, l, basis, ops.gradient)
    ops.second_potential = build_second_potential(k, l, basis.mass, ops.potential)
    ops.stab_diff = build_stabilization(
        shape, k, l, basis, ops.second_potential, face_build
    )

    # elevated-degree tables for nonlinear integrands and interpolation
    rule = polygon_rule(shape.verts, (0.0, 0.0), quad_degree)
    ops.weights = rule.weights
    ops.points = rule.points
    ops.cell_vals = basis.eval(rule.points)
    ops.cell_grads = basis.grad(rule.points)
    gv = np.empty((len(rule.weights), 2, ops.nloc))
    for c in range(2):
        gv[:, c, :] = ops.cell_vals[:, :nk] @ ops.gradient[c * nk : (c + 1) * nk]
    ops.grad_vals = gv

    for i, fb in enumerate(face_bases):
        frule = _face_rule_rel(shape, i, quad_degree)
        bv = fb.eval(frule.points)
        ft = FaceTables(
            h=float(shape.face_length[i]),
            length=float(shape.face_length[i]),
            normal=shape.face_normal[i],
            points=frule.points,
            weights=frule.weights,
            basis_vals=bv,
            cell_trace=basis.eval(frule.points),
        )
        ft.stab = bv @ ops.stab_diff[i]
        ft.proj = np.linalg.solve(fb.mass, (bv * frule.weights[:, None]).T)
        ops.faces.append(ft)
    return ops


def interpolate(mesh, cell, k, l, v, quad_degree=None):
    """Convenience wrapper: I_T v as a local DOF vector on a mesh cell."""
    ops = build_local_operators(cell_shape(mesh, cell), k, l, quad_degree)
    return ops.interpolate(v, origin=mesh.cell_centroid[cell])
