"""Discrete norms of hybrid coefficient vectors and error measures.

All integrals use the discretization's elevated quadrature tables, so the
norms are accurate also for non-integer exponents p.
"""

import numpy as np


def _group_iter(disc, coeffs):
    for grp in disc.groups:
        yield grp, coeffs[grp.full_idx]


def broken_lp_norm(disc, coeffs, p):
    """L^p norm of the broken-polynomial (cell) part."""
    nl = disc.cell_dim
    total = 0.0
    for grp, U in _group_iter(disc, coeffs):
        vals = U[:, :nl] @ grp.ops.cell_vals[:, :nl].T
        total += float((np.abs(vals) ** p @ grp.ops.weights).sum())
    return total ** (1.0 / p)


def broken_grad_lp_norm(disc, coeffs, p):
    """L^p norm of the broken gradient of the cell part."""
    nl = disc.cell_dim
    total = 0.0
    for grp, U in _group_iter(disc, coeffs):
        g = np.einsum("qid,mi->mqd", grp.ops.cell_grads[:, :nl, :], U[:, :nl])
        total += float((np.linalg.norm(g, axis=-1) ** p @ grp.ops.weights).sum())
    return total ** (1.0 / p)


def grad_recon_lp_norm(disc, coeffs, p):
    """L^p norm of the reconstructed gradient G_h."""
    total = 0.0
    for grp, U in _group_iter(disc, coeffs):
        g = np.einsum("qcj,mj->mqc", grp.ops.grad_vals, U)
        total += float((np.linalg.norm(g, axis=-1) ** p @ grp.ops.weights).sum())
    return total ** (1.0 / p)


def norm_1ph(disc, coeffs, p):
    """Hybrid W^{1,p} seminorm: broken gradient plus face differences."""
    nl = disc.cell_dim
    total = 0.0
    for grp, U in _group_iter(disc, coeffs):
        g = np.einsum("qid,mi->mqd", grp.ops.cell_grads[:, :nl, :], U[:, :nl])
        total += float((np.linalg.norm(g, axis=-1) ** p @ grp.ops.weights).sum())
        for i, ft in enumerate(grp.ops.faces):
            sl = grp.ops.face_slice(i)
            diff = U[:, sl] @ ft.basis_vals.T - U[:, :nl] @ ft.cell_trace[:, :nl].T
            total += ft.h ** (1.0 - p) * float(
                (np.abs(diff) ** p @ ft.weights).sum()
            )
    return total ** (1.0 / p)


def dg_norm(disc, coeffs, p):
    """Broken W^{1,p} norm with face jumps (boundary jump = trace)."""
    mesh = disc.mesh
    nl = disc.cell_dim
    total = broken_grad_lp_norm(disc, coeffs, p) ** p
    for f in range(mesh.n_faces):
        c0, slot0 = disc.face_owner_slot[f]
        ops0 = disc.ops_of_cell[c0]
        ft = ops0.faces[slot0]
        lo0 = c0 * nl
        jump = ft.cell_trace[:, :nl] @ coeffs[lo0 : lo0 + nl]
        c1 = mesh.face_cells[f, 1]
        if c1 >= 0:
            pts = ft.points + mesh.cell_centroid[c0] - mesh.cell_centroid[c1]
            lo1 = c1 * nl
            jump = jump - disc.ops_of_cell[c1].basis.eval(pts)[:, :nl] @ coeffs[
                lo1 : lo1 + nl
            ]
        total += mesh.face_length[f] ** (1.0 - p) * float(
            np.abs(jump) ** p @ ft.weights
        )
    return total ** (1.0 / p)


def potential_gap_lp_norm(disc, coeffs, p):
    """L^p norm of u_h - p_h u_h (cell part minus potential lift)."""
    nl = disc.cell_dim
    total = 0.0
    for grp, U in _group_iter(disc, coeffs):
        pot = U @ grp.ops.potential.T
        vals = U[:, :nl] @ grp.ops.cell_vals[:, :nl].T - pot @ grp.ops.cell_vals.T
        total += float((np.abs(vals) ** p @ grp.ops.weights).sum())
    return total ** (1.0 / p)


def discrete_norms(disc, coeffs, p):
    """The three solution norms used in the studies and probes."""
    return {
        "norm_1ph": norm_1ph(disc, coeffs, p),
        "norm_dg": dg_norm(disc, coeffs, p),
        "norm_grad_recon": grad_recon_lp_norm(disc, coeffs, p),
    }


def gradient_error(disc, coeffs, exact_u, p):
    """|| G_h (u_h - I_h u) ||_{L^p} against a manufactured solution."""
    delta = coeffs - disc.interpolate(exact_u)
    return grad_recon_lp_norm(disc, delta, p)


def interpolant_gradient_error(disc, exact_u, exact_grad, p):
    """|| G_h I_h u - grad u ||_{L^p}; decays at order k+1 for smooth u."""
    coeffs = disc.interpolate(exact_u)
    total = 0.0
    for grp, U in _group_iter(disc, coeffs):
        g = np.einsum("qcj,mj->mqc", grp.ops.grad_vals, U)
        pts = grp.ops.points[None, :, :] + grp.origins[:, None, :]
        ge = exact_grad(pts.reshape(-1, 2)).reshape(g.shape)
        total += float(
            (np.linalg.norm(g - ge, axis=-1) ** p @ grp.ops.weights).sum()
        )
    return total ** (1.0 / p)


def stabilization_total(disc, coeffs, p):
    """Sum over cells of s_T(v, v) for a hybrid vector v."""
    total = 0.0
    for grp, U in _group_iter(disc, coeffs):
        for ft in grp.ops.faces:
            d = U @ ft.stab.T
            total += ft.h ** (1.0 - p) * float(
                np.sum((np.abs(d) ** p * ft.weights[None, :]))
            )
    return total
