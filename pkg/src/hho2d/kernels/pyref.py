"""Pure-numpy assembly kernel (reference implementation).

Computes the flux and stabilization contributions of a group of congruent
cells to the residual and Jacobian, batched over the group.  This is the
fallback backend and the ground truth the compiled kernel is tested against;
it also handles laws outside the compiled dispatch (x- or s-dependent ones).
"""

import numpy as np

NAME = "python"

# cells per batch; bounds the O(chunk * nq * nloc) scratch arrays
_CHUNK = 256


def group_system(ops, U, law_res, law_jac, origins, want_jac):
    """Residual and Jacobian blocks for one shape group.

    ``U`` has shape (m, nloc); ``law_res`` evaluates the residual flux,
    ``law_jac`` the Newton linearization (usually the same law, possibly
    regularized).  ``origins`` are the cell centroids, needed only for
    x-dependent laws.  Returns (R, J) with J None when not requested.
    """
    m, nloc = U.shape
    R = np.zeros((m, nloc))
    J = np.zeros((m, nloc, nloc)) if want_jac else None
    E = ops.grad_vals
    w = ops.weights
    p = law_res.p
    needs_x = getattr(law_res, "depends_on_x", False)
    needs_s = law_res.depends_on_s

    for lo in range(0, m, _CHUNK):
        sl = slice(lo, min(lo + _CHUNK, m))
        Us = U[sl]
        mm = Us.shape[0]
        g = np.einsum("qcj,mj->mqc", E, Us, optimize=True)
        gflat = g.reshape(-1, 2)

        x = None
        s = None
        if needs_x:
            x = (ops.points[None, :, :] + origins[sl][:, None, :]).reshape(-1, 2)
        if needs_s:
            nl = ops.dim_l
            s = (ops.cell_vals[:, :nl] @ Us[:, :nl].T).T.reshape(-1)

        a = np.asarray(law_res.a(x, s, gflat)).reshape(mm, -1, 2)
        R[sl] += np.einsum("mqc,q,qcj->mj", a, w, E, optimize=True)
        if want_jac:
            da = np.asarray(law_jac.d_xi(x, s, gflat)).reshape(mm, -1, 2, 2)
            wk = np.einsum("q,mqce,qej->mqcj", w, da, E, optimize=True)
            J[sl] += np.einsum("qci,mqcj->mij", E, wk, optimize=True)
            if needs_s:
                ds = np.asarray(law_jac.d_s(x, s, gflat)).reshape(mm, -1, 2)
                wi = np.einsum("q,mqc,qci->mqi", w, ds, E, optimize=True)
                J[sl][:, :, : ops.dim_l] += np.einsum(
                    "mqi,qj->mij", wi, ops.cell_vals[:, : ops.dim_l], optimize=True
                )

        for ft in ops.faces:
            S = ft.stab
            scale = ft.h ** (1.0 - p)
            d = Us @ S.T
            R[sl] += scale * ((law_res.sigma(d) * ft.weights) @ S)
            if want_jac:
                dp = law_jac.sigma_prime(d) * ft.weights
                J[sl] += scale * np.einsum("mq,qi,qj->mij", dp, S, S, optimize=True)
    return R, J
