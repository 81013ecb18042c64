"""Assembly kernel backends.

Two interchangeable backends compute the per-group residual/Jacobian
contributions: a compiled Cython core (built at install time) and the
pure-numpy reference.  The compiled core is selected at import when
available; set ``HHO2D_KERNEL=python`` or ``=cython`` to force a backend.
Laws outside the compiled dispatch (no ``kernel_code``, or x/s-dependent)
always route through the numpy kernel regardless of the selection.
"""

import os

import numpy as np

from . import pyref

try:
    from . import _ccore
except ImportError:  # extension not built
    _ccore = None


class KernelError(RuntimeError):
    pass


def available_backends():
    return ("python",) if _ccore is None else ("python", "cython")


def default_backend():
    choice = os.environ.get("HHO2D_KERNEL", "auto").lower()
    if choice == "auto":
        return "cython" if _ccore is not None else "python"
    if choice not in ("python", "cython"):
        raise KernelError(f"HHO2D_KERNEL={choice!r} is not a backend")
    if choice == "cython" and _ccore is None:
        raise KernelError("cython kernel requested but the extension is not built")
    return choice


def _compiled_dispatchable(law_res, law_jac):
    return (
        _ccore is not None
        and law_res.kernel_code is not None
        and law_jac.kernel_code == law_res.kernel_code
        and not law_res.depends_on_s
        and not getattr(law_res, "depends_on_x", False)
    )


def _packed_faces(ops):
    packed = getattr(ops, "_packed_faces", None)
    if packed is None:
        S = np.ascontiguousarray(np.vstack([ft.stab for ft in ops.faces]))
        wf = np.concatenate([ft.weights for ft in ops.faces])
        ptr = np.zeros(len(ops.faces) + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(ft.weights) for ft in ops.faces])
        ops._packed_faces = packed = (S, wf, ptr)
    return packed


def _cython_group_system(ops, U, law_res, law_jac, origins, want_jac):
    S, wf, ptr = _packed_faces(ops)
    scale = np.array([ft.h ** (1.0 - law_res.p) for ft in ops.faces])
    alpha = getattr(law_res, "alpha", 0.0)
    t0 = getattr(law_res, "t0", 1.0)
    return _ccore.group_system(
        np.ascontiguousarray(U),
        ops.grad_vals,
        ops.weights,
        S,
        wf,
        ptr,
        scale,
        int(law_res.kernel_code),
        law_res.p,
        law_res.eps,
        law_jac.eps,
        alpha,
        t0,
        bool(want_jac),
    )


def group_system(ops, U, law_res, law_jac=None, origins=None, want_jac=True,
                 backend=None):
    """Dispatch one group contribution to the selected backend."""
    if law_jac is None:
        law_jac = law_res
    backend = backend or default_backend()
    if backend == "cython" and _compiled_dispatchable(law_res, law_jac):
        return _cython_group_system(ops, U, law_res, law_jac, origins, want_jac)
    return pyref.group_system(ops, U, law_res, law_jac, origins, want_jac)
