"""Global DOF layout, boundary conditions and discrete solutions.

The full coefficient vector stacks all cell blocks (mesh order) followed by
all face blocks (mesh order).  Dirichlet boundary faces keep their slots in
the full vector but are excluded from the unknowns; the homogeneous Neumann
problem adds one scalar multiplier enforcing the zero-mean constraint, kept
separately from the full vector.
"""

from dataclasses import dataclass, field

import numpy as np

from .poly import space_dim


class BoundaryError(ValueError):
    pass


@dataclass(frozen=True)
class BoundaryCondition:
    """Dirichlet (optionally non-homogeneous) or zero-mean Neumann data."""

    kind: str
    g: callable = None

    @staticmethod
    def dirichlet(g=None):
        return BoundaryCondition("dirichlet", g)

    @staticmethod
    def neumann():
        return BoundaryCondition("neumann")

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann"):
            raise BoundaryError(f"unknown boundary condition {self.kind!r}")
        if self.kind == "neumann" and self.g is not None:
            raise BoundaryError("homogeneous Neumann takes no boundary data")


@dataclass
class DofMap:
    """Offsets of cell and face blocks and the unknown numbering.

    Unknowns are ordered cells first, then non-Dirichlet faces, then the
    Neumann multiplier (when present); this keeps every cell block leading,
    which static condensation relies on.
    """

    mesh: object
    k: int
    l: int
    bc: BoundaryCondition

    cell_dim: int = 0
    face_dim: int = 0
    full_size: int = 0
    n_unknowns: int = 0
    has_multiplier: bool = False
    n_cell_unknowns: int = 0
    unknown_index: np.ndarray = field(default=None, repr=False)
    dirichlet_faces: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        mesh = self.mesh
        self.cell_dim = space_dim(self.l)
        self.face_dim = self.k + 1
        nc, nf = mesh.n_cells, mesh.n_faces
        self.full_size = nc * self.cell_dim + nf * self.face_dim
        if self.bc.kind == "dirichlet":
            self.dirichlet_faces = mesh.is_boundary_face.copy()
            self.has_multiplier = False
        else:
            self.dirichlet_faces = np.zeros(nf, dtype=bool)
            self.has_multiplier = True

        self.unknown_index = np.full(self.full_size, -1, dtype=np.int64)
        self.n_cell_unknowns = nc * self.cell_dim
        self.unknown_index[: self.n_cell_unknowns] = np.arange(self.n_cell_unknowns)
        nxt = self.n_cell_unknowns
        for f in range(nf):
            if not self.dirichlet_faces[f]:
                lo = self.face_offset(f)
                self.unknown_index[lo : lo + self.face_dim] = np.arange(
                    nxt, nxt + self.face_dim
                )
                nxt += self.face_dim
        self.n_unknowns = nxt + (1 if self.has_multiplier else 0)

    def cell_offset(self, cell):
        return cell * self.cell_dim

    def face_offset(self, face):
        return self.mesh.n_cells * self.cell_dim + face * self.face_dim

    def cell_local_to_full(self, cell):
        """Full-vector indices of a cell's local DOF vector."""
        idx = [np.arange(self.cell_offset(cell), self.cell_offset(cell) + self.cell_dim)]
        for f in self.mesh.cell_faces[cell]:
            idx.append(np.arange(self.face_offset(f), self.face_offset(f) + self.face_dim))
        return np.concatenate(idx)

    def scatter_add(self, target, full_indices, values):
        unk = self.unknown_index[full_indices]
        keep = unk >= 0
        np.add.at(target, unk[keep], values[keep])


@dataclass
class DiscreteSolution:
    """Full hybrid coefficient vector plus the Neumann multiplier."""

    dofmap: DofMap
    coeffs: np.ndarray
    multiplier: float = 0.0

    @staticmethod
    def zeros(dofmap):
        return DiscreteSolution(dofmap, np.zeros(dofmap.full_size))

    def copy(self):
        return DiscreteSolution(self.dofmap, self.coeffs.copy(), self.multiplier)

    def unknowns(self):
        """Unknown sub-vector in solver ordering (multiplier last)."""
        mask = self.dofmap.unknown_index >= 0
        vals = self.coeffs[mask]
        if self.dofmap.has_multiplier:
            vals = np.append(vals, self.multiplier)
        return vals

    def add_update(self, delta):
        """Apply a Newton increment on the unknowns; fixed blocks untouched."""
        dm = self.dofmap
        mask = dm.unknown_index >= 0
        if dm.has_multiplier:
            self.coeffs[mask] += delta[:-1]
            self.multiplier += float(delta[-1])
        else:
            self.coeffs[mask] += delta

    def cell_block(self, cell):
        dm = self.dofmap
        lo = dm.cell_offset(cell)
        return self.coeffs[lo : lo + dm.cell_dim]

    def face_block(self, face):
        dm = self.dofmap
        lo = dm.face_offset(face)
        return self.coeffs[lo : lo + dm.face_dim]
