"""Polytopal 2D meshes: connectivity, geometry and quality metrics.

A mesh is a list of counterclockwise vertex loops over a shared vertex table.
Faces (edges), adjacency and normals are always derived from the cell loops,
never read from input.  Meshes are immutable after construction and safe to
share across threads.
"""

from dataclasses import dataclass, field

import numpy as np


class MeshError(ValueError):
    pass


def _polygon_area_centroid(verts):
    """Signed area and centroid of a polygon given by its vertex loop.

    Coordinates are centered on the first vertex before the shoelace sums so
    roundoff scales with the cell size, not with its position in the domain.
    """
    base = verts[0]
    x = verts[:, 0] - base[0]
    y = verts[:, 1] - base[1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * float(np.sum(cross))
    if abs(area) < 1e-300:
        raise MeshError("degenerate cell with zero area")
    cx = float(np.sum((x + xn) * cross)) / (6.0 * area)
    cy = float(np.sum((y + yn) * cross)) / (6.0 * area)
    return area, np.array([cx + base[0], cy + base[1]])


@dataclass
class SimplicialSubdivision:
    """Centroid-fan triangles per cell, with their diameters and inradii.

    ``triangles[i]`` has shape (n_i, 3, 2); the apex (centroid) comes first.
    """

    triangles: list
    diameters: list
    inradii: list
    areas: list

    def count(self, cell):
        return len(self.triangles[cell])


@dataclass
class MeshQualityReport:
    h: float
    rho: float
    max_faces_per_cell: int
    max_simplices_per_cell: int
    n_cells: int
    n_faces: int

    def as_dict(self):
        return {
            "h": self.h,
            "rho": self.rho,
            "max_faces_per_cell": self.max_faces_per_cell,
            "max_simplices_per_cell": self.max_simplices_per_cell,
            "n_cells": self.n_cells,
            "n_faces": self.n_faces,
        }


@dataclass
class Mesh:
    """Validated polytopal mesh of a 2D domain.

    Connectivity and geometry fields are filled by :func:`build_mesh`; the
    per-face normal is stored once, oriented out of the first adjacent cell,
    so interface normals of the two sides are exact negatives of each other.
    """

    vertices: np.ndarray
    cells: list
    dim: int = 2

    # connectivity (derived)
    faces: np.ndarray = None
    face_cells: np.ndarray = None
    cell_faces: list = None
    cell_face_sign: list = None
    is_boundary_face: np.ndarray = None

    # geometry (derived)
    cell_area: np.ndarray = None
    cell_centroid: np.ndarray = None
    cell_diameter: np.ndarray = None
    face_length: np.ndarray = None
    face_midpoint: np.ndarray = None
    face_normal: np.ndarray = None
    subdivision: SimplicialSubdivision = None

    _quality: MeshQualityReport = field(default=None, repr=False)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def h(self):
        return float(self.cell_diameter.max())

    def cell_vertices(self, cell):
        return self.vertices[self.cells[cell]]

    def outward_normal(self, cell, local_face):
        f = self.cell_faces[cell][local_face]
        return self.cell_face_sign[cell][local_face] * self.face_normal[f]

    def face_tangent(self, face):
        a, b = self.vertices[self.faces[face]]
        return (b - a) / np.linalg.norm(b - a)


def orient_cells_ccw(vertices, cells):
    """Return cell loops with positive (counterclockwise) orientation."""
    fixed = []
    for loop in cells:
        loop = np.asarray(loop, dtype=np.int64)
        if len(loop) < 3:
            raise MeshError("cell with fewer than 3 vertices")
        if len(np.unique(loop)) != len(loop):
            raise MeshError("cell loop repeats a vertex")
        verts = vertices[loop]
        x, y = verts[:, 0], verts[:, 1]
        area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        fixed.append(loop if area > 0 else loop[::-1])
    return fixed


def build_connectivity(mesh):
    """Derive faces, adjacency and ownership signs from the cell loops."""
    edge_index = {}
    faces = []
    face_cells = []
    cell_faces = []
    cell_face_sign = []
    for ci, loop in enumerate(mesh.cells):
        nf = len(loop)
        fids = np.empty(nf, dtype=np.int64)
        signs = np.empty(nf, dtype=np.int64)
        for i in range(nf):
            a, b = int(loop[i]), int(loop[(i + 1) % nf])
            key = (a, b) if a < b else (b, a)
            fid = edge_index.get(key)
            if fid is None:
                fid = len(faces)
                edge_index[key] = fid
                faces.append(key)
                face_cells.append([ci, -1])
                signs[i] = 1
            else:
                if face_cells[fid][1] != -1:
                    raise MeshError(f"non-manifold face {key} shared by >2 cells")
                if face_cells[fid][0] == ci:
                    raise MeshError(f"cell {ci} contains face {key} twice")
                face_cells[fid][1] = ci
                signs[i] = -1
            fids[i] = fid
        cell_faces.append(fids)
        cell_face_sign.append(signs)
    mesh.faces = np.array(faces, dtype=np.int64)
    mesh.face_cells = np.array(face_cells, dtype=np.int64)
    mesh.cell_faces = cell_faces
    mesh.cell_face_sign = cell_face_sign
    mesh.is_boundary_face = mesh.face_cells[:, 1] == -1
    return mesh


def compute_geometry(mesh):
    """Fill diameters, areas, centroids, normals and the centroid fan.

    The cell area is accumulated over the fan triangles (equivalently the
    shoelace formula); the outward normal of each cell edge is checked to
    point from the centroid towards the face.
    """
    nc = mesh.n_cells
    nf = mesh.n_faces
    mesh.cell_area = np.empty(nc)
    mesh.cell_centroid = np.empty((nc, 2))
    mesh.cell_diameter = np.empty(nc)

    a, b = mesh.faces[:, 0], mesh.faces[:, 1]
    va, vb = mesh.vertices[a], mesh.vertices[b]
    mesh.face_midpoint = 0.5 * (va + vb)
    mesh.face_length = np.linalg.norm(vb - va, axis=1)
    if np.any(mesh.face_length < 1e-300):
        raise MeshError("zero-length face")

    tris, diams, inradii, areas = [], [], [], []
    for ci, loop in enumerate(mesh.cells):
        verts = mesh.vertices[loop]
        area, centroid = _polygon_area_centroid(verts)
        diffs = verts[:, None, :] - verts[None, :, :]
        mesh.cell_diameter[ci] = np.sqrt((diffs**2).sum(-1).max())
        mesh.cell_centroid[ci] = centroid

        # centroid fan; star-shapedness w.r.t. the centroid is required
        vb_ = np.roll(verts, -1, axis=0)
        e1 = verts - centroid
        e2 = vb_ - centroid
        tri_area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        if np.any(tri_area <= 0.0):
            raise MeshError(
                f"cell {ci} is not star-shaped w.r.t. its centroid "
                "(centroid-fan subdivision invalid)"
            )
        cell_tris = np.stack(
            [np.broadcast_to(centroid, verts.shape), verts, vb_], axis=1
        )
        sides = np.stack(
            [
                np.linalg.norm(verts - vb_, axis=1),
                np.linalg.norm(centroid - vb_, axis=1),
                np.linalg.norm(centroid - verts, axis=1),
            ],
            axis=1,
        )
        tris.append(cell_tris)
        diams.append(sides.max(axis=1))
        inradii.append(2.0 * tri_area / sides.sum(axis=1))
        areas.append(tri_area)
        mesh.cell_area[ci] = float(tri_area.sum())
        if abs(mesh.cell_area[ci] - area) > 1e-12 * abs(area):
            raise MeshError(f"inconsistent area computation for cell {ci}")

    mesh.subdivision = SimplicialSubdivision(tris, diams, inradii, areas)

    # per-face unit normal, oriented out of the owner cell
    tang = (vb - va) / mesh.face_length[:, None]
    normal = np.column_stack([tang[:, 1], -tang[:, 0]])
    owner = mesh.face_cells[:, 0]
    to_face = mesh.face_midpoint - mesh.cell_centroid[owner]
    flip = np.sum(normal * to_face, axis=1) < 0.0
    normal[flip] *= -1.0
    mesh.face_normal = normal

    for ci in range(nc):
        fids = mesh.cell_faces[ci]
        out = mesh.cell_face_sign[ci][:, None] * mesh.face_normal[fids]
        dots = np.sum(out * (mesh.face_midpoint[fids] - mesh.cell_centroid[ci]), axis=1)
        if np.any(dots <= 0.0):
            raise MeshError(f"inconsistent outward normal in cell {ci}")
    return mesh


def validate(mesh, domain_area=None):
    """Check the closure identity sum_F |F| n_TF = 0 and area consistency."""
    for ci in range(mesh.n_cells):
        fids = mesh.cell_faces[ci]
        out = mesh.cell_face_sign[ci][:, None] * mesh.face_normal[fids]
        closure = (mesh.face_length[fids][:, None] * out).sum(axis=0)
        if np.linalg.norm(closure) > 1e-12 * mesh.cell_diameter[ci]:
            raise MeshError(f"cell {ci} violates the divergence closure identity")
    if domain_area is not None:
        total = float(mesh.cell_area.sum())
        if abs(total - domain_area) > 1e-12 * domain_area:
            raise MeshError(
                f"cell areas sum to {total}, expected {domain_area}"
            )
    return mesh


def build_mesh(vertices, cells, domain_area=None):
    """Construct, orient and validate a mesh from raw vertices and loops."""
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise MeshError("vertex table must have shape (n, 2)")
    mesh = Mesh(vertices=vertices, cells=orient_cells_ccw(vertices, cells))
    build_connectivity(mesh)
    compute_geometry(mesh)
    validate(mesh, domain_area=domain_area)
    return mesh


def quality_report(mesh):
    """Estimate the mesh regularity parameter from the centroid fan.

    rho is the minimum over fan simplices of r_S/h_S and over cells of
    h_S/h_T; it is an estimate for trend tracking, not a certified bound.
    """
    if mesh._quality is not None:
        return mesh._quality
    sub = mesh.subdivision
    rho = np.inf
    max_simp = 0
    for ci in range(mesh.n_cells):
        hs = sub.diameters[ci]
        rs = sub.inradii[ci]
        rho = min(rho, float((rs / hs).min()))
        rho = min(rho, float(hs.min() / mesh.cell_diameter[ci]))
        max_simp = max(max_simp, len(hs))
    report = MeshQualityReport(
        h=mesh.h,
        rho=rho,
        max_faces_per_cell=max(len(f) for f in mesh.cell_faces),
        max_simplices_per_cell=max_simp,
        n_cells=mesh.n_cells,
        n_faces=mesh.n_faces,
    )
    mesh._quality = report
    return report
