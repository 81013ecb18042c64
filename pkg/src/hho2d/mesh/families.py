"""Structured mesh families on the unit square.

Three refinement families are provided: ``triangular`` (right-triangle split
of an n x n grid), ``cartesian`` (n x n squares) and ``hexagonal`` (a regular
hexagon tiling clipped to the square; clipped boundary cells are general
polygons).  Successive levels halve the meshsize.
"""

from dataclasses import dataclass

import numpy as np

from .core import MeshError, build_mesh

FAMILIES = ("triangular", "cartesian", "hexagonal")
MAX_LEVEL = 8

# The hexagon lattice is laid out so that its vertical period is an exact
# dyadic fraction of the square side: horizontal cuts then always land midway
# between vertex rows and cannot produce thin cells.  The horizontal phase
# (one entry per level, in units of the circumradius) was scanned offline to
# keep vertical and corner cuts fat as well; the generator rejects any
# remaining sliver, so a bad phase fails loudly instead of degrading quality.
_HEX_OX = (0.230, 0.460, 0.180, 0.360, 1.4630, 1.4249, 1.3508, 0.4516, 0.1552)


@dataclass(frozen=True)
class MeshFamilySpec:
    """A family name and refinement level on the unit square."""

    family: str
    level: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise MeshError(f"unknown mesh family {self.family!r}")
        if not 0 <= self.level <= MAX_LEVEL:
            raise MeshError(f"level {self.level} outside [0, {MAX_LEVEL}]")


def generate_mesh_family(spec):
    """Generate the mesh described by ``spec`` (a validated Mesh)."""
    if not isinstance(spec, MeshFamilySpec):
        spec = MeshFamilySpec(*spec)
    if spec.family == "cartesian":
        return _cartesian(2**spec.level)
    if spec.family == "triangular":
        return _triangular(2**spec.level)
    return _hexagonal(spec.level)


def _grid_vertices(n):
    xs = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(xs, xs, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def _vid(i, j, n):
    return i * (n + 1) + j


def _cartesian(n):
    verts = _grid_vertices(n)
    cells = [
        [_vid(i, j, n), _vid(i + 1, j, n), _vid(i + 1, j + 1, n), _vid(i, j + 1, n)]
        for i in range(n)
        for j in range(n)
    ]
    return build_mesh(verts, cells, domain_area=1.0)


def _triangular(n):
    verts = _grid_vertices(n)
    cells = []
    for i in range(n):
        for j in range(n):
            v00 = _vid(i, j, n)
            v10 = _vid(i + 1, j, n)
            v11 = _vid(i + 1, j + 1, n)
            v01 = _vid(i, j + 1, n)
            cells.append([v00, v10, v11])
            cells.append([v00, v11, v01])
    return build_mesh(verts, cells, domain_area=1.0)


def _clip_edge(poly, axis, bound, keep_below):
    """Sutherland-Hodgman step against one side of the unit square.

    Intersections are computed from the lexicographically ordered endpoint
    pair so the two cells sharing a cut edge obtain bit-identical points.
    """
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        pin = p[axis] <= bound if keep_below else p[axis] >= bound
        qin = q[axis] <= bound if keep_below else q[axis] >= bound
        if pin:
            out.append(p)
        if pin != qin:
            lo, hi = (p, q) if p <= q else (q, p)
            t = (bound - lo[axis]) / (hi[axis] - lo[axis])
            pt = [lo[0] + t * (hi[0] - lo[0]), lo[1] + t * (hi[1] - lo[1])]
            pt[axis] = bound  # land exactly on the clip line
            out.append(tuple(pt))
    return out


def _clip_to_unit_square(poly):
    for axis, bound, keep_below in (
        (0, 0.0, False),
        (0, 1.0, True),
        (1, 0.0, False),
        (1, 1.0, True),
    ):
        poly = _clip_edge(poly, axis, bound, keep_below)
        if len(poly) < 3:
            return []
    # drop duplicates produced when a vertex lies exactly on a clip line
    dedup = [p for i, p in enumerate(poly) if p != poly[i - 1]]
    return dedup if len(dedup) >= 3 else []


def _hexagonal(level, ox_over_r=None):
    dy = 0.5 / 2**level  # vertical lattice period, exactly dyadic
    r = dy / np.sqrt(3.0)
    ox = (_HEX_OX[level] if ox_over_r is None else ox_over_r) * r
    oy = 0.25 * dy  # boundary lines land midway between vertex rows
    hex_area = 1.5 * np.sqrt(3.0) * r * r

    # Every lattice vertex is evaluated from its global integer indices so
    # neighbouring hexagons produce bit-identical coordinates and the cells
    # merge exactly along their shared edges.
    def lattice_point(mx, my):
        return (ox + 0.5 * r * mx, oy + 0.5 * dy * my)

    # flat-top regular hexagon around center (3i, 2j [+1 odd column]) in
    # half-step units: (mx, my) offsets of the six corners, counterclockwise
    offsets = ((2, 0), (1, 1), (-1, 1), (-2, 0), (-1, -1), (1, -1))

    vertex_id = {}
    verts = []
    cells = []

    def vid(key, pt):
        idx = vertex_id.get(key)
        if idx is None:
            idx = len(verts)
            vertex_id[key] = idx
            verts.append(pt)
        return idx

    imin = int(np.floor((-r - ox) / (1.5 * r))) - 1
    imax = int(np.ceil((1.0 + r - ox) / (1.5 * r))) + 1
    for i in range(imin, imax + 1):
        yoff = oy + (0.5 * dy if i % 2 else 0.0)
        jmin = int(np.floor((-0.5 * dy - yoff) / dy)) - 1
        jmax = int(np.ceil((1.0 + 0.5 * dy - yoff) / dy)) + 1
        for j in range(jmin, jmax + 1):
            mx0, my0 = 3 * i, 2 * j + (i % 2)
            corner_idx = [(mx0 + dx_, my0 + dy_) for dx_, dy_ in offsets]
            poly = [lattice_point(mx, my) for mx, my in corner_idx]
            clipped = _clip_to_unit_square(poly)
            if not clipped:
                continue
            area = _loop_area(clipped)
            if area < 1e-12:
                continue
            if area < 0.02 * hex_area:
                raise MeshError(
                    f"hexagonal level {level}: sliver cell of area {area:.3e}; "
                    "lattice phase needs retuning"
                )
            lattice_lookup = {p: ("L",) + k for p, k in zip(poly, corner_idx)}
            loop = [
                vid(lattice_lookup.get(p, ("C",) + p), p)  # integer key when uncut
                for p in clipped
            ]
            cells.append(loop)

    return build_mesh(np.array(verts), cells, domain_area=1.0)


def _loop_area(poly):
    pts = np.asarray(poly)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
