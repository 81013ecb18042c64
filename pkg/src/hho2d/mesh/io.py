"""Text serialization of meshes.

Format::

    DIM 2
    VERTICES n
    x y            (n lines)
    CELLS m
    count v1 ... vcount   (m lines, 0-based indices, counterclockwise)

Only vertices and cell loops are stored; faces, adjacency and normals are
always rederived on load.
"""

import numpy as np

from .core import MeshError, build_mesh


def dump_mesh(mesh):
    """Serialize a mesh to the text format."""
    lines = [f"DIM {mesh.dim}", f"VERTICES {len(mesh.vertices)}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices]
    lines.append(f"CELLS {mesh.n_cells}")
    for loop in mesh.cells:
        lines.append(" ".join([str(len(loop))] + [str(int(v)) for v in loop]))
    return "\n".join(lines) + "\n"


def load_mesh(text):
    """Parse and validate a mesh from the text format.

    Raises MeshError on malformed input, non-manifold faces (an edge shared
    by more than two cells), degenerate cells, or cells that are not
    star-shaped with respect to their centroid.  Clockwise loops are
    reoriented automatically.
    """
    tokens = text.split()
    pos = 0

    def take(expect=None):
        nonlocal pos
        if pos >= len(tokens):
            raise MeshError("unexpected end of mesh file")
        tok = tokens[pos]
        pos += 1
        if expect is not None and tok != expect:
            raise MeshError(f"expected {expect!r}, found {tok!r}")
        return tok

    def take_int(what):
        tok = take()
        try:
            return int(tok)
        except ValueError:
            raise MeshError(f"invalid {what}: {tok!r}") from None

    def take_float(what):
        tok = take()
        try:
            return float(tok)
        except ValueError:
            raise MeshError(f"invalid {what}: {tok!r}") from None

    take("DIM")
    dim = take_int("dimension")
    if dim != 2:
        raise MeshError(f"only DIM 2 is supported, found {dim}")
    take("VERTICES")
    nv = take_int("vertex count")
    verts = np.array(
        [[take_float("coordinate"), take_float("coordinate")] for _ in range(nv)]
    )
    take("CELLS")
    nc = take_int("cell count")
    cells = []
    for _ in range(nc):
        cnt = take_int("vertex count of cell")
        if cnt < 3:
            raise MeshError("cell with fewer than 3 vertices")
        loop = [take_int("vertex index") for _ in range(cnt)]
        if any(v < 0 or v >= nv for v in loop):
            raise MeshError("vertex index out of range")
        cells.append(loop)
    if pos != len(tokens):
        raise MeshError("trailing content after cell list")
    return build_mesh(verts, cells)


def load_mesh_file(path):
    with open(path, encoding="utf-8") as fh:
        return load_mesh(fh.read())


def dump_mesh_file(mesh, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_mesh(mesh))
