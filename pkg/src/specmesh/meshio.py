"""Mesh and matrix file I/O.

OBJ is the canonical interchange format. Floats are written with repr so
a write/read round trip reproduces float64 vertices bit-exactly. PLY
(ascii and binary little-endian) is supported read-only. Sparse symmetric
matrices serialize to a plain triplet text format for oracle cross-checks.
"""

import json
import os

import numpy as np

from .errors import IndexOutOfRange, NonTriangulable, ParseError
from .mesh import TriangleMesh


def _triangulate(poly):
    """Deterministic fan triangulation (0,1,2), (0,2,3), ..."""
    if len(poly) < 3:
        raise NonTriangulable(f"face with {len(poly)} vertices")
    return [(poly[0], poly[i], poly[i + 1]) for i in range(1, len(poly) - 1)]


def _read_obj(path):
    vertices = []
    polys = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise ParseError(f"{path}:{lineno}: vertex needs 3 coordinates")
                try:
                    vertices.append([float(x) for x in parts[1:4]])
                except ValueError as exc:
                    raise ParseError(f"{path}:{lineno}: {exc}") from None
            elif tag == "f":
                idx = []
                for token in parts[1:]:
                    head = token.split("/")[0]
                    try:
                        i = int(head)
                    except ValueError:
                        raise ParseError(f"{path}:{lineno}: bad face index {token!r}") from None
                    if i == 0:
                        raise ParseError(f"{path}:{lineno}: OBJ indices are 1-based")
                    # negative indices are relative to the running vertex count
                    idx.append(i - 1 if i > 0 else len(vertices) + i)
                polys.append((lineno, idx))
    n = len(vertices)
    faces = []
    for lineno, idx in polys:
        for i in idx:
            if not 0 <= i < n:
                raise IndexOutOfRange(f"{path}:{lineno}: face index {i + 1} out of range")
        faces.extend(_triangulate(idx))
    return np.asarray(vertices, dtype=np.float64).reshape(-1, 3), \
        np.asarray(faces, dtype=np.int64).reshape(-1, 3)


_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def _read_ply(path):
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"ply":
            raise ParseError(f"{path}: missing ply magic")
        fmt = None
        elements = []  # (name, count, [(prop_name, dtype) or ("list", count_t, item_t, name)])
        while True:
            line = fh.readline()
            if not line:
                raise ParseError(f"{path}: unterminated header")
            parts = line.decode("ascii", "replace").split()
            if not parts or parts[0] == "comment":
                continue
            if parts[0] == "format":
                fmt = parts[1]
            elif parts[0] == "element":
                elements.append((parts[1], int(parts[2]), []))
            elif parts[0] == "property":
                if not elements:
                    raise ParseError(f"{path}: property before element")
                if parts[1] == "list":
                    elements[-1][2].append(("list", parts[2], parts[3], parts[4]))
                else:
                    elements[-1][2].append((parts[2], parts[1]))
            elif parts[0] == "end_header":
                break
        if fmt not in ("ascii", "binary_little_endian"):
            raise ParseError(f"{path}: unsupported ply format {fmt!r}")
        vertices = None
        faces = []
        for name, count, props in elements:
            if fmt == "ascii":
                rows = [fh.readline().split() for _ in range(count)]
                if name == "vertex":
                    cols = [p[0] for p in props]
                    try:
                        ix, iy, iz = cols.index("x"), cols.index("y"), cols.index("z")
                    except ValueError:
                        raise ParseError(f"{path}: vertex element lacks x y z") from None
                    vertices = np.array(
                        [[float(r[ix]), float(r[iy]), float(r[iz])] for r in rows],
                        dtype=np.float64,
                    )
                elif name == "face":
                    for r in rows:
                        k = int(r[0])
                        faces.extend(_triangulate([int(v) for v in r[1:1 + k]]))
            else:
                if name == "vertex":
                    dtype = np.dtype([(p[0], "<" + _PLY_TYPES[p[1]]) for p in props])
                    data = np.frombuffer(fh.read(dtype.itemsize * count), dtype=dtype)
                    try:
                        vertices = np.stack(
                            [data["x"], data["y"], data["z"]], axis=1
                        ).astype(np.float64)
                    except KeyError:
                        raise ParseError(f"{path}: vertex element lacks x y z") from None
                elif name == "face":
                    for _ in range(count):
                        if len(props) != 1 or props[0][0] != "list":
                            raise ParseError(f"{path}: unsupported face properties")
                        _, count_t, item_t, _ = props[0]
                        ct = np.dtype("<" + _PLY_TYPES[count_t])
                        it = np.dtype("<" + _PLY_TYPES[item_t])
                        k = int(np.frombuffer(fh.read(ct.itemsize), dtype=ct)[0])
                        idx = np.frombuffer(fh.read(it.itemsize * k), dtype=it)
                        faces.extend(_triangulate([int(v) for v in idx]))
                else:
                    # skip an unknown fixed-width element
                    width = sum(np.dtype("<" + _PLY_TYPES[p[1]]).itemsize for p in props)
                    fh.read(width * count)
        if vertices is None:
            raise ParseError(f"{path}: no vertex element")
        return vertices, np.asarray(faces, dtype=np.int64).reshape(-1, 3)


def load_mesh(path, format=None):
    """Load a triangle mesh from an OBJ or PLY file.

    Polygons are fan-triangulated deterministically; vertex order is
    preserved from the file.
    """
    if format is None:
        ext = os.path.splitext(path)[1].lower()
        format = {".obj": "obj", ".ply": "ply"}.get(ext)
        if format is None:
            raise ParseError(f"cannot infer format of {path}")
    if format == "obj":
        vertices, faces = _read_obj(path)
    elif format == "ply":
        vertices, faces = _read_ply(path)
    else:
        raise ParseError(f"unsupported format {format!r}")
    return TriangleMesh(vertices, faces)


def save_mesh(path, mesh):
    """Write a mesh as OBJ. repr floats keep float64 round trips bit-exact."""
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in mesh.vertices:
            fh.write(f"v {float(x)!r} {float(y)!r} {float(z)!r}\n")
        for a, b, c in mesh.faces:
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")


def load_manifest(path):
    """Load a dataset manifest: a JSON list of mesh paths, in shape order.

    Paths are resolved relative to the manifest location. The object form
    {"meshes": [...]} is accepted as well.
    """
    with open(path, "r", encoding="utf-8") as fh:
        spec = json.load(fh)
    if isinstance(spec, dict):
        spec = spec.get("meshes")
    if not isinstance(spec, list) or not all(isinstance(p, str) for p in spec):
        raise ParseError(f"{path}: manifest must list mesh paths")
    base = os.path.dirname(os.path.abspath(path))
    return [load_mesh(os.path.join(base, p)) for p in spec]


def save_manifest(path, names):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"meshes": list(names)}, fh, indent=2)
        fh.write("\n")


def save_triplets(path, matrix):
    """Write a SparseSymMatrix as 'N nnz' header plus 'row col value' lines."""
    rows, cols, values = matrix.triplets()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{matrix.dimension} {len(values)}\n")
        for r, c, v in zip(rows, cols, values):
            fh.write(f"{r} {c} {float(v)!r}\n")


def load_triplets(path):
    """Read the triplet text format back into (dimension, rows, cols, values)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ParseError(f"{path}: bad triplet header")
        n, nnz = int(header[0]), int(header[1])
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        values = np.empty(nnz, dtype=np.float64)
        for i in range(nnz):
            parts = fh.readline().split()
            if len(parts) != 3:
                raise ParseError(f"{path}: truncated triplet file")
            rows[i], cols[i], values[i] = int(parts[0]), int(parts[1]), float(parts[2])
    return n, rows, cols, values
