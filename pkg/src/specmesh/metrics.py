"""Point-wise L1 error and the dihedral angle mesh error (DAME).

DAME averages, over interior edges, the area-weighted absolute difference
of oriented dihedral angles, attenuated by a masking term m(D) =
1 / (1 + c |D|) so error hidden in strong reference curvature counts
less. Border edges are ignored; the area weight is the two adjacent
reference triangle areas over twice the mean triangle area, which keeps
the metric scale free.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConnectivityMismatch, InconsistentWinding, NoInteriorEdges


@dataclass(frozen=True)
class MetricReport:
    """l1 and dame values, optionally the per-edge dame summands."""

    l1: float
    dame: float
    per_edge_dame: np.ndarray = None
    interior_edges: np.ndarray = None


def _check_connectivity(reference, test):
    if reference.connectivity_hash != test.connectivity_hash:
        raise ConnectivityMismatch("meshes do not share a face table")


def l1_error(reference, test):
    """Mean absolute difference over all 3N coordinates."""
    _check_connectivity(reference, test)
    return float(np.abs(reference.vertices - test.vertices).mean())


def interior_edges(faces):
    """Interior edges as (E, 4) rows (v0, v1, face_a, face_b).

    Each interior edge must appear once per direction across the two
    adjacent faces; anything else means inconsistent winding or a
    non-manifold edge.
    """
    f = np.asarray(faces)
    n_faces = len(f)
    src = f[:, [0, 1, 2]].ravel()
    dst = f[:, [1, 2, 0]].ravel()
    face_of = np.repeat(np.arange(n_faces), 3)
    directed = {}
    for s, d, fa in zip(src.tolist(), dst.tolist(), face_of.tolist()):
        key = (s, d)
        if key in directed:
            raise InconsistentWinding(
                f"edge ({s}, {d}) traversed twice in the same direction"
            )
        directed[key] = fa
    rows = []
    for (s, d), fa in directed.items():
        if s < d and (d, s) in directed:
            rows.append((s, d, fa, directed[(d, s)]))
    return np.asarray(rows, dtype=np.int64).reshape(-1, 4)


def _face_normals_areas(vertices, faces):
    p = vertices[faces]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    norm = np.linalg.norm(cross, axis=1)
    area = 0.5 * norm
    safe = np.where(norm > 0, norm, 1.0)
    return cross / safe[:, None], area


def oriented_dihedrals(vertices, faces, edges):
    """Signed dihedral angle at each interior edge.

    The sign comes from the winding: positive when the two faces fold
    toward their normals (convex crease), zero when coplanar.
    """
    normals, _ = _face_normals_areas(vertices, faces)
    na = normals[edges[:, 2]]
    nb = normals[edges[:, 3]]
    e = vertices[edges[:, 1]] - vertices[edges[:, 0]]
    e = e / np.where(
        np.linalg.norm(e, axis=1) > 0, np.linalg.norm(e, axis=1), 1.0
    )[:, None]
    sin = np.einsum("ij,ij->i", np.cross(na, nb), e)
    cos = np.einsum("ij,ij->i", na, nb)
    return np.arctan2(sin, cos)


def dame(reference, test, masking_c=1.0, want_per_edge=False):
    """DAME between two meshes on shared connectivity.

    Parameters
    ----------
    reference : TriangleMesh whose angles and areas define weights/masking
    test : TriangleMesh to score
    masking_c : masking strength c in m(D) = 1 / (1 + c |D|)
    want_per_edge : attach the per-edge summands for heatmap export

    Returns
    -------
    MetricReport with both metrics filled in.
    """
    _check_connectivity(reference, test)
    edges = interior_edges(reference.faces)
    if len(edges) == 0:
        raise NoInteriorEdges("mesh has no edge shared by two faces")
    d_ref = oriented_dihedrals(reference.vertices, reference.faces, edges)
    d_test = oriented_dihedrals(test.vertices, test.faces, edges)
    _, areas = _face_normals_areas(reference.vertices, reference.faces)
    w = (areas[edges[:, 2]] + areas[edges[:, 3]]) / (2.0 * areas.mean())
    masking = 1.0 / (1.0 + masking_c * np.abs(d_ref))
    per_edge = w * np.abs(d_ref - d_test) * masking
    return MetricReport(
        l1=l1_error(reference, test),
        dame=float(per_edge.mean()),
        per_edge_dame=per_edge if want_per_edge else None,
        interior_edges=edges[:, :2] if want_per_edge else None,
    )
