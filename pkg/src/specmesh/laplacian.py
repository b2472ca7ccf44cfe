"""Cotangent Laplacian and lumped mass matrix.

The off-diagonal Laplacian weight of an edge is the sum of the cotangents
of the two angles opposite it (one cotangent on boundary edges), and the
diagonal makes every row sum to zero. The assembled operator is returned
in its positive-semidefinite stiffness form S = -L, recorded by the
``convention`` flag. Vertex masses are mixed Voronoi areas with the
standard obtuse-triangle fallback.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from .errors import DegenerateTriangle, DimensionMismatch

COT_CLAMP = 1e4


@dataclass(frozen=True)
class SparseSymMatrix:
    """Symmetric sparse matrix stored as upper-triangle triplets.

    dimension : N
    rows, cols : entry indices with rows <= cols, each pair stored once
    values : float64 entries
    convention : notes the sign convention of the stored operator
    """

    dimension: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    convention: str = "stiffness (S = -L)"

    def __post_init__(self):
        if np.any(self.rows > self.cols):
            raise DimensionMismatch("triplets must satisfy row <= col")
        if len(self.rows) and (self.rows.min() < 0 or self.cols.max() >= self.dimension):
            raise DimensionMismatch("triplet index out of range")

    def triplets(self):
        return self.rows, self.cols, self.values

    def tocsr(self):
        """Full symmetric scipy CSR matrix."""
        off = self.rows != self.cols
        r = np.concatenate([self.rows, self.cols[off]])
        c = np.concatenate([self.cols, self.rows[off]])
        v = np.concatenate([self.values, self.values[off]])
        return sparse.csr_matrix((v, (r, c)), shape=(self.dimension, self.dimension))

    def toarray(self):
        return self.tocsr().toarray()


@dataclass(frozen=True)
class MassMatrix:
    """Diagonal lumped mass matrix of per-vertex areas."""

    diagonal: np.ndarray

    def __post_init__(self):
        diagonal = np.ascontiguousarray(self.diagonal, dtype=np.float64)
        if diagonal.ndim != 1:
            raise DimensionMismatch("mass diagonal must be one-dimensional")
        if np.any(diagonal < 0):
            raise ValueError("vertex areas must be nonnegative")
        object.__setattr__(self, "diagonal", diagonal)

    @property
    def dimension(self):
        return len(self.diagonal)

    def tocsr(self):
        return sparse.diags(self.diagonal).tocsr()


def _face_geometry(mesh):
    """Edge vectors, double areas and corner cotangents per face.

    Returns (cot, sqlen, area) where cot[f, i] is the cotangent at corner i
    of face f (clamped), sqlen[f, i] the squared length of the edge opposite
    corner i, and area[f] the face area.
    """
    v = mesh.vertices
    f = mesh.faces
    if len(f) == 0:
        raise DegenerateTriangle("mesh has no faces")
    p = v[f]  # (F, 3, 3)
    # edge opposite corner i runs between the other two corners
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    sqlen = np.einsum("fij,fij->fi", e, e)
    cross = np.cross(e[:, 1], e[:, 2])
    double_area = np.linalg.norm(cross, axis=1)
    area = 0.5 * double_area
    # cot at corner i = dot of the two adjacent edges / twice the area
    dots = np.stack(
        [
            np.einsum("fj,fj->f", -e[:, 1], e[:, 2]),
            np.einsum("fj,fj->f", -e[:, 2], e[:, 0]),
            np.einsum("fj,fj->f", -e[:, 0], e[:, 1]),
        ],
        axis=1,
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        cot = dots / double_area[:, None]
    cot = np.clip(np.nan_to_num(cot, nan=0.0, posinf=COT_CLAMP, neginf=-COT_CLAMP),
                  -COT_CLAMP, COT_CLAMP)
    return cot, sqlen, area


def cotangent_laplacian(mesh):
    """Assemble the stiffness form S = -L of the cotangent Laplacian.

    The returned matrix is symmetric positive semidefinite; the Laplacian
    itself is recovered as L = -S. Cotangents are clamped to survive
    near-degenerate triangles.
    """
    cot, _, _ = _face_geometry(mesh)
    f = mesh.faces
    n = mesh.n_vertices
    # edge opposite corner i connects the remaining two corners
    i = np.concatenate([f[:, 1], f[:, 2], f[:, 0]])
    j = np.concatenate([f[:, 2], f[:, 0], f[:, 1]])
    w = np.concatenate([cot[:, 0], cot[:, 1], cot[:, 2]])
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    # accumulate cot contributions per undirected edge
    key = lo * n + hi
    order = np.argsort(key, kind="stable")
    key, lo, hi, w = key[order], lo[order], hi[order], w[order]
    boundaries = np.flatnonzero(np.concatenate([[True], key[1:] != key[:-1]]))
    edge_w = np.add.reduceat(w, boundaries)
    edge_lo = lo[boundaries]
    edge_hi = hi[boundaries]
    # diagonal of S is the positive row sum of the edge weights
    diag = np.zeros(n)
    np.add.at(diag, edge_lo, edge_w)
    np.add.at(diag, edge_hi, edge_w)
    rows = np.concatenate([np.arange(n), edge_lo])
    cols = np.concatenate([np.arange(n), edge_hi])
    vals = np.concatenate([diag, -edge_w])
    return SparseSymMatrix(dimension=n, rows=rows, cols=cols, values=vals)


def mass_matrix(mesh):
    """Mixed Voronoi vertex areas.

    Non-obtuse triangles contribute the true Voronoi subareas
    (1/8) (|e_b|^2 cot_b + |e_c|^2 cot_c) to each corner; obtuse triangles
    fall back to area/2 at the obtuse corner and area/4 at the others.
    """
    cot, sqlen, area = _face_geometry(mesh)
    f = mesh.faces
    n = mesh.n_vertices
    obtuse = cot < 0  # (F, 3), at most one per face
    any_obtuse = obtuse.any(axis=1)
    contrib = np.empty_like(cot)
    # Voronoi subarea at corner i uses the two edges meeting there,
    # weighted by the cotangents at the two opposite corners
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        contrib[:, i] = 0.125 * (sqlen[:, j] * cot[:, j] + sqlen[:, k] * cot[:, k])
    fallback = np.where(obtuse, 0.5, 0.25) * area[:, None]
    contrib = np.where(any_obtuse[:, None], fallback, contrib)
    diag = np.zeros(n)
    np.add.at(diag, f.ravel(), contrib.ravel())
    return MassMatrix(diagonal=diag)


def total_area(mesh):
    """Sum of triangle areas."""
    _, _, area = _face_geometry(mesh)
    return float(area.sum())
