"""Mesh data model and dataset preprocessing.

Datasets are collections of triangle meshes sharing one face table. The
preprocessing pipeline centers every shape, rigid-aligns the set to its
mean by generalized Procrustes iteration and applies one global uniform
scale so all shapes fit inside the cube [-1, 1]^3.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConnectivityMismatch,
    DegenerateDataset,
    DegenerateTriangle,
    DimensionMismatch,
    IndexOutOfRange,
)


def connectivity_hash(faces):
    """64-bit digest of a face table. Pure function of the index array."""
    data = np.ascontiguousarray(faces, dtype=np.int64).tobytes()
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class TriangleMesh:
    """Vertex positions plus triangle connectivity.

    vertices : (N, 3) float64 array
    faces : (F, 3) integer array of indices into vertices
    """

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        faces = np.ascontiguousarray(self.faces, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise DimensionMismatch(f"vertices must be (N, 3), got {vertices.shape}")
        if not np.isfinite(vertices).all():
            raise ValueError("vertices must be finite")
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise DimensionMismatch(f"faces must be (F, 3), got {faces.shape}")
        if faces.size:
            if faces.min() < 0 or faces.max() >= len(vertices):
                raise IndexOutOfRange("face index out of range")
            degenerate = (
                (faces[:, 0] == faces[:, 1])
                | (faces[:, 1] == faces[:, 2])
                | (faces[:, 0] == faces[:, 2])
            )
            if degenerate.any():
                raise DegenerateTriangle(
                    f"face {int(np.flatnonzero(degenerate)[0])} repeats a vertex"
                )
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "faces", faces)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def connectivity_hash(self):
        return connectivity_hash(self.faces)

    def with_vertices(self, vertices):
        """Same connectivity, new positions."""
        return TriangleMesh(np.asarray(vertices, dtype=np.float64), self.faces)


@dataclass(frozen=True)
class RigidTransform:
    """Similarity transform applied during alignment: x -> scale * R (x + t)."""

    rotation: np.ndarray
    translation: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        rotation = np.asarray(self.rotation, dtype=np.float64)
        translation = np.asarray(self.translation, dtype=np.float64)
        if rotation.shape != (3, 3) or translation.shape != (3,):
            raise DimensionMismatch("rigid transform must be 3x3 rotation plus 3-vector")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if np.abs(rotation.T @ rotation - np.eye(3)).max() > 1e-10:
            raise ValueError("rotation is not orthonormal")
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    def apply(self, points):
        points = np.asarray(points, dtype=np.float64)
        return self.scale * (points + self.translation) @ self.rotation.T


@dataclass(frozen=True)
class MeshDataset:
    """Shapes over one shared face table, preprocessed into a common frame.

    faces : shared (F, 3) face table
    shapes : list of (N, 3) vertex arrays
    mean_vertices : per-vertex arithmetic mean of the shapes
    alignment_log : RigidTransform applied to each raw input shape
    """

    faces: np.ndarray
    shapes: list
    mean_vertices: np.ndarray
    alignment_log: list = field(default_factory=list)

    @property
    def n_shapes(self):
        return len(self.shapes)

    @property
    def n_vertices(self):
        return len(self.mean_vertices)

    @property
    def connectivity_hash(self):
        return connectivity_hash(self.faces)

    def mesh(self, shape_index):
        """The shape at shape_index as a TriangleMesh."""
        if not 0 <= shape_index < len(self.shapes):
            raise IndexOutOfRange(f"shape index {shape_index} out of range")
        return TriangleMesh(self.shapes[shape_index], self.faces)

    def mean_mesh(self):
        return TriangleMesh(self.mean_vertices, self.faces)


def procrustes_rotation(source, target):
    """Rotation R (det +1) minimizing ||source @ R.T - target||_F.

    Both point sets should be centered. Reflections are excluded by
    sign-correcting the smallest singular direction.
    """
    h = source.T @ target
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    if d == 0:
        d = 1.0
    # flip the direction of the smallest singular value if needed
    flip = np.diag([1.0, 1.0, d])
    return vt.T @ flip @ u.T


def preprocess_dataset(raw, tol=1e-12, max_iter=100):
    """Center, align and scale raw meshes into a MeshDataset.

    Every shape is translated to its centroid, rotated to the running mean
    by Procrustes (iterated to the generalized Procrustes fixed point, which
    makes the operation idempotent), and finally all shapes are scaled by
    one global factor so every coordinate lies in [-1, 1].

    Parameters
    ----------
    raw : list of TriangleMesh with identical connectivity, at least 2
    tol : mean-drift threshold stopping the alignment iteration
    max_iter : alignment iteration cap

    Returns
    -------
    MeshDataset
    """
    if len(raw) < 2:
        raise DegenerateDataset("need at least 2 shapes")
    chash = raw[0].connectivity_hash
    for m in raw[1:]:
        if m.connectivity_hash != chash:
            raise ConnectivityMismatch("shapes do not share a face table")
        if m.n_vertices != raw[0].n_vertices:
            raise ConnectivityMismatch("shapes disagree on vertex count")

    centroids = [m.vertices.mean(axis=0) for m in raw]
    shapes = [m.vertices - c for m, c in zip(raw, centroids)]
    rotations = [np.eye(3) for _ in raw]

    mean = sum(shapes) / len(shapes)
    span = max(np.abs(s).max() for s in shapes)
    if span < 1e-15:
        raise DegenerateDataset("all shapes collapse to a single point")

    for _ in range(max_iter):
        for i, s in enumerate(shapes):
            r = procrustes_rotation(s, mean)
            shapes[i] = s @ r.T
            rotations[i] = r @ rotations[i]
        new_mean = sum(shapes) / len(shapes)
        drift = np.abs(new_mean - mean).max()
        mean = new_mean
        if drift <= tol * span:
            break

    scale = 1.0 / max(np.abs(s).max() for s in shapes)
    shapes = [s * scale for s in shapes]
    mean = np.mean(np.stack(shapes), axis=0)

    log = [
        RigidTransform(rotation=r, translation=-c, scale=scale)
        for r, c in zip(rotations, centroids)
    ]
    return MeshDataset(
        faces=raw[0].faces,
        shapes=shapes,
        mean_vertices=mean,
        alignment_log=log,
    )


def mean_deformation(dataset, shape_index):
    """Deformation of one shape from the dataset mean, P - mean."""
    if not 0 <= shape_index < dataset.n_shapes:
        raise IndexOutOfRange(f"shape index {shape_index} out of range")
    return dataset.shapes[shape_index] - dataset.mean_vertices
