"""Deformation representation features and the band feature transforms.

The high band is encoded per vertex: T_i is the closed-form minimizer of
sum_j c_ij ||(p'_i - p'_j) - T_i (p_i - p_j)||^2 over the one-ring, split
by polar decomposition into a rotation log and a symmetric scale/shear
factor, 9 channels in total. Decoding inverts the encode operator in the
least-squares sense, so any encoded deformation round-trips to the
original positions up to a global translation fixed by the anchor.
The low band uses plain per-vertex coordinate standardization.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from . import _kernels
from .errors import (
    DimensionMismatch,
    SingularNeighborhood,
    SolveFailure,
    StatsMismatch,
)

CHANNELS = 9


@dataclass(frozen=True)
class DRFeature:
    """Per-vertex 9-channel deformation representation.

    Channels 0..5: upper triangle of the symmetric factor minus identity
    (s11, s12, s13, s22, s23, s33). Channels 6..8: axis-angle rotation log.
    """

    per_vertex: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.per_vertex, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != CHANNELS:
            raise DimensionMismatch(f"features must be (N, 9), got {arr.shape}")
        object.__setattr__(self, "per_vertex", arr)

    @property
    def n_vertices(self):
        return len(self.per_vertex)


@dataclass(frozen=True)
class FeatureStats:
    """Dataset channel statistics.

    mode 'minmax': per-channel minimum/maximum over a DR feature set.
    mode 'meanstd': per-vertex per-axis mean/std over low-band coordinates
    (population standard deviation).
    """

    mode: str
    minimum: np.ndarray = None
    maximum: np.ndarray = None
    mean: np.ndarray = None
    std: np.ndarray = None

    def __post_init__(self):
        if self.mode == "minmax":
            if self.minimum is None or self.maximum is None:
                raise StatsMismatch("minmax stats need minimum and maximum")
            if np.any(self.maximum < self.minimum):
                raise StatsMismatch("channel maximum below minimum")
        elif self.mode == "meanstd":
            if self.mean is None or self.std is None:
                raise StatsMismatch("meanstd stats need mean and std")
            if np.any(self.std < 0):
                raise StatsMismatch("negative standard deviation")
        else:
            raise StatsMismatch(f"unknown stats mode {self.mode!r}")


class EdgeWeights:
    """Cotangent edge weights and cached solve operators on a mean mesh.

    Holds the symmetric weights c_ij in CSR form, the per-vertex inverse
    normal matrices G_i (Tikhonov-regularized where the one-ring geometry
    is rank deficient), and lazily factored linear systems for decoding.
    """

    def __init__(self, mean_mesh):
        from .laplacian import cotangent_laplacian

        stiffness = cotangent_laplacian(mean_mesh)
        w = stiffness.tocsr()
        w.setdiag(0.0)
        w.eliminate_zeros()
        w = (-w).tocsr()
        w.sort_indices()
        counts = np.diff(w.indptr)
        if np.any(counts == 0):
            raise SingularNeighborhood(
                f"vertex {int(np.argmin(counts))} has no incident edges"
            )
        self.indptr = w.indptr.astype(np.int64)
        self.indices = w.indices.astype(np.int64)
        self.weights = w.data.astype(np.float64)
        self.mean = mean_mesh.vertices
        self.connectivity_hash = mean_mesh.connectivity_hash
        self.n_vertices = mean_mesh.n_vertices
        self.n_regularized = 0
        self._ginv = self._build_ginv()
        self._encode_op = None
        self._factors = {}

    @property
    def gram_inverses(self):
        """Regularized per-vertex inverse Gram tables, (N, 3, 3)."""
        return self._ginv

    def _build_ginv(self):
        c = _kernels.accumulate_gram(self.indptr, self.indices, self.weights, self.mean)
        svals = np.linalg.svd(c, compute_uv=False)
        bad = svals[:, 2] < 1e-12 * np.maximum(svals[:, 0], 1e-300)
        if bad.any():
            trace = np.trace(c, axis1=1, axis2=2)
            reg = 1e-9 * np.where(np.abs(trace) > 1e-300, np.abs(trace), 1.0)
            c = c + bad[:, None, None] * reg[:, None, None] * np.eye(3)[None]
            self.n_regularized = int(bad.sum())
        try:
            return np.linalg.inv(c)
        except np.linalg.LinAlgError as exc:
            raise SingularNeighborhood(str(exc)) from None

    def _encode_operator(self):
        """Sparse map from one coordinate axis to the stacked T_i rows."""
        if self._encode_op is not None:
            return self._encode_op
        n = self.n_vertices
        src = np.repeat(np.arange(n), np.diff(self.indptr))
        d = self.mean[src] - self.mean[self.indices]
        # g_ij = G_i d_ij, scaled by c_ij
        g = self.weights[:, None] * np.einsum("ekm,em->ek", self._ginv[src], d)
        rows = (3 * src[:, None] + np.arange(3)[None, :]).ravel()
        cols = np.repeat(self.indices, 3)
        vals = -g.ravel()
        diag = np.zeros((n, 3))
        np.add.at(diag, src, g)
        rows = np.concatenate([rows, (3 * np.arange(n)[:, None] + np.arange(3)[None, :]).ravel()])
        cols = np.concatenate([cols, np.repeat(np.arange(n), 3)])
        vals = np.concatenate([vals, diag.ravel()])
        op = sparse.csr_matrix((vals, (rows, cols)), shape=(3 * n, n))
        self._encode_op = op
        return op

    def _factorized(self, method):
        """splu of the centroid-constrained normal system for a decode method."""
        if method in self._factors:
            return self._factors[method]
        n = self.n_vertices
        if method == "exact":
            a = self._encode_operator()
            core = (a.T @ a).tocoo()
        elif method == "poisson":
            src = np.repeat(np.arange(n), np.diff(self.indptr))
            lap = sparse.csr_matrix(
                (-self.weights, (src, self.indices)), shape=(n, n)
            )
            lap = lap + sparse.diags(-np.asarray(lap.sum(axis=1)).ravel())
            core = lap.tocoo()
        else:
            raise ValueError(f"unknown decode method {method!r}")
        ones = np.ones(n)
        kkt = sparse.bmat(
            [[core, ones[:, None]], [ones[None, :], None]], format="csc"
        )
        try:
            factor = spla.splu(kkt)
        except RuntimeError as exc:
            raise SolveFailure(str(exc)) from None
        self._factors[method] = factor
        return factor


def edge_weights(mean_mesh):
    """Build EdgeWeights for a mean mesh."""
    return EdgeWeights(mean_mesh)


def encode_dr(mean, deformed, weights):
    """Encode a deformed shape against the mean as a DRFeature.

    The encode is exactly translation invariant: only edge differences of
    the deformed positions enter the per-vertex systems.
    """
    mean = np.asarray(mean, dtype=np.float64)
    deformed = np.asarray(deformed, dtype=np.float64)
    if mean.shape != deformed.shape or len(mean) != weights.n_vertices:
        raise DimensionMismatch("mean/deformed shape mismatch against weights")
    feats = _kernels.encode_features(
        weights.indptr, weights.indices, weights.weights, mean, deformed, weights._ginv
    )
    return DRFeature(per_vertex=feats)


def decode_dr(feature, mean, weights, anchor="centroid_of_mean", method="exact"):
    """Recover vertex positions from a DRFeature.

    method 'exact' (default) solves min ||A p - t||^2 where A is the
    linear encode operator and t the stacked target transforms, so decode
    is the least-squares inverse of encode and features produced by
    encode_dr reproduce their source positions. method 'poisson' instead
    stitches the transforms through the gradient-domain energy
    sum_ij c_ij ||(p_i - p_j) - T_i (mean_i - mean_j)||^2.

    The translation nullspace is fixed by constraining the output centroid
    to the anchor (the mean's centroid by default, or any 3-vector).
    """
    mean = np.asarray(mean, dtype=np.float64)
    if feature.n_vertices != weights.n_vertices or len(mean) != weights.n_vertices:
        raise DimensionMismatch("feature/mean sizes do not match weights")
    if isinstance(anchor, str):
        if anchor != "centroid_of_mean":
            raise ValueError(f"unknown anchor {anchor!r}")
        anchor = mean.mean(axis=0)
    else:
        anchor = np.asarray(anchor, dtype=np.float64)
    n = weights.n_vertices
    t = _kernels.features_to_matrices(feature.per_vertex)
    factor = weights._factorized(method)
    if method == "exact":
        a = weights._encode_operator()
        rhs = np.stack([a.T @ t[:, axis, :].ravel() for axis in range(3)], axis=1)
    else:
        src = np.repeat(np.arange(n), np.diff(weights.indptr))
        d = mean[src] - mean[weights.indices]
        tt = t[src] + t[weights.indices]
        per_edge = 0.5 * weights.weights[:, None] * np.einsum("erm,em->er", tt, d)
        rhs = np.add.reduceat(per_edge, weights.indptr[:-1], axis=0)
    out = np.empty((n, 3))
    for axis in range(3):
        full = np.concatenate([rhs[:, axis], [n * anchor[axis]]])
        sol = factor.solve(full)
        if not np.all(np.isfinite(sol)):
            raise SolveFailure("decode solve produced non-finite values")
        out[:, axis] = sol[:n]
    return out


def compute_dr_stats(features):
    """Per-channel minimum/maximum over a list of DRFeatures."""
    stacked = np.concatenate([f.per_vertex for f in features], axis=0)
    return FeatureStats(
        mode="minmax",
        minimum=stacked.min(axis=0),
        maximum=stacked.max(axis=0),
    )


def _check_minmax(stats):
    if stats.mode != "minmax":
        raise StatsMismatch("expected minmax stats")
    if stats.minimum.shape != (CHANNELS,) or stats.maximum.shape != (CHANNELS,):
        raise StatsMismatch(f"stats must cover {CHANNELS} channels")


def normalize_dr(feature, stats):
    """Map every channel into [-1, 1]; degenerate channels map to 0."""
    _check_minmax(stats)
    span = stats.maximum - stats.minimum
    ok = span >= 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = 2.0 * (feature.per_vertex - stats.minimum) / span - 1.0
    return DRFeature(per_vertex=np.where(ok, scaled, 0.0))


def denormalize_dr(feature, stats):
    """Exact affine inverse of normalize_dr on non-degenerate channels.

    Degenerate channels carry no information and restore to the channel
    minimum (which equals its constant dataset value).
    """
    _check_minmax(stats)
    span = stats.maximum - stats.minimum
    ok = span >= 1e-12
    restored = (feature.per_vertex + 1.0) * 0.5 * span + stats.minimum
    return DRFeature(
        per_vertex=np.where(ok, restored, stats.minimum[None, :])
    )


def compute_coord_stats(shapes):
    """Per-vertex per-axis mean and population std over low-band shapes."""
    stacked = np.stack(shapes)
    return FeatureStats(
        mode="meanstd",
        mean=stacked.mean(axis=0),
        std=stacked.std(axis=0, ddof=0),
    )


def _check_meanstd(stats, vertices):
    if stats.mode != "meanstd":
        raise StatsMismatch("expected meanstd stats")
    if stats.mean.shape != vertices.shape:
        raise StatsMismatch(
            f"stats shape {stats.mean.shape} does not match vertices {vertices.shape}"
        )


def standardize_coords(vertices, stats):
    """(x - mean) / std per vertex and axis; tiny stds act as 1."""
    vertices = np.asarray(vertices, dtype=np.float64)
    _check_meanstd(stats, vertices)
    std = np.where(stats.std < 1e-12, 1.0, stats.std)
    return (vertices - stats.mean) / std


def destandardize_coords(values, stats):
    """Exact inverse of standardize_coords."""
    values = np.asarray(values, dtype=np.float64)
    _check_meanstd(stats, values)
    std = np.where(stats.std < 1e-12, 1.0, stats.std)
    return values * std + stats.mean
