"""Generalized spectral decomposition and frequency-band arithmetic.

Solves S u = lambda M u for the k smoothest modes of the stiffness form,
exposes band projectors X = U_r U_r^T M applied factor-wise, decomposes
shapes into a low/high frequency pair and reassembles them. Bases are
cached on disk in a small binary container bound to the face table by a
connectivity hash.
"""

import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .errors import (
    ConnectivityMismatch,
    ConvergenceFailure,
    DimensionMismatch,
    ParseError,
)

DENSE_CUTOFF = 200
BASIS_MAGIC = b"DSMB"
BASIS_VERSION = 1


@dataclass(frozen=True)
class SpectralBasis:
    """First k generalized eigenpairs of S u = lambda M u.

    eigenvalues : (k,) ascending, nonnegative
    eigenvectors : (N, k) M-orthonormal columns
    mass_diag : (N,) lumped mass diagonal
    connectivity_hash : digest binding the basis to a face table
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    mass_diag: np.ndarray
    connectivity_hash: int

    @property
    def k(self):
        return len(self.eigenvalues)

    @property
    def n_vertices(self):
        return len(self.mass_diag)


def _orthonormalize(u, mass_diag):
    """Enforce U^T M U = I by a Cholesky correction."""
    gram = u.T @ (mass_diag[:, None] * u)
    chol = np.linalg.cholesky(gram)
    return scipy.linalg.solve_triangular(chol, u.T, lower=True).T


def _fix_signs(u):
    """Make the first significant component of each column positive."""
    u = u.copy()
    for col in range(u.shape[1]):
        v = u[:, col]
        idx = np.flatnonzero(np.abs(v) > 1e-12 * np.abs(v).max())
        if len(idx) and v[idx[0]] < 0:
            u[:, col] = -v
    return u


def solve_spectrum(stiffness, mass, k, seed=42):
    """Solve for the k smallest-eigenvalue pairs of S u = lambda M u.

    Uses shift-invert ARPACK with a deterministic start vector; small
    problems (or k close to N) go through a dense solve. Eigenvectors come
    back M-orthonormal with deterministic signs, eigenvalues ascending with
    tiny negative roundoff clamped to zero.
    """
    n = stiffness.dimension
    if mass.dimension != n:
        raise DimensionMismatch(
            f"stiffness dimension {n} != mass dimension {mass.dimension}"
        )
    if not 1 <= k <= n:
        raise DimensionMismatch(f"k={k} outside [1, {n}]")

    s = stiffness.tocsr()
    m = mass.diagonal
    if n <= DENSE_CUTOFF or k >= n - 1:
        vals, vecs = scipy.linalg.eigh(s.toarray(), np.diag(m))
        vals, vecs = vals[:k], vecs[:, :k]
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(n)
        mcsr = sparse.diags(m).tocsr()
        try:
            vals, vecs = spla.eigsh(
                s, k=k, M=mcsr, sigma=-1e-8, which="LM", v0=v0, maxiter=30 * k
            )
        except spla.ArpackNoConvergence:
            # one restart with a fresh start vector before giving up
            v0 = np.random.default_rng(seed + 1).standard_normal(n)
            try:
                vals, vecs = spla.eigsh(
                    s, k=k, M=mcsr, sigma=-1e-8, which="LM", v0=v0, maxiter=60 * k
                )
            except spla.ArpackNoConvergence as exc:
                raise ConvergenceFailure(str(exc)) from None

    order = np.argsort(vals, kind="stable")
    vals = np.maximum(vals[order], 0.0)
    vecs = _fix_signs(_orthonormalize(vecs[:, order], m))
    return vals, vecs


def basis_for_mesh(mesh, k, seed=42):
    """Convenience wrapper: assemble operators and solve on one mesh."""
    from .laplacian import cotangent_laplacian, mass_matrix

    stiffness = cotangent_laplacian(mesh)
    mass = mass_matrix(mesh)
    vals, vecs = solve_spectrum(stiffness, mass, k, seed=seed)
    return SpectralBasis(
        eigenvalues=vals,
        eigenvectors=vecs,
        mass_diag=mass.diagonal,
        connectivity_hash=mesh.connectivity_hash,
    )


@dataclass(frozen=True)
class BandProjector:
    """One frequency band of a basis, X = U_r U_r^T M applied factor-wise.

    ``complement`` selects I - X instead, the residual above the band.
    ``materialized`` optionally holds the dense X for repeated batch use.
    """

    basis: SpectralBasis
    start: int
    stop: int
    complement: bool = False
    materialized: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not 0 <= self.start <= self.stop <= self.basis.k:
            raise DimensionMismatch(
                f"band [{self.start}, {self.stop}) outside [0, {self.basis.k})"
            )

    def apply(self, signal):
        """Project an (N,) or (N, d) signal onto the band."""
        signal = np.asarray(signal, dtype=np.float64)
        if signal.shape[0] != self.basis.n_vertices:
            raise DimensionMismatch(
                f"signal has {signal.shape[0]} rows, expected {self.basis.n_vertices}"
            )
        if self.materialized is not None:
            # the dense table already encodes the complement
            return self.materialized @ signal
        u = self.basis.eigenvectors[:, self.start:self.stop]
        weighted = self.basis.mass_diag[:, None] * signal if signal.ndim == 2 \
            else self.basis.mass_diag * signal
        projected = u @ (u.T @ weighted)
        return signal - projected if self.complement else projected

    def materialize(self):
        """Dense X (or I - X) as an explicit N x N table."""
        u = self.basis.eigenvectors[:, self.start:self.stop]
        x = (u @ u.T) * self.basis.mass_diag[None, :]
        if self.complement:
            x = np.eye(self.basis.n_vertices) - x
        return BandProjector(
            basis=self.basis,
            start=self.start,
            stop=self.stop,
            complement=self.complement,
            materialized=x,
        )


def band_projector(basis, start=None, stop=None, complement=False):
    start = 0 if start is None else start
    stop = basis.k if stop is None else stop
    return BandProjector(basis=basis, start=start, stop=stop, complement=complement)


def decompose_two_band(dataset, basis, shape_index):
    """Split one dataset shape into its low and high frequency meshes.

    Returns (P_low, P_high) with P_low = X (P - mean) + mean and
    P_high = (I - X)(P - mean) + mean, using the full-k band as low.
    """
    if basis.connectivity_hash != dataset.connectivity_hash:
        raise ConnectivityMismatch("basis bound to a different face table")
    from .mesh import mean_deformation

    deform = mean_deformation(dataset, shape_index)
    low = band_projector(basis).apply(deform)
    return low + dataset.mean_vertices, (deform - low) + dataset.mean_vertices


def assemble(bands):
    """Combine per-band signals into one vertex array.

    Two complementary bands reproduce X P_low + (I - X) P_high; the n-band
    form sums the projections of every (projector, signal) pair.
    """
    if not bands:
        raise DimensionMismatch("no bands to assemble")
    out = None
    for projector, signal in bands:
        term = projector.apply(signal)
        out = term if out is None else out + term
    return out


def save_basis(path, basis):
    """Write a basis cache: magic, version, sizes, hash, then the arrays.

    Layout (little-endian): magic 'DSMB', u32 version, u64 N, u64 k,
    u64 connectivity_hash, k float64 eigenvalues, N*k float64 eigenvectors
    column-major, N float64 mass diagonal.
    """
    with open(path, "wb") as fh:
        fh.write(serialize_basis(basis))


def serialize_basis(basis):
    head = BASIS_MAGIC + struct.pack(
        "<IQQQ", BASIS_VERSION, basis.n_vertices, basis.k,
        basis.connectivity_hash & 0xFFFFFFFFFFFFFFFF,
    )
    body = (
        basis.eigenvalues.astype("<f8").tobytes()
        + np.asfortranarray(basis.eigenvectors.astype("<f8")).tobytes(order="F")
        + basis.mass_diag.astype("<f8").tobytes()
    )
    return head + body


def deserialize_basis(blob, expected_hash=None):
    if blob[:4] != BASIS_MAGIC:
        raise ParseError("not a basis cache (bad magic)")
    version, n, k, chash = struct.unpack_from("<IQQQ", blob, 4)
    if version != BASIS_VERSION:
        raise ParseError(f"unsupported basis cache version {version}")
    if expected_hash is not None and chash != expected_hash:
        raise ConnectivityMismatch("basis cache belongs to a different face table")
    offset = 4 + struct.calcsize("<IQQQ")
    need = offset + 8 * (k + n * k + n)
    if len(blob) < need:
        raise ParseError("truncated basis cache")
    vals = np.frombuffer(blob, dtype="<f8", count=k, offset=offset).copy()
    offset += 8 * k
    vecs = np.frombuffer(blob, dtype="<f8", count=n * k, offset=offset)
    vecs = vecs.reshape((n, k), order="F").copy()
    offset += 8 * n * k
    mass = np.frombuffer(blob, dtype="<f8", count=n, offset=offset).copy()
    return SpectralBasis(
        eigenvalues=vals, eigenvectors=vecs, mass_diag=mass, connectivity_hash=chash
    )


def load_basis(path, expected_hash=None):
    with open(path, "rb") as fh:
        return deserialize_basis(fh.read(), expected_hash=expected_hash)
