"""Per-band linear latent model with cross-band conditioning.

Each frequency band gets a truncated PCA over its feature space
(standardized coordinates for the low band, normalized deformation
representation for the high band). A pair of ridge-regression maps
predicts each band's post-truncation feature residual from the other
band's coefficients; the conditioning factor gamma scales those maps at
decode time, from 0 (bands fully independent) to 1 (full conditioning).
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .drfeat import (
    DRFeature,
    FeatureStats,
    compute_coord_stats,
    compute_dr_stats,
    decode_dr,
    denormalize_dr,
    destandardize_coords,
    edge_weights,
    encode_dr,
    normalize_dr,
    standardize_coords,
)
from .errors import ConnectivityMismatch, DimensionMismatch, IndexOutOfRange, ParseError
from .mesh import TriangleMesh, connectivity_hash
from .spectral import band_projector, deserialize_basis, serialize_basis

MODEL_MAGIC = b"DSMM"
MODEL_VERSION = 1
RIDGE = 1e-6


@dataclass(frozen=True)
class LatentCode:
    """Per-band latent coefficients."""

    z_low: np.ndarray
    z_high: np.ndarray

    def __post_init__(self):
        z_low = np.asarray(self.z_low, dtype=np.float64).ravel()
        z_high = np.asarray(self.z_high, dtype=np.float64).ravel()
        if not (np.all(np.isfinite(z_low)) and np.all(np.isfinite(z_high))):
            raise ValueError("latent code must be finite")
        object.__setattr__(self, "z_low", z_low)
        object.__setattr__(self, "z_high", z_high)


@dataclass
class LatentModel:
    """Fitted per-band bases plus everything needed to decode standalone."""

    basis: object
    faces: np.ndarray
    mean_vertices: np.ndarray
    low_stats: FeatureStats
    high_stats: FeatureStats
    low_mean: np.ndarray
    low_components: np.ndarray
    high_mean: np.ndarray
    high_components: np.ndarray
    cond_low_to_high: np.ndarray
    cond_high_to_low: np.ndarray
    gamma: float
    subjects: list
    subject_z_low: np.ndarray
    subject_z_high: np.ndarray
    explained_variance_low: np.ndarray
    explained_variance_high: np.ndarray
    warnings: list = field(default_factory=list)
    _weights: object = field(default=None, repr=False)

    @property
    def d_low(self):
        return self.low_components.shape[1]

    @property
    def d_high(self):
        return self.high_components.shape[1]

    @property
    def n_vertices(self):
        return len(self.mean_vertices)

    @property
    def connectivity_hash(self):
        return connectivity_hash(self.faces)

    def mean_mesh(self):
        return TriangleMesh(self.mean_vertices, self.faces)

    def weights(self):
        """Edge weights on the mean, built once and cached."""
        if self._weights is None:
            self._weights = edge_weights(self.mean_mesh())
        return self._weights

    def subject_code(self, subject):
        """LatentCode of a training subject by name or index."""
        if isinstance(subject, str):
            if subject not in self.subjects:
                raise IndexOutOfRange(f"unknown subject {subject!r}")
            subject = self.subjects.index(subject)
        if not 0 <= subject < len(self.subjects):
            raise IndexOutOfRange(f"subject index {subject} out of range")
        return LatentCode(self.subject_z_low[subject], self.subject_z_high[subject])


def _pca(matrix, d, band, warnings):
    """Centered PCA of (S, F) rows. Returns mean, components, coefficients
    and per-component explained variance; d is clamped to the achievable rank."""
    mean = matrix.mean(axis=0)
    centered = matrix - mean
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    tol = max(centered.shape) * np.finfo(np.float64).eps * (s[0] if len(s) else 0.0)
    rank = int((s > tol).sum())
    if d > rank:
        warnings.append(f"{band}: requested {d} components, rank is {rank}; clamped")
        d = max(rank, 1)
    components = vt[:d].T.copy()
    # deterministic sign: strongest entry of each component positive
    for col in range(components.shape[1]):
        peak = np.argmax(np.abs(components[:, col]))
        if components[peak, col] < 0:
            components[:, col] = -components[:, col]
    coeffs = centered @ components
    explained = (s[:d] ** 2) / len(matrix)
    return mean, components, coeffs, explained


def _ridge_fit(coeffs, residuals):
    """W minimizing ||coeffs W - residuals||^2 + RIDGE ||W||^2."""
    d = coeffs.shape[1]
    gram = coeffs.T @ coeffs + RIDGE * np.eye(d)
    return np.linalg.solve(gram, coeffs.T @ residuals)


def fit(dataset, basis, d_low=32, d_high=32, gamma=1.0, materialize=False):
    """Fit the latent model on a preprocessed dataset.

    Parameters
    ----------
    dataset : MeshDataset
    basis : SpectralBasis bound to the dataset connectivity
    d_low, d_high : per-band component counts (clamped to rank, recorded)
    gamma : default conditioning factor in [0, 1]
    materialize : project through a dense band filter instead of factor-wise
    """
    if basis.connectivity_hash != dataset.connectivity_hash:
        raise ConnectivityMismatch("basis bound to a different face table")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    if min(d_low, d_high) < 1:
        raise ValueError("component counts must be >= 1")
    mean = dataset.mean_vertices
    weights = edge_weights(dataset.mean_mesh())
    proj = band_projector(basis)
    if materialize:
        proj = proj.materialize()

    lows, high_feats = [], []
    for shape in dataset.shapes:
        deform = shape - mean
        low_part = proj.apply(deform)
        lows.append(low_part + mean)
        high_feats.append(encode_dr(mean, (deform - low_part) + mean, weights))

    low_stats = compute_coord_stats(lows)
    high_stats = compute_dr_stats(high_feats)
    low_matrix = np.stack(
        [standardize_coords(p, low_stats).ravel() for p in lows]
    )
    high_matrix = np.stack(
        [normalize_dr(f, high_stats).per_vertex.ravel() for f in high_feats]
    )

    warnings = []
    low_mean, low_comp, z_low, ev_low = _pca(low_matrix, d_low, "low", warnings)
    high_mean, high_comp, z_high, ev_high = _pca(high_matrix, d_high, "high", warnings)

    resid_low = (low_matrix - low_mean) - z_low @ low_comp.T
    resid_high = (high_matrix - high_mean) - z_high @ high_comp.T
    cond_l2h = _ridge_fit(z_low, resid_high)
    cond_h2l = _ridge_fit(z_high, resid_low)

    digits = max(3, len(str(dataset.n_shapes - 1)))
    subjects = [f"s{i:0{digits}d}" for i in range(dataset.n_shapes)]
    model = LatentModel(
        basis=basis,
        faces=dataset.faces,
        mean_vertices=mean,
        low_stats=low_stats,
        high_stats=high_stats,
        low_mean=low_mean,
        low_components=low_comp,
        high_mean=high_mean,
        high_components=high_comp,
        cond_low_to_high=cond_l2h,
        cond_high_to_low=cond_h2l,
        gamma=float(gamma),
        subjects=subjects,
        subject_z_low=z_low,
        subject_z_high=z_high,
        explained_variance_low=ev_low,
        explained_variance_high=ev_high,
        warnings=warnings,
    )
    model._weights = weights
    return model


def encode(model, mesh):
    """Project a mesh with model connectivity onto the per-band coefficients."""
    if mesh.connectivity_hash != model.connectivity_hash:
        raise ConnectivityMismatch("mesh connectivity does not match the model")
    proj = band_projector(model.basis)
    deform = mesh.vertices - model.mean_vertices
    low_part = proj.apply(deform)
    low_flat = standardize_coords(low_part + model.mean_vertices, model.low_stats).ravel()
    high_feat = encode_dr(
        model.mean_vertices, (deform - low_part) + model.mean_vertices, model.weights()
    )
    high_flat = normalize_dr(high_feat, model.high_stats).per_vertex.ravel()
    return LatentCode(
        z_low=(low_flat - model.low_mean) @ model.low_components,
        z_high=(high_flat - model.high_mean) @ model.high_components,
    )


def latent_features(model, code, gamma_override=None):
    """Per-band feature vectors decoded from a code, before inverse transforms.

    This is the affine part of decode: low and high feature vectors as
    functions of (z_low, z_high, gamma)."""
    if len(code.z_low) != model.d_low or len(code.z_high) != model.d_high:
        raise DimensionMismatch(
            f"code dims ({len(code.z_low)}, {len(code.z_high)}) do not match "
            f"model ({model.d_low}, {model.d_high})"
        )
    gamma = model.gamma if gamma_override is None else float(gamma_override)
    low = model.low_mean + model.low_components @ code.z_low
    high = model.high_mean + model.high_components @ code.z_high
    low = low + gamma * (code.z_high @ model.cond_high_to_low)
    high = high + gamma * (code.z_low @ model.cond_low_to_high)
    return low, high


def band_meshes(model, code, gamma_override=None):
    """The decoded low and high band vertex arrays (P_low, P_high)."""
    low_flat, high_flat = latent_features(model, code, gamma_override)
    n = model.n_vertices
    p_low = destandardize_coords(low_flat.reshape(n, 3), model.low_stats)
    feat = denormalize_dr(DRFeature(high_flat.reshape(n, 9)), model.high_stats)
    p_high = decode_dr(feat, model.mean_vertices, model.weights())
    return p_low, p_high


def decode(model, code, gamma_override=None):
    """Decode a latent code to a mesh: X P_low + (I - X) P_high."""
    p_low, p_high = band_meshes(model, code, gamma_override)
    proj = band_projector(model.basis)
    comp = band_projector(model.basis, complement=True)
    return TriangleMesh(proj.apply(p_low) + comp.apply(p_high), model.faces)


def interpolate_latent(model, a, b, alpha, beta, gamma_override=None):
    """Blend two codes (beta on the low band, alpha on the high band) and decode."""
    blended = blend_codes(a, b, alpha, beta)
    return decode(model, blended, gamma_override)


def blend_codes(a, b, alpha, beta):
    """The blended latent code of the interpolation operator."""
    return LatentCode(
        z_low=(1.0 - beta) * a.z_low + beta * b.z_low,
        z_high=(1.0 - alpha) * a.z_high + alpha * b.z_high,
    )


def is_extrapolation(*params):
    """True when any blend parameter leaves [0, 1]."""
    return any(not 0.0 <= float(p) <= 1.0 for p in params)


def interpolate_vertex(a, b, delta):
    """Vertex-space interpolation (1 - delta) P1 + delta P2, exact at both ends."""
    if a.connectivity_hash != b.connectivity_hash:
        raise ConnectivityMismatch("meshes do not share connectivity")
    return TriangleMesh((1.0 - delta) * a.vertices + delta * b.vertices, a.faces)


def edit_band(model, code, band, component, value):
    """Replace one coefficient of one band, leaving the other band untouched."""
    if band not in ("low", "high"):
        raise ValueError(f"band must be 'low' or 'high', got {band!r}")
    dim = model.d_low if band == "low" else model.d_high
    if not 0 <= component < dim:
        raise IndexOutOfRange(f"component {component} outside the {band} band ({dim})")
    z_low, z_high = code.z_low.copy(), code.z_high.copy()
    if band == "low":
        z_low[component] = value
    else:
        z_high[component] = value
    return LatentCode(z_low=z_low, z_high=z_high)


def _blob_specs(model):
    """Fixed blob order of the model container."""
    n = model.n_vertices
    return [
        ("eigenbasis", None, None),
        ("faces", "<i8", model.faces),
        ("mean_vertices", "<f8", model.mean_vertices),
        ("low_stat_mean", "<f8", model.low_stats.mean),
        ("low_stat_std", "<f8", model.low_stats.std),
        ("high_stat_min", "<f8", model.high_stats.minimum),
        ("high_stat_max", "<f8", model.high_stats.maximum),
        ("low_mean", "<f8", model.low_mean),
        ("low_components", "<f8", model.low_components),
        ("high_mean", "<f8", model.high_mean),
        ("high_components", "<f8", model.high_components),
        ("cond_low_to_high", "<f8", model.cond_low_to_high),
        ("cond_high_to_low", "<f8", model.cond_high_to_low),
        ("subject_z_low", "<f8", model.subject_z_low),
        ("subject_z_high", "<f8", model.subject_z_high),
    ]


def save_model(path, model):
    """Write the single-file model container.

    Layout: magic 'DSMM', u32 version, u64 manifest length, the manifest
    JSON (sorted keys), then the raw blobs in manifest order. The embedded
    eigenbasis blob reuses the basis cache format.
    """
    basis_blob = serialize_basis(model.basis)
    manifest_blobs = []
    payloads = []
    for name, dtype, arr in _blob_specs(model):
        if name == "eigenbasis":
            manifest_blobs.append({"name": name, "dtype": "bytes", "shape": [len(basis_blob)]})
            payloads.append(basis_blob)
        else:
            arr = np.ascontiguousarray(arr)
            manifest_blobs.append(
                {"name": name, "dtype": dtype, "shape": list(arr.shape)}
            )
            payloads.append(arr.astype(dtype).tobytes())
    manifest = {
        "format_version": MODEL_VERSION,
        "n_vertices": model.n_vertices,
        "n_faces": len(model.faces),
        "k": model.basis.k,
        "d_low": model.d_low,
        "d_high": model.d_high,
        "gamma": model.gamma,
        "connectivity_hash": model.connectivity_hash,
        "subjects": list(model.subjects),
        "warnings": list(model.warnings),
        "explained_variance_low": [float(v) for v in model.explained_variance_low],
        "explained_variance_high": [float(v) for v in model.explained_variance_high],
        "blobs": manifest_blobs,
    }
    encoded = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<IQ", MODEL_VERSION, len(encoded)))
        fh.write(encoded)
        for blob in payloads:
            fh.write(blob)


def load_model(path):
    """Read a model container written by save_model."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MODEL_MAGIC:
        raise ParseError(f"{path}: not a model container (bad magic)")
    version, mlen = struct.unpack_from("<IQ", blob, 4)
    if version != MODEL_VERSION:
        raise ParseError(f"{path}: unsupported model version {version}")
    offset = 4 + struct.calcsize("<IQ")
    try:
        manifest = json.loads(blob[offset:offset + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: bad manifest ({exc})") from None
    offset += mlen
    arrays = {}
    basis = None
    for spec in manifest["blobs"]:
        name, dtype, shape = spec["name"], spec["dtype"], spec["shape"]
        if dtype == "bytes":
            size = shape[0]
            if name == "eigenbasis":
                basis = deserialize_basis(blob[offset:offset + size])
            offset += size
        else:
            count = int(np.prod(shape)) if shape else 1
            size = count * np.dtype(dtype).itemsize
            arrays[name] = np.frombuffer(
                blob, dtype=dtype, count=count, offset=offset
            ).reshape(shape).copy()
            offset += size
    if basis is None:
        raise ParseError(f"{path}: missing eigenbasis blob")
    faces = arrays["faces"].astype(np.int64)
    if basis.connectivity_hash != connectivity_hash(faces):
        raise ConnectivityMismatch(f"{path}: basis and face table disagree")
    model = LatentModel(
        basis=basis,
        faces=faces,
        mean_vertices=arrays["mean_vertices"],
        low_stats=FeatureStats(
            mode="meanstd", mean=arrays["low_stat_mean"], std=arrays["low_stat_std"]
        ),
        high_stats=FeatureStats(
            mode="minmax", minimum=arrays["high_stat_min"], maximum=arrays["high_stat_max"]
        ),
        low_mean=arrays["low_mean"],
        low_components=arrays["low_components"],
        high_mean=arrays["high_mean"],
        high_components=arrays["high_components"],
        cond_low_to_high=arrays["cond_low_to_high"],
        cond_high_to_low=arrays["cond_high_to_low"],
        gamma=float(manifest["gamma"]),
        subjects=list(manifest["subjects"]),
        subject_z_low=arrays["subject_z_low"],
        subject_z_high=arrays["subject_z_high"],
        explained_variance_low=np.asarray(manifest["explained_variance_low"]),
        explained_variance_high=np.asarray(manifest["explained_variance_high"]),
        warnings=list(manifest["warnings"]),
    )
    return model
