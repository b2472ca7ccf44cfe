"""Spectral two-band mesh deformation models."""

from ._kernels import backend_name
from .drfeat import (
    DRFeature,
    FeatureStats,
    EdgeWeights,
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
from .errors import (
    ConnectivityMismatch,
    ConvergenceFailure,
    DegenerateDataset,
    DegenerateTriangle,
    DimensionMismatch,
    InconsistentWinding,
    IndexOutOfRange,
    NoInteriorEdges,
    NonTriangulable,
    ParseError,
    SingularNeighborhood,
    SolveFailure,
    SpecmeshError,
    StatsMismatch,
)
from .laplacian import MassMatrix, SparseSymMatrix, cotangent_laplacian, mass_matrix, total_area
from .mesh import (
    MeshDataset,
    RigidTransform,
    TriangleMesh,
    connectivity_hash,
    mean_deformation,
    preprocess_dataset,
    procrustes_rotation,
)
from .meshio import load_manifest, load_mesh, save_manifest, save_mesh
from .metrics import MetricReport, dame, interior_edges, l1_error, oriented_dihedrals
from .model import (
    LatentCode,
    LatentModel,
    band_meshes,
    blend_codes,
    decode,
    edit_band,
    encode,
    fit,
    interpolate_latent,
    interpolate_vertex,
    is_extrapolation,
    latent_features,
    load_model,
    save_model,
)
from .spectral import (
    BandProjector,
    SpectralBasis,
    assemble,
    band_projector,
    basis_for_mesh,
    decompose_two_band,
    load_basis,
    save_basis,
    solve_spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "BandProjector",
    "ConnectivityMismatch",
    "ConvergenceFailure",
    "DRFeature",
    "DegenerateDataset",
    "DegenerateTriangle",
    "DimensionMismatch",
    "EdgeWeights",
    "FeatureStats",
    "InconsistentWinding",
    "IndexOutOfRange",
    "LatentCode",
    "LatentModel",
    "MassMatrix",
    "MeshDataset",
    "MetricReport",
    "NoInteriorEdges",
    "NonTriangulable",
    "ParseError",
    "RigidTransform",
    "SingularNeighborhood",
    "SolveFailure",
    "SparseSymMatrix",
    "SpecmeshError",
    "SpectralBasis",
    "StatsMismatch",
    "TriangleMesh",
    "assemble",
    "backend_name",
    "band_meshes",
    "band_projector",
    "basis_for_mesh",
    "blend_codes",
    "compute_coord_stats",
    "compute_dr_stats",
    "connectivity_hash",
    "cotangent_laplacian",
    "dame",
    "decode",
    "decode_dr",
    "decompose_two_band",
    "denormalize_dr",
    "destandardize_coords",
    "edge_weights",
    "edit_band",
    "encode",
    "encode_dr",
    "fit",
    "interior_edges",
    "interpolate_latent",
    "interpolate_vertex",
    "is_extrapolation",
    "l1_error",
    "latent_features",
    "load_basis",
    "load_manifest",
    "load_mesh",
    "load_model",
    "mass_matrix",
    "mean_deformation",
    "normalize_dr",
    "oriented_dihedrals",
    "preprocess_dataset",
    "procrustes_rotation",
    "save_basis",
    "save_manifest",
    "save_mesh",
    "save_model",
    "solve_spectrum",
    "standardize_coords",
    "total_area",
]
