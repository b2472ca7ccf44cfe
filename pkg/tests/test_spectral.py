import numpy as np
import pytest

from specmesh.errors import ConnectivityMismatch, DimensionMismatch, ParseError
from specmesh.laplacian import cotangent_laplacian, mass_matrix
from specmesh.spectral import (
    BandProjector,
    assemble,
    band_projector,
    basis_for_mesh,
    decompose_two_band,
    load_basis,
    save_basis,
    solve_spectrum,
)
from specmesh.synthetic import bumpy_template

from oracles import dense_eigs_oracle


def test_dense_and_arpack_agree(bumpy2):
    # 162 vertices sits above the dense cutoff only when forced; compare
    # the sparse path against the dense oracle directly
    s = cotangent_laplacian(bumpy2)
    m = mass_matrix(bumpy2)
    vals, vecs = solve_spectrum(s, m, 20)
    ref_vals, _ = dense_eigs_oracle(s.toarray(), m.diagonal, 20)
    scale = max(abs(ref_vals[-1]), 1.0)
    assert np.abs(vals - np.maximum(ref_vals, 0.0)).max() / scale < 1e-8


def test_first_eigenpair_is_constant(bumpy2):
    basis = basis_for_mesh(bumpy2, 10)
    assert abs(basis.eigenvalues[0]) < 1e-8
    u0 = basis.eigenvectors[:, 0]
    assert np.abs(u0 - u0[0]).max() < 1e-6 * abs(u0[0])


def test_eigenvalues_sorted_and_nonnegative(bumpy2):
    basis = basis_for_mesh(bumpy2, 30)
    assert np.all(np.diff(basis.eigenvalues) >= -1e-12)
    assert basis.eigenvalues.min() >= 0.0


def test_m_orthonormality(bumpy2):
    basis = basis_for_mesh(bumpy2, 30)
    gram = basis.eigenvectors.T @ (basis.mass_diag[:, None] * basis.eigenvectors)
    assert np.abs(gram - np.eye(30)).max() < 1e-10


def test_solver_is_deterministic(bumpy2):
    a = basis_for_mesh(bumpy2, 25)
    b = basis_for_mesh(bumpy2, 25)
    assert np.all(a.eigenvalues == b.eigenvalues)
    assert np.all(a.eigenvectors == b.eigenvectors)


def test_dense_path_matches_sparse_path():
    mesh = bumpy_template(2)  # 162 vertices, below the dense cutoff
    s = cotangent_laplacian(mesh)
    m = mass_matrix(mesh)
    dense_vals, _ = solve_spectrum(s, m, 12)
    # k = N forces the dense path regardless of size
    all_vals, _ = solve_spectrum(s, m, mesh.n_vertices)
    assert np.abs(dense_vals - all_vals[:12]).max() < 1e-8 * max(all_vals.max(), 1)


def test_solve_spectrum_validates_k(bumpy2):
    s = cotangent_laplacian(bumpy2)
    m = mass_matrix(bumpy2)
    with pytest.raises(DimensionMismatch):
        solve_spectrum(s, m, 0)
    with pytest.raises(DimensionMismatch):
        solve_spectrum(s, m, bumpy2.n_vertices + 1)


def test_solve_spectrum_validates_dimensions(bumpy2, ico2):
    s = cotangent_laplacian(bumpy2)
    from specmesh.laplacian import MassMatrix

    with pytest.raises(DimensionMismatch):
        solve_spectrum(s, MassMatrix(np.ones(3)), 5)


def test_projector_is_idempotent(bumpy2, rng):
    basis = basis_for_mesh(bumpy2, 20)
    proj = band_projector(basis, stop=12)
    signal = rng.standard_normal((bumpy2.n_vertices, 3))
    once = proj.apply(signal)
    assert np.abs(proj.apply(once) - once).max() < 1e-10


def test_projector_complement_sums_to_identity(bumpy2, rng):
    basis = basis_for_mesh(bumpy2, 20)
    proj = band_projector(basis)
    comp = band_projector(basis, complement=True)
    signal = rng.standard_normal(bumpy2.n_vertices)
    assert np.abs(proj.apply(signal) + comp.apply(signal) - signal).max() < 1e-14


def test_projector_preserves_constants_on_closed_mesh(bumpy2):
    basis = basis_for_mesh(bumpy2, 20)
    ones = np.ones(bumpy2.n_vertices)
    assert np.abs(band_projector(basis).apply(ones) - 1.0).max() < 1e-9


def test_projector_materialize_matches_factor_form(bumpy2, rng):
    basis = basis_for_mesh(bumpy2, 20)
    signal = rng.standard_normal((bumpy2.n_vertices, 3))
    for complement in (False, True):
        proj = band_projector(basis, complement=complement)
        dense = proj.materialize()
        assert dense.materialized.shape == (bumpy2.n_vertices,) * 2
        assert np.abs(proj.apply(signal) - dense.apply(signal)).max() < 1e-10


def test_projector_band_slicing(bumpy2, rng):
    basis = basis_for_mesh(bumpy2, 20)
    signal = rng.standard_normal(bumpy2.n_vertices)
    full = band_projector(basis).apply(signal)
    lower = band_projector(basis, stop=8).apply(signal)
    upper = band_projector(basis, start=8).apply(signal)
    assert np.abs(lower + upper - full).max() < 1e-12


def test_projector_validates_band_and_signal(bumpy2, rng):
    basis = basis_for_mesh(bumpy2, 10)
    with pytest.raises(DimensionMismatch):
        BandProjector(basis=basis, start=4, stop=2)
    with pytest.raises(DimensionMismatch):
        BandProjector(basis=basis, start=0, stop=11)
    with pytest.raises(DimensionMismatch):
        band_projector(basis).apply(rng.standard_normal(7))


def test_decompose_identity(small_dataset, small_basis):
    for i in range(small_dataset.n_shapes):
        low, high = decompose_two_band(small_dataset, small_basis, i)
        lhs = low + high - small_dataset.mean_vertices
        assert np.abs(lhs - small_dataset.shapes[i]).max() < 1e-12


def test_decompose_checks_connectivity(small_dataset, ico2):
    other = basis_for_mesh(ico2.with_vertices(ico2.vertices * 2.0), 5)
    wrong = basis_for_mesh(
        bumpy_template(1), 5
    )
    with pytest.raises(ConnectivityMismatch):
        decompose_two_band(small_dataset, wrong, 0)


def test_assemble_two_bands_recovers_shape(small_dataset, small_basis):
    proj = band_projector(small_basis)
    comp = band_projector(small_basis, complement=True)
    low, high = decompose_two_band(small_dataset, small_basis, 3)
    out = assemble([(proj, low), (comp, high)])
    assert np.abs(out - small_dataset.shapes[3]).max() < 1e-10


def test_assemble_requires_bands():
    with pytest.raises(DimensionMismatch):
        assemble([])


def test_basis_save_load_round_trip(tmp_path, bumpy2):
    basis = basis_for_mesh(bumpy2, 15)
    path = tmp_path / "basis.dsmb"
    save_basis(path, basis)
    loaded = load_basis(path)
    assert np.all(loaded.eigenvalues == basis.eigenvalues)
    assert np.all(loaded.eigenvectors == basis.eigenvectors)
    assert np.all(loaded.mass_diag == basis.mass_diag)
    assert loaded.connectivity_hash == basis.connectivity_hash


def test_basis_save_is_deterministic(tmp_path, bumpy2):
    basis = basis_for_mesh(bumpy2, 8)
    a, b = tmp_path / "a.dsmb", tmp_path / "b.dsmb"
    save_basis(a, basis)
    save_basis(b, basis)
    assert a.read_bytes() == b.read_bytes()


def test_basis_load_rejects_wrong_hash(tmp_path, bumpy2, ico2):
    basis = basis_for_mesh(bumpy2, 8)
    path = tmp_path / "basis.dsmb"
    save_basis(path, basis)
    with pytest.raises(ConnectivityMismatch):
        load_basis(path, expected_hash=ico2.connectivity_hash + 1)


def test_basis_load_rejects_garbage(tmp_path, bumpy2):
    path = tmp_path / "basis.dsmb"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(ParseError, match="magic"):
        load_basis(path)
    basis = basis_for_mesh(bumpy2, 8)
    save_basis(path, basis)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(ParseError, match="truncated"):
        load_basis(path)
