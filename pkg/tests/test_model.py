import numpy as np
import pytest

from specmesh.errors import (
    ConnectivityMismatch,
    DimensionMismatch,
    IndexOutOfRange,
    ParseError,
)
from specmesh.model import (
    LatentCode,
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
from specmesh.spectral import basis_for_mesh
from specmesh.synthetic import icosphere, make_dataset


def test_latent_code_must_be_finite():
    with pytest.raises(ValueError, match="finite"):
        LatentCode(z_low=np.array([1.0, np.nan]), z_high=np.zeros(2))


def test_fit_shapes_and_metadata(small_model, small_dataset):
    assert small_model.d_low == 8
    assert small_model.d_high == 8
    assert small_model.n_vertices == small_dataset.mesh(0).n_vertices
    assert small_model.subjects == [f"s{i:03d}" for i in range(12)]
    assert small_model.subject_z_low.shape == (12, 8)
    assert small_model.subject_z_high.shape == (12, 8)
    # per-component variances: positive and descending
    assert small_model.explained_variance_low[-1] > 0.0
    assert np.all(np.diff(small_model.explained_variance_low) <= 1e-12)
    assert small_model.warnings == []


def test_fit_validates_arguments(small_dataset, small_basis):
    with pytest.raises(ValueError, match="gamma"):
        fit(small_dataset, small_basis, gamma=1.5)
    with pytest.raises(ValueError, match="component"):
        fit(small_dataset, small_basis, d_low=0)
    foreign = basis_for_mesh(icosphere(1), k=10)
    with pytest.raises(ConnectivityMismatch):
        fit(small_dataset, foreign)


def test_fit_clamps_components_to_rank(small_dataset, small_basis):
    # 12 centered shapes span at most 11 directions
    model = fit(small_dataset, small_basis, d_low=16, d_high=16)
    assert model.d_low == 11
    assert model.d_high == 11
    assert any("clamp" in w for w in model.warnings)


def test_full_rank_roundtrip_is_lossless(small_dataset, small_basis):
    model = fit(small_dataset, small_basis, d_low=11, d_high=11)
    worst = 0.0
    for i in range(small_dataset.n_shapes):
        mesh = small_dataset.mesh(i)
        rec = decode(model, encode(model, mesh))
        worst = max(worst, np.abs(rec.vertices - mesh.vertices).max())
    assert worst < 1e-8


def test_encode_matches_training_codes(small_model, small_dataset):
    for i in (0, 5, 11):
        code = encode(small_model, small_dataset.mesh(i))
        stored = small_model.subject_code(i)
        assert np.abs(code.z_low - stored.z_low).max() < 1e-8
        assert np.abs(code.z_high - stored.z_high).max() < 1e-8


def test_subject_code_lookup(small_model):
    by_name = small_model.subject_code("s003")
    by_index = small_model.subject_code(3)
    assert np.array_equal(by_name.z_low, by_index.z_low)
    with pytest.raises(IndexOutOfRange):
        small_model.subject_code("nobody")
    with pytest.raises(IndexOutOfRange):
        small_model.subject_code(99)


def test_encode_rejects_foreign_connectivity(small_model):
    with pytest.raises(ConnectivityMismatch):
        encode(small_model, icosphere(1))


def test_latent_features_validates_dims(small_model):
    bad = LatentCode(z_low=np.zeros(3), z_high=np.zeros(small_model.d_high))
    with pytest.raises(DimensionMismatch):
        latent_features(small_model, bad)


def test_gamma_zero_decouples_bands(small_model, rng):
    base = LatentCode(
        z_low=rng.standard_normal(small_model.d_low),
        z_high=rng.standard_normal(small_model.d_high),
    )
    bumped = edit_band(small_model, base, "high", 2, 4.0)
    low_a, _ = latent_features(small_model, base, gamma_override=0.0)
    low_b, _ = latent_features(small_model, bumped, gamma_override=0.0)
    assert np.abs(low_a - low_b).max() < 1e-14
    bumped_low = edit_band(small_model, base, "low", 0, -3.0)
    _, high_a = latent_features(small_model, base, gamma_override=0.0)
    _, high_b = latent_features(small_model, bumped_low, gamma_override=0.0)
    assert np.abs(high_a - high_b).max() < 1e-14


def test_gamma_scales_conditioning(small_model, rng):
    code = LatentCode(
        z_low=rng.standard_normal(small_model.d_low),
        z_high=rng.standard_normal(small_model.d_high),
    )
    low0, high0 = latent_features(small_model, code, gamma_override=0.0)
    low1, high1 = latent_features(small_model, code, gamma_override=1.0)
    lowh, highh = latent_features(small_model, code, gamma_override=0.5)
    assert np.abs(lowh - 0.5 * (low0 + low1)).max() < 1e-12
    assert np.abs(highh - 0.5 * (high0 + high1)).max() < 1e-12
    # the reduced-rank model leaves nonzero residuals to condition on
    assert np.abs(low1 - low0).max() > 1e-8


def test_blend_codes_routing(rng):
    a = LatentCode(z_low=rng.standard_normal(4), z_high=rng.standard_normal(5))
    b = LatentCode(z_low=rng.standard_normal(4), z_high=rng.standard_normal(5))
    mid = blend_codes(a, b, alpha=0.25, beta=0.75)
    assert np.abs(mid.z_low - (0.25 * a.z_low + 0.75 * b.z_low)).max() < 1e-15
    assert np.abs(mid.z_high - (0.75 * a.z_high + 0.25 * b.z_high)).max() < 1e-15
    ends = blend_codes(a, b, alpha=0.0, beta=0.0)
    assert np.array_equal(ends.z_low, a.z_low)
    assert np.array_equal(ends.z_high, a.z_high)
    ends = blend_codes(a, b, alpha=1.0, beta=1.0)
    assert np.array_equal(ends.z_low, b.z_low)
    assert np.array_equal(ends.z_high, b.z_high)


def test_interpolate_latent_endpoints(small_model):
    a = small_model.subject_code(0)
    b = small_model.subject_code(1)
    start = interpolate_latent(small_model, a, b, alpha=0.0, beta=0.0)
    end = interpolate_latent(small_model, a, b, alpha=1.0, beta=1.0)
    assert np.abs(start.vertices - decode(small_model, a).vertices).max() < 1e-12
    assert np.abs(end.vertices - decode(small_model, b).vertices).max() < 1e-12


def test_is_extrapolation():
    assert not is_extrapolation(0.0, 1.0, 0.5)
    assert is_extrapolation(-0.01)
    assert is_extrapolation(0.2, 1.2)


def test_interpolate_vertex(small_dataset):
    a, b = small_dataset.mesh(0), small_dataset.mesh(1)
    assert np.array_equal(interpolate_vertex(a, b, 0.0).vertices, a.vertices)
    assert np.array_equal(interpolate_vertex(a, b, 1.0).vertices, b.vertices)
    mid = interpolate_vertex(a, b, 0.5).vertices
    assert np.abs(mid - 0.5 * (a.vertices + b.vertices)).max() < 1e-15
    with pytest.raises(ConnectivityMismatch):
        interpolate_vertex(a, icosphere(1), 0.5)


def test_edit_band(small_model, rng):
    code = LatentCode(
        z_low=rng.standard_normal(small_model.d_low),
        z_high=rng.standard_normal(small_model.d_high),
    )
    edited = edit_band(small_model, code, "low", 3, 9.0)
    assert edited.z_low[3] == 9.0
    assert np.array_equal(edited.z_high, code.z_high)
    mask = np.arange(small_model.d_low) != 3
    assert np.array_equal(edited.z_low[mask], code.z_low[mask])
    with pytest.raises(ValueError, match="band"):
        edit_band(small_model, code, "mid", 0, 1.0)
    with pytest.raises(IndexOutOfRange):
        edit_band(small_model, code, "high", small_model.d_high, 1.0)


def test_materialize_does_not_change_fit(small_dataset, small_basis, small_model):
    other = fit(small_dataset, small_basis, d_low=8, d_high=8, materialize=True)
    assert np.abs(other.subject_z_low - small_model.subject_z_low).max() < 1e-9
    assert np.abs(other.subject_z_high - small_model.subject_z_high).max() < 1e-9


def test_save_load_roundtrip(tmp_path, small_model, small_dataset):
    path = tmp_path / "model.dsmm"
    save_model(path, small_model)
    loaded = load_model(path)
    assert loaded.subjects == small_model.subjects
    assert loaded.gamma == small_model.gamma
    assert np.array_equal(loaded.faces, small_model.faces)
    assert np.array_equal(loaded.mean_vertices, small_model.mean_vertices)
    assert np.array_equal(loaded.low_components, small_model.low_components)
    assert np.array_equal(loaded.high_components, small_model.high_components)
    assert np.array_equal(loaded.cond_low_to_high, small_model.cond_low_to_high)
    assert np.array_equal(loaded.subject_z_low, small_model.subject_z_low)
    assert np.array_equal(
        loaded.basis.eigenvectors, small_model.basis.eigenvectors
    )
    mesh = small_dataset.mesh(4)
    a = decode(small_model, encode(small_model, mesh)).vertices
    b = decode(loaded, encode(loaded, mesh)).vertices
    assert np.abs(a - b).max() < 1e-12


def test_save_is_deterministic(tmp_path, small_model):
    p1, p2 = tmp_path / "a.dsmm", tmp_path / "b.dsmm"
    save_model(p1, small_model)
    save_model(p2, small_model)
    assert p1.read_bytes() == p2.read_bytes()


def test_load_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.dsmm"
    path.write_bytes(b"JUNKJUNKJUNKJUNK")
    with pytest.raises(ParseError, match="magic"):
        load_model(path)


def test_load_rejects_bad_manifest(tmp_path, small_model):
    path = tmp_path / "model.dsmm"
    save_model(path, small_model)
    blob = bytearray(path.read_bytes())
    blob[20] ^= 0xFF  # corrupt a manifest byte
    path.write_bytes(bytes(blob))
    with pytest.raises(ParseError):
        load_model(path)


def test_mean_mesh(small_model):
    mean = small_model.mean_mesh()
    assert np.array_equal(mean.vertices, small_model.mean_vertices)
    assert np.array_equal(mean.faces, small_model.faces)


def test_decode_returns_model_connectivity(small_model):
    code = small_model.subject_code(0)
    out = decode(small_model, code)
    assert out.connectivity_hash == small_model.connectivity_hash
