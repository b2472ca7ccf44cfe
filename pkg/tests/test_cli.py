import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from specmesh.cli import main
from specmesh.meshio import load_mesh
from specmesh.model import decode, encode, load_model
from specmesh.synthetic import icosphere, write_dataset


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    manifest = write_dataset(root / "ds", n_shapes=8, subdivisions=1, seed=21)
    out = subprocess.run(
        [
            sys.executable, "-m", "specmesh.cli", "fit",
            "--dataset", str(manifest),
            "--out", str(root / "model.dsmm"),
            "--d-low", "16", "--d-high", "16",
        ],
        capture_output=True, text=True, check=True,
    )
    return {
        "root": root,
        "manifest": manifest,
        "model": root / "model.dsmm",
        "fit_summary": json.loads(out.stdout),
        "fit_stderr": out.stderr,
        "shape0": root / "ds" / "shape_000.obj",
        "shape1": root / "ds" / "shape_001.obj",
    }


def test_fit_summary(workdir):
    summary = workdir["fit_summary"]
    assert summary["n_vertices"] == 42
    assert summary["n_shapes"] == 8
    assert summary["k"] == 10  # max(2, 42 // 4)
    # requested 16 components, the 8-shape dataset cannot support them
    assert summary["d_low"] < 16
    assert any("clamp" in w for w in summary["warnings"])
    assert summary["backend"] in ("numpy", "fast")
    assert workdir["model"].exists()
    assert "basis:" in workdir["fit_stderr"]


def test_decompose_identity(workdir, tmp_path, capsys):
    rc = main([
        "decompose",
        "--model", str(workdir["model"]),
        "--mesh", str(workdir["shape0"]),
        "--out", str(tmp_path),
    ])
    assert rc == 0
    paths = json.loads(capsys.readouterr().out)
    low = load_mesh(paths["low"])
    high = load_mesh(paths["high"])
    assert paths["low"].endswith("shape_000_low.obj")
    original = load_mesh(workdir["shape0"])
    mean = load_model(workdir["model"]).mean_vertices
    recombined = low.vertices + high.vertices - mean
    assert np.abs(recombined - original.vertices).max() < 1e-10


def test_reconstruct_roundtrip(workdir, tmp_path, capsys):
    out = tmp_path / "rec.obj"
    rc = main([
        "reconstruct",
        "--model", str(workdir["model"]),
        "--mesh", str(workdir["shape0"]),
        "--out", str(out),
    ])
    assert rc == 0
    capsys.readouterr()
    original = load_mesh(workdir["shape0"])
    # components were clamped to the dataset rank, so training shapes
    # reproduce themselves
    assert np.abs(load_mesh(out).vertices - original.vertices).max() < 1e-8


def test_reconstruct_assembles_bands(workdir, tmp_path, capsys):
    rc = main([
        "decompose",
        "--model", str(workdir["model"]),
        "--mesh", str(workdir["shape1"]),
        "--out", str(tmp_path),
    ])
    assert rc == 0
    paths = json.loads(capsys.readouterr().out)
    out = tmp_path / "assembled.obj"
    rc = main([
        "reconstruct",
        "--model", str(workdir["model"]),
        "--mesh", paths["low"],
        "--mesh", paths["high"],
        "--out", str(out),
    ])
    assert rc == 0
    capsys.readouterr()
    original = load_mesh(workdir["shape1"])
    assert np.abs(load_mesh(out).vertices - original.vertices).max() < 1e-8


def test_reconstruct_rejects_three_meshes(workdir, tmp_path, capsys):
    rc = main([
        "reconstruct",
        "--model", str(workdir["model"]),
        "--mesh", str(workdir["shape0"]),
        "--mesh", str(workdir["shape0"]),
        "--mesh", str(workdir["shape0"]),
        "--out", str(tmp_path / "x.obj"),
    ])
    assert rc == 2
    assert "one or two" in capsys.readouterr().err


def test_interpolate_delta_endpoint(workdir, tmp_path, capsys):
    out = tmp_path / "d0.obj"
    rc = main([
        "interpolate",
        "--mesh", str(workdir["shape0"]),
        "--mesh", str(workdir["shape1"]),
        "--delta", "0.0",
        "--out", str(out),
    ])
    assert rc == 0
    capsys.readouterr()
    a = load_mesh(workdir["shape0"])
    assert np.abs(load_mesh(out).vertices - a.vertices).max() < 1e-15


def test_interpolate_latent_endpoint_matches_roundtrip(workdir, tmp_path, capsys):
    out = tmp_path / "a0b0.obj"
    rc = main([
        "interpolate",
        "--model", str(workdir["model"]),
        "--mesh", str(workdir["shape0"]),
        "--mesh", str(workdir["shape1"]),
        "--alpha", "0.0", "--beta", "0.0",
        "--out", str(out),
    ])
    assert rc == 0
    capsys.readouterr()
    model = load_model(workdir["model"])
    expected = decode(model, encode(model, load_mesh(workdir["shape0"])))
    assert np.abs(load_mesh(out).vertices - expected.vertices).max() < 1e-12


def test_interpolate_grid(workdir, tmp_path, capsys):
    rc = main([
        "interpolate",
        "--model", str(workdir["model"]),
        "--mesh", str(workdir["shape0"]),
        "--mesh", str(workdir["shape1"]),
        "--grid", "2x3",
        "--out", str(tmp_path),
    ])
    assert rc == 0
    result = json.loads(capsys.readouterr().out)
    assert result["grid"] == [2, 3]
    names = sorted(p.name for p in tmp_path.glob("*.obj"))
    assert names == [
        "grid_a0.00_b0.00.obj", "grid_a0.00_b1.00.obj",
        "grid_a0.50_b0.00.obj", "grid_a0.50_b1.00.obj",
        "grid_a1.00_b0.00.obj", "grid_a1.00_b1.00.obj",
    ]


def test_interpolate_argument_errors(workdir, tmp_path, capsys):
    rc = main([
        "interpolate",
        "--mesh", str(workdir["shape0"]),
        "--out", str(tmp_path / "x.obj"),
    ])
    assert rc == 2
    rc = main([
        "interpolate",
        "--mesh", str(workdir["shape0"]),
        "--mesh", str(workdir["shape1"]),
        "--out", str(tmp_path / "x.obj"),
    ])
    assert rc == 2
    assert "--model" in capsys.readouterr().err
    rc = main([
        "interpolate",
        "--model", str(workdir["model"]),
        "--mesh", str(workdir["shape0"]),
        "--mesh", str(workdir["shape1"]),
        "--grid", "3by3",
        "--out", str(tmp_path),
    ])
    assert rc == 2


def test_metrics_identical(workdir, tmp_path, capsys):
    report_path = tmp_path / "report.json"
    rc = main([
        "metrics",
        "--mesh", str(workdir["shape0"]),
        "--mesh", str(workdir["shape0"]),
        "--out", str(report_path),
    ])
    assert rc == 0
    stdout_report = json.loads(capsys.readouterr().out)
    assert stdout_report == {"l1": 0.0, "dame": 0.0}
    assert json.loads(report_path.read_text()) == stdout_report


def test_metrics_edge_csv(workdir, tmp_path, capsys):
    csv_path = tmp_path / "edges.csv"
    rc = main([
        "metrics",
        "--mesh", str(workdir["shape0"]),
        "--mesh", str(workdir["shape1"]),
        "--edges-csv", str(csv_path),
    ])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "v0,v1,dame"
    values = [float(line.split(",")[2]) for line in lines[1:]]
    # 42-vertex closed mesh: E = 3F/2 = 120
    assert len(values) == 120
    assert abs(np.mean(values) - report["dame"]) < 1e-12


def test_stage_tagged_errors(workdir, tmp_path, capsys):
    rc = main([
        "fit",
        "--dataset", str(tmp_path / "missing.json"),
        "--out", str(tmp_path / "m.dsmm"),
    ])
    assert rc == 1
    assert "error: [load-dataset]" in capsys.readouterr().err
    rc = main([
        "decompose",
        "--model", str(workdir["model"]),
        "--mesh", str(tmp_path / "missing.obj"),
        "--out", str(tmp_path),
    ])
    assert rc == 1
    assert "error: [load-mesh]" in capsys.readouterr().err


def test_connectivity_error_is_stage_tagged(workdir, tmp_path, capsys):
    from specmesh.meshio import save_mesh

    foreign = tmp_path / "foreign.obj"
    save_mesh(foreign, icosphere(2))
    rc = main([
        "decompose",
        "--model", str(workdir["model"]),
        "--mesh", str(foreign),
        "--out", str(tmp_path),
    ])
    assert rc == 1
    assert "error: [decompose]" in capsys.readouterr().err


def test_console_script_help():
    exe = shutil.which("specmesh")
    assert exe is not None
    out = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for name in ("fit", "decompose", "reconstruct", "interpolate", "metrics", "serve"):
        assert name in out.stdout
