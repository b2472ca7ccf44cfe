"""Command line interface.

Subcommands: fit, decompose, reconstruct, interpolate, metrics, serve.
Machine-readable output (one JSON document) goes to stdout, progress and
diagnostics to stderr. Heavy imports happen after argument parsing so that
--threads can pin the BLAS pool first.
"""

import argparse
import json
import os
import sys
import time


class _StageError(Exception):
    def __init__(self, stage, cause):
        super().__init__(str(cause))
        self.stage = stage
        self.cause = cause


class _Stage:
    """Tag failures with the pipeline stage they happened in."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        from .errors import SpecmeshError

        if exc is not None and isinstance(exc, (SpecmeshError, OSError)):
            raise _StageError(self.name, exc) from exc
        return False


def _set_threads(n):
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ[var] = str(n)


def _emit(obj):
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _info(message):
    print(message, file=sys.stderr)


def _load_model(path):
    from .model import load_model

    with _Stage("load-model"):
        return load_model(path)


def _load_mesh(path):
    from .meshio import load_mesh

    with _Stage("load-mesh"):
        return load_mesh(path)


def _cmd_fit(args):
    import numpy as np

    from .mesh import preprocess_dataset
    from .meshio import load_manifest
    from .model import fit, save_model
    from .spectral import basis_for_mesh
    from ._kernels import backend_name

    with _Stage("load-dataset"):
        raw = load_manifest(args.dataset)
    with _Stage("preprocess"):
        dataset = preprocess_dataset(raw)
    mean = dataset.mean_mesh()

    k = args.k
    warnings = []
    if k is None:
        k = 500 if mean.n_vertices >= 1000 else max(2, mean.n_vertices // 4)
    if k > mean.n_vertices:
        warnings.append(f"k={k} clamped to n_vertices={mean.n_vertices}")
        k = mean.n_vertices

    t0 = time.perf_counter()
    with _Stage("spectrum"):
        basis = basis_for_mesh(mean, k, seed=args.seed)
    time_basis = time.perf_counter() - t0
    _info(f"basis: k={k} in {time_basis:.2f}s")

    t0 = time.perf_counter()
    with _Stage("fit"):
        model = fit(
            dataset,
            basis,
            d_low=args.d_low,
            d_high=args.d_high,
            gamma=args.gamma,
            materialize=args.materialize_x,
        )
    time_fit = time.perf_counter() - t0
    _info(f"fit: {len(dataset.shapes)} shapes in {time_fit:.2f}s")

    with _Stage("save-model"):
        save_model(args.out, model)

    _emit(
        {
            "out": args.out,
            "n_vertices": model.n_vertices,
            "n_faces": int(len(model.faces)),
            "n_shapes": len(dataset.shapes),
            "k": k,
            "d_low": model.d_low,
            "d_high": model.d_high,
            "gamma": model.gamma,
            "explained_variance_low": np.asarray(model.explained_variance_low).tolist(),
            "explained_variance_high": np.asarray(model.explained_variance_high).tolist(),
            "warnings": warnings + list(model.warnings),
            "backend": backend_name(),
            "seconds_basis": round(time_basis, 3),
            "seconds_fit": round(time_fit, 3),
        }
    )
    return 0


def _cmd_decompose(args):
    from .errors import ConnectivityMismatch
    from .meshio import save_mesh
    from .spectral import band_projector

    model = _load_model(args.model)
    mesh = _load_mesh(args.mesh)
    with _Stage("decompose"):
        if mesh.connectivity_hash != model.connectivity_hash:
            raise ConnectivityMismatch("mesh connectivity does not match the model")
        projector = band_projector(model.basis)
        if args.materialize_x:
            projector = projector.materialize()
        deform = mesh.vertices - model.mean_vertices
        low = projector.apply(deform)
        low_mesh = mesh.with_vertices(low + model.mean_vertices)
        high_mesh = mesh.with_vertices((deform - low) + model.mean_vertices)
    stem = os.path.splitext(os.path.basename(args.mesh))[0]
    os.makedirs(args.out, exist_ok=True)
    low_path = os.path.join(args.out, f"{stem}_low.obj")
    high_path = os.path.join(args.out, f"{stem}_high.obj")
    with _Stage("save-mesh"):
        save_mesh(low_path, low_mesh)
        save_mesh(high_path, high_mesh)
    _emit({"low": low_path, "high": high_path})
    return 0


def _cmd_reconstruct(args):
    from .errors import ConnectivityMismatch
    from .meshio import save_mesh
    from .model import decode, encode
    from .spectral import assemble, band_projector

    model = _load_model(args.model)
    meshes = [_load_mesh(path) for path in args.mesh]
    if len(meshes) == 1:
        with _Stage("reconstruct"):
            result = decode(model, encode(model, meshes[0]))
    elif len(meshes) == 2:
        with _Stage("reconstruct"):
            for mesh in meshes:
                if mesh.connectivity_hash != model.connectivity_hash:
                    raise ConnectivityMismatch(
                        "mesh connectivity does not match the model"
                    )
            vertices = assemble(
                [
                    (band_projector(model.basis), meshes[0].vertices),
                    (band_projector(model.basis, complement=True), meshes[1].vertices),
                ]
            )
            result = meshes[0].with_vertices(vertices)
    else:
        print("error: reconstruct takes one or two --mesh arguments", file=sys.stderr)
        return 2
    with _Stage("save-mesh"):
        save_mesh(args.out, result)
    _emit({"out": args.out})
    return 0


def _cmd_interpolate(args):
    from .meshio import save_mesh
    from .model import encode, interpolate_latent, interpolate_vertex

    if len(args.mesh) != 2:
        print("error: interpolate needs exactly two --mesh arguments", file=sys.stderr)
        return 2

    if args.delta is not None:
        mesh_a = _load_mesh(args.mesh[0])
        mesh_b = _load_mesh(args.mesh[1])
        with _Stage("interpolate"):
            result = interpolate_vertex(mesh_a, mesh_b, args.delta)
        with _Stage("save-mesh"):
            save_mesh(args.out, result)
        _emit({"out": args.out, "delta": args.delta})
        return 0

    if args.model is None:
        print("error: latent interpolation needs --model", file=sys.stderr)
        return 2
    model = _load_model(args.model)
    mesh_a = _load_mesh(args.mesh[0])
    mesh_b = _load_mesh(args.mesh[1])
    with _Stage("encode"):
        code_a = encode(model, mesh_a)
        code_b = encode(model, mesh_b)

    if args.grid is not None:
        try:
            rows, cols = (int(part) for part in args.grid.lower().split("x"))
        except ValueError:
            print("error: --grid expects RxC, e.g. 3x3", file=sys.stderr)
            return 2
        if rows < 1 or cols < 1:
            print("error: --grid needs positive dimensions", file=sys.stderr)
            return 2
        os.makedirs(args.out, exist_ok=True)
        written = []
        for i in range(rows):
            beta = i / (rows - 1) if rows > 1 else 0.0
            for j in range(cols):
                alpha = j / (cols - 1) if cols > 1 else 0.0
                with _Stage("interpolate"):
                    mesh = interpolate_latent(
                        model, code_a, code_b, alpha, beta, gamma_override=args.gamma
                    )
                path = os.path.join(args.out, f"grid_a{alpha:.2f}_b{beta:.2f}.obj")
                with _Stage("save-mesh"):
                    save_mesh(path, mesh)
                written.append(path)
        _emit({"out": args.out, "grid": [rows, cols], "files": written})
        return 0

    with _Stage("interpolate"):
        result = interpolate_latent(
            model, code_a, code_b, args.alpha, args.beta, gamma_override=args.gamma
        )
    with _Stage("save-mesh"):
        save_mesh(args.out, result)
    _emit({"out": args.out, "alpha": args.alpha, "beta": args.beta})
    return 0


def _cmd_metrics(args):
    from .metrics import dame

    if len(args.mesh) != 2:
        print("error: metrics needs exactly two --mesh arguments", file=sys.stderr)
        return 2
    reference = _load_mesh(args.mesh[0])
    test = _load_mesh(args.mesh[1])
    with _Stage("metrics"):
        report = dame(
            reference,
            test,
            masking_c=args.masking_c,
            want_per_edge=args.edges_csv is not None,
        )
    if args.edges_csv is not None:
        with _Stage("save-metrics"), open(args.edges_csv, "w", encoding="utf-8") as fh:
            fh.write("v0,v1,dame\n")
            for (v0, v1), value in zip(report.interior_edges, report.per_edge_dame):
                fh.write(f"{int(v0)},{int(v1)},{float(value)!r}\n")
    result = {"l1": report.l1, "dame": report.dame}
    if args.out is not None:
        with _Stage("save-metrics"), open(args.out, "w", encoding="utf-8") as fh:
            json.dump(result, fh, indent=2, sort_keys=True)
            fh.write("\n")
    _emit(result)
    return 0


def _cmd_serve(args):
    from .service import create_server

    model = _load_model(args.model)
    server = create_server(model, host=args.host, port=args.port)
    _info(f"serving {args.model} on http://{args.host}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        _info("shutting down")
    finally:
        server.server_close()
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="specmesh",
        description="Spectral two-band mesh deformation models.",
    )
    parser.add_argument("--threads", type=int, default=None, help="BLAS thread count")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model from a dataset manifest")
    p.add_argument("--dataset", required=True, help="manifest JSON listing meshes")
    p.add_argument("--out", required=True, help="output model path (.dsmm)")
    p.add_argument("--k", type=int, default=None, help="basis size (default 500, N/4 for small meshes)")
    p.add_argument("--d-low", type=int, default=32)
    p.add_argument("--d-high", type=int, default=32)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--materialize-x", action="store_true", help="use a dense band filter")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("decompose", help="split a mesh into band meshes")
    p.add_argument("--model", required=True)
    p.add_argument("--mesh", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--materialize-x", action="store_true")
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("reconstruct", help="round-trip one mesh, or assemble two band meshes")
    p.add_argument("--model", required=True)
    p.add_argument("--mesh", action="append", required=True, help="once: round-trip; twice: low then high")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("interpolate", help="blend two meshes in latent or vertex space")
    p.add_argument("--model", default=None)
    p.add_argument("--mesh", action="append", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=0.5, help="high band blend")
    p.add_argument("--beta", type=float, default=0.5, help="low band blend")
    p.add_argument("--delta", type=float, default=None, help="vertex-space blend (no model needed)")
    p.add_argument("--gamma", type=float, default=None, help="conditioning strength override")
    p.add_argument("--grid", default=None, help="RxC sweep over (beta, alpha)")
    p.set_defaults(func=_cmd_interpolate)

    p = sub.add_parser("metrics", help="compare a test mesh to a reference")
    p.add_argument("--mesh", action="append", required=True, help="reference first, then test")
    p.add_argument("--out", default=None, help="also write the JSON report here")
    p.add_argument("--masking-c", type=float, default=1.0)
    p.add_argument("--edges-csv", default=None, help="write per-edge DAME values")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("serve", help="serve a fitted model over HTTP")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        if "numpy" in sys.modules:
            _info("warning: --threads set after numpy import, may have no effect")
        _set_threads(args.threads)
    try:
        return args.func(args)
    except _StageError as exc:
        print(f"error: [{exc.stage}] {exc.cause}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
