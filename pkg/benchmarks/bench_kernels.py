"""Compare the compiled deformation-representation kernels to the numpy
fallback on a synthetic icosphere.

Run: python benchmarks/bench_kernels.py [--subdiv 4] [--repeats 5]
"""

import argparse
import importlib
import time

import numpy as np

from specmesh.drfeat import edge_weights
from specmesh.synthetic import bumpy_template


def _load_backends():
    backends = [importlib.import_module("specmesh._kernels._dr_numpy")]
    try:
        backends.append(importlib.import_module("specmesh._kernels._dr_fast"))
    except ImportError:
        print("compiled backend not built, timing the fallback only")
    return backends


def _median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return sorted(times)[len(times) // 2]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--subdiv", type=int, default=4)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    mesh = bumpy_template(args.subdiv)
    weights = edge_weights(mesh)
    rng = np.random.default_rng(0)
    deformed = mesh.vertices + 0.02 * rng.standard_normal(mesh.vertices.shape)
    print(f"icosphere subdiv={args.subdiv}: {mesh.n_vertices} vertices")

    rows = []
    for backend in _load_backends():
        encode = lambda: backend.encode_features(
            weights.indptr, weights.indices, weights.weights,
            mesh.vertices, deformed, weights.gram_inverses,
        )
        feats = encode()
        decode = lambda: backend.features_to_matrices(feats)
        rows.append(
            (backend.NAME,
             _median_time(encode, args.repeats),
             _median_time(decode, args.repeats))
        )

    print(f"{'backend':<8} {'encode':>12} {'to-matrices':>12}")
    for name, t_enc, t_dec in rows:
        print(f"{name:<8} {t_enc * 1e3:>10.2f}ms {t_dec * 1e3:>10.2f}ms")
    if len(rows) == 2:
        print(
            f"speedup  {rows[0][1] / rows[1][1]:>10.2f}x {rows[0][2] / rows[1][2]:>10.2f}x"
        )


if __name__ == "__main__":
    main()
