"""Procedural synthetic datasets: bumpy spheres with separated
low-frequency shape modes and high-frequency detail modes.

The generator is deterministic for a given seed and doubles as the
fixture source for the test suite. Run as a module to write a dataset
to disk:

    python -m specmesh.synthetic --out data/ --n-shapes 20 --subdiv 3
"""

import argparse
import os
import sys

import numpy as np

from .mesh import TriangleMesh, preprocess_dataset


def icosphere(subdivisions=3):
    """Unit icosphere with 10 * 4**s + 2 vertices, deterministic ordering."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    vertices = np.array(
        [
            (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
            (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
            (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
        ],
        dtype=np.float64,
    )
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    vertices = [v / np.linalg.norm(v) for v in vertices]
    for _ in range(subdivisions):
        midpoint = {}
        new_faces = []

        def midpoint_index(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in midpoint:
                m = vertices[a] + vertices[b]
                vertices.append(m / np.linalg.norm(m))
                midpoint[key] = len(vertices) - 1
            return midpoint[key]

        for a, b, c in faces:
            ab = midpoint_index(a, b)
            bc = midpoint_index(b, c)
            ca = midpoint_index(c, a)
            new_faces += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        faces = new_faces
    return TriangleMesh(np.asarray(vertices), np.asarray(faces, dtype=np.int64))


def bumpy_template(subdivisions=3):
    """Sphere with a fixed smooth radial bump field, the dataset template."""
    sphere = icosphere(subdivisions)
    x, y, z = sphere.vertices.T
    radial = (
        1.0
        + 0.16 * np.sin(2.1 * x) * np.cos(1.7 * y)
        + 0.12 * np.sin(1.4 * y + 0.5) * np.sin(1.9 * z)
        + 0.10 * np.cos(2.3 * z + 1.1) * np.cos(1.3 * x)
    )
    return sphere.with_vertices(sphere.vertices * radial[:, None])


def _vertex_normals(mesh):
    p = mesh.vertices[mesh.faces]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    normals = np.zeros_like(mesh.vertices)
    np.add.at(normals, mesh.faces.ravel(), np.repeat(cross, 3, axis=0))
    norm = np.linalg.norm(normals, axis=1)
    return normals / np.where(norm > 0, norm, 1.0)[:, None]


def make_dataset(n_shapes=20, subdivisions=3, seed=0, preprocess=True,
                 low_amplitude=0.12, high_amplitude=0.012):
    """Bumpy-sphere shape family with per-subject low and high modes.

    Every subject displaces the template by a handful of long-wavelength
    smooth fields (subject identity) plus small short-wavelength
    oscillations along the normals (subject detail). Returns a
    MeshDataset when preprocess is True, else the raw mesh list.
    """
    template = bumpy_template(subdivisions)
    v = template.vertices
    normals = _vertex_normals(template)
    rng = np.random.default_rng(seed)

    n_low, n_high = 6, 4
    low_dirs = rng.standard_normal((n_low, 3))
    low_dirs /= np.linalg.norm(low_dirs, axis=1, keepdims=True)
    low_phases = rng.uniform(0, 2 * np.pi, n_low)
    low_freqs = rng.uniform(0.8, 2.2, n_low)
    low_axes = rng.standard_normal((n_low, 3))
    low_axes /= np.linalg.norm(low_axes, axis=1, keepdims=True)
    high_dirs = rng.standard_normal((n_high, 3))
    high_dirs /= np.linalg.norm(high_dirs, axis=1, keepdims=True)
    high_freqs = rng.uniform(15.0, 40.0, n_high)
    high_phases = rng.uniform(0, 2 * np.pi, n_high)

    meshes = []
    for _ in range(n_shapes):
        low_amp = low_amplitude * rng.standard_normal(n_low) / np.arange(1, n_low + 1)
        high_amp = high_amplitude * rng.standard_normal(n_high) / np.arange(1, n_high + 1)
        disp = np.zeros_like(v)
        for m in range(n_low):
            phase = np.sin(low_freqs[m] * (v @ low_dirs[m]) + low_phases[m])
            disp += low_amp[m] * phase[:, None] * low_axes[m]
        for m in range(n_high):
            phase = np.sin(high_freqs[m] * (v @ high_dirs[m]) + high_phases[m])
            disp += high_amp[m] * phase[:, None] * normals
        meshes.append(template.with_vertices(v + disp))
    if not preprocess:
        return meshes
    return preprocess_dataset(meshes)


def write_dataset(out_dir, n_shapes=20, subdivisions=3, seed=0):
    """Write a dataset plus its manifest; returns the manifest path.

    Shapes are written already aligned so fitting on the manifest (which
    preprocesses again, a no-op at the alignment fixed point) leaves every
    file in the model frame.
    """
    from .meshio import save_manifest, save_mesh

    dataset = make_dataset(n_shapes, subdivisions, seed)
    os.makedirs(out_dir, exist_ok=True)
    names = []
    for i in range(dataset.n_shapes):
        name = f"shape_{i:03d}.obj"
        save_mesh(os.path.join(out_dir, name), dataset.mesh(i))
        names.append(name)
    manifest = os.path.join(out_dir, "manifest.json")
    save_manifest(manifest, names)
    return manifest


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="python -m specmesh.synthetic",
        description="Write a synthetic bumpy-sphere dataset.",
    )
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--n-shapes", type=int, default=20)
    parser.add_argument("--subdiv", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    manifest = write_dataset(args.out, args.n_shapes, args.subdiv, args.seed)
    print(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
