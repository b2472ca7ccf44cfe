"""Pure numpy deformation-representation kernels.

Reference implementation of the per-vertex hot loops: local transform
fitting, polar decomposition into rotation and scale/shear factors, and
the axis-angle log/exp pair. The compiled extension mirrors this module
function for function.

Adjacency arrives in CSR form (indptr, indices, weights); every vertex is
assumed to have at least one neighbor, which the caller enforces.
"""

import numpy as np

NAME = "numpy"

_SMALL_ANGLE = 1e-6
_NEAR_PI = np.pi - 1e-4


def accumulate_cross(indptr, indices, weights, mean, deformed):
    """Per-vertex D_i = sum_j c_ij (p'_i - p'_j)(p_i - p_j)^T, shape (N, 3, 3)."""
    n = len(indptr) - 1
    src = np.repeat(np.arange(n), np.diff(indptr))
    d = mean[src] - mean[indices]
    dp = deformed[src] - deformed[indices]
    outer = (weights[:, None, None] * dp[:, :, None]) * d[:, None, :]
    return np.add.reduceat(outer.reshape(-1, 9), indptr[:-1], axis=0).reshape(n, 3, 3)


def accumulate_gram(indptr, indices, weights, mean):
    """Per-vertex C_i = sum_j c_ij (p_i - p_j)(p_i - p_j)^T, shape (N, 3, 3)."""
    return accumulate_cross(indptr, indices, weights, mean, mean)


def polar_factors(t):
    """Split (N, 3, 3) transforms into rotations and symmetric factors.

    T = R S with det R = +1; a negative-determinant T flips the smallest
    singular direction into S, keeping R a proper rotation.
    """
    u, s, vt = np.linalg.svd(t)
    sign = np.where(np.linalg.det(u @ vt) < 0, -1.0, 1.0)
    u = u.copy()
    u[:, :, 2] *= sign[:, None]
    r = u @ vt
    s = s.copy()
    s[:, 2] *= sign
    sym = (vt.transpose(0, 2, 1) * s[:, None, :]) @ vt
    return r, sym


def log_rotations(r):
    """Axis-angle vectors of (N, 3, 3) rotation matrices, principal branch."""
    tr = r[:, 0, 0] + r[:, 1, 1] + r[:, 2, 2]
    theta = np.arccos(np.clip((tr - 1.0) / 2.0, -1.0, 1.0))
    skew = np.stack(
        [r[:, 2, 1] - r[:, 1, 2], r[:, 0, 2] - r[:, 2, 0], r[:, 1, 0] - r[:, 0, 1]],
        axis=1,
    )
    out = np.empty((len(r), 3))
    small = theta < _SMALL_ANGLE
    near_pi = theta > _NEAR_PI
    regular = ~(small | near_pi)
    # skew = 2 sin(theta) * axis
    out[regular] = skew[regular] * (
        theta[regular] / (2.0 * np.sin(theta[regular]))
    )[:, None]
    # series of theta / (2 sin theta) around 0
    t2 = theta[small] ** 2
    out[small] = skew[small] * (0.5 * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0))[:, None]
    for idx in np.flatnonzero(near_pi):
        # R + I ~ 2 v v^T near pi; take the strongest column as the axis
        b = 0.5 * (r[idx] + np.eye(3))
        j = int(np.argmax(np.diag(b)))
        v = b[:, j] / np.sqrt(max(b[j, j], 1e-30))
        v /= np.linalg.norm(v)
        if np.dot(skew[idx], v) < 0:
            v = -v
        elif np.abs(np.dot(skew[idx], v)) < 1e-14:
            nz = np.flatnonzero(np.abs(v) > 1e-12)
            if len(nz) and v[nz[0]] < 0:
                v = -v
        out[idx] = theta[idx] * v
    return out


def exp_rotations(w):
    """Rotation matrices from (N, 3) axis-angle vectors (Rodrigues)."""
    theta = np.linalg.norm(w, axis=1)
    small = theta < _SMALL_ANGLE
    t2 = theta**2
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(small, 1.0 - t2 / 6.0 + t2 * t2 / 120.0, np.sin(theta) / theta)
        b = np.where(
            small,
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
            (1.0 - np.cos(theta)) / np.where(small, 1.0, t2),
        )
    n = len(w)
    k = np.zeros((n, 3, 3))
    k[:, 0, 1], k[:, 0, 2] = -w[:, 2], w[:, 1]
    k[:, 1, 0], k[:, 1, 2] = w[:, 2], -w[:, 0]
    k[:, 2, 0], k[:, 2, 1] = -w[:, 1], w[:, 0]
    return np.eye(3)[None] + a[:, None, None] * k + b[:, None, None] * (k @ k)


def encode_features(indptr, indices, weights, mean, deformed, ginv):
    """Fit T_i = D_i G_i per vertex and return (N, 9) feature channels.

    Channels 0..5 are the upper triangle of the symmetric factor minus
    identity (s11, s12, s13, s22, s23, s33); channels 6..8 the rotation log.
    """
    d = accumulate_cross(indptr, indices, weights, mean, deformed)
    t = d @ ginv
    r, sym = polar_factors(t)
    n = len(t)
    out = np.empty((n, 9))
    out[:, 0] = sym[:, 0, 0] - 1.0
    out[:, 1] = sym[:, 0, 1]
    out[:, 2] = sym[:, 0, 2]
    out[:, 3] = sym[:, 1, 1] - 1.0
    out[:, 4] = sym[:, 1, 2]
    out[:, 5] = sym[:, 2, 2] - 1.0
    out[:, 6:9] = log_rotations(r)
    return out


def features_to_matrices(features):
    """Rebuild per-vertex transforms T_i = exp(w_i) (S_i + I) from channels."""
    n = len(features)
    sym = np.empty((n, 3, 3))
    sym[:, 0, 0] = features[:, 0] + 1.0
    sym[:, 0, 1] = sym[:, 1, 0] = features[:, 1]
    sym[:, 0, 2] = sym[:, 2, 0] = features[:, 2]
    sym[:, 1, 1] = features[:, 3] + 1.0
    sym[:, 1, 2] = sym[:, 2, 1] = features[:, 4]
    sym[:, 2, 2] = features[:, 5] + 1.0
    return exp_rotations(features[:, 6:9]) @ sym
