# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled deformation-representation kernels.

Function-for-function mirror of _dr_numpy with the per-vertex loops in C.
The polar decomposition runs off a cyclic Jacobi eigensolver on T^T T,
which is unconditionally stable at 3x3.
"""

import numpy as np

from libc.math cimport M_PI, acos, cos, fabs, sin, sqrt

NAME = "fast"

cdef double SMALL_ANGLE = 1e-6
cdef double NEAR_PI = M_PI - 1e-4


cdef void _jacobi3(double A[3][3], double d[3], double V[3][3]) noexcept nogil:
    """Eigendecomposition of a symmetric 3x3: A = V diag(d) V^T."""
    cdef double B[3][3]
    cdef int i, j, p, q, sweep
    cdef double off, scale, theta, t, c, s, tau, h, g
    for i in range(3):
        for j in range(3):
            B[i][j] = A[i][j]
            V[i][j] = 1.0 if i == j else 0.0
    for sweep in range(50):
        off = fabs(B[0][1]) + fabs(B[0][2]) + fabs(B[1][2])
        scale = fabs(B[0][0]) + fabs(B[1][1]) + fabs(B[2][2])
        if off <= 1e-30 + 1e-16 * scale:
            break
        for p in range(2):
            for q in range(p + 1, 3):
                if fabs(B[p][q]) <= 1e-300:
                    continue
                theta = (B[q][q] - B[p][p]) / (2.0 * B[p][q])
                if theta >= 0:
                    t = 1.0 / (theta + sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + sqrt(1.0 + theta * theta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)
                h = t * B[p][q]
                B[p][p] -= h
                B[q][q] += h
                B[p][q] = 0.0
                B[q][p] = 0.0
                for i in range(3):
                    if i != p and i != q:
                        g = B[i][p]
                        h = B[i][q]
                        B[i][p] = g - s * (h + g * tau)
                        B[p][i] = B[i][p]
                        B[i][q] = h + s * (g - h * tau)
                        B[q][i] = B[i][q]
                for i in range(3):
                    g = V[i][p]
                    h = V[i][q]
                    V[i][p] = g - s * (h + g * tau)
                    V[i][q] = h + s * (g - h * tau)
    for i in range(3):
        d[i] = B[i][i]


cdef double _det3(double T[3][3]) noexcept nogil:
    return (
        T[0][0] * (T[1][1] * T[2][2] - T[1][2] * T[2][1])
        - T[0][1] * (T[1][0] * T[2][2] - T[1][2] * T[2][0])
        + T[0][2] * (T[1][0] * T[2][1] - T[1][1] * T[2][0])
    )


cdef void _polar3(double T[3][3], double R[3][3], double S[3][3]) noexcept nogil:
    """T = R S with det R = +1; negative determinants flip into S."""
    cdef double A[3][3]
    cdef double V[3][3]
    cdef double d[3]
    cdef double sig[3]
    cdef double inv[3]
    cdef int i, j, k, m
    cdef double tmp, s3, denom
    for i in range(3):
        for j in range(3):
            A[i][j] = T[0][i] * T[0][j] + T[1][i] * T[1][j] + T[2][i] * T[2][j]
    _jacobi3(A, d, V)
    # sort eigenpairs descending
    for i in range(2):
        for j in range(i + 1, 3):
            if d[j] > d[i]:
                tmp = d[i]
                d[i] = d[j]
                d[j] = tmp
                for k in range(3):
                    tmp = V[k][i]
                    V[k][i] = V[k][j]
                    V[k][j] = tmp
    for i in range(3):
        sig[i] = sqrt(d[i]) if d[i] > 0 else 0.0
    s3 = sig[2]
    if _det3(T) < 0:
        s3 = -s3
    # S = V diag(sig0, sig1, s3) V^T
    for i in range(3):
        for j in range(3):
            S[i][j] = (
                V[i][0] * sig[0] * V[j][0]
                + V[i][1] * sig[1] * V[j][1]
                + V[i][2] * s3 * V[j][2]
            )
    for i in range(3):
        denom = sig[i] if i < 2 else s3
        if fabs(denom) < 1e-30:
            denom = 1e-30 if denom >= 0 else -1e-30
        inv[i] = 1.0 / denom
    # R = T V diag(1/sig) V^T
    for i in range(3):
        for j in range(3):
            R[i][j] = 0.0
            for m in range(3):
                tmp = 0.0
                for k in range(3):
                    tmp += T[i][k] * V[k][m]
                R[i][j] += tmp * inv[m] * V[j][m]


cdef void _logrot3(double R[3][3], double* w) noexcept nogil:
    cdef double tr = R[0][0] + R[1][1] + R[2][2]
    cdef double c = (tr - 1.0) / 2.0
    cdef double sk0 = R[2][1] - R[1][2]
    cdef double sk1 = R[0][2] - R[2][0]
    cdef double sk2 = R[1][0] - R[0][1]
    cdef double theta, fac, t2, bjj, norm, dot
    cdef double v[3]
    cdef int j, i
    if c > 1.0:
        c = 1.0
    if c < -1.0:
        c = -1.0
    theta = acos(c)
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        fac = 0.5 * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0)
        w[0] = fac * sk0
        w[1] = fac * sk1
        w[2] = fac * sk2
    elif theta > NEAR_PI:
        # R + I ~ 2 v v^T near pi; take the strongest column as the axis
        j = 0
        if R[1][1] > R[j][j]:
            j = 1
        if R[2][2] > R[j][j]:
            j = 2
        bjj = 0.5 * (R[j][j] + 1.0)
        if bjj < 1e-30:
            bjj = 1e-30
        for i in range(3):
            v[i] = 0.5 * (R[i][j] + (1.0 if i == j else 0.0)) / sqrt(bjj)
        norm = sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
        for i in range(3):
            v[i] /= norm
        dot = sk0 * v[0] + sk1 * v[1] + sk2 * v[2]
        if dot < 0:
            for i in range(3):
                v[i] = -v[i]
        elif fabs(dot) < 1e-14:
            for i in range(3):
                if fabs(v[i]) > 1e-12:
                    if v[i] < 0:
                        v[0] = -v[0]
                        v[1] = -v[1]
                        v[2] = -v[2]
                    break
        w[0] = theta * v[0]
        w[1] = theta * v[1]
        w[2] = theta * v[2]
    else:
        fac = theta / (2.0 * sin(theta))
        w[0] = fac * sk0
        w[1] = fac * sk1
        w[2] = fac * sk2


cdef void _exprot3(double w0, double w1, double w2, double R[3][3]) noexcept nogil:
    cdef double theta = sqrt(w0 * w0 + w1 * w1 + w2 * w2)
    cdef double t2 = theta * theta
    cdef double a, b
    if theta < SMALL_ANGLE:
        a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0
    else:
        a = sin(theta) / theta
        b = (1.0 - cos(theta)) / t2
    R[0][0] = 1.0 + b * (-w2 * w2 - w1 * w1)
    R[0][1] = -a * w2 + b * w0 * w1
    R[0][2] = a * w1 + b * w0 * w2
    R[1][0] = a * w2 + b * w0 * w1
    R[1][1] = 1.0 + b * (-w2 * w2 - w0 * w0)
    R[1][2] = -a * w0 + b * w1 * w2
    R[2][0] = -a * w1 + b * w0 * w2
    R[2][1] = a * w0 + b * w1 * w2
    R[2][2] = 1.0 + b * (-w1 * w1 - w0 * w0)


def accumulate_cross(indptr, indices, weights, mean, deformed):
    """Per-vertex D_i = sum_j c_ij (p'_i - p'_j)(p_i - p_j)^T, shape (N, 3, 3)."""
    cdef long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef long[::1] idx = np.ascontiguousarray(indices, dtype=np.int64)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[:, ::1] p = np.ascontiguousarray(mean, dtype=np.float64)
    cdef double[:, ::1] q = np.ascontiguousarray(deformed, dtype=np.float64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    out_arr = np.zeros((n, 3, 3))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, e, j
    cdef double cij, d0, d1, d2, e0, e1, e2
    with nogil:
        for i in range(n):
            for e in range(ip[i], ip[i + 1]):
                j = idx[e]
                cij = w[e]
                d0 = p[i, 0] - p[j, 0]
                d1 = p[i, 1] - p[j, 1]
                d2 = p[i, 2] - p[j, 2]
                e0 = cij * (q[i, 0] - q[j, 0])
                e1 = cij * (q[i, 1] - q[j, 1])
                e2 = cij * (q[i, 2] - q[j, 2])
                out[i, 0, 0] += e0 * d0
                out[i, 0, 1] += e0 * d1
                out[i, 0, 2] += e0 * d2
                out[i, 1, 0] += e1 * d0
                out[i, 1, 1] += e1 * d1
                out[i, 1, 2] += e1 * d2
                out[i, 2, 0] += e2 * d0
                out[i, 2, 1] += e2 * d1
                out[i, 2, 2] += e2 * d2
    return out_arr


def accumulate_gram(indptr, indices, weights, mean):
    """Per-vertex C_i = sum_j c_ij (p_i - p_j)(p_i - p_j)^T, shape (N, 3, 3)."""
    return accumulate_cross(indptr, indices, weights, mean, mean)


def polar_factors(t):
    """Split (N, 3, 3) transforms into rotations and symmetric factors."""
    cdef double[:, :, ::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t n = tv.shape[0]
    r_arr = np.empty((n, 3, 3))
    s_arr = np.empty((n, 3, 3))
    cdef double[:, :, ::1] rv = r_arr
    cdef double[:, :, ::1] sv = s_arr
    cdef double T[3][3]
    cdef double R[3][3]
    cdef double S[3][3]
    cdef Py_ssize_t i, a, b
    with nogil:
        for i in range(n):
            for a in range(3):
                for b in range(3):
                    T[a][b] = tv[i, a, b]
            _polar3(T, R, S)
            for a in range(3):
                for b in range(3):
                    rv[i, a, b] = R[a][b]
                    sv[i, a, b] = S[a][b]
    return r_arr, s_arr


def log_rotations(r):
    """Axis-angle vectors of (N, 3, 3) rotation matrices, principal branch."""
    cdef double[:, :, ::1] rv = np.ascontiguousarray(r, dtype=np.float64)
    cdef Py_ssize_t n = rv.shape[0]
    out_arr = np.empty((n, 3))
    cdef double[:, ::1] out = out_arr
    cdef double R[3][3]
    cdef double w[3]
    cdef Py_ssize_t i, a, b
    with nogil:
        for i in range(n):
            for a in range(3):
                for b in range(3):
                    R[a][b] = rv[i, a, b]
            _logrot3(R, w)
            out[i, 0] = w[0]
            out[i, 1] = w[1]
            out[i, 2] = w[2]
    return out_arr


def exp_rotations(w):
    """Rotation matrices from (N, 3) axis-angle vectors (Rodrigues)."""
    cdef double[:, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = wv.shape[0]
    out_arr = np.empty((n, 3, 3))
    cdef double[:, :, ::1] out = out_arr
    cdef double R[3][3]
    cdef Py_ssize_t i, a, b
    with nogil:
        for i in range(n):
            _exprot3(wv[i, 0], wv[i, 1], wv[i, 2], R)
            for a in range(3):
                for b in range(3):
                    out[i, a, b] = R[a][b]
    return out_arr


def encode_features(indptr, indices, weights, mean, deformed, ginv):
    """Fit T_i = D_i G_i per vertex and return (N, 9) feature channels."""
    cdef long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef long[::1] idx = np.ascontiguousarray(indices, dtype=np.int64)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[:, ::1] p = np.ascontiguousarray(mean, dtype=np.float64)
    cdef double[:, ::1] q = np.ascontiguousarray(deformed, dtype=np.float64)
    cdef double[:, :, ::1] g = np.ascontiguousarray(ginv, dtype=np.float64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    out_arr = np.empty((n, 9))
    cdef double[:, ::1] out = out_arr
    cdef double D[3][3]
    cdef double T[3][3]
    cdef double R[3][3]
    cdef double S[3][3]
    cdef double wvec[3]
    cdef Py_ssize_t i, e, j, a, b, k
    cdef double cij, d0, d1, d2, e0, e1, e2
    with nogil:
        for i in range(n):
            for a in range(3):
                for b in range(3):
                    D[a][b] = 0.0
            for e in range(ip[i], ip[i + 1]):
                j = idx[e]
                cij = w[e]
                d0 = p[i, 0] - p[j, 0]
                d1 = p[i, 1] - p[j, 1]
                d2 = p[i, 2] - p[j, 2]
                e0 = cij * (q[i, 0] - q[j, 0])
                e1 = cij * (q[i, 1] - q[j, 1])
                e2 = cij * (q[i, 2] - q[j, 2])
                D[0][0] += e0 * d0
                D[0][1] += e0 * d1
                D[0][2] += e0 * d2
                D[1][0] += e1 * d0
                D[1][1] += e1 * d1
                D[1][2] += e1 * d2
                D[2][0] += e2 * d0
                D[2][1] += e2 * d1
                D[2][2] += e2 * d2
            for a in range(3):
                for b in range(3):
                    T[a][b] = 0.0
                    for k in range(3):
                        T[a][b] += D[a][k] * g[i, k, b]
            _polar3(T, R, S)
            _logrot3(R, wvec)
            out[i, 0] = S[0][0] - 1.0
            out[i, 1] = S[0][1]
            out[i, 2] = S[0][2]
            out[i, 3] = S[1][1] - 1.0
            out[i, 4] = S[1][2]
            out[i, 5] = S[2][2] - 1.0
            out[i, 6] = wvec[0]
            out[i, 7] = wvec[1]
            out[i, 8] = wvec[2]
    return out_arr


def features_to_matrices(features):
    """Rebuild per-vertex transforms T_i = exp(w_i) (S_i + I) from channels."""
    cdef double[:, ::1] f = np.ascontiguousarray(features, dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0]
    out_arr = np.empty((n, 3, 3))
    cdef double[:, :, ::1] out = out_arr
    cdef double R[3][3]
    cdef double S[3][3]
    cdef Py_ssize_t i, a, b, k
    with nogil:
        for i in range(n):
            S[0][0] = f[i, 0] + 1.0
            S[0][1] = f[i, 1]
            S[0][2] = f[i, 2]
            S[1][0] = f[i, 1]
            S[1][1] = f[i, 3] + 1.0
            S[1][2] = f[i, 4]
            S[2][0] = f[i, 2]
            S[2][1] = f[i, 4]
            S[2][2] = f[i, 5] + 1.0
            _exprot3(f[i, 6], f[i, 7], f[i, 8], R)
            for a in range(3):
                for b in range(3):
                    out[i, a, b] = 0.0
                    for k in range(3):
                        out[i, a, b] += R[a][k] * S[k][b]
    return out_arr
