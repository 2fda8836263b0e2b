# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled graph-field kernel; same contract as ``_kernel_py.graph_fields``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, NAN

cnp.import_array()


def graph_fields(x, double m, grad, hess):
    cdef double[:, ::1] X = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] F = np.ascontiguousarray(grad, dtype=np.float64)
    cdef double[:, :, ::1] H = np.ascontiguousarray(hess, dtype=np.float64)
    cdef Py_ssize_t M = X.shape[0]
    h_out = np.empty((M, 3, 3))
    dg_out = np.empty((M, 3, 3, 3))
    pi_out = np.empty((M, 3, 3))
    w2_out = np.empty(M)
    cdef double[:, :, ::1] Hh = h_out
    cdef double gg[3][3]
    cdef double[:, :, :, ::1] DG = dg_out
    cdef double[:, :, ::1] PI = pi_out
    cdef double[::1] W2 = w2_out

    cdef Py_ssize_t n, i, j, k, l
    cdef double r, V, phi, dphi, w2, w, dVf, trk, tmp, c2m
    cdef double xt[3]
    cdef double P[3][3]
    cdef double gbar_inv[3][3]
    cdef double dgbar[3][3][3]
    cdef double low[3][3][3]
    cdef double gamma[3][3][3]
    cdef double dV[3]
    cdef double u[3]
    cdef double kk[3][3]
    cdef double ginv[3][3]

    for n in range(M):
        r = sqrt(X[n, 0] * X[n, 0] + X[n, 1] * X[n, 1] + X[n, 2] * X[n, 2])
        for i in range(3):
            xt[i] = X[n, i] / r
        V = 1.0 - 2.0 * m / r
        phi = 2.0 * m / (r - 2.0 * m)
        dphi = -2.0 * m / ((r - 2.0 * m) * (r - 2.0 * m))
        c2m = 2.0 * m / r
        for i in range(3):
            for j in range(3):
                P[i][j] = (1.0 if i == j else 0.0) - xt[i] * xt[j]
                gbar_inv[i][j] = (1.0 if i == j else 0.0) - c2m * xt[i] * xt[j]
        for k in range(3):
            for i in range(3):
                for j in range(3):
                    dgbar[k][i][j] = dphi * xt[k] * xt[i] * xt[j] + (phi / r) * (P[k][i] * xt[j] + xt[i] * P[k][j])
        for k in range(3):
            for i in range(3):
                for j in range(3):
                    low[k][i][j] = 0.5 * (dgbar[i][k][j] + dgbar[j][k][i] - dgbar[k][i][j])
        for l in range(3):
            for i in range(3):
                for j in range(3):
                    tmp = 0.0
                    for k in range(3):
                        tmp += gbar_inv[l][k] * low[k][i][j]
                    gamma[l][i][j] = tmp
        for i in range(3):
            dV[i] = 2.0 * m / (r * r) * xt[i]
            tmp = 0.0
            for j in range(3):
                tmp += gbar_inv[i][j] * F[n, j]
            u[i] = tmp
        w2 = 1.0 / V
        dVf = 0.0
        for i in range(3):
            w2 -= F[n, i] * u[i]
            dVf += dV[i] * u[i]
        W2[n] = w2
        w = sqrt(w2) if w2 > 0 else NAN
        for i in range(3):
            for j in range(3):
                tmp = H[n, i, j]
                for l in range(3):
                    tmp -= gamma[l][i][j] * F[n, l]
                tmp += (F[n, j] * dV[i] + F[n, i] * dV[j]) / (2.0 * V)
                tmp -= 0.5 * dVf * F[n, i] * F[n, j]
                kk[i][j] = tmp / w
                Hh[n, i, j] = phi * xt[i] * xt[j] - V * F[n, i] * F[n, j]
                gg[i][j] = (1.0 if i == j else 0.0) + Hh[n, i, j]
                ginv[i][j] = gbar_inv[i][j] + u[i] * u[j] / w2
        for k in range(3):
            for i in range(3):
                for j in range(3):
                    DG[n, k, i, j] = (
                        dgbar[k][i][j]
                        - dV[k] * F[n, i] * F[n, j]
                        - V * (H[n, k, i] * F[n, j] + F[n, i] * H[n, k, j])
                    )
        trk = 0.0
        for i in range(3):
            for j in range(3):
                trk += ginv[i][j] * kk[i][j]
        for i in range(3):
            for j in range(3):
                PI[n, i, j] = kk[i][j] - trk * gg[i][j]
    return h_out, dg_out, pi_out, w2_out
