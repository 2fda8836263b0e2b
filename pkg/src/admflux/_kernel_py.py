"""Pure numpy implementation of the graph-field kernel."""

from __future__ import annotations

import numpy as np


def graph_fields(x, m: float, grad, hess):
    """Cartesian h = g - delta, dg, pi and w^2 of the graph t = f at points x.

    ``x`` (M, 3) are Cartesian points, ``grad`` (M, 3) and ``hess`` (M, 3, 3)
    the flat first and second derivatives of f there.  The ambient slice is the
    static Schwarzschild slice of mass ``m`` (flat for m = 0) written in
    Cartesian coordinates.  Returns ``h`` (M, 3, 3), ``dg`` (M, 3, 3, 3) with
    ``dg[:, k, i, j] = d_k g_ij``, ``pi`` (M, 3, 3) and ``w2`` (M,).
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(grad, dtype=float)
    H = np.asarray(hess, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    xt = x / r[:, None]
    eye = np.eye(3)
    xx = xt[:, :, None] * xt[:, None, :]
    P = eye - xx
    V = 1.0 - 2.0 * m / r
    phi = 2.0 * m / (r - 2.0 * m)
    dphi = -2.0 * m / (r - 2.0 * m) ** 2

    gbar_inv = eye - (2.0 * m / r)[:, None, None] * xx
    Px = P[:, :, :, None] * xt[:, None, None, :]  # P_ki x_j
    dgbar = dphi[:, None, None, None] * xt[:, :, None, None] * xx[:, None, :, :] + (phi / r)[:, None, None, None] * (
        Px + np.swapaxes(Px, -1, -2)
    )
    # Gamma^l_ij = 1/2 g^{lk} (d_i g_kj + d_j g_ki - d_k g_ij)
    low = 0.5 * (np.transpose(dgbar, (0, 2, 1, 3)) + np.transpose(dgbar, (0, 2, 3, 1)) - dgbar)  # [k,i,j]
    gamma = np.einsum("nlk,nkij->nlij", gbar_inv, low)

    dV = (2.0 * m / r**2)[:, None] * xt
    u = np.einsum("nij,nj->ni", gbar_inv, f)
    w2 = 1.0 / V - np.einsum("ni,ni->n", f, u)
    w = np.sqrt(np.where(w2 > 0, w2, np.nan))
    dVf = np.einsum("ni,ni->n", dV, u)
    fdV = f[:, None, :] * dV[:, :, None]
    k = (
        H
        - np.einsum("nlij,nl->nij", gamma, f)
        + (fdV + np.swapaxes(fdV, -1, -2)) / (2.0 * V)[:, None, None]
        - 0.5 * dVf[:, None, None] * f[:, :, None] * f[:, None, :]
    ) / w[:, None, None]

    ff = f[:, :, None] * f[:, None, :]
    # perturbation kept separate: g - delta is far below rounding of g at large r
    h = phi[:, None, None] * xx - V[:, None, None] * ff
    g = eye + h
    Hf = H[:, :, :, None] * f[:, None, None, :]  # H_ki f_j
    dg = dgbar - dV[:, :, None, None] * ff[:, None, :, :] - V[:, None, None, None] * (Hf + np.swapaxes(Hf, -1, -2))
    g_inv = gbar_inv + u[:, :, None] * u[:, None, :] / w2[:, None, None]
    tr_k = np.einsum("nij,nij->n", g_inv, k)
    pi = k - tr_k[:, None, None] * g
    return h, dg, pi, w2
