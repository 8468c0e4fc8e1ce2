"""Meshless discretisations of the ALE transport term ``(v - U_ALE) . grad g``.

All operators take a field ``g`` of shape ``(N, M)`` (points x velocity
nodes), the node velocities ``vel`` of shape ``(M, dim)`` and the grid
velocity ``uale`` of shape ``(N, dim)``, and return the transport term
with the same shape as ``g``. The time derivative is minus this term.
"""

from __future__ import annotations

import logging

import numpy as np
from numba import njit

from .mls import StencilDegeneracyError, StencilSet

log = logging.getLogger(__name__)


@njit(cache=True)
def _derivatives(indptr, nbr, coef, g):
    N, M = g.shape
    P = coef.shape[1]
    D = np.zeros((P, N, M))
    dg = np.empty(M)
    for i in range(N):
        for e in range(indptr[i], indptr[i + 1]):
            j = nbr[e]
            for m in range(M):
                dg[m] = g[j, m] - g[i, m]
            for p in range(P):
                c = coef[e, p]
                for m in range(M):
                    D[p, i, m] += c * dg[m]
    return D


@njit(cache=True)
def _muscl(indptr, nbr, disp, grad, taylor, parity, D, g, vel, uale):
    # both reconstructions are formed for every node and selected afterwards,
    # which keeps the inner loops branch-free over the node index
    N, M = g.shape
    P = taylor.shape[1]
    dim = disp.shape[1]
    out = np.zeros((N, M))
    a = np.empty((dim, M))
    s = np.empty(M)
    c = np.empty(M)
    ri = np.empty(M)
    rj = np.empty(M)
    for i in range(N):
        for d in range(dim):
            for m in range(M):
                a[d, m] = vel[m, d] - uale[i, d]
        for e in range(indptr[i], indptr[i + 1]):
            j = nbr[e]
            for m in range(M):
                s[m] = 0.0
                c[m] = 0.0
                ri[m] = g[i, m]
                rj[m] = g[j, m]
            for d in range(dim):
                dd = disp[e, d]
                gd = grad[e, d]
                for m in range(M):
                    s[m] += a[d, m] * dd
                    c[m] += a[d, m] * gd
            for p in range(P):
                t = taylor[e, p]
                tp = parity[p] * t
                for m in range(M):
                    ri[m] += t * D[p, i, m]
                    rj[m] += tp * D[p, j, m]
            for m in range(M):
                rec = ri[m] if s[m] > 0.0 else rj[m]
                out[i, m] += 2.0 * c[m] * (rec - g[i, m])
    return out


@njit(cache=True)
def _upwind_1d(indptr, nbr, disp, w, g, vel, uale, boundary):
    N, M = g.shape
    out = np.zeros((N, M))
    bad = -1
    for i in range(N):
        for m in range(M):
            a = vel[m] - uale[i]
            if a == 0.0:
                continue
            num = 0.0
            den = 0.0
            for e in range(indptr[i], indptr[i + 1]):
                dx = disp[e]
                if a * dx < 0.0:
                    num += w[e] * dx * (g[nbr[e], m] - g[i, m])
                    den += w[e] * dx * dx
            if den > 0.0:
                out[i, m] = a * num / den
            elif not boundary[i]:
                bad = i
    return out, bad


@njit(cache=True)
def _upwind_1d_bound(indptr, nbr, disp, w, vel, uale):
    N = indptr.shape[0] - 1
    M = vel.shape[0]
    best = np.inf
    for i in range(N):
        for m in range(M):
            a = vel[m] - uale[i]
            if a == 0.0:
                continue
            s1 = 0.0
            s2 = 0.0
            for e in range(indptr[i], indptr[i + 1]):
                dx = disp[e]
                if a * dx < 0.0:
                    s1 += w[e] * dx
                    s2 += w[e] * dx * dx
            if s1 != 0.0:
                bound = s2 / abs(a * s1)
                if bound < best:
                    best = bound
    return best


@njit(cache=True)
def _positive_2d(indptr, nbr, eta, shat, kbar, lbar, g, vel, uale, rowsum_only):
    N = indptr.shape[0] - 1
    M = vel.shape[0]
    out = np.zeros((N, M))
    a1 = np.empty(M)
    a2 = np.empty(M)
    c = np.empty(M)
    for i in range(N):
        for m in range(M):
            a1[m] = vel[m, 0] - uale[i, 0]
            a2[m] = vel[m, 1] - uale[i, 1]
        for e in range(indptr[i], indptr[i + 1]):
            j = nbr[e]
            e0, e1, s0, s1 = eta[e, 0], eta[e, 1], shat[e, 0], shat[e, 1]
            k, lb = kbar[e], lbar[e]
            for m in range(M):
                an = a1[m] * e0 + a2[m] * e1
                t = lb * (a1[m] * s0 + a2[m] * s1)
                c[m] = -(k * (an - abs(an)) + (t - abs(t)))
            if rowsum_only:
                for m in range(M):
                    out[i, m] += c[m]
            else:
                for m in range(M):
                    out[i, m] -= c[m] * (g[j, m] - g[i, m])
    return out


def _vel2d(vel: np.ndarray, dim: int) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(vel, dtype=float).reshape(-1, dim))


def _uale2d(uale, n: int, dim: int) -> np.ndarray:
    uale = np.asarray(uale, dtype=float)
    if uale.ndim == 0:
        uale = np.full((n, dim), float(uale))
    elif uale.size == dim and n != 1:
        uale = np.broadcast_to(uale.reshape(1, dim), (n, dim))
    return np.ascontiguousarray(uale.reshape(n, dim))


def transport_velocity(vel, uale) -> np.ndarray:
    """``a[i, m] = v_m - U_ALE(i)``, shape ``(N, M, dim)``."""
    vel = np.asarray(vel, dtype=float)
    uale = np.atleast_2d(np.asarray(uale, dtype=float))
    vel = vel.reshape(vel.shape[0], -1)
    return vel[None, :, :] - uale[:, None, :]


def upwind_sets(st: StencilSet, vel, uale) -> list[list[np.ndarray]]:
    """Neighbours of every point lying upwind for every node (1D)."""
    vel = np.asarray(vel, dtype=float).ravel()
    uale = _uale2d(uale, st.n_points, 1)[:, 0]
    sets = []
    for i in range(st.n_points):
        nb = st.neighbors(i)
        dx = st.disp[st.indptr[i]:st.indptr[i + 1], 0]
        sets.append([nb[(v - uale[i]) * dx < 0.0] for v in vel])
    return sets


def transport_1d_first_order(g, st: StencilSet, vel, uale, boundary=None) -> np.ndarray:
    """Generalised upwind scheme on the upwind part of each stencil, Gaussian weights."""
    g = np.ascontiguousarray(g, dtype=float)
    n = st.n_points
    if boundary is None:
        boundary = np.zeros(n, dtype=np.bool_)
    out, bad = _upwind_1d(st.indptr, st.nbr, np.ascontiguousarray(st.disp[:, 0]),
                          st.weight, g, _vel2d(vel, 1)[:, 0],
                          _uale2d(uale, n, 1)[:, 0], np.asarray(boundary, np.bool_))
    if bad >= 0:
        raise StencilDegeneracyError(f"empty upwind set at interior point {bad}", center=bad)
    return out


def cfl_timestep_1d(st: StencilSet, vel, uale) -> float:
    """Largest stable forward-Euler step of the 1D upwind scheme (before the CFL factor)."""
    n = st.n_points
    return float(_upwind_1d_bound(st.indptr, st.nbr, np.ascontiguousarray(st.disp[:, 0]),
                                  st.weight, _vel2d(vel, 1)[:, 0], _uale2d(uale, n, 1)[:, 0]))


def _require_positive(st: StencilSet):
    if st.kbar is None:
        raise ValueError("stencil set lacks rotated coefficients; call compute(..., positive=True)")


def positive_coefficients(st: StencilSet, vel, uale) -> np.ndarray:
    """Per-edge, per-node ``c_ij`` of the rotated positive scheme, ``(E, M)``."""
    _require_positive(st)
    a = transport_velocity(vel, _uale2d(uale, st.n_points, st.dim))[st.owner]
    an = np.einsum("emd,ed->em", a, st.eta_hat)
    t = st.lbar[:, None] * np.einsum("emd,ed->em", a, st.s_hat)
    return -(st.kbar[:, None] * (an - np.abs(an)) + (t - np.abs(t)))


def transport_2d_first_order(g, st: StencilSet, vel, uale) -> np.ndarray:
    """``-sum_j c_ij (g_j - g_i)`` with ``c_ij >= 0``."""
    _require_positive(st)
    g = np.ascontiguousarray(g, dtype=float)
    return _positive_2d(st.indptr, st.nbr, st.eta_hat, st.s_hat, st.kbar, st.lbar, g,
                        _vel2d(vel, 2), _uale2d(uale, st.n_points, 2), False)


def positive_rowsums(st: StencilSet, vel, uale) -> np.ndarray:
    _require_positive(st)
    dummy = np.zeros((1, 1))
    return _positive_2d(st.indptr, st.nbr, st.eta_hat, st.s_hat, st.kbar, st.lbar, dummy,
                        _vel2d(vel, 2), _uale2d(uale, st.n_points, 2), True)


def cfl_timestep_2d(st: StencilSet, vel, uale) -> float:
    """``min_i 1 / sum_j c_ij``; points with ``sum_j c_ij = 0`` impose nothing."""
    rs = positive_rowsums(st, vel, uale)
    rs = rs[rs > 0.0]
    return float(1.0 / rs.max()) if rs.size else np.inf


def mls_derivatives(g, st: StencilSet) -> np.ndarray:
    """All MLS derivatives of ``g``, shape ``(P, N, M)`` ordered as ``st.exps``."""
    g = np.ascontiguousarray(g, dtype=float)
    return _derivatives(st.indptr, st.nbr, st.deriv, g)


def muscl(g, st: StencilSet, vel, uale, derivatives=None, return_derivatives=False):
    """Central meshless MUSCL transport with upwind midpoint reconstruction.

    The midpoint of edge ``ij`` is reconstructed from ``i`` when
    ``a . dx_ij > 0`` and from ``j`` otherwise (ties included), using every
    derivative of the stencil fit.
    """
    if st.deriv is None:
        raise ValueError("stencil set lacks MLS functionals; call compute(order)")
    g = np.ascontiguousarray(g, dtype=float)
    D = mls_derivatives(g, st) if derivatives is None else derivatives
    out = _muscl(st.indptr, st.nbr, st.disp, st.grad, st.taylor, st.parity, D, g,
                 _vel2d(vel, st.dim), _uale2d(uale, st.n_points, st.dim))
    return (out, D) if return_derivatives else out


def muscl_chunked(g, st: StencilSet, vel, uale, curvature: bool = False,
                  max_bytes: float = 2e8):
    """MUSCL transport evaluated over blocks of velocity nodes.

    Bounds the derivative workspace to ``max_bytes``. With ``curvature``
    the pure second derivatives are returned as well, ``(out, cx, cy)``
    with ``cy`` None in 1D.
    """
    if st.deriv is None:
        raise ValueError("stencil set lacks MLS functionals; call compute(order)")
    g = np.asarray(g, dtype=float)
    N, M = g.shape
    P = st.deriv.shape[1]
    block = max(1, min(M, int(max_bytes // (8 * P * max(N, 1)))))
    vel = _vel2d(vel, st.dim)
    uale = _uale2d(uale, N, st.dim)
    out = np.empty((N, M))
    cols = st.curvature_columns if curvature else []
    curv = [np.empty((N, M)) for _ in cols]
    for a in range(0, M, block):
        b = min(M, a + block)
        gb = np.ascontiguousarray(g[:, a:b])
        D = _derivatives(st.indptr, st.nbr, st.deriv, gb)
        out[:, a:b] = _muscl(st.indptr, st.nbr, st.disp, st.grad, st.taylor, st.parity, D,
                             gb, np.ascontiguousarray(vel[a:b]), uale)
        for c, k in zip(curv, cols):
            c[:, a:b] = D[k]
    if not curvature:
        return out
    return out, curv[0], (curv[1] if len(curv) > 1 else None)


def muscl_1d(g, st: StencilSet, vel, uale, order: int = 2):
    expected = {2: 3, 4: 5}[order]
    if st.dim != 1 or len(st.exps) != expected - 1:
        raise ValueError(f"muscl order {order} needs a 1D fit of order {expected}")
    return muscl(g, st, vel, uale)


def muscl_2d(g, st: StencilSet, vel, uale):
    if st.dim != 2 or len(st.exps) != 5:
        raise ValueError("2D MUSCL needs the quadratic fit")
    return muscl(g, st, vel, uale)
