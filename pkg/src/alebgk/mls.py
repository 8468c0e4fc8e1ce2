"""Moving-least-squares derivative functionals on scattered points.

Every functional is returned in difference form: the derivative at the
centre ``i`` is ``sum_j c_ij (u_j - u_i)``. Displacements are scaled by
``1 / hmax`` and the weighted design matrix of every stencil is factorised
by Householder QR, so the normal equations are never formed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange
from scipy import sparse

log = logging.getLogger(__name__)

COND_WARN = 1e8
RANK_TOL = 1e-10


class StencilDegeneracyError(RuntimeError):
    def __init__(self, message: str, center: int | None = None, centers=None):
        super().__init__(message)
        self.center = center
        self.centers = [center] if centers is None and center is not None else centers


def gaussian_weight(dx, hmax: float):
    """``exp(-6 |dx|^2 / hmax^2)``; ``dx`` may be scalar, ``(K,)`` or ``(K, d)``."""
    dx = np.asarray(dx, dtype=float)
    r2 = dx ** 2 if dx.ndim < 2 else np.sum(dx ** 2, axis=-1)
    return np.exp(-6.0 * r2 / hmax ** 2)


def taylor_exponents(dim: int, order: int, constant: bool = False) -> list[tuple[int, ...]]:
    """Multi-indices of the Taylor terms kept by a fit of the given order.

    ``order`` counts like the accuracy of the fitted polynomial, so order 3
    keeps terms up to degree 2. In 2D the degree-2 basis is ordered
    ``x, y, xx, xy, yy``.
    """
    degree = order - 1
    start = 0 if constant else 1
    if dim == 1:
        return [(p,) for p in range(start, degree + 1)]
    exps = []
    for total in range(start, degree + 1):
        for py in range(total + 1):
            exps.append((total - py, py))
    return exps


def _factorials(exps) -> np.ndarray:
    return np.array([math.prod(math.factorial(a) for a in e) for e in exps], dtype=float)


def _design(disp: np.ndarray, exps) -> np.ndarray:
    """Taylor design matrix; ``disp`` is ``(..., K, d)``, result ``(..., K, P)``."""
    fact = _factorials(exps)
    cols = []
    for e, f in zip(exps, fact):
        col = np.ones(disp.shape[:-1])
        for d, a in enumerate(e):
            if a:
                col = col * disp[..., d] ** a
        cols.append(col / f)
    return np.stack(cols, axis=-1)


@njit(parallel=True, cache=True)
def _qr_pinv(A):
    """Pseudo-inverse ``R^-1 Q^T`` of every ``(K, P)`` slice by Householder QR."""
    B, K, P = A.shape
    out = np.zeros((B, P, K))
    dmin = np.empty(B)
    dmax = np.empty(B)
    for b in prange(B):
        R = A[b].copy()
        Qt = np.eye(K)
        for j in range(P):
            norm = 0.0
            for r in range(j, K):
                norm += R[r, j] * R[r, j]
            norm = np.sqrt(norm)
            if norm == 0.0:
                continue
            alpha = -norm if R[j, j] >= 0.0 else norm
            v = R[j:, j].copy()
            v[0] -= alpha
            vn = 0.0
            for r in range(v.size):
                vn += v[r] * v[r]
            if vn == 0.0:
                continue
            for c in range(j, P):
                dot = 0.0
                for r in range(v.size):
                    dot += v[r] * R[j + r, c]
                f = 2.0 * dot / vn
                for r in range(v.size):
                    R[j + r, c] -= f * v[r]
            for c in range(K):
                dot = 0.0
                for r in range(v.size):
                    dot += v[r] * Qt[j + r, c]
                f = 2.0 * dot / vn
                for r in range(v.size):
                    Qt[j + r, c] -= f * v[r]
        lo = np.inf
        hi = 0.0
        for j in range(P):
            a = abs(R[j, j])
            lo = min(lo, a)
            hi = max(hi, a)
        dmin[b] = lo
        dmax[b] = hi
        if lo == 0.0:
            continue
        for c in range(K):
            for j in range(P - 1, -1, -1):
                acc = Qt[j, c]
                for q in range(j + 1, P):
                    acc -= R[j, q] * out[b, q, c]
                out[b, j, c] = acc / R[j, j]
    return out, dmin, dmax


def fit_functionals(disp: np.ndarray, mask: np.ndarray, hmax: np.ndarray, exps,
                    centers=None) -> np.ndarray:
    """Batched weighted least-squares fit.

    Parameters
    ----------
    disp : (B, K, d) displacements ``x_j - x_i`` (padded rows arbitrary)
    mask : (B, K) bool, valid neighbour rows
    hmax : (B,) stencil radius per centre
    exps : multi-indices of the fitted Taylor terms

    Returns
    -------
    (B, P, K) array ``C`` with ``D^e u(x_i) ~ sum_k C[b, e, k] * du_k``.
    """
    B, K, dim = disp.shape
    P = len(exps)
    hmax = np.asarray(hmax, dtype=float).reshape(B)
    scaled = disp / hmax[:, None, None]
    sw = np.where(mask, np.exp(-3.0 * np.sum(scaled ** 2, axis=-1)), 0.0)
    A = _design(scaled, exps) * sw[..., None]
    ids = np.arange(B) if centers is None else np.asarray(centers)
    counts = mask.sum(axis=1)
    short = np.flatnonzero(counts < P)
    if short.size:
        b = int(short[0])
        raise StencilDegeneracyError(
            f"stencil of point {ids[b]} has {counts[b]} neighbours, {P} needed",
            center=int(ids[b]), centers=ids[short])
    pinv, rdiag_min, rdiag_max = _qr_pinv(np.ascontiguousarray(A))
    bad = np.flatnonzero(~(rdiag_min > RANK_TOL * rdiag_max))
    if bad.size:
        b = int(bad[0])
        raise StencilDegeneracyError(
            f"rank-deficient MLS design matrix at point {ids[b]}", center=int(ids[b]),
            centers=ids[bad])
    # diag(R) ratio is a cheap lower bound on the condition number
    cond = rdiag_max / rdiag_min
    if np.any(cond > COND_WARN):
        b = int(np.argmax(cond))
        log.warning("scaled MLS problem at point %d has condition number above %.3e",
                    ids[b], cond[b])
    C = pinv * sw[:, None, :]
    degree = np.array([sum(e) for e in exps], dtype=float)
    C /= hmax[:, None, None] ** degree[None, :, None]
    return C


@dataclass
class Stencil:
    center: int
    neighbors: np.ndarray
    hmax: float

    def __post_init__(self):
        self.neighbors = np.asarray(self.neighbors, dtype=np.int64)
        if self.center in set(self.neighbors.tolist()):
            raise ValueError("the centre point cannot be its own neighbour")


@dataclass
class StencilCoefficients1D:
    alpha: np.ndarray
    beta: np.ndarray
    higher: np.ndarray | None = None


@dataclass
class StencilCoefficients2D:
    xi: np.ndarray
    zeta: np.ndarray
    eta: np.ndarray
    nu: np.ndarray
    gamma: np.ndarray
    kappa_bar: np.ndarray
    lambda_bar: np.ndarray
    theta: np.ndarray
    eta_hat: np.ndarray
    s_hat: np.ndarray


def _single(points, stencil: Stencil, dim: int, exps) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(points, dtype=float).reshape(-1, dim)
    disp = pts[stencil.neighbors] - pts[stencil.center]
    radius = np.sqrt(np.sum(disp ** 2, axis=1))
    if np.any(radius >= stencil.hmax):
        raise ValueError("stencil contains points outside hmax")
    C = fit_functionals(disp[None], np.ones((1, len(disp)), bool),
                        np.array([stencil.hmax]), exps, centers=[stencil.center])
    return C[0], disp


def mls_coefficients_1d(points, stencil: Stencil, order: int = 3) -> StencilCoefficients1D:
    """Derivative weights of a 1D fit of ``order`` 3 (alpha, beta) or 5 (+ d3, d4)."""
    if order not in (3, 5):
        raise ValueError(f"order must be 3 or 5, got {order}")
    C, _ = _single(points, stencil, 1, taylor_exponents(1, order))
    higher = C[2:] if order == 5 else None
    return StencilCoefficients1D(alpha=C[0], beta=C[1], higher=higher)


def rotated_pair(disp: np.ndarray, kappa: np.ndarray, lam: np.ndarray):
    """Rotate first-derivative weights into the edge frame ``(eta_hat, s_hat)``."""
    theta = np.arctan2(disp[:, 1], disp[:, 0])
    eta_hat = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    s_hat = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
    kbar = eta_hat[:, 0] * kappa + eta_hat[:, 1] * lam
    lbar = s_hat[:, 0] * kappa + s_hat[:, 1] * lam
    return theta, eta_hat, s_hat, kbar, lbar


def mls_coefficients_2d(points, stencil: Stencil) -> StencilCoefficients2D:
    """Quadratic-fit weights plus the rotated linear-fit pair of the positive scheme."""
    C, disp = _single(points, stencil, 2, taylor_exponents(2, 3))
    lin, _ = _single(points, stencil, 2, taylor_exponents(2, 2))
    theta, eta_hat, s_hat, kbar, lbar = rotated_pair(disp, lin[0], lin[1])
    return StencilCoefficients2D(xi=C[0], zeta=C[1], eta=C[2], gamma=C[3], nu=C[4],
                                 kappa_bar=kbar, lambda_bar=lbar, theta=theta,
                                 eta_hat=eta_hat, s_hat=s_hat)


def interpolation_weights(center, points, hmax: float, degree: int) -> np.ndarray:
    """Weights ``c`` with ``u(center) ~ sum_j c_j u_j`` from a fit with a constant term.

    Degree 0 is the Gaussian-weighted average, whose weights are positive and
    sum to one.
    """
    center = np.atleast_1d(np.asarray(center, dtype=float))
    pts = np.asarray(points, dtype=float).reshape(-1, center.shape[0])
    disp = pts - center
    w = gaussian_weight(disp, hmax)
    if degree == 0:
        return w / w.sum()
    exps = taylor_exponents(center.shape[0], degree + 1, constant=True)
    C = fit_functionals(disp[None], np.ones((1, len(pts)), bool), np.array([hmax]), exps)
    return C[0, 0]


def _csr_to_padded(indptr: np.ndarray, values: np.ndarray, fill=0.0):
    counts = np.diff(indptr)
    n = counts.shape[0]
    K = int(counts.max()) if n else 0
    mask = np.arange(K)[None, :] < counts[:, None]
    out = np.full((n, K) + values.shape[1:], fill, dtype=values.dtype)
    out[mask] = values
    return out, mask


@dataclass
class StencilSet:
    """Neighbour lists in CSR form with per-edge geometry and MLS functionals.

    ``deriv`` holds one column per Taylor multi-index in ``exps``; ``taylor``
    the factors that carry those derivatives from a point to the midpoint of
    an edge. ``kbar``/``lbar``/``eta_hat``/``s_hat`` are only filled in 2D.
    """

    indptr: np.ndarray
    nbr: np.ndarray
    disp: np.ndarray
    hmax: np.ndarray
    dim: int
    weight: np.ndarray = field(init=False)
    owner: np.ndarray = field(init=False)
    exps: list = field(default_factory=list)
    deriv: np.ndarray | None = None
    taylor: np.ndarray | None = None
    parity: np.ndarray | None = None
    kbar: np.ndarray | None = None
    lbar: np.ndarray | None = None
    eta_hat: np.ndarray | None = None
    s_hat: np.ndarray | None = None

    def __post_init__(self):
        self.indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        self.nbr = np.ascontiguousarray(self.nbr, dtype=np.int64)
        self.disp = np.ascontiguousarray(np.asarray(self.disp, float).reshape(-1, self.dim))
        self.hmax = np.asarray(self.hmax, dtype=float)
        counts = np.diff(self.indptr)
        self.owner = np.repeat(np.arange(counts.shape[0]), counts)
        self.weight = np.exp(-6.0 * np.sum(self.disp ** 2, axis=1) / self.hmax[self.owner] ** 2)

    @property
    def n_points(self) -> int:
        return self.indptr.shape[0] - 1

    @property
    def grad(self) -> np.ndarray:
        """First-derivative functionals, ``(E, dim)``."""
        return np.ascontiguousarray(self.deriv[:, :self.dim])

    @property
    def curvature_columns(self) -> list[int]:
        """Columns of ``deriv`` holding the pure second derivatives."""
        want = [(2,)] if self.dim == 1 else [(2, 0), (0, 2)]
        return [self.exps.index(e) for e in want]

    def neighbors(self, i: int) -> np.ndarray:
        return self.nbr[self.indptr[i]:self.indptr[i + 1]]

    def compute(self, order: int | None, positive: bool = False) -> "StencilSet":
        """Fill the MLS functionals for a fit of ``order`` and, in 2D, the
        rotated linear-fit pair used by the positive first-order scheme."""
        n = self.n_points
        disp_p, mask = _csr_to_padded(self.indptr, self.disp)
        if order is not None:
            exps = taylor_exponents(self.dim, order)
            C = fit_functionals(disp_p, mask, self.hmax, exps)
            self.exps = exps
            self.deriv = np.ascontiguousarray(np.transpose(C, (0, 2, 1))[mask])
            half = _design(self.disp / 2.0, exps)
            self.taylor = np.ascontiguousarray(half)
            self.parity = np.array([(-1.0) ** sum(e) for e in exps])
        if positive and self.dim == 2:
            C = fit_functionals(disp_p, mask, self.hmax, taylor_exponents(2, 2))
            lin = np.transpose(C, (0, 2, 1))[mask]
            _, eta_hat, s_hat, kbar, lbar = rotated_pair(self.disp, lin[:, 0], lin[:, 1])
            self.kbar, self.lbar = kbar, lbar
            self.eta_hat = np.ascontiguousarray(eta_hat)
            self.s_hat = np.ascontiguousarray(s_hat)
        assert n == disp_p.shape[0]
        return self

    def operator(self, coef: np.ndarray) -> sparse.csr_matrix:
        """Sparse matrix of the difference-form functional ``coef``."""
        n = self.n_points
        A = sparse.csr_matrix((coef, self.nbr, self.indptr), shape=(n, n))
        return (A - sparse.diags(np.asarray(A.sum(axis=1)).ravel())).tocsr()

    def apply(self, coef: np.ndarray, u: np.ndarray) -> np.ndarray:
        """``sum_j coef_ij (u_j - u_i)`` for a per-edge coefficient vector."""
        return self.operator(coef) @ u
