"""A-posteriori limiting: discrete maximum property, u2 relaxation and fallback."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numba import njit

from .mls import StencilSet

log = logging.getLogger(__name__)

DEFAULT_DELTA = {1: 1e-7, 2: 1e-8}


@dataclass
class MoodConfig:
    delta: float = 1e-7
    enabled: bool = True

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    @classmethod
    def for_dim(cls, dim: int, enabled: bool = True, delta: float | None = None):
        return cls(DEFAULT_DELTA[dim] if delta is None else delta, enabled)


@dataclass
class CurvatureIndicators:
    """Signed and absolute curvature extrema over ``{i} U C_i``."""

    Xmin: float
    Xmax: float
    XtilMin: float
    XtilMax: float
    Ymin: float | None = None
    Ymax: float | None = None
    YtilMin: float | None = None
    YtilMax: float | None = None


@njit(cache=True)
def _stencil_minmax(indptr, nbr, g):
    N, M = g.shape
    mn = g.copy()
    mx = g.copy()
    for i in range(N):
        for e in range(indptr[i], indptr[i + 1]):
            j = nbr[e]
            for m in range(M):
                v = g[j, m]
                if v < mn[i, m]:
                    mn[i, m] = v
                if v > mx[i, m]:
                    mx[i, m] = v
    return mn, mx


@njit(cache=True)
def _axis_ok(indptr, nbr, curv, i, m, delta):
    c = curv[i, m]
    smin = c
    smax = c
    amin = abs(c)
    amax = abs(c)
    for e in range(indptr[i], indptr[i + 1]):
        c = curv[nbr[e], m]
        smin = min(smin, c)
        smax = max(smax, c)
        amin = min(amin, abs(c))
        amax = max(amax, abs(c))
    if not smin * smax > -delta:
        return False
    return amax < delta or amin >= 0.5 * amax


@njit(cache=True)
def _mood_flags(indptr, nbr, cand, prev, cx, cy, has_y, delta):
    N, M = cand.shape
    mn, mx = _stencil_minmax(indptr, nbr, prev)
    flags = np.zeros((N, M), dtype=np.bool_)
    for i in range(N):
        for m in range(M):
            v = cand[i, m]
            if mn[i, m] <= v and v <= mx[i, m]:
                continue
            if mx[i, m] - mn[i, m] < delta:
                continue
            ok = _axis_ok(indptr, nbr, cx, i, m, delta)
            if ok and has_y:
                ok = _axis_ok(indptr, nbr, cy, i, m, delta)
            if not ok:
                flags[i, m] = True
    return flags


def stencil_bounds(prev: np.ndarray, st: StencilSet):
    """Pointwise min and max of ``prev`` over ``{i} U C_i``."""
    return _stencil_minmax(st.indptr, st.nbr, np.ascontiguousarray(prev, dtype=float))


def dmp_check(candidate: np.ndarray, prev: np.ndarray, st: StencilSet) -> np.ndarray:
    """True where ``candidate`` lies within the closed stencil range of ``prev``."""
    mn, mx = stencil_bounds(prev, st)
    return (mn <= candidate) & (candidate <= mx)


def curvature_indicators(curv_x: np.ndarray, st: StencilSet, point: int, node: int,
                         curv_y: np.ndarray | None = None) -> CurvatureIndicators:
    idx = np.concatenate([[point], st.neighbors(point)])
    cx = curv_x[idx, node]
    out = CurvatureIndicators(cx.min(), cx.max(), np.abs(cx).min(), np.abs(cx).max())
    if curv_y is not None:
        cy = curv_y[idx, node]
        out.Ymin, out.Ymax = cy.min(), cy.max()
        out.YtilMin, out.YtilMax = np.abs(cy).min(), np.abs(cy).max()
    return out


def _axis_accept(smin, smax, amin, amax, delta):
    return smin * smax > -delta and (amax < delta or amin / amax >= 0.5)


def u2_check(point: int, node: int, prev: np.ndarray, ind: CurvatureIndicators,
             cfg: MoodConfig, st: StencilSet, dim: int = 1) -> bool:
    """Smooth-extremum relaxation for an entry that failed the DMP."""
    idx = np.concatenate([[point], st.neighbors(point)])
    vals = prev[idx, node]
    if vals.max() - vals.min() < cfg.delta:
        return True
    ok = _axis_accept(ind.Xmin, ind.Xmax, ind.XtilMin, ind.XtilMax, cfg.delta)
    if dim == 2:
        ok = ok and _axis_accept(ind.Ymin, ind.Ymax, ind.YtilMin, ind.YtilMax, cfg.delta)
    return bool(ok)


def curvatures(D: np.ndarray, st: StencilSet) -> tuple[np.ndarray, np.ndarray | None]:
    """Pure second derivatives from a derivative stack ``D`` of shape ``(P, N, M)``."""
    cols = st.curvature_columns
    cx = np.ascontiguousarray(D[cols[0]])
    cy = np.ascontiguousarray(D[cols[1]]) if len(cols) > 1 else None
    return cx, cy


def detect(candidate: np.ndarray, prev: np.ndarray, st: StencilSet, cfg: MoodConfig,
           curv_x: np.ndarray, curv_y: np.ndarray | None = None) -> np.ndarray:
    """Flags of entries that fail both the DMP and the u2 relaxation."""
    has_y = curv_y is not None
    cy = curv_y if has_y else curv_x
    return _mood_flags(st.indptr, st.nbr, np.ascontiguousarray(candidate, dtype=float),
                       np.ascontiguousarray(prev, dtype=float),
                       np.ascontiguousarray(curv_x), np.ascontiguousarray(cy),
                       has_y, cfg.delta)


def fallback_recompute(candidate: np.ndarray, flags: np.ndarray, prev: np.ndarray,
                       dt_eff: float, first_order_transport) -> np.ndarray:
    """Replace flagged entries by a forward-Euler first-order step from ``prev``.

    ``first_order_transport(prev)`` returns the transport term of the first
    order scheme; ``dt_eff`` is ``dt`` times the stage increment.
    """
    if not np.any(flags):
        return candidate
    out = candidate.copy()
    rows = np.flatnonzero(flags.any(axis=1))
    low = prev - dt_eff * first_order_transport(prev)
    out[flags] = low[flags]
    log.debug("MOOD repaired %d entries on %d points", int(flags.sum()), rows.size)
    return out
