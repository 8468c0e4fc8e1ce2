"""Conservation totals, audit-grid errors and derived fields."""

from __future__ import annotations

import numpy as np
from scipy.spatial import Delaunay

from . import grid as gm
from .mls import fit_functionals, taylor_exponents


def integrate_1d(cloud: gm.PointCloud, values: np.ndarray) -> np.ndarray:
    """Trapezoid rule over the sorted points of every chamber; ``values`` is ``(N, ...)``."""
    values = np.asarray(values, dtype=float)
    total = np.zeros(values.shape[1:])
    for seg in np.unique(cloud.segment):
        idx = np.flatnonzero(cloud.segment == seg)
        order = idx[np.argsort(cloud.x[idx, 0], kind="mergesort")]
        total = total + np.trapezoid(values[order], cloud.x[order, 0], axis=0)
    return total


def _triangulation(cloud: gm.PointCloud, domain: gm.Domain):
    x = cloud.x
    src = np.arange(cloud.n)
    if domain.periodic:
        band = 3.0 * cloud.dx
        L = domain.width
        xs, ids = [x], [src]
        for sx in (-1, 0, 1):
            for sy in (-1, 0, 1):
                if sx == 0 and sy == 0:
                    continue
                shifted = x + np.array([sx * L[0], sy * L[1]])
                ok = np.all((shifted > domain.lo - band) & (shifted < domain.hi + band), axis=1)
                xs.append(shifted[ok])
                ids.append(src[ok])
        x = np.vstack(xs)
        src = np.concatenate(ids)
    tri = Delaunay(x)
    simp = tri.simplices
    cent = x[simp].mean(axis=1)
    keep = np.ones(len(simp), dtype=bool)
    if domain.periodic:
        keep &= np.all((cent >= domain.lo) & (cent < domain.hi), axis=1)
    for ob in domain.obstacles:
        keep &= ~ob.contains(cent)
    simp = simp[keep]
    p = x[simp]
    area = 0.5 * np.abs((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                        - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    return src[simp], area


def integrate_2d(cloud: gm.PointCloud, domain: gm.Domain, values: np.ndarray) -> np.ndarray:
    """Piecewise-linear integral over a Delaunay triangulation of the gas region."""
    values = np.asarray(values, dtype=float)
    simp, area = _triangulation(cloud, domain)
    mean = values[simp].mean(axis=1)
    return np.tensordot(area, mean, axes=(0, 0))


def integrate(cloud, domain, values):
    return integrate_1d(cloud, values) if cloud.dim == 1 else integrate_2d(cloud, domain, values)


def conserved_totals(cloud, domain, rho, U, E) -> dict:
    """Total mass, momentum and energy of the gas."""
    stack = np.column_stack([rho, rho[:, None] * U, E])
    tot = integrate(cloud, domain, stack)
    out = {"mass": float(tot[0])}
    for d in range(cloud.dim):
        out[f"momentum_{'xy'[d]}"] = float(tot[1 + d])
    out["energy"] = float(tot[-1])
    return out


def mass_error_percent(m, m0: float):
    return 100.0 * np.abs(np.asarray(m) - m0) / m0


class ExtrapolationError(ValueError):
    pass


def interpolate_to(points: np.ndarray, values: np.ndarray, targets: np.ndarray,
                   degree: int, n_near: int | None = None, period=None,
                   max_entries: float = 2e7) -> np.ndarray:
    """Local weighted polynomial fit with a constant term at every target.

    Uses the ``n_near`` nearest points (default twice the number of
    unknowns) and a Gaussian weight on the radius of that set.
    """
    points = np.asarray(points, float).reshape(len(points), -1)
    targets = np.asarray(targets, float).reshape(len(targets), -1)
    values = np.asarray(values, float)
    dim = points.shape[1]
    if period is None:
        lo, hi = points.min(axis=0), points.max(axis=0)
        span = hi - lo
        outside = np.any((targets < lo - 1e-12 * span) | (targets > hi + 1e-12 * span), axis=1)
        if np.any(outside):
            k = int(np.flatnonzero(outside)[0])
            raise ExtrapolationError(f"target {targets[k].tolist()} lies outside the cloud")
    exps = taylor_exponents(dim, degree + 1, constant=True)
    K = n_near or 2 * len(exps)
    K = min(K, len(points))
    out = np.empty((len(targets),) + values.shape[1:])
    block = max(16, int(max_entries // (len(points) * dim)))
    for a in range(0, len(targets), block):
        t = targets[a:a + block]
        d = points[None, :, :] - t[:, None, :]
        if period is not None:
            L = np.asarray(period, float)
            d = d - L * np.round(d / L)
        r2 = np.sum(d ** 2, axis=2)
        near = np.argpartition(r2, K - 1, axis=1)[:, :K]
        disp = np.take_along_axis(d, near[:, :, None], axis=1)
        rad = np.sqrt(np.take_along_axis(r2, near, axis=1)).max(axis=1) * 1.0001 + 1e-300
        C = fit_functionals(disp, np.ones(near.shape, bool), rad, exps)
        w = C[:, 0, :]
        out[a:a + block] = np.einsum("bk,bk...->b...", w, values[near])
    return out


def relative_l1(approx: np.ndarray, ref: np.ndarray) -> float:
    return float(np.sum(np.abs(approx - ref)) / np.sum(np.abs(ref)))


def l1_error_vs_reference(points, values, audit, ref_on_audit, degree: int | None = None,
                          period=None) -> float:
    """Relative L1 error after interpolating the cloud values onto the audit grid.

    Defaults: a degree-5 fit in 1D and a cubic fit in 2D.
    """
    points = np.asarray(points, float).reshape(len(points), -1)
    if degree is None:
        degree = 5 if points.shape[1] == 1 else 3
    approx = interpolate_to(points, values, audit, degree, period=period)
    return relative_l1(approx, np.asarray(ref_on_audit, float))


def vorticity(cloud: gm.PointCloud, domain: gm.Domain, U: np.ndarray, stencils=None) -> np.ndarray:
    """``dUy/dx - dUx/dy`` from the MLS first derivatives."""
    st = stencils
    if st is None or st.deriv is None:
        st = gm.build_stencils(cloud, domain, 3)
    dUy_dx = st.apply(st.deriv[:, 0], U[:, 1])
    dUx_dy = st.apply(st.deriv[:, 1], U[:, 0])
    return dUy_dx - dUx_dy


def convergence_slope(h, err) -> float:
    """Least-squares slope of ``log err`` against ``log h``."""
    return float(np.polyfit(np.log(np.asarray(h, float)), np.log(np.asarray(err, float)), 1)[0])
