"""Exact solution of the Riemann problem for the Euler equations of an ideal gas."""

from __future__ import annotations

import math

import numpy as np


class VacuumError(ValueError):
    """The initial states generate a vacuum, which the solver does not handle."""


def _wave(p, rho, pk, ck, gamma):
    """Pressure function of one wave and its derivative."""
    if p > pk:
        A = 2.0 / ((gamma + 1.0) * rho)
        B = (gamma - 1.0) / (gamma + 1.0) * pk
        q = math.sqrt(A / (p + B))
        return (p - pk) * q, q * (1.0 - 0.5 * (p - pk) / (B + p))
    r = p / pk
    f = 2.0 * ck / (gamma - 1.0) * (r ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0)
    df = 1.0 / (rho * ck) * r ** (-(gamma + 1.0) / (2.0 * gamma))
    return f, df


def star_state(left, right, gamma: float = 5.0 / 3.0, tol: float = 1e-14,
               max_iter: int = 100) -> tuple[float, float]:
    """Newton iteration for the pressure and velocity between the outer waves.

    ``left`` and ``right`` are ``(rho, u, p)`` triples.
    """
    rl, ul, pl = left
    rr, ur, pr = right
    if min(rl, rr, pl, pr) <= 0:
        raise ValueError("densities and pressures must be positive")
    cl = math.sqrt(gamma * pl / rl)
    cr = math.sqrt(gamma * pr / rr)
    if 2.0 / (gamma - 1.0) * (cl + cr) <= ur - ul:
        raise VacuumError("initial states generate a vacuum")
    # two-rarefaction guess
    z = (gamma - 1.0) / (2.0 * gamma)
    p = ((cl + cr - 0.5 * (gamma - 1.0) * (ur - ul))
         / (cl / pl ** z + cr / pr ** z)) ** (1.0 / z)
    p = max(p, tol)
    for _ in range(max_iter):
        fl, dl = _wave(p, rl, pl, cl, gamma)
        fr, dr = _wave(p, rr, pr, cr, gamma)
        new = p - (fl + fr + ur - ul) / (dl + dr)
        new = max(new, tol * p)
        if abs(new - p) <= tol * 0.5 * (new + p):
            p = new
            break
        p = new
    fl, _ = _wave(p, rl, pl, cl, gamma)
    fr, _ = _wave(p, rr, pr, cr, gamma)
    return p, 0.5 * (ul + ur) + 0.5 * (fr - fl)


def sample(s: float, left, right, p_star: float, u_star: float, gamma: float):
    """State ``(rho, u, p)`` on the ray ``x / t = s``."""
    rl, ul, pl = left
    rr, ur, pr = right
    g1 = (gamma - 1.0) / (gamma + 1.0)
    if s <= u_star:
        rho, u, p = rl, ul, pl
        c = math.sqrt(gamma * p / rho)
        if p_star > p:
            S = u - c * math.sqrt((gamma + 1.0) / (2.0 * gamma) * p_star / p
                                  + (gamma - 1.0) / (2.0 * gamma))
            if s <= S:
                return rho, u, p
            return rho * (p_star / p + g1) / (g1 * p_star / p + 1.0), u_star, p_star
        c_star = c * (p_star / p) ** ((gamma - 1.0) / (2.0 * gamma))
        if s <= u - c:
            return rho, u, p
        if s >= u_star - c_star:
            return rho * (p_star / p) ** (1.0 / gamma), u_star, p_star
        uf = 2.0 / (gamma + 1.0) * (c + 0.5 * (gamma - 1.0) * u + s)
        cf = 2.0 / (gamma + 1.0) * (c + 0.5 * (gamma - 1.0) * (u - s))
        rf = rho * (cf / c) ** (2.0 / (gamma - 1.0))
        return rf, uf, p * (cf / c) ** (2.0 * gamma / (gamma - 1.0))
    rho, u, p = rr, ur, pr
    c = math.sqrt(gamma * p / rho)
    if p_star > p:
        S = u + c * math.sqrt((gamma + 1.0) / (2.0 * gamma) * p_star / p
                              + (gamma - 1.0) / (2.0 * gamma))
        if s >= S:
            return rho, u, p
        return rho * (p_star / p + g1) / (g1 * p_star / p + 1.0), u_star, p_star
    c_star = c * (p_star / p) ** ((gamma - 1.0) / (2.0 * gamma))
    if s >= u + c:
        return rho, u, p
    if s <= u_star + c_star:
        return rho * (p_star / p) ** (1.0 / gamma), u_star, p_star
    uf = 2.0 / (gamma + 1.0) * (-c + 0.5 * (gamma - 1.0) * u + s)
    cf = 2.0 / (gamma + 1.0) * (c - 0.5 * (gamma - 1.0) * (u - s))
    rf = rho * (cf / c) ** (2.0 / (gamma - 1.0))
    return rf, uf, p * (cf / c) ** (2.0 * gamma / (gamma - 1.0))


def exact_riemann(left, right, t: float, x, x0: float = 0.0, gamma: float = 5.0 / 3.0,
                  Rs: float | None = None):
    """Profiles ``(rho, u, p)`` at time ``t`` on the points ``x``.

    States are ``(rho, u, p)``, or ``(rho, u, T)`` when ``Rs`` is given, in
    which case ``p = rho Rs T``.
    """
    left = tuple(float(v) for v in left)
    right = tuple(float(v) for v in right)
    if Rs is not None:
        left = (left[0], left[1], left[0] * Rs * left[2])
        right = (right[0], right[1], right[0] * Rs * right[2])
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if left == right:
        return (np.full_like(x, left[0]), np.full_like(x, left[1]), np.full_like(x, left[2]))
    ps, us = star_state(left, right, gamma)
    out = np.empty((3, x.size))
    for k, xi in enumerate(x):
        s = (xi - x0) / t if t > 0 else (-np.inf if xi < x0 else np.inf)
        out[:, k] = sample(s, left, right, ps, us, gamma)
    return out[0], out[1], out[2]
