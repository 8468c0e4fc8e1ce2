"""Diffuse-reflective walls and rigid-body dynamics driven by the gas pressure tensor."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .kinetic import GasParameters, VelocityGrid, maxwellian

log = logging.getLogger(__name__)


class BoundaryClosureError(RuntimeError):
    def __init__(self, message: str, point: int | None = None):
        super().__init__(message)
        self.point = point


@dataclass
class WallSpec:
    """Wall temperature, velocity and unit normal pointing into the gas."""

    Tw: float
    Uw: np.ndarray
    nhat: np.ndarray

    def __post_init__(self):
        self.Uw = np.atleast_1d(np.asarray(self.Uw, dtype=float))
        self.nhat = np.atleast_1d(np.asarray(self.nhat, dtype=float))
        if not self.Tw > 0:
            raise ValueError(f"wall temperature must be positive, got {self.Tw}")
        if abs(np.linalg.norm(self.nhat) - 1.0) > 1e-12:
            raise ValueError("wall normal must have unit length")


def diffuse_reflect(g1: np.ndarray, g2: np.ndarray, points: np.ndarray, Tw, Uw, nhat,
                    grid: VelocityGrid, gas: GasParameters) -> np.ndarray:
    """Apply the wall closure in place at the rows ``points``; returns ``rho_w``.

    Nodes moving towards the wall, ``(v - Uw) . n <= 0``, keep their
    transported values. The wall density is fixed by a zero net mass flux,
    and the remaining nodes are overwritten with the wall Maxwellian.
    """
    points = np.asarray(points, dtype=np.int64)
    n = points.size
    if n == 0:
        return np.zeros(0)
    dim = grid.dim
    Tw = np.broadcast_to(np.asarray(Tw, dtype=float), (n,))
    Uw = np.broadcast_to(np.asarray(Uw, dtype=float).reshape(-1, dim), (n, dim))
    nhat = np.broadcast_to(np.asarray(nhat, dtype=float).reshape(-1, dim), (n, dim))
    cn = np.einsum("md,nd->nm", grid.nodes, nhat) - np.sum(Uw * nhat, axis=1)[:, None]
    emit = cn > 0.0
    M1, M2 = maxwellian(np.ones(n), Uw, Tw, gas, grid)
    w = grid.weight
    f = g1[points]
    out_flux = w * np.sum(np.where(emit, 0.0, cn * f), axis=1)
    unit_flux = w * np.sum(np.where(emit, cn * M1, 0.0), axis=1)
    bad = (unit_flux <= 0.0) & (out_flux != 0.0)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise BoundaryClosureError(
            f"no emitting velocity nodes at wall point {points[k]}", point=int(points[k]))
    with np.errstate(divide="ignore", invalid="ignore"):
        rho_w = np.where(unit_flux > 0.0, -out_flux / unit_flux, 0.0)
    g1[points] = np.where(emit, rho_w[:, None] * M1, f)
    g2[points] = np.where(emit, rho_w[:, None] * M2, g2[points])
    return rho_w


def apply_diffuse_reflective(g1: np.ndarray, g2: np.ndarray, wall: WallSpec,
                             grid: VelocityGrid, gas: GasParameters):
    """Single-point version: returns the updated ``(g1, g2)`` and ``rho_w``."""
    a = np.array(g1, dtype=float)[None]
    b = np.array(g2, dtype=float)[None]
    rho_w = diffuse_reflect(a, b, [0], wall.Tw, wall.Uw, wall.nhat, grid, gas)
    return a[0], b[0], float(rho_w[0])


def wall_mass_flux(g1: np.ndarray, Uw, nhat, grid: VelocityGrid) -> np.ndarray:
    """Net mass flux ``sum_k w (v_k - Uw) . n g1`` per row."""
    g1 = np.atleast_2d(g1)
    n = g1.shape[0]
    Uw = np.broadcast_to(np.asarray(Uw, float).reshape(-1, grid.dim), (n, grid.dim))
    nhat = np.broadcast_to(np.asarray(nhat, float).reshape(-1, grid.dim), (n, grid.dim))
    cn = np.einsum("md,nd->nm", grid.nodes, nhat) - np.sum(Uw * nhat, axis=1)[:, None]
    return grid.weight * np.sum(cn * g1, axis=1)


def pressure_tensor(g1: np.ndarray, g2: np.ndarray, grid: VelocityGrid, Uw) -> np.ndarray:
    """Full 3x3 pressure tensor of the reduced pair relative to ``Uw``.

    The in-plane block comes from ``g1``. The out-of-plane diagonal is the
    transverse energy of ``g2``, split evenly over the two hidden
    directions in 1D.
    """
    g1 = np.atleast_2d(g1)
    g2 = np.atleast_2d(g2)
    n = g1.shape[0]
    dim = grid.dim
    Uw = np.broadcast_to(np.asarray(Uw, float).reshape(-1, dim), (n, dim))
    c = grid.nodes[None, :, :] - Uw[:, None, :]
    w = grid.weight
    psi = np.zeros((n, 3, 3))
    psi[:, :dim, :dim] = w * np.einsum("nmi,nmj,nm->nij", c, c, g1)
    transverse = w * g2.sum(axis=1)
    if dim == 1:
        psi[:, 1, 1] = psi[:, 2, 2] = 0.5 * transverse
    else:
        psi[:, 2, 2] = transverse
    return psi


def _pad3(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros(x.shape[:-1] + (3,))
    out[..., :x.shape[-1]] = x
    return out


@dataclass
class RigidBodyState:
    """Newton-Euler state; vectors are stored in 3D, planar bodies use x and y."""

    m: float
    Xc: np.ndarray
    V: np.ndarray
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    Ibody: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("body mass must be positive")
        self.Xc = _pad3(self.Xc)
        self.V = _pad3(self.V)
        self.omega = _pad3(self.omega)
        self.R = np.asarray(self.R, dtype=float)
        self.Ibody = np.asarray(self.Ibody, dtype=float)
        if not np.allclose(self.Ibody, self.Ibody.T):
            raise ValueError("body inertia must be symmetric")
        if np.any(np.linalg.eigvalsh(self.Ibody) <= 0):
            raise ValueError("body inertia must be positive definite")

    @property
    def inertia(self) -> np.ndarray:
        return self.R @ self.Ibody @ self.R.T

    def point_velocity(self, x) -> np.ndarray:
        """``V + omega x (x - Xc)`` for lab positions of shape ``(K, d)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = x.shape[1]
        r = _pad3(x) - self.Xc
        return (self.V + np.cross(self.omega, r))[:, :d]

    def copy(self) -> "RigidBodyState":
        return RigidBodyState(self.m, self.Xc.copy(), self.V.copy(), self.R.copy(),
                              self.omega.copy(), self.Ibody.copy())


@dataclass
class SurfaceQuadrature:
    """Attached surface points in the body frame with outward normals and arc weights."""

    offsets: np.ndarray
    normals: np.ndarray
    dA: np.ndarray

    def __post_init__(self):
        self.offsets = _pad3(self.offsets)
        self.normals = _pad3(self.normals)
        self.dA = np.asarray(self.dA, dtype=float)
        if np.any(self.dA <= 0):
            raise ValueError("surface weights must be positive")
        if not np.allclose(np.linalg.norm(self.normals, axis=1), 1.0):
            raise ValueError("surface normals must have unit length")

    def positions(self, body: RigidBodyState, dim: int) -> np.ndarray:
        return (body.Xc + self.offsets @ body.R.T)[:, :dim]

    def lab_normals(self, body: RigidBodyState, dim: int) -> np.ndarray:
        return (self.normals @ body.R.T)[:, :dim]

    @classmethod
    def square(cls, side: float, per_side: int = 4) -> "SurfaceQuadrature":
        """Equal arc-length points at segment midpoints along each side."""
        s = -0.5 * side + (np.arange(per_side) + 0.5) * side / per_side
        h = 0.5 * side
        offs, nrm = [], []
        for t in s:
            offs.append((t, -h)); nrm.append((0.0, -1.0))
        for t in s:
            offs.append((h, t)); nrm.append((1.0, 0.0))
        for t in s[::-1]:
            offs.append((t, h)); nrm.append((0.0, 1.0))
        for t in s[::-1]:
            offs.append((-h, t)); nrm.append((-1.0, 0.0))
        n = len(offs)
        return cls(np.array(offs), np.array(nrm), np.full(n, 4.0 * side / n))


def force_and_torque(body: RigidBodyState, quad: SurfaceQuadrature,
                     psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Surface integrals of the traction ``-psi . n_s`` and its moment about ``Xc``."""
    n = quad.normals @ body.R.T
    traction = -np.einsum("kij,kj->ki", psi, n) * quad.dA[:, None]
    r = quad.offsets @ body.R.T
    return traction.sum(axis=0), np.cross(r, traction).sum(axis=0)


def plate_force(phi_left: float, phi_right: float, area: float) -> float:
    """Net force on a 1D plate from the normal pressures on its two faces."""
    return (phi_left - phi_right) * area


def _orthonormalize(R: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(R)
    Q = U @ Vt
    if np.linalg.det(Q) < 0:
        U[:, -1] *= -1
        Q = U @ Vt
    return Q


def advance_rigid_body(body: RigidBodyState, F, T, dt: float) -> RigidBodyState:
    """One explicit Euler step of the Newton-Euler equations."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    F = _pad3(F)
    T = _pad3(T)
    I = body.inertia
    domega = np.linalg.solve(I, T - np.cross(body.omega, I @ body.omega))
    R = Rotation.from_rotvec(body.omega * dt).as_matrix() @ body.R
    return RigidBodyState(body.m, body.Xc + dt * body.V, body.V + dt * F / body.m,
                          _orthonormalize(R), body.omega + dt * domega, body.Ibody.copy())
