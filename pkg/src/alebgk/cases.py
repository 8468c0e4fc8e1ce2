"""Initial clouds, fields and bodies for the six experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import grid as gm
from .boundary import RigidBodyState, SurfaceQuadrature
from .config import RunConfig
from .kinetic import GasParameters, VelocityGrid, maxwellian, relaxation_time
from .timestepper import BodyCoupling


@dataclass
class Setup:
    cloud: gm.PointCloud
    domain: gm.Domain
    g1: np.ndarray
    g2: np.ndarray
    gas: GasParameters
    vgrid: VelocityGrid
    body: BodyCoupling | None = None
    meta: dict = field(default_factory=dict)


def gas_from_config(cfg: RunConfig) -> tuple[GasParameters, dict]:
    meta = {}
    if cfg.tau is not None:
        gas = GasParameters(cfg.Rs, cfg.tau, d=cfg.d)
    else:
        probe = GasParameters(cfg.Rs, 1.0, d=cfg.d)
        lam, tau = relaxation_time(cfg.p0, cfg.T0, probe)
        gas = GasParameters(cfg.Rs, tau, d=cfg.d)
        meta["mean_free_path"] = lam
    meta["tau"] = gas.tau
    return gas, meta


def convergence1d_velocity(x):
    x = np.asarray(x, dtype=float)
    return (np.exp(-5.0 * (x - 0.1) ** 2) - 2.0 * np.exp(-5.0 * (x + 0.3) ** 2)) / 10.0


def convergence2d_velocity(x, y):
    def ring(a, b):
        return np.exp(-(10.0 * np.sqrt(a ** 2 + b ** 2) - 1.0) ** 2)
    ux = (ring(x - 0.2, y) - 2.0 * ring(x + 0.2, y)) / 10.0
    uy = (ring(y - 0.2, x) - 2.0 * ring(y + 0.2, x)) / 10.0
    return ux, uy


def lid_velocity(x, L: float, umax: float):
    s = np.asarray(x, dtype=float) / L
    return umax * (2.0 * s) ** 2 * (2.0 - 2.0 * s) ** 2


def shear_state():
    rho0 = 15.0 / math.pi
    return rho0, 1.0 / (2.0 * rho0)


def shear_velocity(x, y):
    k = 15.0 / math.pi
    ux = np.where(y <= math.pi, np.tanh(k * (y - 0.5 * math.pi)), np.tanh(k * (1.5 * math.pi - y)))
    return ux, 0.05 * np.sin(x)


def _line_cloud(x, walls, normals, wall_T, dx, params, segment=None, wall_U=None):
    role = np.zeros(len(x), np.int8)
    normal = np.zeros((len(x), 1))
    T = np.zeros(len(x))
    for i, n, t in zip(walls, normals, wall_T):
        role[i] = gm.WALL
        normal[i, 0] = n
        T[i] = t
    return gm.PointCloud(np.asarray(x)[:, None], role, dx, params, normal, T, wall_U,
                         segment=segment)


def _grid_params(cfg: RunConfig) -> gm.GridParams:
    return gm.GridParams.for_dim(cfg.dim, b_minDist=cfg.b_minDist, b_v=cfg.b_v, b_r=cfg.b_r)


def _field(rho, U, T, gas, vgrid):
    return maxwellian(rho, U, T, gas, vgrid)


def setup_convergence1d(cfg: RunConfig) -> Setup:
    gas, meta = gas_from_config(cfg)
    vg = VelocityGrid(1, cfg.Nv, cfg.vmax)
    n = cfg.Nx
    x = np.linspace(-1.0, 1.0, n)
    dx = 2.0 / (n - 1)
    cloud = _line_cloud(x, [0, n - 1], [1.0, -1.0], [cfg.Tw, cfg.Tw], dx, _grid_params(cfg))
    g1, g2 = _field(np.ones(n), convergence1d_velocity(x)[:, None], np.ones(n), gas, vg)
    return Setup(cloud, gm.Domain([-1.0], [1.0]), g1, g2, gas, vg, meta=meta)


def setup_sod(cfg: RunConfig) -> Setup:
    gas, meta = gas_from_config(cfg)
    vg = VelocityGrid(1, cfg.Nv, cfg.vmax)
    n = cfg.Nx
    x = np.linspace(0.0, 1.0, n)
    dx = 1.0 / (n - 1)
    left = x <= 0.5
    rho = np.where(left, SOD_LEFT[0], SOD_RIGHT[0])
    T = np.where(left, SOD_LEFT[2], SOD_RIGHT[2])
    cloud = _line_cloud(x, [0, n - 1], [1.0, -1.0], [SOD_LEFT[2], SOD_RIGHT[2]], dx,
                        _grid_params(cfg))
    g1, g2 = _field(rho, np.zeros((n, 1)), T, gas, vg)
    meta.update(left=SOD_LEFT, right=SOD_RIGHT)
    return Setup(cloud, gm.Domain([0.0], [1.0]), g1, g2, gas, vg, meta=meta)


SOD_LEFT = (1e-3, 0.0, 8.012e-3)
SOD_RIGHT = (1e-3 / 8.0, 0.0, 6.41e-3)


def plate_equilibrium(cfg: RunConfig) -> float:
    """Equilibrium displacement of the plate for isothermal chambers of fixed mass."""
    return cfg.chamber_length * (cfg.T_left - cfg.T_right) / (cfg.T_left + cfg.T_right)


def setup_plate(cfg: RunConfig) -> Setup:
    gas, meta = gas_from_config(cfg)
    vg = VelocityGrid(1, cfg.Nv, cfg.vmax)
    if cfg.Nx % 2 or cfg.Nx < 8:
        raise ValueError("plate case needs an even point count of at least 8")
    per = cfg.Nx // 2
    L, h = cfg.chamber_length, 0.5 * cfg.plate_width
    xl = np.linspace(-h - L, -h, per)
    xr = np.linspace(h, h + L, per)
    x = np.concatenate([xl, xr])
    dx = L / (per - 1)
    seg = np.repeat([0, 1], per)
    cloud = _line_cloud(x, [0, per - 1, per, 2 * per - 1], [1.0, -1.0, 1.0, -1.0],
                        [cfg.T_left, cfg.T_left, cfg.T_right, cfg.T_right], dx,
                        _grid_params(cfg), segment=seg)
    cloud.role[[per - 1, per]] = gm.RIGID
    cloud.surface[[per - 1, per]] = [0, 1]
    n = x.size
    rho0 = cfg.p0 / (cfg.Rs * cfg.T0)
    g1, g2 = _field(np.full(n, rho0), np.zeros((n, 1)), np.full(n, cfg.T0), gas, vg)
    rho_p = cfg.plate_density_factor * rho0
    area = 2.0 * cfg.plate_width * rho_p if cfg.plate_model == "weighted" else 1.0
    # a slab of thickness l over the face area, so the acceleration does not depend on A
    mass = cfg.plate_mass if cfg.plate_mass is not None else rho_p * cfg.plate_width * area
    quad = SurfaceQuadrature(np.array([[-h], [h]]), np.array([[-1.0], [1.0]]),
                             np.array([area, area]))
    state = RigidBodyState(mass, [0.0], [0.0])
    body = BodyCoupling(state, quad, h)
    meta.update(rho0=rho0, plate_mass=mass, face_area=area, x_eq=plate_equilibrium(cfg))
    return Setup(cloud, gm.Domain([-h - L], [h + L]), g1, g2, gas, vg, body, meta)


def _box_cloud(n, lo, hi, params, Tw, wall_U_fn=None):
    """Uniform ``n x n`` cloud on a box with wall points along its perimeter."""
    ax = np.linspace(lo, hi, n)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    x = np.stack([X.ravel(), Y.ravel()], axis=1)
    dx = (hi - lo) / (n - 1)
    on = np.isclose(x, lo) | np.isclose(x, hi)
    wall = on.any(axis=1)
    normal = np.zeros_like(x)
    normal[np.isclose(x[:, 0], lo), 0] += 1.0
    normal[np.isclose(x[:, 0], hi), 0] -= 1.0
    normal[np.isclose(x[:, 1], lo), 1] += 1.0
    normal[np.isclose(x[:, 1], hi), 1] -= 1.0
    norm = np.linalg.norm(normal, axis=1)
    normal[wall] /= norm[wall, None]
    role = np.where(wall, gm.WALL, gm.INTERIOR).astype(np.int8)
    wall_U = np.zeros_like(x)
    if wall_U_fn is not None:
        wall_U = wall_U_fn(x, wall)
    return gm.PointCloud(x, role, dx, params, normal, np.where(wall, Tw, 0.0), wall_U)


def setup_convergence2d(cfg: RunConfig) -> Setup:
    gas, meta = gas_from_config(cfg)
    vg = VelocityGrid(2, cfg.Nv, cfg.vmax)
    cloud = _box_cloud(cfg.Nx, -1.0, 1.0, _grid_params(cfg), cfg.Tw)
    ux, uy = convergence2d_velocity(cloud.x[:, 0], cloud.x[:, 1])
    n = cloud.n
    g1, g2 = _field(np.ones(n), np.stack([ux, uy], 1), np.ones(n), gas, vg)
    return Setup(cloud, gm.Domain([-1.0, -1.0], [1.0, 1.0]), g1, g2, gas, vg, meta=meta)


def setup_cavity(cfg: RunConfig) -> Setup:
    gas, meta = gas_from_config(cfg)
    vg = VelocityGrid(2, cfg.Nv, cfg.vmax)
    L = cfg.L

    def lid(x, wall):
        U = np.zeros_like(x)
        top = wall & np.isclose(x[:, 1], L) & ~np.isclose(x[:, 0], 0.0) & ~np.isclose(x[:, 0], L)
        U[top, 0] = lid_velocity(x[top, 0], L, cfg.umax)
        return U

    cloud = _box_cloud(cfg.Nx, 0.0, L, _grid_params(cfg), cfg.Tw, lid)
    domain = gm.Domain([0.0, 0.0], [L, L])
    rho0 = cfg.p0 / (cfg.Rs * cfg.T0)
    body = None
    if cfg.body:
        side = cfg.body_side
        quad = SurfaceQuadrature.square(side, per_side=max(1, cfg.body_points // 4))
        m = cfg.body_density_factor * rho0 * side ** 2
        inertia = m * side ** 2 / 6.0
        state = RigidBodyState(m, [cfg.body_x, cfg.body_y], [0.0, 0.0],
                               Ibody=np.diag([inertia, inertia, inertia]))
        body = BodyCoupling(state, quad, 0.5 * side)
        ob = body.obstacle(2)
        keep = ~ob.contains(cloud.x, margin=cloud.params.b_minDist * cloud.dx)
        cloud = cloud.subset(keep)
        k = len(quad.dA)
        pts = quad.positions(state, 2)
        extra = gm.PointCloud(pts, np.full(k, gm.RIGID, np.int8), cloud.dx, cloud.params,
                              quad.lab_normals(state, 2), np.full(k, cfg.body_T), None,
                              surface=np.arange(k))
        cloud = _concat(cloud, extra)
        domain.obstacles = [ob]
        meta.update(body_mass=m, body_inertia=inertia)
    n = cloud.n
    g1, g2 = _field(np.full(n, rho0), np.zeros((n, 2)), np.full(n, cfg.T0), gas, vg)
    meta.update(rho0=rho0, Kn=meta.get("mean_free_path", float("nan")) / L,
                Re=rho0 * cfg.umax * L / (gas.tau * cfg.p0))
    return Setup(cloud, domain, g1, g2, gas, vg, body, meta)


def _concat(a: gm.PointCloud, b: gm.PointCloud) -> gm.PointCloud:
    return gm.PointCloud(np.vstack([a.x, b.x]), np.concatenate([a.role, b.role]), a.dx,
                         a.params, np.vstack([a.normal, b.normal]),
                         np.concatenate([a.wall_T, b.wall_T]),
                         np.vstack([a.wall_U, b.wall_U]),
                         np.concatenate([a.segment, b.segment]),
                         np.concatenate([a.surface, b.surface]))


def setup_shear(cfg: RunConfig) -> Setup:
    rho0, T0 = shear_state()
    gas, meta = gas_from_config(cfg)
    vmax = cfg.vmax if cfg.vmax is not None else 6.0 * math.sqrt(cfg.Rs * T0)
    vg = VelocityGrid(2, cfg.Nv, vmax)
    n = cfg.Nx
    width = 2.0 * math.pi
    ax = np.arange(n) * width / n
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    x = np.stack([X.ravel(), Y.ravel()], axis=1)
    cloud = gm.PointCloud(x, np.zeros(len(x), np.int8), width / n, _grid_params(cfg))
    ux, uy = shear_velocity(x[:, 0], x[:, 1])
    g1, g2 = _field(np.full(len(x), rho0), np.stack([ux, uy], 1), np.full(len(x), T0), gas, vg)
    meta.update(rho0=rho0, T0=T0, vmax=vmax)
    return Setup(cloud, gm.Domain([0.0, 0.0], [width, width], periodic=True), g1, g2, gas,
                 vg, meta=meta)


INITIALIZERS = {
    "convergence1d": setup_convergence1d,
    "convergence2d": setup_convergence2d,
    "sod": setup_sod,
    "plate": setup_plate,
    "cavity": setup_cavity,
    "shear": setup_shear,
}


def case_initializer(cfg: RunConfig) -> Setup:
    return INITIALIZERS[cfg.case](cfg)
