"""IMEX Runge-Kutta stepping of the ALE BGK system on a moving point cloud.

Each stage performs, in order: the position update, the explicit transport
accumulation, MOOD detection and repair against the previous stage, the
stencil rebuild at the new positions, the wall closure, the accumulation of
earlier relaxation terms and the closed-form implicit relaxation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import grid as gm
from .boundary import (RigidBodyState, SurfaceQuadrature, advance_rigid_body,
                       diffuse_reflect, force_and_torque, pressure_tensor)
from .kinetic import AdmissibilityError, GasParameters, VelocityGrid, field_moments, maxwellian
from .mood import MoodConfig, detect, fallback_recompute
from .transport import (cfl_timestep_1d, cfl_timestep_2d, muscl_chunked,
                        transport_1d_first_order, transport_2d_first_order)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ImexTableau:
    """Butcher pair: strictly lower explicit part and a DIRK implicit part."""

    name: str
    A_exp: np.ndarray
    b_exp: np.ndarray
    A_imp: np.ndarray
    b_imp: np.ndarray

    def __post_init__(self):
        Ae, Ai = np.asarray(self.A_exp, float), np.asarray(self.A_imp, float)
        n = Ae.shape[0]
        if Ae.shape != (n, n) or Ai.shape != (n, n):
            raise ValueError("tableau matrices must be square and of equal size")
        if np.any(np.triu(Ae) != 0):
            raise ValueError("explicit tableau must be strictly lower triangular")
        if np.any(np.triu(Ai, 1) != 0):
            raise ValueError("implicit tableau must be lower triangular")
        if np.any(np.diag(Ai) < 0):
            raise ValueError("implicit diagonal must be non-negative")
        for b in (self.b_exp, self.b_imp):
            if abs(np.sum(b) - 1.0) > 1e-14:
                raise ValueError("weights must sum to one")
        # second-order conditions of each part
        for A, b in ((Ae, self.b_exp), (Ai, self.b_imp)):
            if abs(np.dot(b, A.sum(axis=1)) - 0.5) > 1e-14:
                raise ValueError(f"{self.name} fails the second-order condition")

    @property
    def stages(self) -> int:
        return self.A_exp.shape[0]

    @property
    def c_exp(self) -> np.ndarray:
        return self.A_exp.sum(axis=1)

    @property
    def stiffly_accurate(self) -> bool:
        return (np.array_equal(self.b_exp, self.A_exp[-1])
                and np.array_equal(self.b_imp, self.A_imp[-1]))


def _ars222() -> ImexTableau:
    g = 1.0 - 1.0 / math.sqrt(2.0)
    d = 1.0 - 1.0 / (2.0 * g)
    return ImexTableau(
        "ARS222",
        np.array([[0.0, 0.0, 0.0], [g, 0.0, 0.0], [d, 1.0 - d, 0.0]]),
        np.array([d, 1.0 - d, 0.0]),
        np.array([[0.0, 0.0, 0.0], [0.0, g, 0.0], [0.0, 1.0 - g, g]]),
        np.array([0.0, 1.0 - g, g]))


def _ssp2_332() -> ImexTableau:
    t = 1.0 / 3.0
    return ImexTableau(
        "SSP2-332",
        np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.5, 0.5, 0.0]]),
        np.array([t, t, t]),
        np.array([[0.25, 0.0, 0.0], [0.0, 0.25, 0.0], [t, t, t]]),
        np.array([t, t, t]))


ARS222 = _ars222()
SSP2_332 = _ssp2_332()
TABLEAUS = {"ARS222": ARS222, "SSP2-332": SSP2_332}


def get_tableau(name: str) -> ImexTableau:
    key = name.upper().replace("_", "-")
    aliases = {"ARS(2,2,2)": "ARS222", "SSP2332": "SSP2-332", "IMEX-SSP2-332": "SSP2-332",
               "SSP2(3,3,2)": "SSP2-332"}
    key = aliases.get(key, key)
    if key not in TABLEAUS:
        raise ValueError(f"unknown tableau {name!r}; choose from {sorted(TABLEAUS)}")
    return TABLEAUS[key]


def implicit_relaxation(gbar1, gbar2, dt: float, a_ss: float, tau: float,
                        grid: VelocityGrid, gas: GasParameters):
    """Closed-form DIRK stage ``(tau gbar + dt a_ss G) / (tau + dt a_ss)``.

    The Maxwellian is built from the moments of ``gbar``, which the
    relaxation operator conserves. Returns ``(g1, g2)``.
    """
    rho, U, T, _ = field_moments(gbar1, gbar2, grid, gas)
    G1, G2 = maxwellian(rho, U, T, gas, grid)
    h = dt * a_ss
    s = 1.0 / (tau + h)
    return (tau * gbar1 + h * G1) * s, (tau * gbar2 + h * G2) * s


def grid_motion_velocity(role, U_gas, U_wall) -> np.ndarray:
    """Interior points follow the gas, walls stay put, body points move with the body."""
    role = np.asarray(role)
    U_gas = np.asarray(U_gas, float)
    U_wall = np.broadcast_to(np.asarray(U_wall, float), U_gas.shape)
    out = np.where((role == gm.INTERIOR)[:, None], U_gas, 0.0)
    return np.where((role == gm.RIGID)[:, None], U_wall, out)


SCHEMES = {
    # name: (dimension or None, MLS fit order, first order)
    "upwind1": (1, None, True),
    "positive1": (2, None, True),
    "muscl2": (None, 3, False),
    "muscl4": (1, 5, False),
}


@dataclass
class BodyCoupling:
    """A rigid body exchanging momentum with the gas through its surface points."""

    state: RigidBodyState
    quad: SurfaceQuadrature
    half: float
    fixed: bool = False
    trajectory: list = field(default_factory=list)

    def obstacle(self, dim: int) -> gm.SquareObstacle:
        return gm.SquareObstacle(self.state.Xc[:dim].copy(), self.half,
                                 self.state.R[:2, :2].copy() if dim == 2 else None)

    def record(self, t: float):
        s = self.state
        self.trajectory.append((t, *s.Xc, *s.V, *s.omega))


class Solver:
    """Time integrator holding the point cloud, the field and an optional body."""

    def __init__(self, cloud: gm.PointCloud, domain: gm.Domain, g1, g2,
                 gas: GasParameters, vgrid: VelocityGrid, scheme: str = "muscl2",
                 tableau: ImexTableau | str = ARS222, mood: MoodConfig | None = None,
                 dt: float | None = None, body: BodyCoupling | None = None,
                 maintain_grid: bool = True, monitor: Callable | None = None,
                 cfl_check_every: int = 1):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}; choose from {sorted(SCHEMES)}")
        sdim, order, first = SCHEMES[scheme]
        if sdim is not None and sdim != cloud.dim:
            raise ValueError(f"scheme {scheme} is not available in {cloud.dim}D")
        if vgrid.dim != cloud.dim:
            raise ValueError("velocity grid and point cloud differ in dimension")
        self.cloud, self.domain = cloud, domain
        self.g = [np.ascontiguousarray(g1, float), np.ascontiguousarray(g2, float)]
        self.gas, self.vgrid = gas, vgrid
        self.scheme, self.order, self.low_order = scheme, order, first
        self.tableau = get_tableau(tableau) if isinstance(tableau, str) else tableau
        self.mood = mood if mood is not None else MoodConfig.for_dim(cloud.dim, enabled=False)
        self.use_mood = self.mood.enabled and not first
        self.body = body
        self.maintain_grid = maintain_grid
        self.monitor = monitor
        self.cfl_check_every = cfl_check_every
        self.t = 0.0
        self.steps = 0
        self.mood_events: list[int] = []
        self.grid_events = {"deleted": 0, "merged": 0, "inserted": 0}
        self.bc_log: list[np.ndarray] = []
        self.record_bc = False
        self._sync_body_points()
        if body is not None:
            body.record(self.t)
        self.stencils = self._build(self.cloud)
        self.dt0_bound = self.stability_bound(self.stencils, self.cloud, self.uale(self.cloud, self.g))
        self.dt = dt

    # ------------------------------------------------------------ helpers

    @property
    def g1(self):
        return self.g[0]

    @property
    def g2(self):
        return self.g[1]

    def _place_obstacle(self, dim, state=None):
        # 1D chambers are separate segments, so only 2D needs the obstacle
        if dim == 2 and self.body is not None and not self.body.fixed:
            old = self.body.state
            if state is not None:
                self.body.state = state
            self.domain.obstacles = [self.body.obstacle(2)]
            self.body.state = old

    def _build(self, cloud, state=None):
        positive = cloud.dim == 2 and (self.scheme == "positive1" or self.use_mood)
        self._place_obstacle(cloud.dim, state)
        return gm.build_stencils(cloud, self.domain, self.order, positive=positive)

    def moments(self, g=None, check: bool = True):
        g = self.g if g is None else g
        return field_moments(g[0], g[1], self.vgrid, self.gas, check=check)

    def wall_velocity(self, cloud, body_state=None) -> np.ndarray:
        Uw = cloud.wall_U.copy()
        if self.body is not None:
            rig = cloud.role == gm.RIGID
            if np.any(rig):
                st = self.body.state if body_state is None else body_state
                Uw[rig] = st.point_velocity(cloud.x[rig])
        return Uw

    def uale(self, cloud, g, body_state=None) -> np.ndarray:
        _, U, _, _ = field_moments(g[0], g[1], self.vgrid, self.gas)
        return grid_motion_velocity(cloud.role, U, self.wall_velocity(cloud, body_state))

    def _sync_body_points(self, cloud=None, state=None):
        cloud = self.cloud if cloud is None else cloud
        if self.body is None:
            return
        state = self.body.state if state is None else state
        rig = np.flatnonzero(cloud.role == gm.RIGID)
        if rig.size == 0:
            return
        k = cloud.surface[rig]
        cloud.x[rig] = self.body.quad.positions(state, cloud.dim)[k]
        cloud.normal[rig] = self.body.quad.lab_normals(state, cloud.dim)[k]

    def stability_bound(self, st, cloud, uale) -> float:
        """Forward-Euler bound of the first-order scheme on the given stencils."""
        if cloud.dim == 1:
            return cfl_timestep_1d(st, self.vgrid.nodes, uale)
        if st.kbar is None:
            st.compute(None, positive=True)
        return cfl_timestep_2d(st, self.vgrid.nodes, uale)

    def first_order_transport(self, g, st, cloud, uale) -> np.ndarray:
        if cloud.dim == 1:
            return transport_1d_first_order(g, st, self.vgrid.nodes, uale, cloud.boundary)
        return transport_2d_first_order(g, st, self.vgrid.nodes, uale)

    def transport(self, g, st, cloud, uale, curvature: bool):
        if self.low_order:
            return self.first_order_transport(g, st, cloud, uale), None, None
        if curvature:
            return muscl_chunked(g, st, self.vgrid.nodes, uale, curvature=True)
        return muscl_chunked(g, st, self.vgrid.nodes, uale), None, None

    def apply_walls(self, g, cloud, body_state=None):
        b = np.flatnonzero(cloud.boundary)
        if b.size == 0:
            return
        Uw = self.wall_velocity(cloud, body_state)[b]
        rho_w = diffuse_reflect(g[0], g[1], b, cloud.wall_T[b], Uw, cloud.normal[b],
                                self.vgrid, self.gas)
        if self.record_bc:
            from .boundary import wall_mass_flux
            self.bc_log.append(np.abs(wall_mass_flux(g[0][b], Uw, cloud.normal[b], self.vgrid)))
        return rho_w

    def body_load(self, g, cloud, state):
        rig = np.flatnonzero(cloud.role == gm.RIGID)
        k = cloud.surface[rig]
        Uw = state.point_velocity(cloud.x[rig])
        psi = pressure_tensor(g[0][rig], g[1][rig], self.vgrid, Uw)
        full = np.zeros((len(self.body.quad.dA), 3, 3))
        full[k] = psi
        return force_and_torque(state, self.body.quad, full)

    def advance_body(self, state, g, cloud, h):
        if self.body is None or self.body.fixed or h <= 0.0:
            return state
        F, T = self.body_load(g, cloud, state)
        return advance_rigid_body(state, F, T, h)

    # --------------------------------------------------------------- step

    def step(self, dt: float | None = None) -> dict:
        dt = self.dt if dt is None else dt
        if dt is None or not dt > 0:
            raise ValueError("a positive time step is required")
        tab = self.tableau
        nu = tab.stages
        Ae, Ai, c = tab.A_exp, tab.A_imp, tab.c_exp
        cloud0 = self.cloud
        x0 = cloud0.x.copy()
        gn = self.g
        need_T = [bool(np.any(Ae[s + 1:, s] != 0) or tab.b_exp[s] != 0) for s in range(nu)]
        need_R = [bool(np.any(Ai[s + 1:, s] != 0) or tab.b_imp[s] != 0) for s in range(nu)]
        Ts, Rs, Us = [None] * nu, [None] * nu, [None] * nu
        curv = [None] * nu
        stage_g, stage_st, stage_cloud = [None] * nu, [None] * nu, [None] * nu
        body_states = [None] * nu
        events = []
        state = self.body.state if self.body is not None else None
        for s in range(nu):
            if s == 0:
                cl = cloud0
                st = self.stencils
                gt = [gn[0].copy(), gn[1].copy()]
            else:
                if self.body is not None:
                    state = self.advance_body(state, stage_g[s - 1], stage_cloud[s - 1],
                                              dt * (c[s] - c[s - 1]))
                cl = gm.PointCloud(x0 + dt * sum(Ae[s, p] * Us[p] for p in range(s)),
                                   cloud0.role, cloud0.dx, cloud0.params, cloud0.normal.copy(),
                                   cloud0.wall_T, cloud0.wall_U, cloud0.segment, cloud0.surface)
                self._sync_body_points(cl, state)
                gt = []
                for k in range(2):
                    acc = gn[k].copy()
                    for p in range(s):
                        if Ae[s, p] != 0.0:
                            acc -= (dt * Ae[s, p]) * Ts[p][k]
                    gt.append(acc)
                events.append(self._mood(gt, s, stage_g[s - 1], stage_st[s - 1],
                                         stage_cloud[s - 1], Us[s - 1], curv[s - 1],
                                         dt * (c[s] - c[s - 1])))
                st = self._build(cl, state)
            self.apply_walls(gt, cl, state)
            for k in range(2):
                for p in range(s):
                    if Ai[s, p] != 0.0:
                        gt[k] += Ai[s, p] * Rs[p][k]
            gs = self._close(gt, dt, Ai[s, s], s, need_R[s], Rs)
            stage_g[s], stage_st[s], stage_cloud[s] = gs, st, cl
            body_states[s] = state
            Us[s] = self.uale(cl, gs, state)
            if need_T[s]:
                want = self.use_mood
                out = [self.transport(gs[k], st, cl, Us[s], want) for k in range(2)]
                Ts[s] = [o[0] for o in out]
                curv[s] = [(o[1], o[2]) for o in out] if want else None
        if tab.stiffly_accurate:
            new_g, new_cloud, new_state = stage_g[-1], stage_cloud[-1], body_states[-1]
            st_new = stage_st[-1]
        else:
            new_g, new_cloud, new_state, st_new, ev = self._combine(
                dt, gn, x0, cloud0, Ts, Rs, Us, stage_g, stage_st, stage_cloud,
                curv, body_states)
            events.append(ev)
        if self.body is not None:
            new_state = self.advance_body(new_state, stage_g[-1], stage_cloud[-1],
                                          dt * (1.0 - c[-1]))
            self.body.state = new_state
            self._sync_body_points(new_cloud, new_state)
        self.g = [np.ascontiguousarray(new_g[0]), np.ascontiguousarray(new_g[1])]
        self.cloud = new_cloud
        self.t += dt
        self.steps += 1
        info = {"mood": events, "grid": None}
        self.mood_events.append(int(sum(events)))
        if self.body is not None:
            self.body.record(self.t)
        if self.maintain_grid:
            info["grid"] = self._maintain()
            self.stencils = self._build(self.cloud)
        else:
            self.stencils = st_new if st_new is not None else self._build(self.cloud)
        if self.cfl_check_every and self.steps % self.cfl_check_every == 0:
            self._check_cfl(dt)
        if any(events):
            log.info("step %d t=%.6e MOOD events per stage %s", self.steps, self.t, events)
        return info

    def _close(self, gbar, dt, a_ss, s, keep_R, Rs):
        try:
            rho, U, T, _ = field_moments(gbar[0], gbar[1], self.vgrid, self.gas)
        except AdmissibilityError as err:
            raise AdmissibilityError(f"step {self.steps + 1} stage {s + 1}: {err}",
                                     err.point, err.quantity, err.value) from err
        G = maxwellian(rho, U, T, self.gas, self.vgrid)
        tau = self.gas.tau
        if a_ss > 0.0:
            R = [dt * (G[k] - gbar[k]) / (tau + dt * a_ss) for k in range(2)]
            g = [gbar[k] + a_ss * R[k] for k in range(2)]
            if keep_R:
                Rs[s] = R
            return g
        if keep_R:
            Rs[s] = [(dt / tau) * (G[k] - gbar[k]) for k in range(2)]
        return gbar

    def _mood(self, gt, s, prev, st, cl, uale, curv, h) -> int:
        if not self.use_mood:
            return 0
        n = 0
        for k in range(2):
            cx, cy = curv[k] if curv is not None else (None, None)
            if cx is None:
                _, cx, cy = muscl_chunked(prev[k], st, self.vgrid.nodes, uale, curvature=True)
            flags = detect(gt[k], prev[k], st, self.mood, cx, cy)
            if self.monitor is not None:
                self.monitor(stage=s, component=k, candidate=gt[k], prev=prev[k],
                             stencils=st, flags=flags, curvature=(cx, cy))
            if np.any(flags):
                gt[k] = fallback_recompute(gt[k], flags, prev[k], h,
                                           lambda q: self.first_order_transport(q, st, cl, uale))
                if self.monitor is not None:
                    self.monitor(stage=s, component=k, repaired=gt[k], prev=prev[k],
                                 stencils=st, flags=flags, curvature=(cx, cy))
                n += int(flags.sum())
        return n

    def _combine(self, dt, gn, x0, cloud0, Ts, Rs, Us, stage_g, stage_st, stage_cloud,
                 curv, body_states):
        tab = self.tableau
        nu = tab.stages
        g = []
        for k in range(2):
            acc = gn[k].copy()
            for p in range(nu):
                if tab.b_exp[p] != 0.0:
                    acc -= (dt * tab.b_exp[p]) * Ts[p][k]
                if tab.b_imp[p] != 0.0:
                    acc += tab.b_imp[p] * Rs[p][k]
            g.append(acc)
        ev = 0
        if self.use_mood:
            prev = stage_g[-1]
            st = stage_st[-1]
            for k in range(2):
                cx, cy = curv[-1][k] if curv[-1] is not None else (None, None)
                flags = detect(g[k], prev[k], st, self.mood, cx, cy)
                if np.any(flags):
                    g[k] = np.where(flags, prev[k], g[k])
                    ev += int(flags.sum())
        x = x0 + dt * sum(tab.b_exp[p] * Us[p] for p in range(nu))
        cl = gm.PointCloud(x, cloud0.role, cloud0.dx, cloud0.params, cloud0.normal.copy(),
                           cloud0.wall_T, cloud0.wall_U, cloud0.segment, cloud0.surface)
        state = body_states[-1]
        self._sync_body_points(cl, state)
        self.apply_walls(g, cl, state)
        return g, cl, state, None, ev

    def _maintain(self):
        bounds = None
        if self.cloud.dim == 1:
            bounds = self._segment_bounds()
        self._place_obstacle(self.cloud.dim)
        cloud, fields, counts = gm.maintain(self.cloud, self.domain, self.g, bounds)
        self.cloud = cloud
        self.g = [np.ascontiguousarray(f) for f in fields]
        for key, v in counts.items():
            self.grid_events[key] += v
        return counts

    def _segment_bounds(self):
        b = self.cloud.boundary
        out = {}
        for seg in np.unique(self.cloud.segment):
            xs = self.cloud.x[b & (self.cloud.segment == seg), 0]
            if xs.size >= 2:
                out[int(seg)] = (xs.min(), xs.max())
        return out

    def _check_cfl(self, dt):
        bound = self.stability_bound(self.stencils, self.cloud, self.uale(self.cloud, self.g))
        if dt > 1.1 * bound:
            log.warning("step %d: dt=%.3e exceeds the current first-order bound %.3e by more than 10%%",
                        self.steps, dt, bound)
        return bound

    def run(self, tf: float, callback: Callable | None = None, max_steps: int | None = None):
        """Advance to ``tf`` with the fixed step; the last step is shortened to land on ``tf``."""
        while self.t < tf * (1.0 - 1e-12):
            h = min(self.dt, tf - self.t)
            self.step(h)
            if callback is not None:
                callback(self)
            if max_steps is not None and self.steps >= max_steps:
                break
        return self
