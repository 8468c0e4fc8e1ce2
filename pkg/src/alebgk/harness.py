"""Run orchestration: time step selection, the run loop, artifacts and sweeps."""

from __future__ import annotations

import hashlib
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .cases import Setup, case_initializer
from .config import RunConfig, dump_config
from .mood import MoodConfig
from .output import write_snapshot, write_summary, write_table
from .timestepper import Solver

log = logging.getLogger("alebgk")

CACHE_VERSION = "2"


def timestep_from_config(cfg: RunConfig, solver: Solver | None = None,
                         setup: Setup | None = None) -> float:
    """Explicit ``dt`` if given; otherwise the CFL rule of the case dimension.

    In 2D ``dt = CFL * width / (Nx * vmax)``, which is ``2 CFL / (Nx vmax)``
    on a domain of width 2. In 1D the generalised upwind bound is evaluated
    on the initial grid and scaled by the CFL number.
    """
    if cfg.dt is not None:
        return float(cfg.dt)
    if cfg.dim == 2:
        width = float((setup.domain.width[0]) if setup is not None else 2.0)
        vmax = setup.vgrid.vmax if setup is not None else cfg.vmax
        return cfg.cfl * width / (cfg.Nx * vmax)
    if solver is None:
        raise ValueError("the 1D time step needs the initial grid; pass the solver")
    return cfg.cfl * solver.dt0_bound


@dataclass
class RunResult:
    config: RunConfig
    solver: Solver
    setup: Setup
    diagnostics: list = field(default_factory=list)
    header: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)


def make_solver(cfg: RunConfig, setup: Setup | None = None, monitor=None) -> tuple[Solver, Setup]:
    setup = case_initializer(cfg) if setup is None else setup
    mood = MoodConfig.for_dim(cfg.dim, enabled=bool(cfg.mood), delta=cfg.delta)
    solver = Solver(setup.cloud, setup.domain, setup.g1, setup.g2, setup.gas, setup.vgrid,
                    scheme=cfg.scheme, tableau=cfg.tableau, mood=mood, body=setup.body,
                    maintain_grid=bool(cfg.maintain_grid), monitor=monitor,
                    cfl_check_every=cfg.cfl_check_every or 0)
    solver.dt = timestep_from_config(cfg, solver, setup)
    return solver, setup


def _diag_row(solver: Solver, m0: float):
    rho, U, T, E = solver.moments()
    tot = dg.conserved_totals(solver.cloud, solver.domain, rho, U, E)
    err = float(dg.mass_error_percent(tot["mass"], m0)) if m0 else 0.0
    mood = solver.mood_events[-1] if solver.mood_events else 0
    return [solver.steps, solver.t, *tot.values(), err, float(rho.min()), float(rho.max()), mood,
            solver.cloud.n], tot


def _snapshot(solver: Solver, path: Path, cfg: RunConfig):
    rho, U, T, _ = solver.moments()
    extra = {}
    if solver.cloud.dim == 2:
        extra["vorticity"] = dg.vorticity(solver.cloud, solver.domain, U)
    return write_snapshot(path, solver.cloud, rho, U, T, extra)


def run_case(cfg: RunConfig, out: str | Path | None = None, monitor=None,
             callback=None) -> RunResult:
    """Run one experiment; with ``out`` set, write snapshots, diagnostics and a summary."""
    out = Path(out) if out is not None else (Path(cfg.out) if cfg.out else None)
    handler = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(dump_config(cfg))
        handler = logging.FileHandler(out / "run.log", mode="w")
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        log.addHandler(handler)
        if log.level == logging.NOTSET or log.level > logging.INFO:
            log.setLevel(logging.INFO)
    try:
        return _run(cfg, out, monitor, callback)
    finally:
        if handler is not None:
            log.removeHandler(handler)
            handler.close()


def _run(cfg, out, monitor, callback):
    solver, setup = make_solver(cfg, monitor=monitor)
    res = RunResult(cfg, solver, setup)
    rho0, U0, T0, E0 = solver.moments()
    totals = dg.conserved_totals(solver.cloud, solver.domain, rho0, U0, E0)
    res.header = (["step", "t"] + list(totals) +
                  ["mass_error_pct", "rho_min", "rho_max", "mood_events", "n_points"])
    m0 = totals["mass"]
    row, _ = _diag_row(solver, m0)
    res.diagnostics.append(row)
    log.info("case=%s scheme=%s tableau=%s dt=%.17g points=%d nodes=%d tau=%.6e",
             cfg.case, cfg.scheme, solver.tableau.name, solver.dt, solver.cloud.n,
             solver.vgrid.size, solver.gas.tau)
    snaps = []
    if out is not None:
        snaps.append(_snapshot(solver, out / "snapshot_000000.csv", cfg))
    t_start = time.perf_counter()

    def after(s: Solver):
        every = cfg.diag_every or 0
        last = s.t >= cfg.tf * (1.0 - 1e-12)
        if (every and s.steps % every == 0) or last:
            row, tot = _diag_row(s, m0)
            res.diagnostics.append(row)
            log.info("step %d t=%.10e dt=%.6e mood=%d mass=%.17g momentum=%s energy=%.17g",
                     s.steps, s.t, s.dt, row[-2], tot["mass"],
                     [tot[k] for k in tot if k.startswith("momentum")], tot["energy"])
        if s.body is not None:
            tr = s.body.trajectory[-1]
            log.info("body t=%.10e Xc=%s V=%s omega=%s", tr[0], list(tr[1:4]), list(tr[4:7]),
                     list(tr[7:10]))
        if out is not None and cfg.snapshot_every and s.steps % cfg.snapshot_every == 0:
            snaps.append(_snapshot(s, out / f"snapshot_{s.steps:06d}.csv", cfg))
        if callback is not None:
            callback(s)

    solver.run(cfg.tf, callback=after, max_steps=cfg.max_steps)
    elapsed = time.perf_counter() - t_start
    log.info("finished %d steps in %.1f s", solver.steps, elapsed)
    if not res.diagnostics or res.diagnostics[-1][0] != solver.steps:
        row, _ = _diag_row(solver, m0)
        res.diagnostics.append(row)
    errs = [r[res.header.index("mass_error_pct")] for r in res.diagnostics]
    res.summary = {
        "case": cfg.case, "scheme": cfg.scheme, "tableau": solver.tableau.name,
        "mood": int(bool(cfg.mood)) if not solver.low_order else 0,
        "Nx": cfg.Nx, "Nv": cfg.Nv, "vmax": float(solver.vgrid.vmax), "tau": float(solver.gas.tau),
        "dt": float(solver.dt), "steps": solver.steps, "t_final": float(solver.t),
        "points_initial": setup.cloud.n, "points_final": solver.cloud.n,
        "mass_initial": float(m0), "mass_final": float(res.diagnostics[-1][2]),
        "mass_error_pct_final": float(errs[-1]), "mass_error_pct_max": float(max(errs)),
        "mood_events_total": int(sum(solver.mood_events)),
        "points_merged": solver.grid_events["merged"],
        "points_inserted": solver.grid_events["inserted"],
        "points_deleted": solver.grid_events["deleted"],
    }
    for k, v in setup.meta.items():
        if isinstance(v, (int, float)):
            res.summary[k] = float(v)
    if solver.body is not None:
        st = solver.body.state
        res.summary.update(body_x=float(st.Xc[0]), body_y=float(st.Xc[1]),
                           body_vx=float(st.V[0]), body_vy=float(st.V[1]),
                           body_omega=float(st.omega[2]))
    if out is not None:
        snaps.append(_snapshot(solver, out / "snapshot_final.csv", cfg))
        res.paths["snapshots"] = snaps
        res.paths["diagnostics"] = write_table(out / "diagnostics.csv", res.header,
                                               res.diagnostics)
        if solver.body is not None:
            res.paths["trajectory"] = write_table(
                out / "trajectory.csv", ["t", "Xc_x", "Xc_y", "Xc_z", "V_x", "V_y", "V_z",
                                         "omega_x", "omega_y", "omega_z"],
                solver.body.trajectory)
        res.paths["summary"] = write_summary(out / "summary.txt", res.summary)
    return res


# ------------------------------------------------------------------ cache


def config_key(cfg: RunConfig) -> str:
    text = dump_config(cfg.replace(out=None)) + CACHE_VERSION
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def cached_run(cfg: RunConfig, cache_dir: str | Path | None) -> dict:
    """Final state ``x, rho, U, T, role`` plus diagnostics, reusing a cached result."""
    path = None
    if cache_dir is not None:
        cache_dir = Path(cache_dir)
        cache_dir.mkdir(parents=True, exist_ok=True)
        path = cache_dir / f"{cfg.case}_{cfg.scheme}_{cfg.Nx}_{config_key(cfg)}.npz"
        if path.exists():
            with np.load(path, allow_pickle=False) as z:
                return {k: z[k] for k in z.files}
    res = run_case(cfg)
    s = res.solver
    rho, U, T, _ = s.moments()
    data = {"x": s.cloud.x, "rho": rho, "U": U, "T": T, "role": s.cloud.role,
            "diagnostics": np.array(res.diagnostics, dtype=float),
            "diagnostics_header": np.array(res.header),
            "t": np.array(s.t), "steps": np.array(s.steps),
            "mood_events": np.array(s.mood_events, dtype=np.int64)}
    if s.body is not None:
        data["trajectory"] = np.array(s.body.trajectory, dtype=float)
    if path is not None:
        np.savez(path, **data)
    return data


def audit_grid(cfg: RunConfig, n: int | None = None) -> np.ndarray:
    if cfg.dim == 1:
        return np.linspace(-1.0, 1.0, n or 500)[:, None]
    ax = np.linspace(-1.0, 1.0, n or 101)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def convergence_study(base: RunConfig, schemes, nx_list, ref_nx: int, ref_scheme: str,
                      cache_dir=None, audit_n: int | None = None, ref_overrides=None):
    """Relative L1 errors of rho, U and T against a fine self-reference, and slopes."""
    ref_cfg = base.replace(Nx=ref_nx, scheme=ref_scheme, **(ref_overrides or {}))
    ref = cached_run(ref_cfg, cache_dir)
    audit = audit_grid(base, audit_n)
    degree = 5 if base.dim == 1 else 3
    ref_vals = {q: dg.interpolate_to(ref["x"], ref[q], audit, degree) for q in ("rho", "U", "T")}
    table = []
    for scheme in schemes:
        errs = []
        for nx in nx_list:
            run = cached_run(base.replace(Nx=nx, scheme=scheme), cache_dir)
            e = {q: dg.l1_error_vs_reference(run["x"], run[q], audit, ref_vals[q], degree)
                 for q in ("rho", "U", "T")}
            errs.append(e)
            table.append({"scheme": scheme, "Nx": nx, **{f"err_{q}": v for q, v in e.items()}})
        h = 1.0 / np.asarray(nx_list, float)
        for q in ("rho", "U", "T"):
            slope = dg.convergence_slope(h, [e[q] for e in errs])
            for row in table[-len(nx_list):]:
                row[f"slope_{q}"] = slope
    return table
