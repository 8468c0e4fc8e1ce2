"""Flat ``key = value`` run configuration.

Lines starting with ``#`` are comments. Unknown keys are rejected. Every
case fills unset keys from its own defaults, so a config only needs to
name the case and the values it changes.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any

CASES = ("convergence1d", "convergence2d", "sod", "plate", "cavity", "shear")
CASE_DIM = {"convergence1d": 1, "sod": 1, "plate": 1,
            "convergence2d": 2, "cavity": 2, "shear": 2}


@dataclass
class RunConfig:
    case: str
    Nx: int | None = None
    Nv: int | None = None
    vmax: float | None = None
    cfl: float | None = None
    dt: float | None = None
    tf: float | None = None
    scheme: str | None = None
    mood: bool | None = None
    delta: float | None = None
    tableau: str | None = None
    Rs: float | None = None
    tau: float | None = None
    p0: float | None = None
    T0: float | None = None
    d: float | None = None
    Tw: float | None = None
    # grid management
    b_minDist: float | None = None
    b_v: float | None = None
    b_r: float | None = None
    maintain_grid: bool | None = None
    # plate
    T_left: float | None = None
    T_right: float | None = None
    chamber_length: float | None = None
    plate_width: float | None = None
    plate_density_factor: float | None = None
    plate_model: str | None = None
    plate_mass: float | None = None
    # cavity
    L: float | None = None
    umax: float | None = None
    body: bool | None = None
    body_x: float | None = None
    body_y: float | None = None
    body_side: float | None = None
    body_density_factor: float | None = None
    body_points: int | None = None
    body_T: float | None = None
    # output
    snapshot_every: int | None = None
    diag_every: int | None = None
    cfl_check_every: int | None = None
    max_steps: int | None = None
    out: str | None = None

    @property
    def dim(self) -> int:
        return CASE_DIM[self.case]

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)

    def as_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}


_COMMON = dict(snapshot_every=0, diag_every=1, maintain_grid=True, d=3.68e-10,
               b_minDist=None, b_v=None, b_r=None, out=None, max_steps=None)

DEFAULTS: dict[str, dict[str, Any]] = {
    "convergence1d": dict(Nx=100, Nv=20, vmax=10.0, cfl=0.02, tf=0.04, scheme="muscl4",
                          mood=False, tableau="SSP2-332", Rs=1.0, tau=1e-5, Tw=1.0,
                          cfl_check_every=0),
    "convergence2d": dict(Nx=41, Nv=20, vmax=12.0, cfl=0.02, tf=5e-3, scheme="muscl2",
                          mood=False, tableau="ARS222", Rs=1.0, tau=1e-5, Tw=1.0,
                          cfl_check_every=0),
    "sod": dict(Nx=100, Nv=80, vmax=20.0, cfl=0.5, tf=0.17, scheme="muscl2", mood=True,
                tableau="SSP2-332", Rs=208.0, tau=1e-6, cfl_check_every=1),
    "plate": dict(Nx=54, Nv=20, vmax=1400.0, cfl=0.5, tf=0.2, scheme="muscl2", mood=True,
                  tableau="SSP2-332", Rs=208.0, p0=3.86e-2, T0=270.0, T_left=270.0,
                  T_right=330.0, chamber_length=1.0, plate_width=0.1,
                  plate_density_factor=10.0, plate_model="weighted", cfl_check_every=1),
    "cavity": dict(Nx=60, Nv=20, vmax=1200.0, cfl=0.5, tf=2e-8, scheme="muscl2", mood=False,
                   tableau="ARS222", Rs=208.0, p0=617760.0, T0=270.0, Tw=270.0, L=1e-6,
                   umax=10.0, body=False, body_x=6e-7, body_y=7e-7, body_side=2e-7,
                   body_density_factor=10.0, body_points=16, body_T=270.0,
                   cfl_check_every=0),
    "shear": dict(Nx=80, Nv=25, vmax=None, dt=1.17617e-3, tf=4.93993, scheme="muscl2",
                  mood=False, tableau="ARS222", Rs=1.0, tau=1e-5, cfl_check_every=0),
}


def _coerce(name: str, text: str):
    text = text.strip()
    if text.lower() in ("none", "auto", ""):
        return None
    ftype = {f.name: f.type for f in dataclasses.fields(RunConfig)}[name]
    if "bool" in ftype:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: cannot read {text!r} as a boolean")
    if "int" in ftype:
        return int(float(text)) if float(text).is_integer() else _bad(name, text)
    if "float" in ftype:
        return float(text)
    return text


def _bad(name, text):
    raise ValueError(f"{name}: expected an integer, got {text!r}")


def parse_pairs(lines) -> dict[str, Any]:
    names = {f.name for f in dataclasses.fields(RunConfig)}
    out: dict[str, Any] = {}
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected key = value, got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in names:
            raise ValueError(f"line {n}: unknown key {key!r}")
        out[key] = _coerce(key, val)
    return out


def resolve(values: dict[str, Any]) -> RunConfig:
    """Fill unset keys from the case defaults and validate."""
    case = values.get("case")
    if case not in CASES:
        raise ValueError(f"case must be one of {CASES}, got {case!r}")
    merged = dict(_COMMON)
    merged.update(DEFAULTS[case])
    merged.update({k: v for k, v in values.items() if v is not None})
    cfg = RunConfig(**merged)
    validate(cfg)
    return cfg


def load_config(path, overrides=()) -> RunConfig:
    """Read a config file and apply ``key=value`` overrides."""
    values = parse_pairs(Path(path).read_text().splitlines())
    values.update(parse_pairs(overrides))
    return resolve(values)


def validate(cfg: RunConfig) -> None:
    from .timestepper import SCHEMES, get_tableau

    positive = ["Nx", "Nv", "tf", "Rs", "vmax", "cfl", "dt", "tau", "p0", "T0", "Tw", "d",
                "L", "umax", "body_side", "chamber_length", "plate_width"]
    for key in positive:
        v = getattr(cfg, key)
        if v is not None and not v > 0:
            if key == "tf" and v == 0:
                continue
            raise ValueError(f"{key} must be positive, got {v}")
    if cfg.scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {cfg.scheme!r}")
    sdim = SCHEMES[cfg.scheme][0]
    if sdim is not None and sdim != cfg.dim:
        raise ValueError(f"scheme {cfg.scheme} is not available for the {cfg.dim}D case {cfg.case}")
    get_tableau(cfg.tableau)
    if cfg.tau is None and (cfg.p0 is None or cfg.T0 is None):
        raise ValueError("either tau or both p0 and T0 must be given")
    if cfg.dt is None and cfg.cfl is None:
        raise ValueError("either dt or cfl must be given")
    if cfg.plate_model not in (None, "area", "weighted"):
        raise ValueError("plate_model must be 'area' or 'weighted'")
    if cfg.Nv is not None and cfg.Nv < 2:
        raise ValueError("Nv must be at least 2")


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for k, v in cfg.as_dict().items():
        if v is None:
            continue
        if isinstance(v, float):
            v = repr(v)
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"
