"""Lid-driven micro cavity: U_x along the vertical centerline for one scheme.

Usage: ``python3 demos/cavity_centerline.py [scheme] [max_steps]``. The
full configured run is long; pass a step limit for a quick look.
"""

import sys
from pathlib import Path

import numpy as np

from alebgk import diagnostics as dg
from alebgk.config import load_config
from alebgk.harness import run_case

root = Path(__file__).resolve().parents[1]
scheme = sys.argv[1] if len(sys.argv) > 1 else "positive1"
cfg = load_config(root / "configs" / "cavity.cfg").replace(scheme=scheme)
if len(sys.argv) > 2:
    cfg = cfg.replace(max_steps=int(sys.argv[2]))
res = run_case(cfg, root / "demos" / "out" / f"cavity_{scheme}")
_, U, _, _ = res.solver.moments()
y = np.linspace(0.0, cfg.L, 21)
line = np.column_stack([np.full_like(y, cfg.L / 2), y])
ux = dg.interpolate_to(res.solver.cloud.x, U[:, 0], line, 3)
print(f"t = {res.solver.t:.3e} s after {res.solver.steps} steps")
for yi, ui in zip(y, ux):
    print(f"y/L = {yi / cfg.L:5.2f}   Ux = {ui: .4f} m/s")
