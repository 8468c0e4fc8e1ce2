"""Sod shock tube with MUSCL2 + MOOD, compared with the exact Riemann solution.

Writes the run artifacts to ``demos/out/sod`` and a two-column comparison
table next to them. Usage: ``python3 demos/sod_vs_exact.py [Nx]``.
"""

import sys
from pathlib import Path

import numpy as np

from alebgk import diagnostics as dg
from alebgk.cases import SOD_LEFT, SOD_RIGHT
from alebgk.config import load_config
from alebgk.harness import run_case
from alebgk.output import write_table
from alebgk.riemann import exact_riemann

root = Path(__file__).resolve().parents[1]
nx = int(sys.argv[1]) if len(sys.argv) > 1 else 100
cfg = load_config(root / "configs" / "sod.cfg").replace(Nx=nx)
out = root / "demos" / "out" / "sod"
res = run_case(cfg, out)

rho, U, T, _ = res.solver.moments()
x = res.solver.cloud.x
audit = np.linspace(0.0, 1.0, 400)
exact, _, _ = exact_riemann(SOD_LEFT, SOD_RIGHT, res.solver.t, audit, x0=0.5, Rs=cfg.Rs)
num = dg.interpolate_to(x, rho, audit[:, None], 5)
write_table(out / "density_vs_exact.csv", ["x", "rho", "rho_exact"],
            np.column_stack([audit, num, exact]))
print(f"t = {res.solver.t:.4f} s, relative L1 density error {dg.relative_l1(num, exact):.4f}")
print(f"MOOD repairs: {res.summary['mood_events_total']}, "
      f"max mass error {res.summary['mass_error_pct_max']:.4f} %")
