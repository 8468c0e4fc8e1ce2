"""Free plate between a cold and a hot chamber; prints the position history.

The plate should settle near ``L (T_l - T_r) / (T_l + T_r) = -0.1 m``.
Usage: ``python3 demos/moving_plate.py [scheme] [tf]``.
"""

import sys
from pathlib import Path

from alebgk.cases import plate_equilibrium
from alebgk.config import load_config
from alebgk.harness import run_case

root = Path(__file__).resolve().parents[1]
scheme = sys.argv[1] if len(sys.argv) > 1 else "muscl2"
cfg = load_config(root / "configs" / "plate.cfg").replace(scheme=scheme)
if len(sys.argv) > 2:
    cfg = cfg.replace(tf=float(sys.argv[2]))
res = run_case(cfg, root / "demos" / "out" / f"plate_{scheme}")
traj = res.solver.body.trajectory
for row in traj[:: max(1, len(traj) // 20)] + [traj[-1]]:
    print(f"t = {row[0]:8.5f} s   x = {row[1]: .6f} m   v = {row[4]: .6f} m/s")
print(f"equilibrium {plate_equilibrium(cfg):.3f} m")
