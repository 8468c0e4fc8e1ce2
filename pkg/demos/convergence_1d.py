"""Small 1D self-convergence sweep; prints the error table and slopes.

A coarser version of the acceptance study (reference 600 points) that
finishes in a few minutes. Runs are cached in ``demos/out/cache``.
"""

from pathlib import Path

from alebgk.config import load_config
from alebgk.harness import convergence_study

root = Path(__file__).resolve().parents[1]
base = load_config(root / "configs" / "convergence1d.cfg")
table = convergence_study(base, ["upwind1", "muscl2", "muscl4"], [25, 50, 100], 600, "muscl4",
                          cache_dir=root / "demos" / "out" / "cache")
print(f"{'scheme':>8} {'Nx':>5} {'err_rho':>12} {'slope_rho':>10}")
for r in table:
    print(f"{r['scheme']:>8} {r['Nx']:>5} {r['err_rho']:12.4e} {r['slope_rho']:10.3f}")
