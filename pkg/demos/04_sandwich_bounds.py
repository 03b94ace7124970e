"""Certified value bounds on a belief grid, and how the gap shrinks as the
grid grows: keep more vectors for the upper bound, interpolate more points
for the lower one.

Run:  python demos/04_sandwich_bounds.py
"""

import numpy as np

from epitest import nested_grid_ladder, oracle_value, sandwich
from epitest.presets import probe_beliefs, scenario_a

cfg = scenario_a()
probes = probe_beliefs(cfg.n, 5)
ladder = (2, 4, 8, 16)

print(f"scenario A, grid ladder R = {ladder} (corners + R interior points)\n")
print("R   stage-1 mean gap   max gap    upper set sizes by stage")
for R, grid in zip(ladder, nested_grid_ladder(cfg.n, ladder, seed=cfg.seed)):
    result = sandwich(cfg, grid, probes)
    assert not result.violations
    stage1 = [row.gap for row in result.rows if row.t == 1]
    sizes = [len(result.upper.alpha_set(t)) for t in range(1, cfg.horizon + 1)]
    print(f"{R:<3} {np.mean(stage1):>15.6f} {np.max([r.gap for r in result.rows]):>10.6f}"
          f"    {sizes}")

# The truth sits inside every bracket.
grid = nested_grid_ladder(cfg.n, [8], seed=cfg.seed)[0]
result = sandwich(cfg, grid, probes)
print("\nper-probe bracket at stage 1 (R = 8) against the tree oracle:")
for row in (r for r in result.rows if r.t == 1):
    truth = oracle_value(cfg, probes[row.probe])
    mark = "tight" if row.tight else f"gap {row.gap:.4f}"
    print(f"  probe {row.probe}: {row.lower:.6f} <= {truth:.6f} <= {row.upper:.6f}  ({mark})")
