"""Refinement sweep and fitted tolerance constants for each domain kind.

The discrete comparison holds to rounding, so the sweep reports the
rounding floor instead of an order.  The O(h^2) identity checks give the
constants that the default tolerance model must exceed.
"""
from robinstar.harness import refinement_sweep
from robinstar.scenarios import ALPHA_SETS, calibrate

# %% max violation per level for a Robin shell
sweep = refinement_sweep("shell3d_axisym", 1.0, 2.0, seeds=range(3), levels=(16, 32, 64))
for row in sweep["levels"]:
    print(f"n={row['n']:4d} h={row['h']:.4f} max_violation={row['max_violation']:+.2e} "
          f"floor={row['rounding_floor']:.2e}")
print("rounding limited:", sweep["rounding_limited"], "passed:", sweep["passed"])

# %% calibrated constants for every kind (a few seconds each)
for kind in ALPHA_SETS:
    calibrate(kind, levels=3, seeds=range(2))
