"""Where the star function and subset sums differ.

For a sampled function every value carries the mass of one cell.  The star
function integrates the decreasing rearrangement and therefore may use a
fraction of a cell; a maximum over subsets of whole cells may not.  The
two agree at the partial masses of the sorted order and differ inside a
cell whenever the weights are unequal.
"""
import numpy as np

from robinstar.measure import WeightedSamples, star_brute_force_table, star_function

# %% three cells with unequal masses
f = WeightedSamples(np.array([1.0, 0.5, -1.0]), np.array([1.0, 2.0, 0.5]))
F = star_function(f)
t, best = star_brute_force_table(f)
for ti, bi in zip(t, best):
    print(f"t={ti:4.1f}  star={F(min(ti, f.total_mass)):+.3f}  best subset={bi:+.3f}")

# %% equal masses: every achievable measure is a partial mass, so both agree
g = WeightedSamples.uniform(np.array([0.3, -0.2, 0.9, 0.1]))
t, best = star_brute_force_table(g)
print("equal weights, max gap", np.max(np.abs(star_function(g)(t) - best)))
