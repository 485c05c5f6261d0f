"""Compare u_star with Jv for one seeded Robin annulus problem.

Run from the repository root::

    python demos/compare_annulus.py
"""
import numpy as np

from robinstar.harness import run_comparison
from robinstar.solver import RobinProblem, solve
from robinstar.sources import Geometry, SourceSpec, build_grid, generate_source

# %% a random band-limited source on the annulus 1 < r < 2
grid = build_grid("annulus2d", Geometry(1.0, 2.0), 128, 256)
f = generate_source(SourceSpec("bandlimited", seed=7), grid, "annulus2d", 1.0, 2.0)
problem = RobinProblem("annulus2d", f, alpha1=1.0, alpha2=2.0)

# %% solve once and look at the residuals
res = solve(problem)
print("interior residual", res.interior_residual)
print("boundary residual", res.boundary_residual)

# %% the full comparison: symmetrize f, solve again, compare star functions
rep = run_comparison(problem, seed=7, scenario_id="annulus-demo")
print("max(u_star - Jv)   ", rep.max_violation)
print("tolerance          ", rep.tol)
print("convex families    ", rep.convex_means["judged"])
print("commutativity      ", rep.commutativity_defect)
print("subharmonicity     ", rep.subharmonicity_defect)
print("verdict            ", rep.verdict, rep.failures)

# %% the violation surface is kept for plotting
v = rep.plot_data["violation"]
print("violation surface", v.shape, "min", v.min(), "max", v.max())
np.savez("annulus_demo.npz", **{k: np.asarray(x) for k, x in rep.plot_data.items()})
