"""Conditioned moment trajectories for a boundary point of the realizable region.

Finds the minimum-norm unraveling that keeps (beta, gamma) stationary, runs an
ensemble, and compares the spread of <x> with 1 - gamma. One member is written
to trajectory.csv.
"""
import numpy as np

from atomlaser import LaserParams
from atomlaser.gaussian import CovarianceTriple, MomentState
from atomlaser.region import PRQuery, feasible_beta_interval, solve_min_norm
from atomlaser.unraveling import simulate_ensemble, write_trajectory_csv

p = LaserParams(1.0, 4.0, 0.0)
gamma = 0.5
beta = feasible_beta_interval(gamma, p)[1]
res = solve_min_norm(PRQuery(beta, gamma, p))
print(f"beta={beta:.6f} feasible={res.feasible} ||u||={res.u_star_norm:.12f}")

init = MomentState.from_triple(CovarianceTriple.from_beta_gamma(beta, gamma))
run = simulate_ensemble(res.u_star, p, init, 1e-3, 12000, 500, seed=1, save_every=100)
x = run.final_first_moments[:, 0]
print(f"Var(<x>) = {x.var(ddof=1):.4f}  (stationary value {1 - gamma})")
print("second moments at end:", np.round(run.second_moments[-1], 12))

with open("trajectory.csv", "w") as fh:
    write_trajectory_csv(run.trajectory(0), fh)
