"""Number-state unraveling: jump trajectories relax to a Poisson occupation law."""
import numpy as np

from atomlaser.jumps import (diagonal_master_evolve, gillespie, histogram_stats,
                             occupation_histogram, poisson_pmf, total_variation)

mu = 20.0
tr = gillespie(0, mu, 1e4, seed=3)
h = occupation_histogram(tr, t_start=20.0)
mean, fano = histogram_stats(h)
print(f"{len(tr.event_times)} jumps, mean {mean:.3f}, Fano {fano:.4f}, "
      f"TV to Poisson {total_variation(h, poisson_pmf(mu, len(h) - 1)):.4f}")

# the ensemble average obeys the diagonal master equation
p0 = np.zeros(80)
p0[0] = 1
grid = np.linspace(0, 5, 6)
for t, p in zip(grid, diagonal_master_evolve(p0, mu, grid)):
    n = np.arange(len(p))
    print(f"t={t:.0f}  <n>={n @ p:8.4f}  expected {mu * (1 - np.exp(-t)):8.4f}")
