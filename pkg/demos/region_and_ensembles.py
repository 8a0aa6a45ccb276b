"""Realizable region boundaries and the distinguished ensembles as chi grows.

Writes region_chi<chi>.csv (gamma, beta_lo, beta_hi) for a few chi values and
prints the closest-to-coherent, diffusion and output-only states.
"""
import sys

import numpy as np

from atomlaser import LaserParams
from atomlaser.region import (cc_ensemble, output_only_steady_state, qsd_ensemble,
                              region_rows, write_region_csv)

out = sys.argv[1] if len(sys.argv) > 1 else "."
gammas = np.geomspace(1e-3, 1, 200)

for chi in (0, 1, 4, 16):
    p = LaserParams(1.0, chi, 0.0)
    with open(f"{out}/region_chi{chi}.csv", "w") as fh:
        write_region_csv(region_rows(gammas, p), fh)

print(f"{'chi':>8} {'kind':>12} {'alpha':>12} {'beta':>12} {'gamma':>12}")
for chi in (1, 10, 100, 1e3, 1e4):
    p = LaserParams(1.0, chi, 0.0)
    for kind, t in (("CC", cc_ensemble(p).as_tuple()), ("QSD", qsd_ensemble(p).as_tuple())):
        print(f"{chi:8g} {kind:>12} {t[0]:12.5g} {t[1]:12.5g} {t[2]:12.5g}")
    m20, m11, m02 = output_only_steady_state(p)
    print(f"{chi:8g} {'output-only':>12} {m02:12.5g} {m11:12.5g} {m20:12.5g}")
