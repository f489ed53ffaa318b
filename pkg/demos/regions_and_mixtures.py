"""Privacy regions of (eps, delta) constraints and of mixtures of tests.

Run: python demos/regions_and_mixtures.py
"""

import math

import numpy as np

from dpcomposer import (DpConstraint, MixtureSpec, make_feps_delta,
                        mixture_tradeoff, region_from_constraints,
                        region_vertices)
from dpcomposer.oracle import mixture_bruteforce


def show(title, region):
  print(title)
  for x, y in region_vertices(region):
    print(f"  ({x:.6f}, {y:.6f})")


# A mechanism that is both (0.3, 0)-DP and (0.15, 0.02)-DP. Neither guarantee
# implies the other, so the region is strictly smaller than either alone.
both = region_from_constraints([DpConstraint(0.3, 0.0), DpConstraint(0.15, 0.02)])
show("(0.3, 0) and (0.15, 0.02) together:", both)

# The two constraints cross where e^0.3 t = 0.02 + e^0.15 t.
t_cross = 0.02 / (math.exp(0.3) - math.exp(0.15))
print(f"  first kink at t = {t_cross:.6f}\n")

# Flipping a fair coin between two tests, and telling the adversary which one
# was used, gives the weighted infimal convolution of their trade-off curves.
f1 = make_feps_delta(DpConstraint(1.3, 0.0))
f2 = make_feps_delta(DpConstraint(0.5, 0.2))
fm = mixture_tradeoff(MixtureSpec((0.5, 0.5), (f1, f2)))
show("50/50 mixture of (1.3, 0) and (0.5, 0.2):", fm)

ts, brute = mixture_bruteforce((0.5, 0.5), [f1, f2], grid_n=1000)
print(f"  max deviation from a 1000-point grid search: "
      f"{np.max(np.abs(fm(ts) - brute)):.2e}")
