"""Composing pure-DP mechanisms with two different privacy levels.

Two eps=0.3 releases and two eps=0.15 releases, compared with the brute-force
Neyman-Pearson curve of the product of randomized-response tests.

Run: python demos/heterogeneous.py
"""

import math

from dpcomposer import HetSpec, het_constraints, het_region
from dpcomposer.oracle import np_tradeoff, product_test, rr_test
from dpcomposer.pwl import sup_distance

spec = HetSpec(eps1=0.3, eps2=0.15, x=2, y=2)
print(f"{'eps':>10}  delta")
for c in het_constraints(spec):
  print(f"  {c.eps:8.4f}  {c.delta:.10f}")

region = het_region(spec)
tests = [rr_test(0.3)] * 2 + [rr_test(0.15)] * 2
oracle = np_tradeoff(product_test(tests))
print(f"\n{len(region.boundary)} boundary pieces; distance to the 16-outcome "
      f"oracle {sup_distance(region.boundary, oracle):.1e}")

# pure composition never needs a delta at the top level
top = het_constraints(spec)[0]
print(f"top level {top.eps:.2f} = 2*0.3 + 2*0.15, delta {top.delta:.1e}")
assert math.isclose(top.eps, 0.9)
