"""Bracketing Gaussian DP between two double (eps, delta) guarantees.

G_1 is approximated from below by two tangent constraints and from above by
two chords. Composing both k times with the exact double-DP routine brackets
G_sqrt(k), which is known in closed form.

Run: python demos/gaussian_sandwich.py
"""

import math

import numpy as np

from dpcomposer import compose_constraints, gaussian_tradeoff, sandwich

g1 = gaussian_tradeoff(1.0)
res = sandwich(g1)
print("lower (tangents):", [(round(c.eps, 5), round(c.delta, 5)) for c in res.lower])
print("upper (chords):  ", [(round(c.eps, 5), round(c.delta, 5)) for c in res.upper])

ts = np.linspace(0, 1, 1001)
low, up = (r.boundary for r in res.regions())
print(f"G_1 - lower >= {np.min(g1(ts) - low(ts)):.1e}, "
      f"upper - G_1 >= {np.min(up(ts) - g1(ts)):.1e}")

for k in (3, 10):
  gk = gaussian_tradeoff(math.sqrt(k))(ts)
  lo_k = compose_constraints(res.lower, k).boundary(ts)
  up_k = compose_constraints(res.upper, k).boundary(ts)
  print(f"k={k:2d}: width of the bracket around G_sqrt(k): "
        f"below {np.max(gk - lo_k):.4f}, above {np.max(up_k - gk):.4f}")
