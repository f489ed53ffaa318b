import math

import numpy as np
from hypothesis import strategies as st

from dpcomposer.pwl import DpConstraint, PwlFunction

LN2 = math.log(2)
PAIR = dict(eps1=0.3, eps2=0.15, delta1=0.0, delta2=0.02)


def random_convex(rng, max_pieces=8, lo=0.0, hi=1.0):
  """Convex piecewise-affine function on [lo, hi] with slopes in [-10, 0]."""
  n = int(rng.integers(1, max_pieces + 1))
  slopes = np.sort(rng.uniform(-10.0, 0.0, n))
  kinks = np.sort(rng.uniform(lo, hi, n - 1))
  b = [rng.uniform(0.0, 1.0)]
  for j in range(n - 1):
    b.append(b[-1] + (slopes[j] - slopes[j + 1]) * kinks[j])
  return PwlFunction(slopes, b, lo, hi)


@st.composite
def constraints(draw, max_eps=3.0):
  eps = draw(st.floats(0.0, max_eps, allow_nan=False))
  delta = draw(st.floats(0.0, 1.0, allow_nan=False))
  return DpConstraint(eps, delta)


seeds = st.integers(0, 2**32 - 1)


@st.composite
def double_specs(draw, max_k=1):
  """Valid (eps1, eps2, delta1, delta2, k) with both constraints active."""
  eps1 = draw(st.floats(0.05, 1.5))
  eps2 = eps1 * draw(st.floats(0.0, 0.9))
  delta1 = draw(st.sampled_from([0.0, 0.0, 0.01, 0.05]))
  ratio = (1 + math.exp(eps2)) / (1 + math.exp(eps1))
  top = 1 - (1 - delta1) * ratio
  delta2 = delta1 + draw(st.floats(0.05, 0.95)) * (top - delta1)
  k = draw(st.integers(1, max_k))
  return eps1, eps2, delta1, delta2, k
