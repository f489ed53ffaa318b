"""Brute-force verification instruments.

Explicit discrete hypothesis tests (randomized response and the extremal
double-DP mechanism), their products, and the exact Neyman-Pearson trade-off
curve obtained by sorting outcomes by likelihood ratio. Nothing here calls
into the closed-form composition code.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np

from dpcomposer.pwl import TradeoffFunction

MAX_OUTCOMES = 2**20
# relative tolerance under which two likelihood ratios count as tied; k-fold
# products move log ratios by about k ulp, and anything looser would merge
# genuinely distinct classes
RATIO_RTOL = 1e-13


@dataclasses.dataclass(frozen=True, eq=False)
class DiscreteTest:
  """Null and alternative pmfs over a shared finite outcome set."""

  p0: np.ndarray
  p1: np.ndarray

  def __post_init__(self):
    p0 = np.array(self.p0, dtype=float)
    p1 = np.array(self.p1, dtype=float)
    if p0.shape != p1.shape or p0.ndim != 1:
      raise ValueError("p0 and p1 must be 1-d arrays of equal length")
    if np.any(p0 < 0) or np.any(p1 < 0):
      raise ValueError("probabilities must be non-negative")
    for name, p in (("p0", p0), ("p1", p1)):
      if abs(math.fsum(p) - 1.0) > 1e-12:
        raise ValueError(f"{name} sums to {math.fsum(p)!r}")
    p0.setflags(write=False)
    p1.setflags(write=False)
    object.__setattr__(self, "p0", p0)
    object.__setattr__(self, "p1", p1)

  def __len__(self):
    return len(self.p0)


def rr_test(eps: float) -> DiscreteTest:
  """Binary randomized response at level eps."""
  if eps < 0:
    raise ValueError("eps must be non-negative")
  hi = 1.0 / (1.0 + math.exp(-eps))
  lo = 1.0 / (1.0 + math.exp(eps))
  return DiscreteTest([hi, lo], [lo, hi])


def single_dp_test(eps: float, delta: float) -> DiscreteTest:
  """Extremal (eps, delta)-DP test on outcomes (-1, 0, 1, 2).

  With probability delta the hypothesis is revealed, otherwise randomized
  response is observed.
  """
  rr = rr_test(eps)
  keep = 1.0 - delta
  return DiscreteTest([delta, keep * rr.p0[0], keep * rr.p0[1], 0.0],
                      [0.0, keep * rr.p1[0], keep * rr.p1[1], delta])


def double_dp_test(eps1: float, eps2: float, delta1: float,
                   alpha: float) -> DiscreteTest:
  """Extremal test for simultaneous (eps1, delta1)/(eps2, delta2) guarantees.

  Outcomes are ordered (-1, 0, 1, 2, 3, 4); the revealing outcomes -1 and 4
  are omitted when delta1 == 0. ``alpha`` is the probability of the eps2
  randomized response given that nothing is revealed (delta2 enters only
  through it).
  """
  if not 0 <= alpha <= 1:
    raise ValueError("alpha must lie in [0, 1]")
  keep = 1.0 - delta1
  e1 = 1.0 / (1.0 + math.exp(-eps1))
  n1 = 1.0 / (1.0 + math.exp(eps1))
  e2 = 1.0 / (1.0 + math.exp(-eps2))
  n2 = 1.0 / (1.0 + math.exp(eps2))
  w1, w2 = keep * (1.0 - alpha), keep * alpha
  p0 = [w1 * e1, w2 * e2, w2 * n2, w1 * n1]
  p1 = [w1 * n1, w2 * n2, w2 * e2, w1 * e1]
  if delta1 > 0:
    p0 = [delta1] + p0 + [0.0]
    p1 = [0.0] + p1 + [delta1]
  return DiscreteTest(p0, p1)


def product_test(tests: Sequence[DiscreteTest]) -> DiscreteTest:
  """Joint test of independent observations of every test in ``tests``."""
  if not tests:
    raise ValueError("need at least one test")
  size = math.prod(len(t) for t in tests)
  if size > MAX_OUTCOMES:
    raise ValueError(
        f"product has {size} outcomes, above the {MAX_OUTCOMES} guard")
  p0, p1 = np.ones(1), np.ones(1)
  for t in tests:
    p0 = np.multiply.outer(p0, t.p0).ravel()
    p1 = np.multiply.outer(p1, t.p1).ravel()
  # renormalise away the rounding drift of long products
  return DiscreteTest(p0 / math.fsum(p0), p1 / math.fsum(p1))


def power_test(test: DiscreteTest, k: int) -> DiscreteTest:
  return product_test([test] * k)


def _grouped_masses(test: DiscreteTest):
  """(p0, p1) masses per likelihood-ratio class, sorted by ratio descending."""
  p0, p1 = test.p0, test.p1
  support = (p0 > 0) | (p1 > 0)
  p0, p1 = p0[support], p1[support]
  with np.errstate(divide="ignore"):
    log_ratio = np.log(p0) - np.log(p1)
  order = np.argsort(-log_ratio, kind="stable")
  p0, p1, log_ratio = p0[order], p1[order], log_ratio[order]
  g0, g1, last = [], [], None
  for a, b, r in zip(p0, p1, log_ratio):
    if last is not None and (r == last or (
        math.isfinite(r) and math.isfinite(last)
        and abs(r - last) <= RATIO_RTOL)):
      g0[-1].append(a)
      g1[-1].append(b)
    else:
      g0.append([a])
      g1.append([b])
      last = r
  return [math.fsum(g) for g in g0], [math.fsum(g) for g in g1]


def np_curve(test: DiscreteTest) -> list[tuple[float, float]]:
  """Vertices (beta_I, beta_II) of the Neyman-Pearson lower boundary.

  Acceptance regions grow by likelihood-ratio class, moving from (1, 0)
  towards (0, 1); returned in increasing beta_I order.
  """
  m0, m1 = _grouped_masses(test)
  beta_i = 1.0 - np.concatenate(([0.0], np.cumsum(m0)))
  beta_ii = np.concatenate(([0.0], np.cumsum(m1)))
  return [(float(x), float(y)) for x, y in zip(beta_i[::-1], beta_ii[::-1])]


def np_tradeoff(test: DiscreteTest) -> TradeoffFunction:
  """Exact trade-off function of ``test`` via the Neyman-Pearson lemma."""
  m0, m1 = map(np.asarray, _grouped_masses(test))
  start_i = 1.0 - np.concatenate(([0.0], np.cumsum(m0)[:-1]))
  start_ii = np.concatenate(([0.0], np.cumsum(m1)[:-1]))
  # classes with p0 = 0 only add a vertical drop at beta_I = 0
  keep = m0 > 0
  slopes = -m1[keep] / m0[keep]
  intercepts = start_ii[keep] - slopes * start_i[keep]
  return TradeoffFunction(slopes, intercepts)


def total_variation(test: DiscreteTest) -> float:
  return math.fsum(np.maximum(0.0, test.p0 - test.p1))


def mixture_bruteforce(weights: Sequence[float], fs, grid_n: int = 1000):
  """Grid minimisation of alpha_1 f_1(t_1) + alpha_2 f_2(t_2).

  For every t on a uniform grid of [0, 1] (grid_n + 1 points) the constraint
  alpha_1 t_1 + alpha_2 t_2 = t is enforced with t_1 on the same grid and
  t_2 solved for; infeasible t_2 are skipped. Returns (t, values).
  """
  if len(weights) != 2 or len(fs) != 2:
    raise ValueError("grid search is implemented for two components")
  if grid_n < 100:
    raise ValueError("grid_n must be at least 100")
  a1, a2 = weights
  f1, f2 = fs
  ts = np.linspace(0.0, 1.0, grid_n + 1)
  t1 = ts
  v1 = a1 * f1.raw(t1)
  t2 = (ts[:, None] - a1 * t1[None, :]) / a2
  feasible = (t2 >= -1e-15) & (t2 <= 1 + 1e-15)
  v2 = a2 * f2.raw(np.clip(t2, 0.0, 1.0))
  total = np.where(feasible, v1[None, :] + v2, np.inf)
  return ts, total.min(axis=1)


def deterministic_error_pairs(test: DiscreteTest) -> np.ndarray:
  """All (beta_I, beta_II) pairs of deterministic rules (<= 12 outcomes)."""
  m = len(test)
  if m > 12:
    raise ValueError("subset enumeration is capped at 12 outcomes")
  masks = (np.arange(2**m)[:, None] >> np.arange(m)) & 1
  # mask marks the acceptance region (decide H0)
  beta_i = 1.0 - masks @ test.p0
  beta_ii = masks @ test.p1
  return np.column_stack([beta_i, beta_ii])
