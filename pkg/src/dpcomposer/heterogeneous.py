"""Exact region of composing x eps1-DP with y eps2-DP pure mechanisms."""

from __future__ import annotations

import dataclasses
import math
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from dpcomposer.pwl import DpConstraint, PrivacyRegion, region_from_constraints

MAX_MECHANISMS = 64
_CEIL_NUDGE = 1e-9
_EPS_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class HetSpec:
  eps1: float
  eps2: float
  x: int
  y: int

  def __post_init__(self):
    if not self.eps1 >= self.eps2 >= 0:
      raise ValueError(
          f"need eps1 >= eps2 >= 0, got eps1={self.eps1}, eps2={self.eps2}")
    if self.x < 0 or self.y < 0 or self.x + self.y < 1:
      raise ValueError(f"need x, y >= 0 and x + y >= 1, got x={self.x}, y={self.y}")
    if self.x + self.y > MAX_MECHANISMS:
      raise ValueError(
          f"x + y = {self.x + self.y} exceeds the supported {MAX_MECHANISMS}")


class SlopeIndex(NamedTuple):
  a_star: int
  b_star: int
  eps_value: float


def het_slopes(spec: HetSpec, dedupe: bool = True) -> list[SlopeIndex]:
  """Non-negative log-likelihood-ratio levels eps1 (x - 2a*) + eps2 (y - 2b*).

  Returned in decreasing order of eps_value, ties broken by smaller a*. With
  ``dedupe`` only the lexicographically smallest (a*, b*) is kept per level.
  """
  out = []
  for a in range(spec.x + 1):
    for b in range(spec.y + 1):
      e = spec.eps1 * (spec.x - 2 * a) + spec.eps2 * (spec.y - 2 * b)
      if e >= -_EPS_TOL:
        out.append(SlopeIndex(a, b, max(e, 0.0)))
  out.sort(key=lambda s: (-s.eps_value, s.a_star, s.b_star))
  if not dedupe:
    return out
  kept = []
  for s in out:
    if kept and abs(kept[-1].eps_value - s.eps_value) <= _EPS_TOL:
      if (s.a_star, s.b_star) < (kept[-1].a_star, kept[-1].b_star):
        kept[-1] = s
      continue
    kept.append(s)
  return kept


def _log_binom(n, k):
  return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def het_delta(spec: HetSpec, idx: SlopeIndex) -> float:
  """delta paired with the level of ``idx`` (hockey-stick divergence)."""
  x, y, e1, e2 = spec.x, spec.y, spec.eps1, spec.eps2
  a_star, b_star = idx.a_star, idx.b_star
  ratio = e2 / e1 if e1 > 0 else 0.0
  log_prefix = -x * np.logaddexp(0.0, e1) - y * np.logaddexp(0.0, e2)

  terms = []
  for b in range(y + 1):
    cut = (y - b_star - b) * ratio + (x - a_star)
    a0 = max(0, math.ceil(cut - _CEIL_NUDGE))
    if a0 > x:
      continue
    a = np.arange(a0, x + 1)
    hi = a * e1 + b * e2
    lo = e1 * (2 * (x - a_star) - a) + e2 * (2 * (y - b_star) - b)
    log_w = log_prefix + _log_binom(x, a) + _log_binom(y, b) + hi
    # -expm1(lo - hi) = 1 - e^{lo - hi}, clipped at 0 for boundary terms
    terms.append(np.exp(log_w) * np.maximum(0.0, -np.expm1(lo - hi)))
  if not terms:
    return 0.0
  return math.fsum(np.concatenate(terms))


def het_constraints(spec: HetSpec, dedupe: bool = True) -> list[DpConstraint]:
  return [DpConstraint(s.eps_value, min(1.0, het_delta(spec, s)))
          for s in het_slopes(spec, dedupe)]


def het_region(spec: HetSpec, dedupe: bool = True) -> PrivacyRegion:
  """Intersection of the (eps, delta) regions over all non-negative levels."""
  cs = het_constraints(spec, dedupe)
  region = region_from_constraints(cs)
  region.metadata.update(route="het", n_constraints=len(cs))
  return region
