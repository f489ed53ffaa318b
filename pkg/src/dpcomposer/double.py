"""k-fold composition under two simultaneous (eps, delta)-DP constraints.

Two independent constructions of the same exact region are provided:
``compose_double_mixture`` mixes heterogeneous pure-DP compositions and
``compose_double_closed_form`` enumerates the likelihood-ratio levels of the
k-fold extremal mechanism directly. ``baseline_intersection`` and
``baseline_total_variation`` are the looser bounds obtained from single-
constraint composition.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import warnings

import numpy as np
from scipy.special import gammaln

from dpcomposer.conjugate import region_mixture
from dpcomposer.heterogeneous import HetSpec, het_region
from dpcomposer.pwl import (DpConstraint, PrivacyRegion, intersect_regions,
                            region_from_constraints)

logger = logging.getLogger(__name__)

# closed-form enumeration is O(k^5); beyond this use the mixture route
K_SOFT_LIMIT = 40
_CEIL_NUDGE = 1e-9
_DUP_TOL = 1e-12


class AssumptionError(ValueError):
  """Both constraints are not simultaneously active."""


@dataclasses.dataclass(frozen=True)
class DoubleDpSpec:
  """Mechanisms that are (eps1, delta1)- and (eps2, delta2)-DP, composed k times."""

  eps1: float
  eps2: float
  delta1: float
  delta2: float
  k: int = 1

  def __post_init__(self):
    if self.k < 1:
      raise ValueError(f"k must be a positive integer, got {self.k}")
    if not self.eps1 > 0 or not self.eps2 >= 0:
      raise AssumptionError(
          f"need eps1 > 0 and eps2 >= 0, got ({self.eps1}, {self.eps2})")
    if not (0 <= self.delta1 < 1 and 0 <= self.delta2 < 1):
      raise AssumptionError(
          f"deltas must lie in [0, 1), got ({self.delta1}, {self.delta2})")
    if not self.delta1 < self.delta2:
      raise AssumptionError(
          f"need delta1 < delta2, got delta1={self.delta1}, "
          f"delta2={self.delta2}")
    lhs = (1 - self.delta1) * (1 + math.exp(self.eps2))
    rhs = (1 - self.delta2) * (1 + math.exp(self.eps1))
    if not lhs < rhs:
      raise AssumptionError(
          "need (1 - delta1)(1 + e^eps2) < (1 - delta2)(1 + e^eps1), "
          f"got {lhs!r} >= {rhs!r} (violated by {lhs - rhs:.3g})")
    if self.eps1 == self.eps2:
      raise AssumptionError("eps1 and eps2 must differ")

  @property
  def constraints(self) -> tuple[DpConstraint, DpConstraint]:
    return (DpConstraint(self.eps1, self.delta1),
            DpConstraint(self.eps2, self.delta2))

  def with_k(self, k: int) -> "DoubleDpSpec":
    return dataclasses.replace(self, k=k)


def mixing_weight_alpha(spec: DoubleDpSpec) -> float:
  """Probability of the eps2 randomized response in the extremal mechanism."""
  e1, e2 = math.exp(spec.eps1), math.exp(spec.eps2)
  d1, d2 = spec.delta1, spec.delta2
  num = (1 - d1) * e2 - (1 - d2) * e1 + (d2 - d1)
  return num / ((e2 - e1) * (1 - d1))


def delta_tilde(spec: DoubleDpSpec) -> float:
  """Probability that at least one of the k releases is fully revealing."""
  return -math.expm1(spec.k * math.log1p(-spec.delta1)) + 0.0


def _with_revealing_mass(inner: PrivacyRegion, dt: float,
                         **metadata) -> PrivacyRegion:
  """dt R(0, 1) + (1 - dt) inner."""
  if dt <= 0:
    inner.metadata.update(metadata)
    return inner
  full = region_from_constraints([DpConstraint(0.0, 1.0)])
  region = region_mixture([dt, 1.0 - dt], [full, inner])
  region.metadata.update(metadata)
  return region


def compose_double_mixture(spec: DoubleDpSpec) -> PrivacyRegion:
  """Exact region as a binomial mixture of heterogeneous compositions."""
  alpha = mixing_weight_alpha(spec)
  dt = delta_tilde(spec)
  k = spec.k
  weights, regions = [], []
  if dt > 0:
    weights.append(dt)
    regions.append(region_from_constraints([DpConstraint(0.0, 1.0)]))
  for i in range(k + 1):
    log_w = (gammaln(k + 1) - gammaln(i + 1) - gammaln(k - i + 1)
             + i * math.log1p(-alpha) + (k - i) * math.log(alpha))
    w = (1.0 - dt) * math.exp(log_w)
    if w == 0.0:
      continue
    weights.append(w)
    regions.append(het_region(HetSpec(spec.eps1, spec.eps2, i, k - i)))
  # absorb the rounding drift of the binomial weights into the largest one
  total = math.fsum(weights)
  j = int(np.argmax(weights))
  weights[j] += 1.0 - total
  region = region_mixture(weights, regions)
  region.metadata.update(route="thm2", alpha=alpha, delta_tilde=dt,
                         n_components=len(weights))
  return region


class _Multinomial:
  """All (a, b, c, d) with a + b + c + d = k and their log multinomials."""

  def __init__(self, k):
    a, b, c = np.meshgrid(np.arange(k + 1), np.arange(k + 1),
                          np.arange(k + 1), indexing="ij")
    a, b, c = a.ravel(), b.ravel(), c.ravel()
    ok = a + b + c <= k
    self.a, self.b, self.c = a[ok], b[ok], c[ok]
    self.d = k - self.a - self.b - self.c
    self.log_coef = (gammaln(k + 1) - gammaln(self.a + 1) - gammaln(self.b + 1)
                     - gammaln(self.c + 1) - gammaln(self.d + 1))


def closed_form_levels(spec: DoubleDpSpec, strict: bool = True):
  """(eps_uv, delta_uv) for every admissible (u, v), before deduplication.

  delta_uv is the hockey-stick divergence of the k-fold extremal mechanism
  (without the revealing outcomes) at level eps_uv. ``strict`` selects the
  strict inequality defining the summation set; terms on its boundary are
  zero, so both settings agree up to rounding.
  """
  k, e1, e2 = spec.k, spec.eps1, spec.eps2
  if k > K_SOFT_LIMIT:
    warnings.warn(f"k={k} exceeds {K_SOFT_LIMIT}; the mixture route is "
                  "much faster for large k", stacklevel=2)
  alpha = mixing_weight_alpha(spec)
  t = _Multinomial(k)
  log_p1 = math.log1p(-alpha) - np.logaddexp(0.0, e1)
  log_p2 = math.log(alpha) - np.logaddexp(0.0, e2)
  log_base = (t.log_coef + (t.a + t.d) * log_p1 + (t.b + t.c) * log_p2
              + t.a * e1 + t.b * e2)

  levels = []
  for v in range(k + 1):
    u_min = math.ceil((k * e1 - v * (e1 - e2)) / (e1 + e2) - _CEIL_NUDGE)
    for u in range(max(0, u_min), k + 1):
      eps_uv = e1 * (u + v - k) + e2 * (u - v)
      if eps_uv < -_DUP_TOL * k * e1:
        continue  # admitted by the ceil nudge but genuinely negative
      margin = (t.a + k - t.d - u - v) * e1 + (t.b + v - t.c - u) * e2
      mask = margin > 0 if strict else margin >= 0
      if not np.any(mask):
        levels.append((u, v, max(eps_uv, 0.0), 0.0))
        continue
      # e^{a e1 + b e2} - e^{(d+u+v-k) e1 + (c+u-v) e2} = e^{a e1 + b e2}(1 - e^{-margin})
      vals = np.exp(log_base[mask]) * -np.expm1(-margin[mask])
      levels.append((u, v, max(eps_uv, 0.0), math.fsum(vals)))
  return levels


def _dedupe_levels(levels):
  by_eps = {}
  for _, _, eps, delta in sorted(levels, key=lambda r: -r[2]):
    key = None
    for known in by_eps:
      if abs(known - eps) <= _DUP_TOL * max(1.0, eps):
        key = known
        break
    if key is None:
      by_eps[eps] = delta
    else:
      assert abs(by_eps[key] - delta) <= _DUP_TOL, (
          f"levels {key} and {eps} disagree: {by_eps[key]} vs {delta}")
      by_eps[key] = max(by_eps[key], delta)
  return [DpConstraint(e, min(1.0, d)) for e, d in by_eps.items()]


def compose_double_closed_form(spec: DoubleDpSpec) -> PrivacyRegion:
  """Exact region from the closed-form (eps_uv, delta_uv) family."""
  levels = closed_form_levels(spec)
  cs = _dedupe_levels(levels)
  inner = region_from_constraints(cs)
  dt = delta_tilde(spec)
  return _with_revealing_mass(
      inner, dt, route="thm3", alpha=mixing_weight_alpha(spec),
      delta_tilde=dt, n_levels=len(levels), n_constraints=len(cs),
      n_pruned=max(0, len(cs) - _count_active(inner)))


def _count_active(region: PrivacyRegion) -> int:
  """Number of constraints contributing a piece to the boundary."""
  slopes = set(np.round(region.boundary.slopes, 12))
  n = 0
  for c in region.constraints:
    e = math.exp(c.eps)
    if round(-e, 12) in slopes or round(-1 / e, 12) in slopes:
      n += 1
  return n


def compose_single(eps: float, delta: float, k: int) -> PrivacyRegion:
  """k-fold composition of a single (eps, delta)-DP guarantee."""
  if k < 1:
    raise ValueError("k must be a positive integer")
  if not 0 <= delta < 1:
    raise ValueError("delta must lie in [0, 1)")
  inner = het_region(HetSpec(eps, eps, k, 0))
  dt = -math.expm1(k * math.log1p(-delta)) + 0.0
  return _with_revealing_mass(inner, dt, route="single", delta_tilde=dt)


def baseline_intersection(spec: DoubleDpSpec) -> PrivacyRegion:
  """Intersection of the two single-constraint k-fold regions."""
  r1 = compose_single(spec.eps1, spec.delta1, spec.k)
  r2 = compose_single(spec.eps2, spec.delta2, spec.k)
  return intersect_regions([r1, r2], route="remark1")


def total_variation_level(spec: DoubleDpSpec) -> float:
  """eta = delta2 + (1 - delta2) tanh(eps2 / 2), the implied TV bound."""
  return spec.delta2 + (1 - spec.delta2) * math.tanh(spec.eps2 / 2)


def baseline_total_variation(spec: DoubleDpSpec) -> PrivacyRegion:
  """Exact composition of ((eps1, delta1), (0, eta)) intersected with (eps2, delta2).

  Falls back to ``baseline_intersection`` (flagged in the metadata) when the
  auxiliary pair does not have both constraints active.
  """
  eta = total_variation_level(spec)
  try:
    aux = DoubleDpSpec(spec.eps1, 0.0, spec.delta1, eta, spec.k)
  except AssumptionError as err:
    logger.warning("total-variation baseline unavailable (%s); "
                   "falling back to the intersection baseline", err)
    region = baseline_intersection(spec)
    region.metadata.update(route="remark2", fallback=True, eta=eta)
    return region
  exact_aux = compose_double_closed_form(aux)
  single2 = compose_single(spec.eps2, spec.delta2, spec.k)
  return intersect_regions([exact_aux, single2], route="remark2",
                           fallback=False, eta=eta)


# short aliases
compose_double_thm2 = compose_double_mixture
compose_double_thm3 = compose_double_closed_form
baseline_remark1 = baseline_intersection
baseline_remark2 = baseline_total_variation


def compose_constraints(constraints, k: int) -> PrivacyRegion:
  """k-fold composition of a mechanism satisfying one or two constraints."""
  cs = sorted(constraints, key=lambda c: -c.eps)
  if len(cs) == 1:
    return compose_single(cs[0].eps, cs[0].delta, k)
  if len(cs) != 2:
    raise ValueError("only one or two simultaneous constraints are supported")
  (e1, d1), (e2, d2) = [(c.eps, c.delta) for c in cs]
  return compose_double_closed_form(DoubleDpSpec(e1, e2, d1, d2, k))
