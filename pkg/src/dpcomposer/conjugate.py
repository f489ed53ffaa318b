"""Legendre-Fenchel conjugates of piecewise-affine functions and test mixtures.

The trade-off function of an observed-class mixture of tests with weights
alpha_i is the weighted infimal convolution

    f_m(t) = min { sum_i alpha_i f_i(t_i) : sum_i alpha_i t_i = t },

which is computed exactly as the conjugate of sum_i alpha_i f_i^*.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np

from dpcomposer.pwl import PrivacyRegion, PwlFunction, TradeoffFunction

WEIGHT_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class MixtureSpec:
  weights: tuple[float, ...]
  functions: tuple[PwlFunction, ...]

  def __post_init__(self):
    object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
    object.__setattr__(self, "functions", tuple(self.functions))
    if not self.weights:
      raise ValueError("a mixture needs at least one component")
    if len(self.weights) != len(self.functions):
      raise ValueError(
          f"{len(self.weights)} weights for {len(self.functions)} functions")
    if any(not w > 0 for w in self.weights):
      raise ValueError(
          f"mixture weights must be strictly positive, got {self.weights}")
    total = math.fsum(self.weights)
    if abs(total - 1.0) > WEIGHT_TOL:
      raise ValueError(f"mixture weights sum to {total!r}, not 1")


def conjugate_bounded(f: PwlFunction) -> PwlFunction:
  """Conjugate of f on a finite domain; the result is defined on all reals.

  f^*(s) = max_j (t_j s - f(t_j)) over the domain endpoints and kinks t_j.
  """
  if not (math.isfinite(f.lo) and math.isfinite(f.hi)):
    raise ValueError("conjugate_bounded expects a finite domain")
  ts = f.knots()
  return PwlFunction(ts, -f.raw(ts))


def conjugate_unbounded(f: PwlFunction) -> PwlFunction:
  """Conjugate of f defined on all reals; the result lives on [a_1, a_m].

  With a single piece (a, b) the conjugate is the point domain {a} with
  value -b.
  """
  if math.isfinite(f.lo) or math.isfinite(f.hi):
    raise ValueError("conjugate_unbounded expects the whole real line as domain")
  a_min, a_max = float(f.slopes[0]), float(f.slopes[-1])
  if len(f) == 1:
    return PwlFunction([0.0], [-float(f.intercepts[0])], a_min, a_min)
  ts = f.breakpoints()
  return PwlFunction(ts, -f.raw(ts), a_min, a_max)


def _active_piece(f: PwlFunction, s: np.ndarray) -> np.ndarray:
  """Index of the piece of f attaining the max at each point of s."""
  return np.searchsorted(f.breakpoints(), s, side="right")


def _conjugate_kinks(spec: MixtureSpec) -> np.ndarray:
  # the kinks of f^* are exactly the slopes of f; recomputing them as line
  # intersections would turn short pieces into noisy difference quotients
  return np.unique(np.concatenate([f.slopes for f in spec.functions]))


def weighted_conjugate_sum(spec: MixtureSpec) -> PwlFunction:
  """sum_i alpha_i f_i^* as a canonical piecewise-affine function on R."""
  conjugates = [conjugate_bounded(f) for f in spec.functions]
  kinks = _conjugate_kinks(spec)
  if kinks.size:
    # one probe point per cell between consecutive kinks, plus both tails
    inner = 0.5 * (kinks[1:] + kinks[:-1])
    span = max(1.0, kinks[-1] - kinks[0])
    probes = np.concatenate(([kinks[0] - span], inner, [kinks[-1] + span]))
  else:
    probes = np.zeros(1)
  slopes = np.zeros(probes.size)
  intercepts = np.zeros(probes.size)
  for w, g in zip(spec.weights, conjugates):
    idx = _active_piece(g, probes)
    slopes += w * g.slopes[idx]
    intercepts += w * g.intercepts[idx]
  return PwlFunction(slopes, intercepts)


def mixture_tradeoff(spec: MixtureSpec) -> TradeoffFunction:
  """Trade-off function of the observed-class mixture of the given tests."""
  if len(spec.functions) == 1:
    return TradeoffFunction(spec.functions[0].slopes,
                            spec.functions[0].intercepts)
  h = weighted_conjugate_sum(spec)
  # slopes of f_m are the kinks of h, i.e. the component slopes themselves
  ks = _conjugate_kinks(spec)
  fm = PwlFunction(ks, -h.raw(ks), float(h.slopes[0]), float(h.slopes[-1]))
  # the domain is [sum alpha_i * 0, sum alpha_i * 1] up to rounding
  return TradeoffFunction(fm.slopes, fm.intercepts)


def region_mixture(weights: Sequence[float],
                   regions: Sequence[PrivacyRegion], **metadata) -> PrivacyRegion:
  """Minkowski combination sum_i alpha_i R_i of privacy regions."""
  spec = MixtureSpec(tuple(weights), tuple(r.boundary for r in regions))
  return PrivacyRegion(mixture_tradeoff(spec), (), dict(metadata))
