"""Two-constraint (eps, delta)-DP approximations of smooth symmetric trade-off curves.

``approx_below`` returns the pair of constraints whose region is the
smallest one containing the curve's region (best tangent pair), and
``approx_above`` the pair whose region is the largest one inside it (best
chord pair). Composing both with the double-DP routines sandwiches the
composition of the smooth curve itself.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np
from scipy.special import ndtr, ndtri

from dpcomposer.pwl import DpConstraint, region_from_constraints

SQRT2 = math.sqrt(2.0)
MAX_BISECT = 200
_EDGE = 1e-12
_SCAN_CELLS = 64


class AssumptionError(ValueError):
  """The curve is not strictly convex, decreasing and symmetric."""


def _bisect(fun, lo, hi):
  """Root of a monotone scalar function with fun(lo), fun(hi) of opposite sign."""
  f_lo = fun(lo)
  if f_lo == 0:
    return lo
  for _ in range(MAX_BISECT):
    mid = 0.5 * (lo + hi)
    if mid in (lo, hi):
      break
    f_mid = fun(mid)
    if f_mid == 0:
      return mid
    if (f_mid > 0) == (f_lo > 0):
      lo, f_lo = mid, f_mid
    else:
      hi = mid
  return 0.5 * (lo + hi)


@dataclasses.dataclass(frozen=True, eq=False)
class SmoothTradeoff:
  """A twice differentiable trade-off curve with its first two derivatives.

  The callables must accept numpy arrays. Construction checks strict
  convexity, monotonicity and symmetry on interior grid points.
  """

  f: Callable
  f_prime: Callable
  f_double_prime: Callable
  f_at_zero: float
  validate: dataclasses.InitVar[bool] = True

  def __post_init__(self, validate):
    if validate:
      problems = self.check()
      if problems:
        raise AssumptionError("; ".join(problems))

  def check(self, n: int = 101) -> list[str]:
    grid = np.linspace(0.0, 1.0, n)[1:-1]
    out = []
    d2 = np.asarray(self.f_double_prime(grid), dtype=float)
    if not np.all(d2 > 0):
      bad = grid[~(d2 > 0)][0]
      out.append(f"not strictly convex: f''({bad:.3g}) = "
                 f"{float(self.f_double_prime(bad)):.3g}")
    d1 = np.asarray(self.f_prime(grid), dtype=float)
    if not np.all(d1 <= 0):
      bad = grid[~(d1 <= 0)][0]
      out.append(f"not non-increasing: f'({bad:.3g}) > 0")
    ts = np.linspace(0.0, self.f_at_zero, n)[1:-1]
    err = np.abs(self.f(self.f(ts)) - ts)
    if not np.all(err <= 1e-9):
      out.append(f"not symmetric: max |f(f(t)) - t| = {float(np.max(err)):.3g}")
    return out

  def __call__(self, t):
    return self.f(t)

  def fixed_point(self) -> float:
    return _bisect(lambda t: float(self.f(t)) - t, 0.0, 1.0)


def gaussian_tradeoff(mu: float) -> SmoothTradeoff:
  """Trade-off curve of N(0, 1) versus N(mu, 1)."""
  if not mu > 0:
    raise ValueError(f"mu must be positive, got {mu}")

  def f(t):
    return ndtr(-ndtri(t) - mu)

  def f_prime(t):
    z = -ndtri(t)  # = Phi^{-1}(1 - t), without cancellation near t = 0
    return -np.exp(mu * z - 0.5 * mu * mu)

  def f_double_prime(t):
    z = -ndtri(t)
    log_pdf = -0.5 * z * z - 0.5 * math.log(2 * math.pi)
    return mu * np.exp(mu * z - 0.5 * mu * mu - log_pdf)

  return SmoothTradeoff(f, f_prime, f_double_prime, 1.0)


@dataclasses.dataclass(frozen=True, eq=False)
class RotatedCurve:
  """The graph of f turned by +pi/4, as an even convex function g on [z, 0]."""

  source: SmoothTradeoff
  z: float
  c: float

  def _check(self, u):
    u = np.asarray(u, dtype=float)
    if np.any(u < self.z) or np.any(u > 0):
      raise ValueError(f"u must lie in [{self.z}, 0]")
    return u

  def x_of(self, u):
    """The x in [0, c] with (x - f(x)) / sqrt(2) = u (vectorised bisection)."""
    u = self._check(u)
    f = self.source.f
    lo = np.zeros_like(u)
    hi = np.full_like(u, self.c)
    for _ in range(MAX_BISECT):
      mid = 0.5 * (lo + hi)
      if np.all((mid == lo) | (mid == hi)):
        break
      below = (mid - f(mid)) / SQRT2 < u
      lo = np.where(below, mid, lo)
      hi = np.where(below, hi, mid)
    x = 0.5 * (lo + hi)
    # pin the endpoints, where the defining equation is solved exactly
    x = np.where(u == self.z, 0.0, x)
    return np.where(u == 0, self.c, x)

  def g(self, u):
    x = self.x_of(u)
    return (x + self.source.f(x)) / SQRT2

  def g_prime(self, u):
    d1 = self.source.f_prime(self.x_of(u))
    with np.errstate(invalid="ignore"):
      out = (1 + d1) / (1 - d1)
    return np.where(np.isneginf(d1), -1.0, out)

  def g_double_prime(self, u):
    x = self.x_of(u)
    d1 = self.source.f_prime(x)
    d2 = self.source.f_double_prime(x)
    with np.errstate(invalid="ignore", over="ignore"):
      out = 2 * SQRT2 * d2 / (1 - d1) ** 3
    return np.where(np.isfinite(out), out, 0.0)

  def tangent_constraint(self, u: float) -> DpConstraint:
    """The (eps, delta) constraint whose steep piece is the tangent at u."""
    gp = float(self.g_prime(u))
    beta = float(self.g(u)) - gp * u
    eps = math.log((1 - gp) / (1 + gp))
    delta = 1 - SQRT2 * beta / (gp + 1)
    return DpConstraint(max(eps, 0.0), min(1.0, max(0.0, delta)))


def normal_rotation(f: SmoothTradeoff) -> RotatedCurve:
  return RotatedCurve(f, -f.f_at_zero / SQRT2, f.fixed_point())


@dataclasses.dataclass(frozen=True)
class Approximation:
  """One or two constraints approximating a smooth curve.

  ``t_star`` is the corner abscissa: rotated coordinates for the lower
  approximation, original coordinates for the upper one. ``touch_points``
  are the abscissas (original coordinates) where the approximation meets f.
  """

  constraints: tuple[DpConstraint, ...]
  t_star: float
  touch_points: tuple[float, ...]
  bracket: tuple[float, float] = (0.0, 0.0)
  multiple_roots: bool = False


def _tangent_gap(rot: RotatedCurve, t):
  """Difference at t of the tangents to g at (t + z)/2 and at t/2."""
  t1, t2 = 0.5 * (t + rot.z), 0.5 * t
  lhs = rot.g(t1) + rot.g_prime(t1) * (t - rot.z) / 2
  rhs = rot.g(t2) + rot.g_prime(t2) * t / 2
  return lhs - rhs


def approx_below(f: SmoothTradeoff) -> Approximation:
  """Best two-constraint curve lying below f (tangent to it at two points)."""
  rot = normal_rotation(f)
  lo, hi = rot.z + _EDGE, -_EDGE
  gap = lambda t: float(_tangent_gap(rot, np.float64(t)))
  g_lo, g_hi = gap(lo), gap(hi)
  if g_lo < 0 or g_hi > 0:
    raise AssumptionError(
        f"tangent-matching root not bracketed on [{lo:.6g}, {hi:.6g}]: "
        f"signs {np.sign(g_lo):+.0f}, {np.sign(g_hi):+.0f}")
  scan = _tangent_gap(rot, np.linspace(lo, hi, _SCAN_CELLS + 1))
  signs = np.sign(scan)
  multiple = int(np.count_nonzero(signs[1:] * signs[:-1] < 0)) > 1

  if g_lo == 0:
    t_star = rot.z
  else:
    t_star = _bisect(gap, lo, hi)
  t2 = 0.5 * t_star
  if t_star <= rot.z + _EDGE:
    pts = (t2,)
  else:
    pts = (0.5 * (t_star + rot.z), t2)
  cs = tuple(rot.tangent_constraint(t) for t in pts)
  touch = tuple(float(rot.x_of(t)) for t in pts)
  return Approximation(cs, t_star, touch, (lo, hi), multiple)


def approx_above(f: SmoothTradeoff) -> Approximation:
  """Best two-constraint curve lying above f (chords through (0, f(0)) and (c, c))."""
  c = f.fixed_point()
  f0 = f.f_at_zero
  target = (c - f0) / c
  slope_gap = lambda t: float(f.f_prime(t)) - target
  lo, hi = _EDGE, c - _EDGE
  if not (slope_gap(lo) < 0 < slope_gap(hi)):
    raise AssumptionError(
        f"chord-slope root not bracketed on ({lo:.3g}, {hi:.3g}): "
        f"signs {np.sign(slope_gap(lo)):+.0f}, {np.sign(slope_gap(hi)):+.0f}")
  t = _bisect(slope_gap, lo, hi)
  cs, touch = chord_constraints(f0, c, t, float(f(t)))
  return Approximation(cs, t, touch, (lo, hi))


def chord_constraints(f0, c, t, ft):
  """Constraints of the chords (0, f0)-(t, ft) and (t, ft)-(c, c).

  h = c (ft - chord(t)) compares the corner with the single chord from
  (0, f0) to (c, c); when the corner is not below it (h >= 0) that single
  chord is returned instead.
  """
  h = t * f0 + c * (ft - f0 - t)
  if h >= 0:
    return (DpConstraint(math.log((f0 - c) / c), 1 - f0),), (0.0, c)
  eps1 = math.log((f0 - ft) / t)
  eps2 = math.log((c - ft) / (t - c))
  delta2 = 1 - c * (1 + math.exp(eps2))
  cs = (DpConstraint(eps1, 1 - f0),
        DpConstraint(max(eps2, 0.0), min(1.0, max(0.0, delta2))))
  return cs, (0.0, t, c)


@dataclasses.dataclass(frozen=True)
class SandwichResult:
  lower: tuple[DpConstraint, ...]
  upper: tuple[DpConstraint, ...]
  t_star_lower: float
  t_star_upper: float
  below: Approximation
  above: Approximation

  def regions(self):
    return (region_from_constraints(self.lower),
            region_from_constraints(self.upper))


def sandwich(f: SmoothTradeoff) -> SandwichResult:
  below = approx_below(f)
  above = approx_above(f)
  return SandwichResult(below.constraints, above.constraints, below.t_star,
                        above.t_star, below, above)
