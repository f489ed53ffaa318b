"""Convex piecewise-affine functions, trade-off functions and privacy regions.

A convex piecewise-affine function is stored as the line constraints whose
pointwise maximum it is, restricted to a closed interval. Trade-off functions
are the special case living on [0, 1]; a privacy region is determined by its
lower boundary, since the upper edge is always the segment 1 - t.
"""

from __future__ import annotations

import dataclasses
import heapq
import math
import os
from typing import Iterable, NamedTuple, Sequence

import numpy as np

# Canonicalization drops a piece when that changes the function by at most TOL.
TOL = float(os.environ.get("DP_COMPOSER_TOL", "1e-12"))


class LinePiece(NamedTuple):
  slope: float
  intercept: float


@dataclasses.dataclass(frozen=True)
class DpConstraint:
  """An (eps, delta)-DP guarantee; eps in nats."""

  eps: float
  delta: float

  def __post_init__(self):
    object.__setattr__(self, "eps", float(self.eps))
    object.__setattr__(self, "delta", float(self.delta))
    if not (math.isfinite(self.eps) and self.eps >= 0):
      raise ValueError(f"eps must be finite and non-negative, got {self.eps}")
    if not 0 <= self.delta <= 1:
      raise ValueError(f"delta must lie in [0, 1], got {self.delta}")


def _upper_envelope(slopes, intercepts):
  """Indices (into the slope-sorted arrays) of lines on the upper envelope."""
  hull = []
  for j in range(len(slopes)):
    a3, b3 = slopes[j], intercepts[j]
    while len(hull) >= 2:
      a1, b1 = slopes[hull[-2]], intercepts[hull[-2]]
      a2, b2 = slopes[hull[-1]], intercepts[hull[-1]]
      # middle line never strictly on top iff x13 <= x12
      if (b3 - b1) * (a2 - a1) >= (b2 - b1) * (a3 - a1):
        hull.pop()
      else:
        break
    hull.append(j)
  return hull


def canonicalize(slopes, intercepts, lo, hi, tol=None):
  """Reduces a family of lines to the canonical pieces of max(lines) on [lo, hi].

  Returns sorted (slopes, intercepts) arrays such that every piece is the
  maximum on a sub-interval of [lo, hi] and dropping it would change the
  function by more than ``tol`` (a single piece is kept for one-point
  domains).
  """
  tol = TOL if tol is None else tol
  a = np.asarray(slopes, dtype=float).ravel()
  b = np.asarray(intercepts, dtype=float).ravel()
  if a.size == 0:
    raise ValueError("a piecewise-affine function needs at least one line")
  if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
    raise ValueError("slopes and intercepts must be finite")
  if lo > hi:
    raise ValueError(f"empty domain [{lo}, {hi}]")

  if lo == hi:
    j = int(np.argmax(a * lo + b))
    return np.array([a[j]]), np.array([b[j]])

  order = np.lexsort((-b, a))
  a, b = a[order], b[order]
  # equal slopes: keep the larger intercept (the first after sorting)
  first = np.concatenate(([True], a[1:] != a[:-1]))
  a, b = a[first], b[first]

  hull = _upper_envelope(a, b)
  a, b = a[hull], b[hull]
  keep = _prune(a, b, lo, hi, tol)
  return a[keep].copy(), b[keep].copy()


def _prune(a, b, lo, hi, tol):
  """Indices of the envelope pieces that survive greedy pruning.

  The piece whose removal changes max(lines) on [lo, hi] the least is dropped
  first, as long as that change is at most tol; neighbours are re-evaluated
  after every removal so clusters of near-duplicate lines lose all but one.
  """
  n = a.size
  prev = list(range(-1, n - 1))
  nxt = list(range(1, n + 1))
  nxt[-1] = -1

  def cross(i, k):
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
      return float(-(b[k] - b[i]) / (a[k] - a[i]))

  def removal_error(j):
    p, q = prev[j], nxt[j]
    left = lo if p < 0 else max(lo, cross(p, j))
    right = hi if q < 0 else min(hi, cross(j, q))
    if not right > left:
      return -math.inf  # not on top anywhere inside the domain
    if p < 0 and q < 0:
      return math.inf
    pts = [left, right]
    if p >= 0 and q >= 0:
      xs = cross(p, q)
      if left < xs < right:
        pts.append(xs)
    if not all(math.isfinite(x) for x in pts):
      return math.inf
    pts = np.array(pts)
    others = np.max([a[i] * pts + b[i] for i in (p, q) if i >= 0], axis=0)
    return float(np.max(a[j] * pts + b[j] - others))

  err = [removal_error(j) for j in range(n)]
  heap = [(e, j) for j, e in enumerate(err)]
  heapq.heapify(heap)
  alive = n
  removed = np.zeros(n, dtype=bool)
  while heap and alive > 1:
    e, j = heapq.heappop(heap)
    if removed[j] or e != err[j]:
      continue  # stale entry
    if e > tol:
      break
    removed[j] = True
    alive -= 1
    p, q = prev[j], nxt[j]
    if p >= 0:
      nxt[p] = q
    if q >= 0:
      prev[q] = p
    for i in (p, q):
      if i >= 0:
        err[i] = removal_error(i)
        heapq.heappush(heap, (err[i], i))
  return np.flatnonzero(~removed)


class PwlFunction:
  """Convex piecewise-affine function max_j(slope_j * t + intercept_j) on [lo, hi].

  Instances are canonical: slopes strictly increase and every piece is active
  on a sub-interval of positive length. The function is +inf outside the
  domain; ``lo``/``hi`` may be infinite.
  """

  __slots__ = ("_slopes", "_intercepts", "_lo", "_hi")

  def __init__(self, slopes, intercepts, lo=-math.inf, hi=math.inf, *,
               tol=None, canonical=False):
    lo, hi = float(lo), float(hi)
    if canonical:
      a = np.array(slopes, dtype=float)
      b = np.array(intercepts, dtype=float)
    else:
      a, b = canonicalize(slopes, intercepts, lo, hi, tol)
    a.setflags(write=False)
    b.setflags(write=False)
    self._slopes = a
    self._intercepts = b
    self._lo = lo
    self._hi = hi

  @classmethod
  def from_pieces(cls, pieces: Iterable[Sequence[float]], lo=-math.inf,
                  hi=math.inf, tol=None):
    pieces = list(pieces)
    return cls([p[0] for p in pieces], [p[1] for p in pieces], lo, hi, tol=tol)

  @property
  def slopes(self) -> np.ndarray:
    return self._slopes

  @property
  def intercepts(self) -> np.ndarray:
    return self._intercepts

  @property
  def lo(self) -> float:
    return self._lo

  @property
  def hi(self) -> float:
    return self._hi

  @property
  def domain(self) -> tuple[float, float]:
    return self._lo, self._hi

  @property
  def pieces(self) -> tuple[LinePiece, ...]:
    return tuple(LinePiece(float(a), float(b))
                 for a, b in zip(self._slopes, self._intercepts))

  def __len__(self):
    return len(self._slopes)

  def __repr__(self):
    body = ", ".join(f"({a:.6g}, {b:.6g})" for a, b in self.pieces)
    return f"{type(self).__name__}([{body}], domain=[{self._lo}, {self._hi}])"

  def breakpoints(self) -> np.ndarray:
    """Interior kinks t_j where consecutive pieces meet."""
    a, b = self._slopes, self._intercepts
    if len(a) < 2:
      return np.empty(0)
    return -(b[1:] - b[:-1]) / (a[1:] - a[:-1])

  def knots(self) -> np.ndarray:
    """Finite domain endpoints together with the interior breakpoints."""
    pts = [self._lo] if math.isfinite(self._lo) else []
    pts.extend(np.clip(self.breakpoints(), self._lo, self._hi))
    if math.isfinite(self._hi) and self._hi != self._lo:
      pts.append(self._hi)
    return np.asarray(pts, dtype=float)

  def raw(self, t):
    """max over pieces at t, ignoring the domain (no error outside it)."""
    t = np.asarray(t, dtype=float)
    vals = np.multiply.outer(t, self._slopes) + self._intercepts
    return vals.max(axis=-1)

  def __call__(self, t):
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < self._lo) or np.any(t_arr > self._hi):
      raise ValueError(
          f"argument outside the domain [{self._lo}, {self._hi}]")
    out = self.raw(t_arr)
    return float(out) if out.ndim == 0 else out

  def with_domain(self, lo, hi):
    return PwlFunction(self._slopes, self._intercepts, lo, hi)

  def same_as(self, other: "PwlFunction", tol=1e-12) -> bool:
    """Piece-by-piece equality of two canonical functions."""
    if len(self) != len(other):
      return False
    return (np.allclose(self._slopes, other._slopes, rtol=0, atol=tol)
            and np.allclose(self._intercepts, other._intercepts, rtol=0,
                            atol=tol)
            and _close(self._lo, other._lo, tol)
            and _close(self._hi, other._hi, tol))


def _close(x, y, tol):
  if math.isinf(x) or math.isinf(y):
    return x == y
  return abs(x - y) <= tol


class TradeoffFunction(PwlFunction):
  """A convex, non-increasing PwlFunction on [0, 1] bounded by 1 - t."""

  __slots__ = ()

  def __init__(self, slopes, intercepts, *, tol=None, canonical=False):
    super().__init__(slopes, intercepts, 0.0, 1.0, tol=tol,
                     canonical=canonical)

  @classmethod
  def from_pwl(cls, f: PwlFunction) -> "TradeoffFunction":
    return cls(f.slopes, f.intercepts)

  def check(self, tol=1e-12) -> list[str]:
    """Lists violated trade-off invariants (empty when valid)."""
    problems = []
    if np.any(self.slopes > tol):
      problems.append("increasing piece")
    ts = self.knots()
    vals = self.raw(ts)
    if np.any(vals < -tol):
      problems.append("negative value")
    if np.any(vals > 1 - ts + tol):
      problems.append("exceeds 1 - t")
    if abs(self.raw(1.0)) > tol:
      problems.append("f(1) != 0")
    return problems


@dataclasses.dataclass(frozen=True, eq=False)
class PrivacyRegion:
  """Achievable (type I, type II) error pairs above ``boundary``.

  ``constraints`` lists the (eps, delta) pairs whose intersection produced
  the region, when known. ``metadata`` carries provenance such as the
  construction route or the number of pruned constraints.
  """

  boundary: TradeoffFunction
  constraints: tuple[DpConstraint, ...] = ()
  metadata: dict = dataclasses.field(default_factory=dict)

  def contains(self, beta_i, beta_ii, tol=1e-12):
    beta_i = np.asarray(beta_i, dtype=float)
    beta_ii = np.asarray(beta_ii, dtype=float)
    inside = ((beta_i >= -tol) & (beta_i <= 1 + tol)
              & (beta_ii <= 1 - beta_i + tol))
    lower = self.boundary.raw(np.clip(beta_i, 0.0, 1.0))
    return inside & (beta_ii >= lower - tol)


def make_feps_delta(c: DpConstraint) -> TradeoffFunction:
  """f(t) = max(0, 1 - delta - e^eps t, e^-eps (1 - delta - t))."""
  e = math.exp(c.eps)
  slopes = [-e, -1.0 / e, 0.0]
  intercepts = [1.0 - c.delta, (1.0 - c.delta) / e, 0.0]
  return TradeoffFunction(slopes, intercepts)


def evaluate(f: PwlFunction, t):
  return f(t)


def pointwise_max(fs: Sequence[TradeoffFunction]) -> TradeoffFunction:
  """Upper envelope of trade-off functions (intersection of their regions)."""
  if not fs:
    raise ValueError("pointwise_max needs at least one function")
  slopes = np.concatenate([f.slopes for f in fs])
  intercepts = np.concatenate([f.intercepts for f in fs])
  return TradeoffFunction(slopes, intercepts)


def region_from_constraints(cs: Sequence[DpConstraint]) -> PrivacyRegion:
  if not cs:
    raise ValueError("at least one constraint is required")
  cs = tuple(cs)
  boundary = pointwise_max([make_feps_delta(c) for c in cs])
  return PrivacyRegion(boundary, cs)


def intersect_regions(regions: Sequence[PrivacyRegion], **metadata) -> PrivacyRegion:
  boundary = pointwise_max([r.boundary for r in regions])
  constraints = tuple(c for r in regions for c in r.constraints)
  return PrivacyRegion(boundary, constraints, dict(metadata))


def fixed_point(f: TradeoffFunction) -> float:
  """The c with f(c) = c, by bisection on f(t) - t."""
  lo, hi = 0.0, 1.0
  if f.raw(0.0) <= 0:
    return 0.0
  for _ in range(200):
    mid = 0.5 * (lo + hi)
    if mid in (lo, hi):
      break
    if f.raw(mid) > mid:
      lo = mid
    else:
      hi = mid
  return 0.5 * (lo + hi)


def leq(f: PwlFunction, g: PwlFunction, tol=0.0) -> bool:
  """f <= g + tol everywhere on [0, 1] (checked at the knots of both)."""
  ts = np.union1d(f.knots(), g.knots())
  return bool(np.all(f.raw(ts) <= g.raw(ts) + tol))


def max_gap(f: PwlFunction, g: PwlFunction) -> float:
  """max over the shared domain of f - g (exact for piecewise-affine inputs)."""
  ts = np.union1d(f.knots(), g.knots())
  return float(np.max(f.raw(ts) - g.raw(ts)))


def sup_distance(f: PwlFunction, g: PwlFunction) -> float:
  ts = np.union1d(f.knots(), g.knots())
  return float(np.max(np.abs(f.raw(ts) - g.raw(ts))))


def vertex_distance(f: PwlFunction, g: PwlFunction) -> float:
  """Largest coordinate difference between matching breakpoints of f and g.

  Infinite when the vertex counts differ. Unlike ``sup_distance`` this stays
  well conditioned on very steep pieces, where a knot shifted by one ulp
  moves the value by slope * ulp.
  """
  vf, vg = np.array(region_vertices(f)), np.array(region_vertices(g))
  if vf.shape != vg.shape:
    return math.inf
  return float(np.max(np.abs(vf - vg)))


def _point_to_polyline(pts, verts):
  """Euclidean distance from each point to the polyline through verts."""
  p0, p1 = verts[:-1], verts[1:]
  d = p1 - p0
  len2 = np.maximum(np.sum(d * d, axis=1), np.finfo(float).tiny)
  rel = pts[:, None, :] - p0[None, :, :]
  u = np.clip(np.sum(rel * d[None], axis=2) / len2, 0.0, 1.0)
  gap = rel - u[..., None] * d[None]
  return np.sqrt(np.min(np.sum(gap * gap, axis=2), axis=1))


def hausdorff_distance(f: PwlFunction, g: PwlFunction) -> float:
  """Hausdorff distance between the graphs of f and g.

  Well conditioned for steep pieces (unlike vertical gaps) and for nearly
  flat ones (unlike crossing abscissas).
  """
  vf, vg = np.array(region_vertices(f)), np.array(region_vertices(g))
  return float(max(np.max(_point_to_polyline(vf, vg)),
                   np.max(_point_to_polyline(vg, vf))))


def region_vertices(r: PrivacyRegion | TradeoffFunction) -> list[tuple[float, float]]:
  """Breakpoints of the lower boundary from (0, f(0)) to (1, f(1))."""
  f = r.boundary if isinstance(r, PrivacyRegion) else r
  ts = f.knots()
  return [(float(t), float(v)) for t, v in zip(ts, f.raw(ts))]


def integrate(f: PwlFunction) -> float:
  """Integral of f over its (finite) domain."""
  ts = f.knots()
  vals = f.raw(ts)
  return float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(ts)))


def supporting_constraints(f: TradeoffFunction) -> list[DpConstraint]:
  """(eps, delta) constraints whose intersection has boundary f.

  Each piece of slope -e^eps <= -1 and intercept 1 - delta is one
  constraint; for a boundary symmetric about beta_I = beta_II the flatter
  pieces are their mirror images and carry no extra information.
  """
  out = []
  for a, b in zip(f.slopes, f.intercepts):
    if a <= -1.0:
      out.append(DpConstraint(math.log(-a), min(1.0, max(0.0, 1.0 - b))))
  if not out:
    out.append(DpConstraint(0.0, min(1.0, max(0.0, 1.0 - float(f.raw(0.0))))))
  return out
