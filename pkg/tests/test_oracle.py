import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpcomposer.oracle import (MAX_OUTCOMES, DiscreteTest,
                               deterministic_error_pairs, double_dp_test,
                               mixture_bruteforce, np_curve, np_tradeoff,
                               power_test, product_test, rr_test,
                               single_dp_test, total_variation)
from dpcomposer.pwl import (DpConstraint, make_feps_delta,
                            region_from_constraints)
from helpers import LN2, seeds


def feps(eps, delta):
  return make_feps_delta(DpConstraint(eps, delta))


def random_test(rng, m):
  p0 = rng.dirichlet(np.ones(m))
  p1 = rng.dirichlet(np.ones(m))
  # sprinkle in zero masses to exercise infinite ratios
  if m > 2 and rng.random() < 0.5:
    p0[rng.integers(m)] = 0.0
    p0 /= p0.sum()
  return DiscreteTest(p0, p1)


class TestConstruction:

  def test_rr_masses(self):
    t = rr_test(LN2)
    np.testing.assert_allclose(t.p0, [2 / 3, 1 / 3], rtol=1e-15)
    np.testing.assert_allclose(t.p1, [1 / 3, 2 / 3], rtol=1e-15)

  def test_rejects_unnormalised(self):
    with pytest.raises(ValueError):
      DiscreteTest([0.5, 0.6], [0.5, 0.5])

  def test_rejects_negative(self):
    with pytest.raises(ValueError):
      DiscreteTest([1.5, -0.5], [0.5, 0.5])

  def test_rejects_shape_mismatch(self):
    with pytest.raises(ValueError):
      DiscreteTest([1.0], [0.5, 0.5])

  def test_double_alpha_one_is_rr(self):
    t = double_dp_test(0.3, 0.15, 0.0, 1.0)
    assert np_tradeoff(t).same_as(np_tradeoff(rr_test(0.15)))

  def test_double_revealing_outcomes(self):
    t = double_dp_test(0.3, 0.15, 0.1, 0.4)
    assert len(t) == 6
    assert t.p0[0] == 0.1 and t.p1[0] == 0.0
    assert t.p0[-1] == 0.0 and t.p1[-1] == 0.1

  def test_single_dp_masses(self):
    t = single_dp_test(LN2, 0.1)
    np.testing.assert_allclose(t.p0, [0.1, 0.6, 0.3, 0.0], rtol=1e-15)
    np.testing.assert_allclose(t.p1, [0.0, 0.3, 0.6, 0.1], rtol=1e-15)

  def test_product_rr_squared(self):
    t = power_test(rr_test(LN2), 2)
    np.testing.assert_allclose(t.p0, np.array([4, 2, 2, 1]) / 9, rtol=1e-14)
    np.testing.assert_allclose(t.p1, np.array([1, 2, 2, 4]) / 9, rtol=1e-14)

  def test_product_guard(self):
    assert MAX_OUTCOMES == 2**20
    with pytest.raises(ValueError, match="guard"):
      power_test(rr_test(1.0), 21)

  def test_product_empty(self):
    with pytest.raises(ValueError):
      product_test([])


class TestNeymanPearson:

  def test_rr_is_feps(self):
    assert np_tradeoff(rr_test(LN2)).same_as(feps(LN2, 0))

  def test_identical_is_identity(self):
    t = DiscreteTest([0.2, 0.3, 0.5], [0.2, 0.3, 0.5])
    assert np_tradeoff(t).same_as(feps(0, 0))

  def test_single_dp_is_feps(self):
    assert np_tradeoff(single_dp_test(0.3, 0.02)).same_as(feps(0.3, 0.02))

  def test_double_dp_pair(self):
    from dpcomposer.double import DoubleDpSpec, mixing_weight_alpha
    alpha = mixing_weight_alpha(DoubleDpSpec(0.3, 0.15, 0.0, 0.02))
    got = np_tradeoff(double_dp_test(0.3, 0.15, 0.0, alpha))
    want = region_from_constraints(
        [DpConstraint(0.3, 0), DpConstraint(0.15, 0.02)]).boundary
    assert got.same_as(want, tol=1e-12)

  def test_curve_endpoints(self):
    pts = np_curve(single_dp_test(0.5, 0.1))
    # the revealing outcome shows up as a vertical drop at beta_I = 0
    assert pts[0] == (0.0, 1.0)
    assert pts[1] == (0.0, pytest.approx(0.9, abs=1e-15))
    assert pts[-1] == (1.0, 0.0)
    xs = [p[0] for p in pts]
    assert xs == sorted(xs)

  @settings(max_examples=60)
  @given(seeds, st.integers(2, 10))
  def test_invariants(self, seed, m):
    t = random_test(np.random.default_rng(seed), m)
    assert np_tradeoff(t).check() == []

  @settings(max_examples=60)
  @given(seeds, st.integers(2, 10))
  def test_hull_of_deterministic_rules(self, seed, m):
    t = random_test(np.random.default_rng(seed), m)
    f = np_tradeoff(t)
    pairs = deterministic_error_pairs(t)
    # no deterministic rule beats the curve ...
    assert np.all(f.raw(pairs[:, 0]) <= pairs[:, 1] + 1e-12)
    # ... and every vertex of the curve is achieved by one
    for x, y in np_curve(t):
      d = np.max(np.abs(pairs - [x, y]), axis=1)
      assert np.min(d) <= 1e-12

  def test_enumeration_cap(self):
    t = DiscreteTest(np.full(13, 1 / 13), np.full(13, 1 / 13))
    with pytest.raises(ValueError):
      deterministic_error_pairs(t)

  @settings(max_examples=60)
  @given(seeds, st.integers(2, 12))
  def test_product_of_one(self, seed, m):
    t = random_test(np.random.default_rng(seed), m)
    assert np_tradeoff(product_test([t])).same_as(np_tradeoff(t), tol=1e-12)

  @settings(max_examples=60)
  @given(seeds, st.integers(2, 8))
  def test_tied_outcomes_merge(self, seed, m):
    rng = np.random.default_rng(seed)
    t = random_test(rng, m)
    # split a random outcome into pieces with the same likelihood ratio
    j = int(rng.integers(m))
    share = rng.dirichlet(np.ones(3))
    p0 = np.concatenate([np.delete(t.p0, j), t.p0[j] * share])
    p1 = np.concatenate([np.delete(t.p1, j), t.p1[j] * share])
    perm = rng.permutation(len(p0))
    split = DiscreteTest(p0[perm], p1[perm])
    assert np_tradeoff(split).same_as(np_tradeoff(t), tol=1e-12)


class TestTotalVariation:

  def test_examples(self):
    assert total_variation(DiscreteTest([0.5, 0.5], [0.5, 0.5])) == 0.0
    assert total_variation(rr_test(LN2)) == pytest.approx(1 / 3, abs=1e-15)
    assert total_variation(power_test(rr_test(LN2), 2)) == pytest.approx(
        1 / 3, abs=1e-15)

  @settings(max_examples=60)
  @given(seeds, st.integers(2, 10))
  def test_is_flat_supporting_delta(self, seed, m):
    t = random_test(np.random.default_rng(seed), m)
    xs = np.array([p[0] for p in np_curve(t)])
    f = np_tradeoff(t)
    best = float(np.max(1 - xs - f.raw(xs)))
    assert abs(total_variation(t) - best) <= 1e-12


class TestMixtureBruteforce:

  def test_identical_functions(self):
    f = feps(0.7, 0.1)
    ts, vals = mixture_bruteforce([0.5, 0.5], [f, f])
    slope = float(np.max(-f.slopes))
    assert np.max(np.abs(vals - f.raw(ts))) <= slope * 1e-3

  def test_zero_second_component(self):
    f1 = feps(1.0, 0.0)
    ts, vals = mixture_bruteforce([0.9, 0.1], [f1, feps(0, 1)])
    # the whole type-I budget goes to the first component
    want = 0.9 * f1.raw(np.minimum(1.0, ts / 0.9))
    slope = float(np.max(-f1.slopes))
    assert np.max(np.abs(vals - want)) <= slope * 1e-3

  def test_matches_conjugate_mixture(self):
    from dpcomposer.conjugate import MixtureSpec, mixture_tradeoff
    fs = [feps(1.3, 0), feps(0.5, 0.2)]
    fm = mixture_tradeoff(MixtureSpec([0.5, 0.5], fs))
    ts, vals = mixture_bruteforce([0.5, 0.5], fs)
    slope = max(float(np.max(-f.slopes)) for f in fs)
    assert np.max(np.abs(vals - fm.raw(ts))) <= slope * 1e-3

  def test_guards(self):
    f = feps(0, 0)
    with pytest.raises(ValueError):
      mixture_bruteforce([1 / 3] * 3, [f] * 3)
    with pytest.raises(ValueError):
      mixture_bruteforce([0.5, 0.5], [f, f], grid_n=50)
