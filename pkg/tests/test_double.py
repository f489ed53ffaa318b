import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpcomposer import double
from dpcomposer.double import (AssumptionError, DoubleDpSpec,
                               baseline_remark1, baseline_remark2,
                               closed_form_levels, compose_constraints,
                               compose_double_thm2, compose_double_thm3,
                               compose_single, mixing_weight_alpha,
                               total_variation_level)
from dpcomposer.oracle import (double_dp_test, np_tradeoff, power_test,
                               single_dp_test)
from dpcomposer.pwl import (DpConstraint, leq, make_feps_delta, max_gap,
                            hausdorff_distance, region_from_constraints,
                            sup_distance)
from helpers import PAIR, LN2, double_specs

SLOW = settings(max_examples=25, deadline=None)


def pair(k):
  return DoubleDpSpec(k=k, **PAIR)


def oracle_boundary(spec):
  test = double_dp_test(spec.eps1, spec.eps2, spec.delta1, mixing_weight_alpha(spec))
  return np_tradeoff(power_test(test, spec.k))


class TestSpec:

  def test_delta_order_message(self):
    with pytest.raises(AssumptionError, match="delta1 < delta2"):
      DoubleDpSpec(0.3, 0.15, 0.02, 0.02)

  def test_activity_message(self):
    with pytest.raises(AssumptionError, match=r"\(1 - delta1\)\(1 \+ e\^eps2\).*violated by"):
      DoubleDpSpec(0.3, 0.1, 0.0, 0.5)

  def test_equal_eps(self):
    with pytest.raises(AssumptionError):
      DoubleDpSpec(0.3, 0.3, 0.0, 0.01)

  def test_order_of_eps_follows_from_activity(self):
    with pytest.raises(AssumptionError):
      DoubleDpSpec(0.15, 0.3, 0.0, 0.02)

  def test_k(self):
    with pytest.raises(ValueError):
      DoubleDpSpec(k=0, **PAIR)

  def test_eps2_zero_allowed(self):
    spec = DoubleDpSpec(1.0, 0.0, 0.0, 0.2)
    assert 0 < mixing_weight_alpha(spec) < 1


class TestAlpha:

  def test_pair(self):
    e1, e2 = math.exp(0.3), math.exp(0.15)
    want = (e2 - 0.98 * e1 + 0.02) / (e2 - e1)
    assert mixing_weight_alpha(pair(1)) == pytest.approx(want, rel=1e-14)
    assert mixing_weight_alpha(pair(1)) == pytest.approx(0.7500, abs=1e-4)

  def test_limits(self):
    e1, e2 = 0.3, 0.15
    top = 1 - (1 + math.exp(e2)) / (1 + math.exp(e1))
    # the eps2 component vanishes at the activity boundary...
    assert mixing_weight_alpha(DoubleDpSpec(e1, e2, 0.0, top - 1e-9)) < 1e-6
    # ...and takes all the mass when delta2 approaches delta1
    assert mixing_weight_alpha(DoubleDpSpec(e1, e2, 0.0, 1e-9)) > 1 - 1e-6

  @given(double_specs())
  def test_interior(self, params):
    alpha = mixing_weight_alpha(DoubleDpSpec(*params))
    assert 0 < alpha < 1

  @given(double_specs())
  def test_single_use_matches_constraints(self, params):
    spec = DoubleDpSpec(*params)
    got = np_tradeoff(double_dp_test(spec.eps1, spec.eps2, spec.delta1,
                                     mixing_weight_alpha(spec)))
    want = region_from_constraints(spec.constraints).boundary
    assert sup_distance(got, want) <= 1e-12


class TestRoutes:

  def test_k1(self):
    want = region_from_constraints(pair(1).constraints).boundary
    assert sup_distance(compose_double_thm2(pair(1)).boundary, want) <= 1e-14
    assert sup_distance(compose_double_thm3(pair(1)).boundary, want) <= 1e-14

  def test_pair_k3_routes(self):
    a = compose_double_thm2(pair(3)).boundary
    b = compose_double_thm3(pair(3)).boundary
    assert sup_distance(a, b) <= 1e-9

  def test_pair_k3_oracle(self):
    spec = pair(3)
    assert sup_distance(compose_double_thm3(spec).boundary, oracle_boundary(spec)) <= 1e-10

  def test_metadata(self):
    r = compose_double_thm3(pair(20))
    assert r.metadata["route"] == "thm3"
    assert r.metadata["n_constraints"] >= r.metadata["n_constraints"] - r.metadata["n_pruned"] > 0
    assert r.metadata["n_levels"] >= r.metadata["n_constraints"]
    assert compose_double_thm2(pair(3)).metadata["route"] == "thm2"

  @pytest.mark.parametrize("delta1", [0.0, 0.05])
  @pytest.mark.parametrize("k", range(1, 6))
  def test_oracle_pair(self, k, delta1):
    spec = DoubleDpSpec(0.3, 0.15, delta1, 0.1 if delta1 else 0.02, k)
    want = oracle_boundary(spec)
    assert sup_distance(compose_double_thm3(spec).boundary, want) <= 1e-10
    assert sup_distance(compose_double_thm2(spec).boundary, want) <= 1e-10

  @SLOW
  @given(double_specs(max_k=4))
  def test_oracle_random(self, params):
    spec = DoubleDpSpec(*params)
    assert sup_distance(compose_double_thm3(spec).boundary, oracle_boundary(spec)) <= 1e-10

  @SLOW
  @given(double_specs(max_k=12))
  def test_route_equivalence(self, params):
    spec = DoubleDpSpec(*params)
    a = compose_double_thm2(spec).boundary
    b = compose_double_thm3(spec).boundary
    # vertical gaps blow up on steep pieces and crossing abscissas on flat
    # ones, so breakpoints are compared by their distance to the other curve
    assert hausdorff_distance(a, b) <= 1e-9

  @SLOW
  @given(double_specs(max_k=8))
  def test_growth_in_k(self, params):
    spec = DoubleDpSpec(*params)
    small = compose_double_thm3(spec).boundary
    big = compose_double_thm3(spec.with_k(spec.k + 1)).boundary
    assert leq(big, small, 1e-12)

  @SLOW
  @given(double_specs(max_k=10))
  def test_levels(self, params):
    spec = DoubleDpSpec(*params)
    strict = closed_form_levels(spec, strict=True)
    loose = closed_form_levels(spec, strict=False)
    for (_, _, _, d1), (_, _, _, d2) in zip(strict, loose):
      assert abs(d1 - d2) <= 1e-12
    cs = double._dedupe_levels(strict)
    eps = [c.eps for c in cs]
    deltas = [c.delta for c in cs]
    assert all(0 <= d < 1 for d in deltas)
    order = np.argsort(eps)
    assert np.all(np.diff(np.array(deltas)[order]) <= 1e-12)

  def test_soft_limit_warns(self, monkeypatch):
    monkeypatch.setattr(double, "K_SOFT_LIMIT", 2)
    with pytest.warns(UserWarning):
      closed_form_levels(pair(3))


class TestSingle:

  def test_k1(self):
    r = compose_single(0.7, 0.0, 1)
    assert r.boundary.same_as(make_feps_delta(DpConstraint(0.7, 0.0)))

  def test_k1_with_delta(self):
    r = compose_single(0.3, 0.02, 1)
    assert sup_distance(r.boundary, make_feps_delta(DpConstraint(0.3, 0.02))) <= 1e-15

  def test_ln2_two_fold(self):
    r = compose_single(LN2, 0.0, 2)
    assert [c.eps for c in r.constraints] == pytest.approx([2 * LN2, 0.0], abs=1e-15)
    assert [c.delta for c in r.constraints] == pytest.approx([0.0, 1 / 3], abs=1e-15)

  @pytest.mark.parametrize("k", [1, 2, 3])
  def test_oracle(self, k):
    want = np_tradeoff(power_test(single_dp_test(0.3, 0.02), k))
    assert sup_distance(compose_single(0.3, 0.02, k).boundary, want) <= 1e-12

  def test_invalid(self):
    with pytest.raises(ValueError):
      compose_single(0.3, 1.0, 2)
    with pytest.raises(ValueError):
      compose_single(0.3, 0.0, 0)


class TestBaselines:

  def test_k1(self):
    want = region_from_constraints(pair(1).constraints).boundary
    assert baseline_remark1(pair(1)).boundary.same_as(want)
    eta = total_variation_level(pair(1))
    want2 = region_from_constraints(
        [DpConstraint(0.3, 0.0), DpConstraint(0.0, eta), DpConstraint(0.15, 0.02)]).boundary
    assert sup_distance(baseline_remark2(pair(1)).boundary, want2) <= 1e-15

  def test_eta(self):
    want = 0.02 + 0.98 * (math.exp(0.15) - 1) / (math.exp(0.15) + 1)
    assert total_variation_level(pair(1)) == pytest.approx(want, rel=1e-15)

  @pytest.mark.parametrize("k", [3, 20])
  def test_nesting(self, k):
    exact = compose_double_thm3(pair(k)).boundary
    r2 = baseline_remark2(pair(k))
    r1 = baseline_remark1(pair(k)).boundary
    assert not r2.metadata["fallback"]
    assert leq(r2.boundary, exact, 1e-10)
    assert leq(r1, r2.boundary, 1e-10)
    assert max_gap(exact, r1) > 0

  def test_k20_strictly_inside_tv_baseline(self):
    exact = compose_double_thm3(pair(20)).boundary
    assert max_gap(exact, baseline_remark2(pair(20)).boundary) > 1e-3

  def test_gap_grows(self):
    gaps = [max_gap(compose_double_thm3(pair(k)).boundary,
                    baseline_remark1(pair(k)).boundary) for k in (3, 20)]
    assert gaps[1] > gaps[0] + 1e-9

  @SLOW
  @given(double_specs(max_k=6))
  def test_sandwich_random(self, params):
    spec = DoubleDpSpec(*params)
    exact = compose_double_thm3(spec).boundary
    r2 = baseline_remark2(spec)
    r1 = baseline_remark1(spec).boundary
    assert not r2.metadata["fallback"]
    assert leq(r2.boundary, exact, 1e-10) and leq(r1, r2.boundary, 1e-10)

  def test_fallback(self, monkeypatch, caplog):
    # with valid inputs the auxiliary pair is always valid too, so force it
    monkeypatch.setattr(double, "total_variation_level", lambda spec: 0.999)
    r = baseline_remark2(pair(3))
    assert r.metadata["fallback"] is True
    assert r.boundary.same_as(baseline_remark1(pair(3)).boundary)
    assert "falling back" in caplog.text


class TestComposeConstraints:

  def test_single(self):
    r = compose_constraints([DpConstraint(LN2, 0.0)], 2)
    assert r.boundary.same_as(compose_single(LN2, 0.0, 2).boundary)

  def test_pair_order_irrelevant(self):
    a = compose_constraints([DpConstraint(0.15, 0.02), DpConstraint(0.3, 0.0)], 3)
    assert a.boundary.same_as(compose_double_thm3(pair(3)).boundary)

  def test_too_many(self):
    with pytest.raises(ValueError):
      compose_constraints([DpConstraint(1, 0)] * 3, 2)
