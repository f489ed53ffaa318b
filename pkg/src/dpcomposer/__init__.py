"""Exact privacy regions for composed (eps, delta)-DP mechanisms.

Trade-off curves are convex piecewise-affine functions on [0, 1] stored as
line constraints. On top of that representation the package provides
convex conjugates and test mixtures, heterogeneous pure-DP composition,
k-fold composition under two simultaneous (eps, delta) guarantees, and
two-constraint approximations of smooth curves such as Gaussian DP.
"""

from dpcomposer.conjugate import (MixtureSpec, conjugate_bounded,
                                  conjugate_unbounded, mixture_tradeoff,
                                  region_mixture, weighted_conjugate_sum)
from dpcomposer.double import (AssumptionError, DoubleDpSpec,
                               baseline_intersection, baseline_remark1,
                               baseline_remark2, baseline_total_variation,
                               compose_constraints, compose_double_closed_form,
                               compose_double_mixture, compose_double_thm2,
                               compose_double_thm3, compose_single,
                               mixing_weight_alpha, total_variation_level)
from dpcomposer.fdp import (SmoothTradeoff, SandwichResult, approx_above,
                            approx_below, chord_constraints, gaussian_tradeoff,
                            normal_rotation, sandwich)
from dpcomposer.heterogeneous import (HetSpec, SlopeIndex, het_constraints,
                                      het_delta, het_region, het_slopes)
from dpcomposer.pwl import (DpConstraint, LinePiece, PrivacyRegion,
                            PwlFunction, TradeoffFunction, evaluate,
                            fixed_point, hausdorff_distance,
                            intersect_regions, leq,
                            make_feps_delta, pointwise_max,
                            region_from_constraints, region_vertices,
                            sup_distance, supporting_constraints,
                            vertex_distance)

__version__ = "0.1.0"
