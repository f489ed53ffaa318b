"""Command-line front end.

Examples:
  dpcomposer region --constraint 0.3,0 --constraint 0.15,0.02
  dpcomposer compose --route thm3 --eps 0.3,0.15 --delta 0,0.02 -k 3
  dpcomposer compose --route het --eps 0.3,0.15 -x 2 -y 2
  dpcomposer baselines --eps 0.3,0.15 --delta 0,0.02 -k 20
  dpcomposer approx --curve gdp:1 -k 10
  dpcomposer verify double --eps 0.3,0.15 --delta 0,0.02 -k 3

Every command prints one JSON document on stdout. Exit codes: 0 success,
1 usage error, 2 invalid parameters, 3 failed verification.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time

import numpy as np

from dpcomposer import double, fdp, oracle
from dpcomposer.conjugate import MixtureSpec, mixture_tradeoff
from dpcomposer.heterogeneous import HetSpec, het_region
from dpcomposer.pwl import (DpConstraint, leq, make_feps_delta, max_gap,
                            region_from_constraints, region_vertices,
                            sup_distance, supporting_constraints)

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_VERIFY = 0, 1, 2, 3
DEFAULT_CURVE_SAMPLES = 101


class UsageError(Exception):
  pass


class _Parser(argparse.ArgumentParser):

  def error(self, message):
    raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
  try:
    return [float(v) for v in text.split(",")]
  except ValueError:
    raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _constraint(text: str) -> tuple[float, float]:
  # range checks happen later so that they exit as validation errors
  vals = _floats(text)
  if len(vals) != 2:
    raise argparse.ArgumentTypeError(f"expected EPS,DELTA, got {text!r}")
  return tuple(vals)


def _clamp(v: float) -> float:
  return min(1.0, max(0.0, float(v)))


def _json_float(v):
  v = float(v)
  return v + 0.0  # normalise -0.0


def _plain(obj):
  """Recursively convert numpy scalars and tuples into JSON-native values."""
  if isinstance(obj, dict):
    return {str(k): _plain(v) for k, v in obj.items()}
  if isinstance(obj, (list, tuple)):
    return [_plain(v) for v in obj]
  if isinstance(obj, (bool, np.bool_)):
    return bool(obj)
  if isinstance(obj, (int, np.integer)):
    return int(obj)
  if isinstance(obj, (float, np.floating)):
    return _json_float(obj)
  return obj


def _constraints_json(cs):
  return [{"eps": c.eps, "delta": c.delta} for c in cs]


def region_report(region, inputs: dict) -> dict:
  verts = [[_clamp(x), _clamp(y)] for x, y in region_vertices(region)]
  meta = {k: v for k, v in region.metadata.items()}
  return {
      "inputs": inputs,
      "constraints": _constraints_json(supporting_constraints(region.boundary)),
      "vertices": verts,
      "metadata": meta,
  }


def _write_samples(path: str, boundary, n: int):
  ts = np.linspace(0.0, 1.0, n)
  vals = np.clip(boundary.raw(ts), 0.0, 1.0)
  vals = np.minimum.accumulate(vals)  # rounding must not break monotonicity
  with open(path, "w", newline="") as fh:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["beta_i", "beta_ii"])
    for t, v in zip(ts, vals):
      w.writerow([repr(_json_float(t)), repr(_json_float(v))])


def _pair(vals, name):
  if vals is None or len(vals) != 2:
    raise UsageError(f"--{name} needs two comma-separated values")
  return vals


def _double_spec(args) -> double.DoubleDpSpec:
  e1, e2 = _pair(args.eps, "eps")
  d1, d2 = _pair(args.delta, "delta")
  if args.k is None:
    raise UsageError("-k is required")
  return double.DoubleDpSpec(e1, e2, d1, d2, args.k)


def _spec_inputs(spec: double.DoubleDpSpec) -> dict:
  return {"eps": [spec.eps1, spec.eps2], "delta": [spec.delta1, spec.delta2],
          "k": spec.k}


def cmd_region(args):
  if not args.constraint:
    raise UsageError("at least one --constraint EPS,DELTA is required")
  cs = [DpConstraint(*c) for c in args.constraint]
  region = region_from_constraints(cs)
  region.metadata.update(route="region", n_constraints=len(cs))
  return region_report(region, {"constraints": _constraints_json(cs)})


def cmd_compose(args):
  route = args.route or "thm3"
  if route in ("thm2", "thm3"):
    spec = _double_spec(args)
    fn = double.compose_double_thm2 if route == "thm2" else double.compose_double_thm3
    region, inputs = fn(spec), _spec_inputs(spec)
  elif route == "het":
    e1, e2 = _pair(args.eps, "eps")
    if args.x is None or args.y is None:
      raise UsageError("route het needs -x and -y")
    region = het_region(HetSpec(e1, e2, args.x, args.y))
    inputs = {"eps": [e1, e2], "x": args.x, "y": args.y}
  elif route == "single":
    if not args.eps or len(args.eps) != 1 or args.k is None:
      raise UsageError("route single needs one --eps value and -k")
    delta = args.delta[0] if args.delta else 0.0
    region = double.compose_single(args.eps[0], delta, args.k)
    inputs = {"eps": args.eps[0], "delta": delta, "k": args.k}
  else:
    raise UsageError(f"unknown route {route!r}")
  inputs["route"] = route
  report = region_report(region, inputs)
  if args.samples:
    if not args.output:
      raise UsageError("--samples needs -o FILE")
    _write_samples(args.output, region.boundary, args.samples)
    report["metadata"]["samples_file"] = args.output
  return report


def cmd_baselines(args):
  spec = _double_spec(args)
  exact = double.compose_double_thm3(spec)
  r2 = double.baseline_remark2(spec)
  r1 = double.baseline_remark1(spec)
  inputs = _spec_inputs(spec)
  return {
      "inputs": inputs,
      "regions": {
          "exact": region_report(exact, inputs),
          "remark2": region_report(r2, inputs),
          "remark1": region_report(r1, inputs),
      },
      "metadata": {
          "nested": (leq(r2.boundary, exact.boundary, 1e-10)
                     and leq(r1.boundary, r2.boundary, 1e-10)),
          "gap_remark1": max_gap(exact.boundary, r1.boundary),
          "gap_remark2": max_gap(exact.boundary, r2.boundary),
      },
  }


def _parse_curve(text):
  kind, _, param = (text or "").partition(":")
  if kind != "gdp" or not param:
    raise UsageError(f"--curve must look like gdp:MU, got {text!r}")
  try:
    mu = float(param)
  except ValueError:
    raise UsageError(f"--curve must look like gdp:MU, got {text!r}")
  return mu


def _approx_json(a: fdp.Approximation):
  return {"constraints": _constraints_json(a.constraints), "t_star": a.t_star,
          "touch_points": list(a.touch_points),
          "multiple_roots": a.multiple_roots}


def cmd_approx(args):
  mu = _parse_curve(args.curve)
  curve = fdp.gaussian_tradeoff(mu)
  res = fdp.sandwich(curve)
  report = {
      "inputs": {"curve": f"gdp:{mu!r}", "k": args.k},
      "lower": _approx_json(res.below),
      "upper": _approx_json(res.above),
  }
  if args.k:
    lower = double.compose_constraints(res.lower, args.k)
    upper = double.compose_constraints(res.upper, args.k)
    exact = fdp.gaussian_tradeoff(mu * math.sqrt(args.k))
    n = args.samples or DEFAULT_CURVE_SAMPLES
    ts = np.linspace(0.0, 1.0, n)
    report["composed"] = {
        "lower": region_report(lower, {"k": args.k}),
        "upper": region_report(upper, {"k": args.k}),
        "exact_samples": [[_json_float(t), _clamp(v)] for t, v in zip(ts, exact(ts))],
    }
  report["metadata"] = {"route": "sandwich"}
  return report


def _check(name, residual, tol):
  return {"name": name, "passed": bool(residual <= tol), "residual": residual,
          "tolerance": tol}


def cmd_verify(args):
  checks = []
  if args.target == "het":
    e1, e2 = _pair(args.eps, "eps")
    if args.x is None or args.y is None:
      raise UsageError("verify het needs -x and -y")
    spec = HetSpec(e1, e2, args.x, args.y)
    tests = [oracle.rr_test(e1)] * spec.x + [oracle.rr_test(e2)] * spec.y
    ref = oracle.np_tradeoff(oracle.product_test(tests))
    checks.append(_check("het_vs_oracle", sup_distance(het_region(spec).boundary, ref), 1e-10))
    inputs = {"eps": [e1, e2], "x": spec.x, "y": spec.y}
  elif args.target == "double":
    spec = _double_spec(args)
    alpha = double.mixing_weight_alpha(spec)
    test = oracle.double_dp_test(spec.eps1, spec.eps2, spec.delta1, alpha)
    ref = oracle.np_tradeoff(oracle.power_test(test, spec.k))
    t3 = double.compose_double_thm3(spec).boundary
    t2 = double.compose_double_thm2(spec).boundary
    checks.append(_check("thm3_vs_oracle", sup_distance(t3, ref), 1e-10))
    checks.append(_check("thm2_vs_thm3", sup_distance(t2, t3), 1e-9))
    inputs = _spec_inputs(spec)
  elif args.target == "mixture":
    grid = args.grid or 1000
    cs = [DpConstraint(*c) for c in args.constraint or [(1.3, 0.0), (0.5, 0.2)]]
    if len(cs) != 2:
      raise UsageError("verify mixture takes exactly two --constraint values")
    w = args.weight if args.weight is not None else 0.5
    if not 0 < w < 1:
      raise UsageError("--weight must lie in (0, 1)")
    fs = [make_feps_delta(c) for c in cs]
    fm = mixture_tradeoff(MixtureSpec((w, 1 - w), tuple(fs)))
    ts, vals = oracle.mixture_bruteforce((w, 1 - w), fs, grid)
    bound = max(float(np.max(-f.slopes)) for f in fs) / grid
    checks.append(_check("mixture_vs_grid", float(np.max(np.abs(fm(ts) - vals))), bound))
    inputs = {"constraints": _constraints_json(cs), "weights": [w, 1 - w], "grid": grid}
  else:
    raise UsageError(f"unknown verify target {args.target!r}")
  return {"inputs": inputs, "checks": checks,
          "metadata": {"passed": all(c["passed"] for c in checks)}}


def build_parser() -> argparse.ArgumentParser:
  parser = _Parser(prog="dpcomposer", description="Exact privacy regions of composed DP mechanisms.")
  parser.add_argument("--config", metavar="FILE", help="flat key = value parameter file; flags override it")
  parser.add_argument("--timing", action="store_true", help="add wall-clock time to the metadata")
  # the global options are also accepted after the subcommand
  common = _Parser(add_help=False)
  common.add_argument("--config", metavar="FILE", default=argparse.SUPPRESS)
  common.add_argument("--timing", action="store_true", default=argparse.SUPPRESS)
  sub = parser.add_subparsers(dest="command", parser_class=_Parser)
  sub.required = True

  p = sub.add_parser("region", parents=[common], help="region of simultaneous (eps, delta) constraints")
  p.add_argument("--constraint", action="append", type=_constraint, metavar="EPS,DELTA")
  p.set_defaults(handler=cmd_region)

  p = sub.add_parser("compose", parents=[common], help="k-fold composition region")
  p.add_argument("--route", choices=["thm2", "thm3", "het", "single"])
  p.add_argument("--eps", type=_floats, metavar="E1[,E2]")
  p.add_argument("--delta", type=_floats, metavar="D1[,D2]")
  p.add_argument("-k", type=int)
  p.add_argument("-x", type=int)
  p.add_argument("-y", type=int)
  p.add_argument("--samples", type=int, metavar="N", help="write N boundary samples as CSV")
  p.add_argument("-o", "--output", metavar="FILE")
  p.set_defaults(handler=cmd_compose)

  p = sub.add_parser("baselines", parents=[common], help="exact region next to the two looser bounds")
  p.add_argument("--eps", type=_floats, metavar="E1,E2")
  p.add_argument("--delta", type=_floats, metavar="D1,D2")
  p.add_argument("-k", type=int)
  p.set_defaults(handler=cmd_baselines)

  p = sub.add_parser("approx", parents=[common], help="double-DP sandwich of a smooth trade-off curve")
  p.add_argument("--curve", metavar="gdp:MU")
  p.add_argument("-k", type=int)
  p.add_argument("--samples", type=int, metavar="N")
  p.set_defaults(handler=cmd_approx)

  p = sub.add_parser("verify", parents=[common], help="compare against brute-force references")
  p.add_argument("target", choices=["het", "double", "mixture"])
  p.add_argument("--eps", type=_floats)
  p.add_argument("--delta", type=_floats)
  p.add_argument("-k", type=int)
  p.add_argument("-x", type=int)
  p.add_argument("-y", type=int)
  p.add_argument("--grid", type=int)
  p.add_argument("--constraint", action="append", type=_constraint, metavar="EPS,DELTA")
  p.add_argument("--weight", type=float)
  p.set_defaults(handler=cmd_verify)
  return parser


def read_config(path: str) -> dict[str, list[str]]:
  """Flat ``key = value`` lines; '#' starts a comment; keys may repeat."""
  out: dict[str, list[str]] = {}
  with open(path) as fh:
    for lineno, line in enumerate(fh, 1):
      line = line.split("#", 1)[0].strip()
      if not line:
        continue
      key, sep, value = line.partition("=")
      if not sep:
        raise UsageError(f"{path}:{lineno}: expected key = value")
      out.setdefault(key.strip().replace("-", "_"), []).append(value.strip())
  return out


def _apply_config(parser, args, config):
  sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
  actions = {a.dest: a for a in sub.choices[args.command]._actions}
  for key, values in config.items():
    action = actions.get(key)
    if action is None or key in ("help", "target", "config", "timing"):
      raise UsageError(f"unknown config key {key!r} for {args.command}")
    if getattr(args, key) is not None:
      continue  # flags win
    convert = action.type or str
    try:
      parsed = [convert(v) for v in values]
    except (argparse.ArgumentTypeError, ValueError) as err:
      raise UsageError(f"config key {key!r}: {err}")
    if isinstance(action, argparse._AppendAction):
      setattr(args, key, parsed)
    else:
      if action.choices is not None and parsed[-1] not in action.choices:
        raise UsageError(f"config key {key!r} must be one of {list(action.choices)}")
      setattr(args, key, parsed[-1])


def run(argv=None) -> tuple[int, str]:
  """Parse, execute and return (exit code, stdout text)."""
  parser = build_parser()
  try:
    args = parser.parse_args(argv)
    if args.config:
      _apply_config(parser, args, read_config(args.config))
    start = time.perf_counter()
    report = args.handler(args)
  except UsageError as err:
    return EXIT_USAGE, json.dumps({"error": str(err), "kind": "usage"})
  except (ValueError, ArithmeticError) as err:
    return EXIT_INVALID, json.dumps({"error": str(err), "kind": "validation"})
  except OSError as err:
    return EXIT_USAGE, json.dumps({"error": str(err), "kind": "io"})
  if args.timing:
    report.setdefault("metadata", {})["elapsed_s"] = time.perf_counter() - start
  code = EXIT_OK
  if args.command == "verify" and not report["metadata"]["passed"]:
    code = EXIT_VERIFY
  return code, json.dumps(_plain(report), indent=2)


def main(argv=None) -> int:
  code, text = run(argv)
  stream = sys.stdout if code in (EXIT_OK, EXIT_VERIFY) else sys.stderr
  print(text, file=stream)
  return code


if __name__ == "__main__":
  sys.exit(main())
