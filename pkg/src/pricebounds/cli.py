"""Command-line interface.

Subcommands:
  gen-market  write a synthetic MarketInstance JSON from a preset
  bounds      price-bound sweep over strikes, CSV output
  detect      arbitrage detection on an instance or quote chain
  repair      minimal-adjustment repair of a quote chain
  measure     extremal pricing measure for a payoff on an instance

Exit codes: 0 success, 1 arbitrage found (detect), 2 usage error,
3 solver resource limit.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import cpwa, market, arbitrage
from .lp import ResourceLimitError, ConditioningError
from .ecp import MarketInstance, EcpOptions, solve_ecp
from .accp import AccpOptions, solve_accp, extract_measure

EXIT_OK = 0
EXIT_ARBITRAGE = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


def parse_payoff_spec(spec, d):
    """Parse 'kind:key=value,...' payoff strings.  List values use '+'
    separators, e.g. 'call_on_max:assets=1+2+3,strike=5'."""
    kind, _, rest = spec.partition(":")
    params = {"d": d}
    if rest:
        for item in rest.split(","):
            key, _, val = item.partition("=")
            if not _:
                raise ValueError("bad payoff parameter %r" % item)
            if "+" in val:
                vals = [float(v) for v in val.split("+")]
                if key in ("assets",):
                    vals = [int(v) for v in vals]
                params[key.strip()] = vals
            else:
                fv = float(val)
                params[key.strip()] = (int(fv) if key in
                                       ("asset", "long", "short") else fv)
    if "assets" in params:
        params["assets"] = [int(v) for v in params["assets"]]
    return cpwa.make_payoff(kind.strip(), params)


def _load_instance(path):
    with open(path) as fh:
        return MarketInstance.from_json_dict(json.load(fh))


def _write_out(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _dominating_cash(instance, f):
    """c0 = max(0, max of f over the box) so that (c0, 0) dominates f."""
    from .encoding import encode_min
    from .milp import MilpOptions, solve_milp
    from .ecp import _milp_box
    box, _ = _milp_box(instance, f, None)
    neg = cpwa.linear_combination([-1.0], [f])
    enc = encode_min(neg, box)
    res = solve_milp(enc.program, MilpOptions(rel_gap=1e-9),
                     offset=enc.constant)
    return max(0.0, -res.incumbent_value)


def solve_one(instance, f, algo, epsilon, tau, delta, gamma, zeta,
              xbar=None, support=None):
    """Upper bound phi(f) and lower bound -phi(-f) with one algorithm.

    Returns a dict with bounds, counters, and the final support set."""
    support = list(support or [])
    neg_f = cpwa.linear_combination([-1.0], [f])
    # (c, 0) with c = max(0, max h) dominates h; phi(f) >= -max(-f)
    # and phi(-f) >= -max(f) follow from any feasible measure
    c_f = _dominating_cash(instance, f)
    c_nf = _dominating_cash(instance, neg_f)
    if algo == "ecp":
        up = solve_ecp(instance, f, EcpOptions(
            epsilon=epsilon, tau=tau, delta=delta, xbar=xbar,
            phi_low=-c_nf, initial_support=support))
        lo = solve_ecp(instance, neg_f, EcpOptions(
            epsilon=epsilon, tau=tau, delta=delta, xbar=xbar,
            phi_low=-c_f, initial_support=up.support))
    else:
        up, _ = solve_accp(instance, f, AccpOptions(
            epsilon=epsilon, tau=tau, delta=delta, gamma=gamma,
            zeta=zeta, phi_low=-c_nf, initial_support=support))
        lo, _ = solve_accp(instance, neg_f, AccpOptions(
            epsilon=epsilon, tau=tau, delta=delta, gamma=gamma,
            zeta=zeta, phi_low=-c_f, initial_support=up.support))
    return {"ub": up.phi_ub, "lb": -lo.phi_ub,
            "ub_lb_gap": (up.phi_ub - up.phi_lb,
                          lo.phi_ub - lo.phi_lb),
            "lp_count": up.lp_count + lo.lp_count,
            "milp_count": up.milp_count + lo.milp_count,
            "status": ("arbitrage"
                       if "unbounded_arbitrage" in (up.status, lo.status)
                       else "ok"),
            "support": [list(map(float, x))
                        for x in (list(up.support) + list(lo.support))]}


def _reference_quote(instance, f):
    target = json.dumps(cpwa.to_json_dict(f), sort_keys=True)
    for j, gj in enumerate(instance.g):
        if json.dumps(cpwa.to_json_dict(gj), sort_keys=True) == target:
            return float(instance.bid[j]), float(instance.ask[j])
    return None, None


def _sweep_strikes(sweep_spec):
    parts = sweep_spec.split(":")
    if len(parts) != 3:
        raise ValueError("--sweep expects start:stop:step")
    start, stop, step = (float(p) for p in parts)
    if step <= 0:
        raise ValueError("--sweep step must be positive")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(n)]


def _bounds_task(args):
    (inst_dict, payoff_spec, strike, algo, epsilon, tau, delta, gamma,
     zeta, xbar, support) = args
    instance = MarketInstance.from_json_dict(inst_dict)
    f = parse_payoff_spec(payoff_spec, instance.dimension)
    if strike is not None:
        f = _with_strike(payoff_spec, instance.dimension, strike)
    return solve_one(instance, f, algo, epsilon, tau, delta, gamma,
                     zeta, xbar=xbar, support=support)


def _with_strike(payoff_spec, d, strike):
    kind, _, rest = payoff_spec.partition(":")
    items = [it for it in rest.split(",")
             if it and not it.startswith("strike=")]
    items.append("strike=%g" % strike)
    return parse_payoff_spec(kind + ":" + ",".join(items), d)


def cmd_gen_market(args):
    if args.preset == "five-asset":
        fam = market.five_asset_family(seed=args.seed,
                                       mc_samples=args.samples)
        include = tuple(args.include.split(",")) if args.include else (
            "assets", "vanilla", "basket", "spread", "rainbow")
        instruments = market.five_asset_instruments(include)
    else:
        fam = market.random_family(args.d, seed=args.seed,
                                   mc_samples=args.samples)
        instruments = ([cpwa.asset(args.d, i) for i in range(args.d)] +
                       [cpwa.vanilla_call(args.d, i, k)
                        for i in range(args.d) for k in range(1, 11)])
    if args.single_model:
        fam.models = fam.models[:1]
    instance = market.build_market(fam, instruments)
    _write_out(args.out, json.dumps(instance.to_json_dict()) + "\n")
    return EXIT_OK


def cmd_bounds(args):
    instance = _load_instance(args.instance)
    strikes = (_sweep_strikes(args.sweep) if args.sweep else [None])
    algos = ["ecp", "accp"] if args.algo == "both" else [args.algo]
    if args.algo != "ecp" and not instance.is_box():
        raise ValueError("accp requires a box-domain instance")

    xbar = ([float(v) for v in args.xbar.split(",")]
            if args.xbar else None)
    results = {a: [] for a in algos}
    for algo in algos:
        if args.workers > 1 and len(strikes) > 1:
            tasks = [(instance.to_json_dict(), args.payoff, s, algo,
                      args.epsilon, args.tau, args.delta, args.gamma,
                      args.zeta, xbar, None) for s in strikes]
            with ProcessPoolExecutor(max_workers=args.workers) as ex:
                results[algo] = list(ex.map(_bounds_task, tasks))
        else:
            support = None
            for s in strikes:
                f = (parse_payoff_spec(args.payoff, instance.dimension)
                     if s is None else
                     _with_strike(args.payoff, instance.dimension, s))
                r = solve_one(instance, f, algo, args.epsilon, args.tau,
                              args.delta, args.gamma, args.zeta,
                              xbar=xbar,
                              support=support if args.warm_start else
                              None)
                support = r["support"]
                results[algo].append(r)

    header = ["strike", "LB", "UB", "reference_bid", "reference_ask",
              "algorithm", "lp_count", "milp_count", "status"]
    if len(algos) == 2:
        header.append("agreement")
    lines = [",".join(header)]
    for i, s in enumerate(strikes):
        f = (parse_payoff_spec(args.payoff, instance.dimension)
             if s is None else
             _with_strike(args.payoff, instance.dimension, s))
        ref_bid, ref_ask = _reference_quote(instance, f)
        for algo in algos:
            r = results[algo][i]
            row = ["%g" % s if s is not None else "",
                   "%.9g" % r["lb"], "%.9g" % r["ub"],
                   "%.9g" % ref_bid if ref_bid is not None else "",
                   "%.9g" % ref_ask if ref_ask is not None else "",
                   algo, str(r["lp_count"]), str(r["milp_count"]),
                   r["status"]]
            if len(algos) == 2:
                row.append("%.9g" % abs(results["ecp"][i]["ub"] -
                                        results["accp"][i]["ub"]))
            lines.append(",".join(row))
    _write_out(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_detect(args):
    if args.chain:
        with open(args.chain) as fh:
            chain = arbitrage.OptionChain.from_json_dict(json.load(fh))
        instance = arbitrage.chain_to_instance(chain)
    else:
        instance = _load_instance(args.instance)
    res = arbitrage.detect(instance, epsilon=args.epsilon)
    _write_out(args.out, json.dumps(res.to_json_dict()) + "\n")
    if res.arbitrage_free:
        print("no arbitrage (phi_lb=%.6g, phi_ub=%.6g)"
              % (res.phi_lb, res.phi_ub), file=sys.stderr)
        return EXIT_OK
    print("arbitrage found: cost %.6g" % res.cost, file=sys.stderr)
    return EXIT_ARBITRAGE


def cmd_repair(args):
    with open(args.chain) as fh:
        chain = arbitrage.OptionChain.from_json_dict(json.load(fh))
    res = arbitrage.repair_chain(chain, eta=args.eta,
                                 outlier_threshold=args.outlier_threshold)
    out = {"chain": res.chain.to_json_dict(),
           "adjustments": {
               "call_bid": [float(v) for v in res.v_call_minus],
               "call_ask": [float(v) for v in res.v_call_plus],
               "put_bid": [float(v) for v in res.v_put_minus],
               "put_ask": [float(v) for v in res.v_put_plus]},
           "certificate": {
               "support": [float(v) for v in res.support],
               "probabilities": [float(v) for v in res.probabilities],
               "min_mass": res.min_mass},
           "objective": res.objective}
    _write_out(args.out, json.dumps(out) + "\n")
    print("%d of %d prices adjusted, largest change %.6g"
          % (res.num_adjusted, 4 * chain.m, res.max_change),
          file=sys.stderr)
    return EXIT_OK


def cmd_measure(args):
    instance = _load_instance(args.instance)
    f = parse_payoff_spec(args.payoff, instance.dimension)
    res, dagger = solve_accp(instance, f, AccpOptions(
        epsilon=args.epsilon, tau=args.tau, delta=args.delta,
        gamma=args.gamma, zeta=args.zeta))
    # the dual support of the last lower-bound LP reproduces phi_lb
    # exactly; fall back to the final cut set if none was recorded
    support = list(res.support)
    interior = True
    if dagger is not None:
        support = list(dagger[2])
        interior = dagger[3]
    mu = extract_measure(instance, f, support, interior_ok=interior)
    out = mu.to_json_dict()
    out.update(value=mu.value, phi_lb=res.phi_lb, phi_ub=res.phi_ub,
               interior_ok=bool(mu.interior_ok))
    _write_out(args.out, json.dumps(out) + "\n")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="pricebounds",
        description="Model-free price bounds, arbitrage detection, and "
                    "quote repair for piece-wise affine payoffs.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-market", help="generate a synthetic market")
    g.add_argument("--preset", choices=["five-asset", "random"],
                   default="five-asset")
    g.add_argument("--d", type=int, default=3,
                   help="dimension (random preset)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--samples", type=int,
                   default=market.MC_SAMPLES_DEFAULT)
    g.add_argument("--include", default=None,
                   help="comma list: assets,vanilla,basket,spread,"
                        "rainbow (five-asset preset)")
    g.add_argument("--single-model", action="store_true",
                   help="zero-spread market from the first model only")
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_gen_market)

    b = sub.add_parser("bounds", help="compute price bounds")
    b.add_argument("--instance", required=True)
    b.add_argument("--payoff", required=True,
                   help="e.g. 'call_on_max:assets=1+2+3,strike=5'")
    b.add_argument("--algo", choices=["ecp", "accp", "both"],
                   default="accp")
    b.add_argument("--epsilon", type=float, default=1e-3)
    b.add_argument("--tau", type=float, default=1.0)
    b.add_argument("--delta", type=float, default=0.7)
    b.add_argument("--gamma", type=float, default=0.1)
    b.add_argument("--zeta", type=float, default=0.8)
    b.add_argument("--xbar", default=None,
                   help="comma-separated truncation box (half-space "
                        "instances)")
    b.add_argument("--sweep", default=None, help="start:stop:step over "
                                                 "the strike parameter")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--no-warm-start", dest="warm_start",
                   action="store_false",
                   help="do not reuse support points across the sweep")
    b.add_argument("--out", default="-")
    b.set_defaults(func=cmd_bounds)

    d = sub.add_parser("detect", help="detect arbitrage")
    src = d.add_mutually_exclusive_group(required=True)
    src.add_argument("--instance")
    src.add_argument("--chain")
    d.add_argument("--epsilon", type=float, default=1e-3)
    d.add_argument("--out", default="-")
    d.set_defaults(func=cmd_detect)

    r = sub.add_parser("repair", help="repair a quote chain")
    r.add_argument("--chain", required=True)
    r.add_argument("--eta", type=float, default=arbitrage.ETA_DEFAULT)
    r.add_argument("--outlier-threshold", type=float, default=None)
    r.add_argument("--out", default="-")
    r.set_defaults(func=cmd_repair)

    m = sub.add_parser("measure", help="extract an extremal measure")
    m.add_argument("--instance", required=True)
    m.add_argument("--payoff", required=True)
    m.add_argument("--epsilon", type=float, default=1e-3)
    m.add_argument("--tau", type=float, default=1.0)
    m.add_argument("--delta", type=float, default=0.7)
    m.add_argument("--gamma", type=float, default=0.1)
    m.add_argument("--zeta", type=float, default=0.8)
    m.add_argument("--out", default="-")
    m.set_defaults(func=cmd_measure)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ResourceLimitError, ConditioningError) as exc:
        print("resource limit: %s" % exc, file=sys.stderr)
        return EXIT_RESOURCE
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
