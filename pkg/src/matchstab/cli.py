"""Command-line interface.

Exit codes: 0 success or member, 3 not a member (``check``, ``decompose``) or
harness discrepancies (``verify``), 1 usage error, 2 input or resource error.
Rationals are written as ``"p/q"`` strings, simulation estimates as floats.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bipartite import (
    PairArrivalLaw,
    bipartite_balance_residual,
    simulate_bipartite_replications,
)
from .closed_form import solve, solve_rooted_tree
from .decompose import decompose_asym, find_weights, maxflow_decompose
from .errors import InputError, MatchstabError
from .graph import read_graph
from .simulation import balance_residual, simulate_replications, trace_slope
from .stability import (
    EdgeWeights,
    check_ncond,
    check_ncond_asym,
    check_ncond_bipartite,
    check_ncond_independent,
    read_measure,
    weighted_measure,
)
from ._util import edge_label, frac_str, to_fraction
from .verify import run_harness
from .walk import EdgeWalk, check_detailed_balance, walk_from_weights, weights_from_reversible

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NEGATIVE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _v1(text):
    return [s for s in (x.strip() for x in text.split(",")) if s]


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="matchstab", description="Stability regions of stochastic matching models.")
    p.add_argument("--output", "-o", help="write JSON here instead of standard output")
    p.add_argument("--quiet", action="store_true", help="no progress lines on standard error")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="membership of a measure in a region")
    c.add_argument("--graph", required=True)
    c.add_argument("--measure", required=True)
    c.add_argument("--region", choices=["general", "independent", "bipartite", "asym"],
                   default="general")
    c.add_argument("--v1", type=_v1, help="comma-separated customer side (asym region)")

    d = sub.add_parser("decompose", help="edge weights reproducing a measure, or a certificate")
    d.add_argument("--graph", required=True)
    d.add_argument("--measure", required=True)
    d.add_argument("--method", choices=["lp", "asym", "maxflow"], default="lp")
    d.add_argument("--v1", type=_v1)

    s = sub.add_parser("simulate", help="general matching model")
    s.add_argument("--graph", required=True)
    s.add_argument("--measure", required=True)
    s.add_argument("--policy", choices=["fcfm", "ml", "random"], default="fcfm")
    s.add_argument("--steps", type=_positive_int, default=10**6)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--replications", type=_positive_int, default=1)
    s.add_argument("--workers", type=_positive_int, default=1)

    b = sub.add_parser("simulate-bipartite", help="pairwise-arrival bipartite model")
    b.add_argument("--graph", required=True)
    b.add_argument("--marginal1", required=True)
    b.add_argument("--marginal2", required=True)
    b.add_argument("--policy", choices=["ml", "fcfm", "random"], default="ml")
    b.add_argument("--steps", type=_positive_int, default=10**6)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--replications", type=_positive_int, default=1)
    b.add_argument("--workers", type=_positive_int, default=1)

    r = sub.add_parser("rates", help="closed-form solution of the balance system")
    r.add_argument("--graph", required=True)
    r.add_argument("--measure", required=True)
    r.add_argument("--root", help="solve a tree at every node except this one")

    w = sub.add_parser("walk", help="weighted random walk from weights, or weights from a reversible walk")
    w.add_argument("--graph", required=True)
    g = w.add_mutually_exclusive_group(required=True)
    g.add_argument("--weights", help="file of 'u v weight' lines")
    g.add_argument("--walk", help='JSON file {"i": {"j": "p/q"}}')
    w.add_argument("--measure", help="invariant measure of --walk")

    v = sub.add_parser("verify", help="cross-check every module on all small graphs")
    v.add_argument("--max-nodes", type=_positive_int, default=4)
    v.add_argument("--measures", type=_positive_int, default=10)
    v.add_argument("--seed", type=int, default=0)
    return p


# ---------------------------------------------------------------------------

def read_weights(g, path) -> EdgeWeights:
    vals = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) != 3:
                raise InputError(f"line {lineno}: expected 'u v weight', got {line.rstrip()!r}")
            vals[(parts[0], parts[1])] = to_fraction(parts[2])
    return EdgeWeights(g, vals)


def cmd_check(a):
    g, mu = read_graph(a.graph), read_measure(a.measure)
    if a.region == "general":
        res = check_ncond(g, mu)
    elif a.region == "independent":
        res = check_ncond_independent(g, mu)
    elif a.region == "bipartite":
        res = check_ncond_bipartite(g, mu)
    else:
        if not a.v1:
            raise UsageError("--v1 is required for the asym region")
        res = check_ncond_asym(g, a.v1, mu)
    return res.to_json(), EXIT_OK if res.member else EXIT_NEGATIVE


def cmd_decompose(a):
    g, mu = read_graph(a.graph), read_measure(a.measure)
    if a.method == "lp":
        res = find_weights(g, mu)
    elif a.method == "asym":
        if not a.v1:
            raise UsageError("--v1 is required for --method asym")
        res = decompose_asym(g, a.v1, mu)
    else:
        res = maxflow_decompose(g, mu, a.v1)
    return res.to_json(), EXIT_OK if res.member else EXIT_NEGATIVE


def cmd_simulate(a):
    g, mu = read_graph(a.graph), read_measure(a.measure)
    est = simulate_replications(g, mu, a.policy, a.steps, a.seed, a.replications, a.workers)
    return {"theta": {edge_label(*e): x for e, x in est.theta.items()},
            "residuals": {str(k): x for k, x in balance_residual(est, mu).items()},
            "max_buffer": est.max_buffer,
            "mean_buffer": est.mean_buffer,
            "slope": trace_slope(est.trace),
            "steps": est.n}, EXIT_OK


def cmd_simulate_bipartite(a):
    g = read_graph(a.graph)
    law = PairArrivalLaw(read_measure(a.marginal1), read_measure(a.marginal2))
    est = simulate_bipartite_replications(g, law, a.policy, a.steps, a.seed, a.replications,
                                          a.workers)
    return {"theta": {edge_label(*e): x for e, x in est.theta_b.items()},
            "residuals": {str(k): x for k, x in bipartite_balance_residual(est, law).items()},
            "max_buffer": list(est.max_buffer),
            "mean_buffer": est.mean_buffer,
            "slope": trace_slope(est.trace),
            "steps": est.n}, EXIT_OK


def cmd_rates(a):
    g, mu = read_graph(a.graph), read_measure(a.measure)
    if a.root is not None:
        alpha = solve_rooted_tree(g, a.root, mu)
        return {"kind": "RootedTree",
                "weights": {edge_label(*e): frac_str(x) for e, x in alpha.items()},
                "family": None, "witness": None}, EXIT_OK
    return solve(g, mu).to_json(), EXIT_OK


def cmd_walk(a):
    g = read_graph(a.graph)
    if a.weights:
        alpha = read_weights(g, a.weights)
        P = walk_from_weights(g, alpha)
        mu = weighted_measure(g, alpha)
        ok, _ = check_detailed_balance(g, P, mu)
        return {"walk": P.to_json(), "measure": mu.to_json(), "detailed_balance": ok}, EXIT_OK
    if not a.measure:
        raise UsageError("--measure is required with --walk")
    with open(a.walk, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"walk file is not JSON: {exc}") from None
    P = EdgeWalk.from_json(g, data)
    alpha = weights_from_reversible(g, P, read_measure(a.measure))
    return {"weights": alpha.to_json()}, EXIT_OK


def cmd_verify(a, log):
    rep = run_harness(a.max_nodes, a.measures, a.seed, progress=log)
    return rep.to_json(), EXIT_OK if rep.ok else EXIT_NEGATIVE


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    def log(msg):
        if not a.quiet:
            print(msg, file=sys.stderr)

    handlers = {"check": cmd_check, "decompose": cmd_decompose, "simulate": cmd_simulate,
                "simulate-bipartite": cmd_simulate_bipartite, "rates": cmd_rates,
                "walk": cmd_walk}
    try:
        if a.command == "verify":
            out, code = cmd_verify(a, log)
        else:
            out, code = handlers[a.command](a)
    except UsageError as exc:
        print(f"matchstab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MatchstabError, OSError) as exc:
        print(f"matchstab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    text = json.dumps(out, indent=2, sort_keys=True)
    if a.output:
        with open(a.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
