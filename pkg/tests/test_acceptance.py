"""Acceptance criteria 1 to 10.

Each test prints one ``criterion N: PASS`` or ``criterion N: FAIL`` line to the
terminal (even under output capture) before asserting. Run with::

    pytest tests/test_acceptance.py -v
"""

import itertools
import random
import time
from fractions import Fraction as F

import pytest

from matchstab.bipartite import PairArrivalLaw, bipartite_balance_residual, simulate_bipartite
from matchstab.closed_form import UNIQUE, cycle_incidence_matrix, exact_determinant, solve
from matchstab.decompose import find_weights
from matchstab.graph import Multigraph, Topology, bipartition, classify_topology
from matchstab.simulation import (
    MatchingPolicy,
    balance_residual,
    simulate_general,
    weights_from_rates,
)
from matchstab.stability import check_ncond, weighted_measure
from matchstab.verify import run_asym, run_bipartite, run_general
from matchstab.walk import is_stationary, walk_from_weights, weights_from_reversible

POLICIES = list(MatchingPolicy)
STEPS = 10**6


@pytest.fixture
def verdict(capsys):
    def report(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail
    return report


@pytest.fixture(scope="module")
def harness():
    """Criteria 1 to 3 reports, shared with criterion 4."""
    return {}


def _harness_part(harness, key, job):
    if key not in harness:
        harness[key] = job()
    return harness[key]


def _general(harness):
    return _harness_part(harness, "general", lambda: run_general(5, 50, seed=101))


def _bipartite(harness):
    return _harness_part(harness, "bipartite", lambda: run_bipartite(6, 50, seed=102))


def _asym(harness):
    return _harness_part(harness, "asym", lambda: run_asym(5, 50, seed=103))


# -- helpers for random instances ------------------------------------------

def _rational(rng):
    return F(rng.randint(1, 40), rng.randint(1, 8))


def _random_tree(rng, n):
    return [(rng.randint(1, v - 1), v) for v in range(2, n + 1)]


def _random_graph(rng, max_nodes, loops=True):
    n = rng.randint(2, max_nodes)
    edges = set(_random_tree(rng, n))
    for a, b in itertools.combinations(range(1, n + 1), 2):
        if rng.random() < 0.3:
            edges.add((a, b))
    if loops:
        for v in range(1, n + 1):
            if rng.random() < 0.15:
                edges.add((v, v))
    return Multigraph(sorted(edges), nodes=range(1, n + 1))


def _weighted(g, rng):
    alpha = {e: _rational(rng) for e in g.edges}
    return alpha, weighted_measure(g, alpha)


# -- 1 to 4: exact region checks --------------------------------------------

def test_criterion_1_general_equivalence(harness, verdict):
    t0 = time.perf_counter()
    rep = _general(harness)
    secs = time.perf_counter() - t0
    n = rep.counts["general"]
    verdict(1, rep.ok and n > 0 and secs <= 300,
            f"{n} instances, {len(rep.discrepancies)} discrepancies, {secs:.0f}s")


def test_criterion_2_bipartite_equivalence(harness, verdict):
    rep = _bipartite(harness)
    n = rep.counts["bipartite"]
    verdict(2, rep.ok and n > 0, f"{n} instances, {len(rep.discrepancies)} discrepancies")


def test_criterion_3_asym_agreement(harness, verdict):
    rep = _asym(harness)
    n, m = rep.counts["asym"], rep.counts["maxflow"]
    verdict(3, rep.ok and n > 0 and m > 0,
            f"{n} one-sided instances, {m} with max flow, {len(rep.discrepancies)} discrepancies")


def test_criterion_4_certificates(harness, verdict):
    reports = {"general": _general(harness), "bipartite": _bipartite(harness), "asym": _asym(harness)}
    parts, ok = [], True
    for tag, rep in reports.items():
        c = rep.certificates
        bad = [d for d in rep.discrepancies if "certificate" in d["check"]]
        outside, negative, boundary = c[f"{tag}:not-member"], c[f"{tag}:negative"], c[f"{tag}:boundary"]
        # every non-member is either strictly outside (negative objective) or on the
        # boundary, where an exact nonnegative decomposition rules a negative one out
        ok &= not bad and outside > 0 and negative + boundary == outside and negative > 0
        parts.append(f"{tag}: {negative} negative + {boundary} boundary of {outside}")
    cuts = reports["asym"].certificates["maxflow:cut"]
    verdict(4, ok, "; ".join(parts) + f"; {cuts} max-flow cuts")


# -- 5 and 6: random walks and closed forms ---------------------------------

def test_criterion_5_random_walks(verdict):
    rng = random.Random(105)
    failures = 0
    for _ in range(1000):
        g = _random_graph(rng, 8)
        alpha, mu = _weighted(g, rng)
        P = walk_from_weights(g, alpha)
        back = weights_from_reversible(g, P, mu)
        if not (is_stationary(g, P, mu) and dict(back) == alpha
                and walk_from_weights(g, back).transition == P.transition):
            failures += 1
    verdict(5, failures == 0, f"1000 instances, {failures} failures")


def _covered_instance(rng, kind):
    if kind == "cycle":
        n = rng.choice([3, 5, 7, 9, 11])
        return Multigraph([(k, k % n + 1) for k in range(1, n + 1)])
    while True:
        n = rng.randint(3 if kind == "tree+edge" else 2, 10)
        edges = _random_tree(rng, n)
        if kind == "tree":
            return Multigraph(edges)
        if kind == "tree+loop":
            v = rng.randint(1, n)
            return Multigraph(edges + [(v, v)])
        bp = bipartition(Multigraph(edges))
        same = [(a, b) for a, b in itertools.combinations(range(1, n + 1), 2)
                if (a, b) not in edges and (a in bp.part1) == (b in bp.part1)]
        if same:
            return Multigraph(edges + [rng.choice(same)])


# a path closed by its extra edge is a plain odd cycle
EXPECTED_TAG = {"tree": {Topology.TREE}, "cycle": {Topology.ODD_CYCLE},
                "tree+edge": {Topology.TREE_PLUS_ODD_CYCLE_EDGE, Topology.ODD_CYCLE},
                "tree+loop": {Topology.TREE_PLUS_SELF_LOOP}}


def test_criterion_6_closed_form_vs_lp(verdict):
    rng = random.Random(106)
    failures = 0
    for k in range(200):
        kind = list(EXPECTED_TAG)[k % 4]
        g = _covered_instance(rng, kind)
        alpha, mu = _weighted(g, rng)
        s = solve(g, mu)
        d = find_weights(g, mu)
        if not (classify_topology(g).tag in EXPECTED_TAG[kind] and s.kind == UNIQUE and s.valid
                and d.member and d.weights == s.weights and dict(s.weights) == alpha):
            failures += 1
    dets = {n: exact_determinant(cycle_incidence_matrix(n)) for n in (3, 5, 7, 9, 11)}
    verdict(6, failures == 0 and set(dets.values()) == {2},
            f"200 instances, {failures} mismatches; determinants {[str(d) for d in dets.values()]}")


# -- 7 to 10: simulation ----------------------------------------------------

def test_criterion_7_triangle_convergence(verdict):
    g = Multigraph([(1, 2), (1, 3), (2, 3)])
    oracle = solve(g, {v: F(1, 3) for v in g.nodes}).values
    assert set(oracle.values()) == {F(1, 6)}
    lines, ok = [], True
    for policy in POLICIES:
        t0 = time.perf_counter()
        est = simulate_general(g, {1: F(1, 3), 2: F(1, 3), 3: F(1, 3)}, policy, STEPS, seed=107)
        secs = time.perf_counter() - t0
        dev = max(abs(est.theta[e] - float(oracle[e])) for e in g.edges)
        res = max(abs(r) for r in balance_residual(est, {1: 1, 2: 1, 3: 1}).values())
        ok &= dev <= 0.01 and res <= 0.01 and secs <= 30
        lines.append(f"{policy.value}: dev {dev:.4f}, residual {res:.4f}, {secs:.1f}s")
    verdict(7, ok, "; ".join(lines))


def test_criterion_8_policy_invariance(verdict):
    paw = Multigraph([(1, 2), (1, 3), (2, 3), (1, 4)])
    mu = {1: F(7, 20), 2: F(3, 10), 3: F(1, 5), 4: F(3, 20)}
    oracle = solve(paw, mu).values
    assert [oracle[e] for e in paw.edges] == [F(3, 20), F(1, 20), F(3, 20), F(3, 20)]
    est = {p: weights_from_rates(simulate_general(paw, mu, p, STEPS, seed=108)) for p in POLICIES}
    dev = max(abs(est[p][e] - float(oracle[e])) for p in POLICIES for e in paw.edges)
    spread = max(abs(est[p][e] - est[q][e])
                 for p, q in itertools.combinations(POLICIES, 2) for e in paw.edges)
    verdict(8, dev <= 0.01 and spread <= 0.015,
            f"max deviation from closed form {dev:.4f}, max pairwise policy gap {spread:.4f}")


def test_criterion_9_bipartite_path(verdict):
    path = Multigraph([(1, 2), (2, 3)])
    law = PairArrivalLaw({2: 1}, {1: F(1, 2), 3: F(1, 2)})
    est = simulate_bipartite(path, law, "ml", STEPS, seed=109)
    dev = abs(est.theta_b[(2, 1)] - 0.5)
    res = max(abs(r) for r in bipartite_balance_residual(est, law).values())
    verdict(9, dev <= 0.01 and res <= 0.01, f"|theta_B[2,1] - 1/2| = {dev:.4f}, residual {res:.4f}")


def test_criterion_10_structural_invariants(verdict):
    rng = random.Random(110)
    instances = []
    while len(instances) < 100:
        g = _random_graph(rng, 6)
        if bipartition(g) is None:
            _, mu = _weighted(g, rng)
            assert check_ncond(g, mu).member
            instances.append((g, mu))
    runs = violations = mismatches = 0
    for k, (g, mu) in enumerate(instances):
        for policy in POLICIES:
            a = simulate_general(g, mu, policy, 10**4, seed=k, audit=True)
            b = simulate_general(g, mu, policy, 10**4, seed=k, audit=True)
            runs += 1
            violations += sum(a.violations.values()) + sum(b.violations.values())
            mismatches += not a.same_run(b)
    verdict(10, violations == 0 and mismatches == 0,
            f"{runs} runs, {violations} invariant violations, {mismatches} rerun mismatches")
