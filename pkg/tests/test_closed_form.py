from fractions import Fraction as F

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from matchstab.closed_form import (
    FAMILY,
    NONE,
    UNIQUE,
    alternating_descendant_sums,
    cycle_incidence_matrix,
    exact_determinant,
    solve,
    solve_cycle,
    solve_rooted_tree,
    solve_tree,
    solve_tree_plus_edge,
)
from matchstab.decompose import find_weights
from matchstab.errors import InputError
from matchstab.graph import Multigraph, Topology, bipartition, classify_topology
from strategies import FRACTIONS, trees

PATH = Multigraph([(1, 2), (2, 3)])
STAR = Multigraph([(0, 1), (0, 2), (0, 3)])
TRIANGLE = Multigraph([(1, 2), (1, 3), (2, 3)])
C4 = Multigraph([(1, 2), (2, 3), (3, 4), (4, 1)])
PAW = Multigraph([(1, 2), (1, 3), (2, 3), (1, 4)])
QUARTER = {1: F(1, 4), 2: F(1, 2), 3: F(1, 4)}


def _balanced(g, values):
    return {v: sum(x for e, x in values.items() if v in e) for v in g.nodes}


def _check_balance(g, values, mu):
    for v in g.nodes:
        assert sum(x for (a, b), x in values.items() if v in (a, b)) == mu[v]


def test_rooted_tree_examples():
    a = solve_rooted_tree(STAR, 0, {0: F(1, 2), 1: F(1, 6), 2: F(1, 6), 3: F(1, 6)})
    assert set(a.values()) == {F(1, 6)}
    a = solve_rooted_tree(PATH, 1, QUARTER)
    assert a == {(2, 3): F(1, 4), (1, 2): F(1, 4)}
    chain = Multigraph([(1, 2), (2, 3), (3, 4)])
    a = solve_rooted_tree(chain, 1, {1: 1, 2: 1, 3: F(1, 5), 4: F(1, 2)})
    assert a[(3, 4)] == F(1, 2) and a[(2, 3)] == F(-3, 10)


def test_tree_examples():
    s = solve_tree(PATH, QUARTER)
    assert s.kind == UNIQUE and s.valid and s.values == {(1, 2): F(1, 4), (2, 3): F(1, 4)}
    s = solve_tree(PATH, {1: F(3, 10), 2: F(2, 5), 3: F(3, 10)})
    assert s.kind == NONE and "3/5 != 2/5" in s.witness
    s = solve_tree(Multigraph([(1, 2)]), {1: F(1, 2), 2: F(1, 2)})
    assert s.values == {(1, 2): F(1, 2)}
    with pytest.raises(InputError):
        solve_tree(TRIANGLE, {1: 1, 2: 1, 3: 1})


@given(trees(), st.data())
def test_recursion_equals_alternating_sums(g, data):
    mu = {v: data.draw(FRACTIONS) for v in g.nodes}
    root = data.draw(st.sampled_from(g.nodes))
    assert solve_rooted_tree(g, root, mu) == alternating_descendant_sums(g, root, mu)


@given(trees(), st.data())
def test_tree_solvable_iff_balanced(g, data):
    mu = {v: data.draw(FRACTIONS) for v in g.nodes}
    bp = bipartition(g)
    if data.draw(st.booleans()):  # force the balanced branch half of the time
        t1 = sum(mu[v] for v in bp.part1)
        t2 = sum(mu[v] for v in bp.part2)
        mu = {v: mu[v] * (t2 if v in bp.part1 else t1) for v in g.nodes}
    balanced = sum(mu[v] for v in bp.part1) == sum(mu[v] for v in bp.part2)
    s = solve_tree(g, mu)
    assert (s.kind == UNIQUE) == balanced
    if balanced:
        _check_balance(g, s.values, mu)


def test_cycle_examples():
    s = solve_cycle(TRIANGLE, {1: F(2, 5), 2: F(7, 20), 3: F(1, 4)})
    assert s.kind == UNIQUE
    assert [s.values[e] for e in TRIANGLE.edges] == [F(1, 4), F(3, 20), F(1, 10)]
    s = solve_cycle(C4, {v: F(1, 4) for v in C4.nodes})
    assert s.kind == FAMILY
    assert set(s.values.values()) == {F(1, 8)}
    assert s.interval == (F(-1, 8), F(1, 8))
    assert sorted(s.direction.values()) == [-1, -1, 1, 1]
    for e, f in (((1, 2), (2, 3)), ((2, 3), (3, 4))):
        assert s.direction[e] == -s.direction[f]
    s = solve_cycle(C4, {1: F(3, 10), 2: F(1, 5), 3: F(3, 10), 4: F(1, 5)})
    assert s.kind == NONE and "3/5 != 2/5" in s.witness


@given(st.integers(2, 6), st.data())
def test_even_cycle_family_solves_on_a_grid(half, data):
    n = 2 * half
    g = Multigraph([(k, k % n + 1) for k in range(1, n + 1)])
    alpha = {e: data.draw(FRACTIONS) for e in g.edges}
    mu = _balanced(g, alpha)
    s = solve_cycle(g, mu)
    assert s.kind == FAMILY and s.interval is not None
    lo, hi = s.interval
    for k in range(1, 10):
        t = lo + (hi - lo) * F(k, 10)
        point = s.at(t)
        _check_balance(g, point, mu)
        assert min(point.values()) > 0
    edge = s.at(hi)
    assert min(edge.values()) == 0


def test_even_cycle_without_positive_member():
    # balanced, but node 2 outweighs both neighbors, so no member of the family is positive
    c6 = Multigraph([(k, k % 6 + 1) for k in range(1, 7)])
    mu = {1: 1, 2: 10, 3: 1, 4: 1, 5: 10, 6: 1}
    s = solve_cycle(c6, mu)
    assert s.kind == FAMILY and not s.valid and s.interval is None
    _check_balance(c6, s.values, mu)


@pytest.mark.parametrize("n", range(3, 12))
def test_cycle_determinant(n):
    M = cycle_incidence_matrix(n)
    det = exact_determinant(M)
    assert det == 1 + (-1) ** (n + 1)
    assert det == sympy.Matrix(M).det()


@given(st.lists(st.lists(st.integers(-5, 5), min_size=4, max_size=4), min_size=4, max_size=4))
def test_determinant_against_sympy(rows):
    assert exact_determinant(rows) == sympy.Matrix(rows).det()


def test_tree_plus_edge_examples():
    mu = {1: F(7, 20), 2: F(3, 10), 3: F(1, 5), 4: F(3, 20)}
    s = solve_tree_plus_edge(PAW, mu)
    assert s.kind == UNIQUE
    assert s.values == {(1, 2): F(3, 20), (1, 3): F(1, 20), (2, 3): F(3, 20), (1, 4): F(3, 20)}
    _check_balance(PAW, s.values, mu)
    looped = Multigraph([(1, 1), (1, 2)])
    s = solve_tree_plus_edge(looped, {1: F(3, 4), 2: F(1, 4)})
    assert s.values == {(1, 2): F(1, 4), (1, 1): F(1, 2)}
    c4p = Multigraph([(1, 2), (2, 3), (3, 4), (4, 1), (1, 5)])
    mu = {1: 2, 2: 1, 3: 1, 4: 1, 5: 1}
    s = solve_tree_plus_edge(c4p, mu)
    assert s.kind == FAMILY and s.direction[(1, 5)] == 0
    _check_balance(c4p, s.values, mu)
    _check_balance(c4p, s.at(F(1, 3)), mu)
    s = solve_tree_plus_edge(c4p, {1: 1, 2: 1, 3: 1, 4: 1, 5: 1})
    assert s.kind == NONE


def test_sympy_oracle_on_paw():
    a12, a13, a23, a14 = sympy.symbols("a12 a13 a23 a14")
    mu = [sympy.Rational(7, 20), sympy.Rational(3, 10), sympy.Rational(1, 5), sympy.Rational(3, 20)]
    sol = sympy.solve([a12 + a13 + a14 - mu[0], a12 + a23 - mu[1], a13 + a23 - mu[2], a14 - mu[3]],
                      [a12, a13, a23, a14])
    s = solve(PAW, {k + 1: F(str(mu[k])) for k in range(4)})
    assert [s.values[e] for e in PAW.edges] == [F(str(sol[x])) for x in (a12, a13, a23, a14)]


@st.composite
def covered_instances(draw):
    """A tree, odd cycle, tree plus odd-cycle edge or tree plus self-loop, with mu = mu^alpha."""
    kind = draw(st.sampled_from(["tree", "cycle", "tree+edge", "tree+loop"]))
    if kind == "cycle":
        n = 2 * draw(st.integers(1, 5)) + 1
        g = Multigraph([(k, k % n + 1) for k in range(1, n + 1)])
    else:
        base = draw(trees(min_nodes=3 if kind == "tree+edge" else 2, max_nodes=8))
        edges = list(base.edges)
        if kind == "tree+loop":
            r = draw(st.sampled_from(base.nodes))
            edges.append((r, r))
        elif kind == "tree+edge":
            bp = bipartition(base)
            same = [(a, b) for a in base.nodes for b in base.nodes
                    if a < b and not base.has_edge(a, b) and (a in bp.part1) == (b in bp.part1)]
            if not same:
                g = Multigraph(edges)
                return g, _balanced(g, {e: draw(FRACTIONS) for e in g.edges})
            edges.append(draw(st.sampled_from(same)))
        g = Multigraph(edges)
    alpha = {e: draw(FRACTIONS) for e in g.edges}
    return g, _balanced(g, alpha)


@given(covered_instances())
def test_closed_form_equals_lp(inst):
    g, mu = inst
    s = solve(g, mu)
    assert classify_topology(g).tag in (Topology.TREE, Topology.ODD_CYCLE,
                                        Topology.TREE_PLUS_ODD_CYCLE_EDGE,
                                        Topology.TREE_PLUS_SELF_LOOP)
    assert s.kind == UNIQUE and s.valid
    d = find_weights(g, mu)
    assert d.member and d.weights == s.weights


def test_other_topologies_are_refused():
    k4 = Multigraph([(a, b) for a in range(1, 5) for b in range(a + 1, 5)])
    with pytest.raises(InputError, match="Other"):
        solve(k4, {v: 1 for v in k4.nodes})


def test_json_shapes():
    out = solve(C4, {v: F(1, 4) for v in C4.nodes}).to_json()
    assert out["kind"] == FAMILY and out["family"]["interval"] == ["-1/8", "1/8"]
    out = solve(PATH, {1: 1, 2: 1, 3: 1}).to_json()
    assert out["kind"] == NONE and out["witness"]
