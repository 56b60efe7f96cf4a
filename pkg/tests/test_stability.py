import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from matchstab.errors import InputError
from matchstab.graph import Multigraph, bipartition, neighborhood
from matchstab.stability import (
    EdgeWeights,
    NodeMeasure,
    check_ncond,
    check_ncond_asym,
    check_ncond_bipartite,
    check_ncond_independent,
    normalize,
    parse_measure,
    tilde_marginals,
    weighted_measure,
)
from strategies import FRACTIONS, connected_graphs, measures, positive_weights

TRIANGLE = Multigraph([(1, 2), (1, 3), (2, 3)])
PATH = Multigraph([(1, 2), (2, 3)])
STAR = Multigraph([(0, 1), (0, 2), (0, 3)])
PAW = Multigraph([(1, 2), (1, 3), (2, 3), (1, 4)])
C4 = Multigraph([(1, 2), (2, 3), (3, 4), (4, 1)])
C5 = Multigraph([(k, k % 5 + 1) for k in range(1, 6)])
UNIFORM3 = {1: F(1, 3), 2: F(1, 3), 3: F(1, 3)}


def test_weighted_measure_examples():
    assert weighted_measure(TRIANGLE, {e: F(1, 6) for e in TRIANGLE.edges}) == UNIFORM3
    assert dict(weighted_measure(PATH, {(1, 2): F(1, 4), (2, 3): F(1, 4)})) == {
        1: F(1, 4), 2: F(1, 2), 3: F(1, 4)}
    looped = Multigraph([("r", "r"), ("r", "l")])
    mu = weighted_measure(looped, {("r", "l"): F(1, 4), ("r", "r"): F(1, 2)})
    assert dict(mu) == {"r": F(3, 4), "l": F(1, 4)}


def test_weights_must_cover_exactly_the_edges():
    with pytest.raises(InputError):
        EdgeWeights(PATH, {(1, 2): 1})
    with pytest.raises(InputError):
        EdgeWeights(PATH, {(1, 2): 1, (2, 3): 1, (1, 3): 1})
    with pytest.raises(InputError):
        EdgeWeights(PATH, {(1, 2): 1, (2, 3): 0})
    assert EdgeWeights(PATH, {(2, 1): 1, (3, 2): 0}, "nonnegative")[1, 2] == 1


def test_normalize_examples():
    assert dict(normalize({1: 2, 2: 1, 3: 1})) == {1: F(1, 2), 2: F(1, 4), 3: F(1, 4)}
    assert dict(normalize({1: F(3, 4), 2: F(1, 4)})) == {1: F(3, 4), 2: F(1, 4)}
    assert normalize(UNIFORM3).total == 1


def test_measures_need_full_support():
    with pytest.raises(InputError):
        NodeMeasure({1: 0, 2: 1})
    with pytest.raises(InputError):
        check_ncond(PATH, {1: 1, 2: 1})
    with pytest.raises(InputError):
        check_ncond(PATH, {1: 1, 2: 1, 3: 1, 4: 1})


@given(connected_graphs(), st.data())
def test_linearity_and_mass_identity(g, data):
    alpha = data.draw(positive_weights(g))
    c = data.draw(FRACTIONS)
    mu = weighted_measure(g, alpha)
    scaled = weighted_measure(g, {e: c * x for e, x in alpha.items()})
    assert dict(scaled) == {v: c * mu[v] for v in g.nodes}
    loops = sum(x for (u, v), x in alpha.items() if u == v)
    plain = sum(x for (u, v), x in alpha.items() if u != v)
    assert mu.total == loops + 2 * plain


def _brute_member(g, mu):
    for r in range(1, g.n):
        for U in itertools.combinations(g.nodes, r):
            if sum(mu[v] for v in U) >= sum(mu[v] for v in neighborhood(g, U)):
                return False
    return True


def test_check_ncond_examples():
    assert check_ncond(TRIANGLE, UNIFORM3).member
    verdict = check_ncond(PATH, UNIFORM3)
    assert not verdict.member
    assert verdict.violation.subset in ({1, 3}, {2})


def test_paw_boundary_violation():
    mu = {1: F(1, 10), 2: F(2, 5), 3: F(2, 5), 4: F(1, 10)}
    verdict = check_ncond(PAW, mu)
    assert not verdict.member
    v = verdict.violation
    assert v.slack == 0 and v.mu_U == v.mu_EU
    # {3, 4} is one of several zero-slack subsets; none has positive slack
    zero = [frozenset(U) for r in range(1, 4) for U in itertools.combinations(PAW.nodes, r)
            if sum(mu[x] for x in U) == sum(mu[x] for x in neighborhood(PAW, U))]
    assert frozenset({3, 4}) in zero and v.subset in zero


@given(connected_graphs(max_nodes=5), st.data())
def test_check_ncond_matches_brute_force(g, data):
    mu = data.draw(measures(g))
    verdict = check_ncond(g, mu)
    assert verdict.member == _brute_member(g, mu)
    if not verdict.member:
        v = verdict.violation
        assert v.mu_U >= v.mu_EU
        assert v.mu_U == sum(mu[x] for x in v.subset)
        assert v.mu_EU == sum(mu[x] for x in neighborhood(g, v.subset))


def test_check_ncond_independent_examples():
    assert check_ncond_independent(TRIANGLE, UNIFORM3).member
    star = {0: F(2, 5), 1: F(1, 5), 2: F(1, 5), 3: F(1, 5)}
    verdict = check_ncond_independent(STAR, star)
    assert not verdict.member
    assert verdict.violation.subset == {1, 2, 3}
    assert (verdict.violation.mu_U, verdict.violation.mu_EU) == (F(3, 5), F(2, 5))
    assert check_ncond_independent(C5, {v: F(1, 5) for v in C5.nodes}).member


@given(connected_graphs(max_nodes=5), st.data())
def test_conditions_agree_off_bipartite(g, data):
    mu = data.draw(measures(g))
    if bipartition(g) is None:
        assert check_ncond(g, mu).member == check_ncond_independent(g, mu).member


@given(connected_graphs(max_nodes=6, loops=False), st.data())
def test_bipartite_graphs_have_empty_region(g, data):
    if bipartition(g) is not None:
        assert not check_ncond(g, data.draw(measures(g))).member


@given(connected_graphs(max_nodes=6), st.data())
def test_weighted_measures_are_inside(g, data):
    mu = weighted_measure(g, data.draw(positive_weights(g)))
    bp = bipartition(g)
    if bp is None:
        assert check_ncond_independent(g, mu).member
        assert check_ncond(g, mu).member
    else:
        assert check_ncond_bipartite(g, mu).member
        assert mu.mass(bp.part1) == mu.mass(bp.part2) == mu.total / 2


def test_check_ncond_bipartite_examples():
    assert check_ncond_bipartite(PATH, {1: F(1, 4), 2: F(1, 2), 3: F(1, 4)}).member
    # balanced and every one-sided subset is strictly dominated by its neighbors
    assert check_ncond_bipartite(PATH, {1: F(3, 10), 2: F(1, 2), 3: F(1, 5)}).member
    unbalanced = check_ncond_bipartite(PATH, {1: F(3, 10), 2: F(2, 5), 3: F(3, 10)})
    assert not unbalanced.member and unbalanced.violation.subset == {1, 3}
    assert check_ncond_bipartite(C4, {v: F(1, 4) for v in C4.nodes}).member
    with pytest.raises(InputError):
        check_ncond_bipartite(TRIANGLE, UNIFORM3)


def test_check_ncond_asym_examples():
    leaves = {1, 2, 3}
    assert check_ncond_asym(STAR, leaves, {0: 1, 1: F(1, 4), 2: F(1, 4), 3: F(1, 4)}).member
    verdict = check_ncond_asym(STAR, leaves, {0: F(1, 2), 1: F(1, 4), 2: F(1, 4), 3: F(1, 4)})
    assert not verdict.member and verdict.violation.subset == leaves
    assert check_ncond_asym(PATH, {2}, {1: 1, 2: F(3, 2), 3: 1}).member
    assert not check_ncond_asym(PATH, {2}, {1: 1, 2: 2, 3: 1}).member
    for trivial in (set(), {1, 2, 3}):
        with pytest.raises(InputError):
            check_ncond_asym(PATH, trivial, UNIFORM3)


def test_tilde_marginals():
    m1, m2 = tilde_marginals(PATH, {1: F(1, 4), 2: F(1, 2), 3: F(1, 4)})
    assert dict(m1) == {1: F(1, 2), 3: F(1, 2)} and dict(m2) == {2: 1}
    m1, m2 = tilde_marginals(Multigraph([(1, 2)]), {1: 1, 2: 3})
    assert dict(m1) == {1: 1} and dict(m2) == {2: 1}
    m1, m2 = tilde_marginals(C4, {v: F(1, 4) for v in C4.nodes})
    assert set(m1.values()) == set(m2.values()) == {F(1, 2)}


def test_parse_measure():
    mu = parse_measure("# rates\na 0.25\nb 3/4\n")
    assert dict(mu) == {"a": F(1, 4), "b": F(3, 4)}
    for bad in ("a\n", "a 1\na 2\n", "a x\n", "a 0\n", ""):
        with pytest.raises(InputError):
            parse_measure(bad)


def test_verdict_json():
    out = check_ncond(PATH, UNIFORM3).to_json()
    assert out["member"] is False
    assert set(out["violation"]) == {"subset", "mu_U", "mu_EU"}
    assert "/" in out["violation"]["mu_U"]
