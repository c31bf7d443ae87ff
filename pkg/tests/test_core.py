import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import rnd_dfa, rnd_graph, seeded
from nestwa.core import (FINITE, Automaton, LassoWord, ValidationError, WeightedAutomaton,
                         buchi_lasso, degeneralize, determinize, howard, is_deterministic,
                         lasso_membership, min_mean_cycle, minimize_dfa, sccs, union_dfa, validate)
from nestwa.values import SILENT, SUM, LIMAVG

words = [w for n in range(6) for w in itertools.product("ab", repeat=n)]


def nfa(rng, n):
    states = list(range(n))
    trans = [(q, a, r) for q in states for a in "ab" for r in states if rng.random() < 0.3]
    return Automaton("ab", states, {0}, trans, {q for q in states if rng.random() < 0.4}, FINITE)


def test_validate_reports_every_issue():
    a = Automaton("ab", [0], set(), [(0, "c", 1)], {2}, FINITE)
    with pytest.raises(ValidationError) as e:
        validate(a)
    assert {"EmptyInitialSet", "UndeclaredState", "UndeclaredLetter"} <= e.value.kinds


def test_validate_weights():
    base = Automaton("a", [0], {0}, [(0, "a", 0)], {0}, FINITE)
    with pytest.raises(ValidationError) as e:
        validate(WeightedAutomaton(base, {(0, "a", 0): SILENT}, LIMAVG))
    assert {"ValueFnModeMismatch", "SilentWeightInFiniteMode"} <= e.value.kinds
    with pytest.raises(ValidationError) as e:
        validate(WeightedAutomaton(base, {}, SUM))
    assert "MissingWeight" in e.value.kinds


@given(st.integers(0, 10 ** 6), st.integers(1, 4))
@settings(max_examples=60)
def test_determinize_keeps_language(seed, n):
    a = nfa(seeded(seed), n)
    d = determinize(a)
    assert is_deterministic(d)
    assert all(a.accepts_finite(w) == d.accepts_finite(w) for w in words)


@given(st.integers(0, 10 ** 6), st.integers(1, 5))
@settings(max_examples=60)
def test_minimize_keeps_language(seed, n):
    d = determinize(nfa(seeded(seed), n))
    m = minimize_dfa(d)
    assert all(m.accepts_finite(w) == d.accepts_finite(w) for w in words)
    assert len(m.states) <= len(d.states)
    assert minimize_dfa(m).states == m.states


@given(st.integers(0, 10 ** 6))
@settings(max_examples=40)
def test_union_dfa(seed):
    rng = seeded(seed)
    ds = [rnd_dfa(rng, rng.randint(1, 3)) for _ in range(rng.randint(1, 3))]
    u = union_dfa(ds)
    assert all(u.accepts_finite(w) == any(d.accepts_finite(w) for d in ds) for w in words)


def test_sccs_order_and_cover():
    succ = {0: [1], 1: [0, 2], 2: [3], 3: [2], 4: []}
    comps = sccs(list(succ), lambda v: succ[v])
    assert sorted(map(sorted, comps)) == [[0, 1], [2, 3], [4]]


def test_degeneralize_needs_both_sets():
    # 0 <-> 1; set A = {0}, set B = {1}
    edges = [(0, "a", 1), (1, "b", 0)]
    nodes, init, dedges, acc = degeneralize([0, 1], [0], edges, [{0}, {1}])
    res = buchi_lasso(nodes, init, lambda v: [(l, w) for u, l, w in dedges if u == v], acc)
    assert res is not None
    # without a node of set B on the cycle there is no accepting lasso
    nodes, init, dedges, acc = degeneralize([0], [0], [(0, "a", 0)], [{0}, set()])
    assert buchi_lasso(nodes, init, lambda v: [(l, w) for u, l, w in dedges if u == v], acc) is None


def test_lasso_membership():
    # words with infinitely many a
    a = Automaton("ab", [0, 1], {0}, [(0, "a", 1), (0, "b", 0), (1, "a", 1), (1, "b", 0)], {1})
    assert lasso_membership(a, LassoWord("bb", "ab"))
    assert not lasso_membership(a, LassoWord("aaa", "b"))


def brute_min_mean(nodes, edges):
    best = None
    adj = {}
    for u, _, v, w in edges:
        adj.setdefault(u, []).append((v, w))

    def walk(start, v, total, length, seen):
        nonlocal best
        for x, w in adj.get(v, ()):
            if x == start:
                m = Fraction(total + w, length + 1)
                best = m if best is None or m < best else best
            elif x not in seen and x > start:
                walk(start, x, total + w, length + 1, seen | {x})

    for s in nodes:
        walk(s, s, 0, 0, {s})
    return best


@given(st.integers(0, 10 ** 6), st.integers(1, 7))
@settings(max_examples=80)
def test_karp_matches_brute_force_per_scc(seed, n):
    nodes, edges = rnd_graph(seeded(seed), n)
    for comp in sccs(nodes, lambda v: [e[2] for e in edges if e[0] == v]):
        cs = set(comp)
        inner = [e for e in edges if e[0] in cs and e[2] in cs]
        assert min_mean_cycle(comp, inner) == brute_min_mean(comp, inner)


@given(st.integers(0, 10 ** 6), st.integers(1, 7))
@settings(max_examples=60)
def test_howard_matches_karp(seed, n):
    rng = seeded(seed)
    nodes, edges = rnd_graph(rng, n, p=0.4)
    # howard wants an outgoing edge everywhere
    edges += [(v, (v, "loop"), v, Fraction(9)) for v in nodes]
    eta, pot, _ = howard(nodes, edges)
    assert min(eta.values()) == brute_min_mean(nodes, edges)
    for u, _, v, w in edges:
        if eta[u] == eta[v]:
            assert pot[u] <= w - eta[u] + pot[v]
