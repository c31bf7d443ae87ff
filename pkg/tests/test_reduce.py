from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import rnd_nwa, rnd_slave, rnd_weighted, seeded
from nestwa.core import LassoWord
from nestwa.decide import min_limavg, pipeline_automaton
from nestwa.finword import decompose
from nestwa.gallery import build_art, build_stuttering
from nestwa.nested import eval_det
from nestwa.oracle import lassos, oracle_value
from nestwa.reduce import (CapExceededEverywhere, NotRegularSlave, a_minus, afix, bound_sum_plus,
                           build_bounded_simulation, eliminate_silent, lemma4_reduce,
                           threshold_classes)
from nestwa.values import (BOTTOM, INF, INFINITY, LIMAVG, LIMINF, LIMSUP, MAX, MIN, SUM, SUMPLUS,
                           SUP, BSum)
from test_finword import words

short = lassos("ab", 2, 2)
threshold_fns = st.sampled_from([INF, SUP, LIMINF, LIMSUP])
lams = st.sampled_from([Fraction(-1), Fraction(0), Fraction(1, 2), Fraction(1)])


def below(v, lam, strict=False):
    return v is not INFINITY and (v < lam if strict else v <= lam)


@given(st.integers(0, 10 ** 6), st.sampled_from([INF, SUP, LIMINF, LIMSUP, LIMAVG]),
       st.sampled_from([MAX, MIN, BSum(2)]))
@settings(max_examples=25, deadline=None)
def test_lemma4_keeps_values(seed, f, g):
    nwa = rnd_nwa(seeded(seed), f, g, det=True)
    red = lemma4_reduce(nwa)
    for w in short:
        assert oracle_value(red, w).value == eval_det(nwa, w)


@given(st.integers(0, 10 ** 6), threshold_fns, st.sampled_from([MAX, MIN, BSum(2)]), lams, st.booleans())
@settings(max_examples=25, deadline=None)
def test_lemma4_threshold_merging_keeps_sides(seed, f, g, lam, strict):
    nwa = rnd_nwa(seeded(seed), f, g, det=True)
    red = lemma4_reduce(nwa, threshold=lam, strict=strict)
    for w in short:
        assert below(oracle_value(red, w).value, lam, strict) == below(eval_det(nwa, w), lam, strict)


def test_lemma4_rejects_sum_and_limavg_threshold():
    with pytest.raises(NotRegularSlave):
        lemma4_reduce(rnd_nwa(seeded(1), INF, SUM, det=True))
    with pytest.raises(ValueError):
        lemma4_reduce(rnd_nwa(seeded(1), LIMAVG, MAX, det=True), threshold=0)


@given(st.integers(0, 10 ** 6), st.sampled_from([MAX, MIN, BSum(2)]), lams, st.booleans())
@settings(max_examples=60, deadline=None)
def test_threshold_classes_keep_sides(seed, fn, lam, strict):
    dec = decompose(rnd_slave(seeded(seed), "ab", fn))
    merged = threshold_classes(dec, lam, strict)
    assert len(merged.entries) <= 3
    for w in words:
        a, b = dec.lookup(w), merged.lookup(w)
        if a is BOTTOM or a is INFINITY:
            assert a is b
        else:
            assert (a < lam if strict else a <= lam) == (b < lam if strict else b <= lam)


@given(st.integers(0, 10 ** 6), threshold_fns, lams, st.booleans())
@settings(max_examples=40, deadline=None)
def test_eliminate_silent_keeps_sides(seed, f, lam, strict):
    wa = rnd_weighted(seeded(seed), f, det=True)
    out = eliminate_silent(wa, lam=lam, strict=strict)
    assert all(w is not None and not isinstance(w, type(None)) for w in out.weight.values())
    for w in short:
        assert below(oracle_value(out, w).value, lam, strict) == below(oracle_value(wa, w).value, lam, strict)


@given(st.integers(0, 10 ** 6), threshold_fns, lams)
@settings(max_examples=40, deadline=None)
def test_a_minus_keeps_sides(seed, f, lam):
    wa = rnd_weighted(seeded(seed), f, det=True, p_silent=0)
    small = a_minus(wa, f, lam)
    assert len(small.states) <= len(wa.states)
    for w in short:
        assert below(oracle_value(small, w).value, lam) == below(oracle_value(wa, w).value, lam)


@given(st.integers(0, 10 ** 6), st.booleans())
@settings(max_examples=40, deadline=None)
def test_afix_keeps_infimum(seed, det):
    wa = rnd_weighted(seeded(seed), LIMAVG, det=det, p_silent=0.4)
    res = afix(wa)
    assert min_limavg(res.automaton) == min_limavg(wa)


@given(st.integers(0, 10 ** 6), threshold_fns, st.integers(0, 3))
@settings(max_examples=30, deadline=None)
def test_bound_sum_plus_keeps_sides(seed, f, lam):
    nwa = rnd_nwa(seeded(seed), f, SUMPLUS, det=True)
    bounded = bound_sum_plus(nwa, lam)
    for w in short:
        a, b = eval_det(nwa, w), eval_det(bounded, w)
        assert below(a, lam) == below(b, lam)
        if below(a, lam) and f in (INF, LIMINF):
            assert a == b


def test_bound_sum_plus_rejects_negative():
    with pytest.raises(ValueError):
        bound_sum_plus(build_art(), -1)


def test_exact_simulation_on_stuttering():
    nwa = build_stuttering(1)
    for n in range(1, 5):
        w = LassoWord("", "a" * n + "b")
        sim = build_bounded_simulation(nwa, n + 1).automaton
        assert oracle_value(sim, w).value == eval_det(nwa, w)


def test_exact_simulation_drops_weighted_silent_steps():
    # ART pays on silent grant steps, which exact mode cannot carry
    with pytest.raises(CapExceededEverywhere):
        build_bounded_simulation(build_art(), 2)


def test_saturated_simulation_is_a_lower_bound():
    art = build_art()
    sim = build_bounded_simulation(art, 2, saturate=True).automaton
    for n in range(1, 6):
        w = LassoWord("", "r" * n + "g")
        low, exact = oracle_value(sim, w).value, eval_det(art, w)
        assert low <= exact
        if n <= 3:
            assert low == exact


def test_pipeline_alphabet():
    pa = pipeline_automaton(build_art())
    assert len(pa.states) > 0
    assert {a for a, _, _ in pa.alphabet} == {"r", "g", "i"}
    assert {m for _, m, _ in pa.alphabet} == {0, 1}
