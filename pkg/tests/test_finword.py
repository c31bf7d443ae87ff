import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import rnd_slave, seeded
from nestwa.core import FINITE, Automaton, WeightedAutomaton
from nestwa.finword import UnsupportedValueFn, decompose, value_of_finite_word
from nestwa.values import BOTTOM, INFINITY, MAX, MIN, SUM, SUMPLUS, BSum, eval_fin

words = [w for n in range(6) for w in itertools.product("ab", repeat=n)]
regular = st.sampled_from([MAX, MIN, BSum(0), BSum(1), BSum(2)])


def brute(wa, word):
    """Minimum over accepting runs, by listing them."""
    best = INFINITY
    runs = [(q, []) for q in wa.base.initial_ordered()]
    for a in word:
        runs = [(r, ws + [wa.weight[(q, a, r)]]) for q, ws in runs for r in wa.base.succ.get((q, a), ())]
    for q, ws in runs:
        if q in wa.accepting:
            v = eval_fin(wa.valuefn, ws)
            if best is INFINITY or (v is not BOTTOM and v < best) or v is BOTTOM:
                best = v
    return best


def test_counter_values():
    base = Automaton("ab", [0, 1], {0}, [(0, "a", 0), (0, "b", 1)], {1}, FINITE)
    wa = WeightedAutomaton(base, {(0, "a", 0): 1, (0, "b", 1): 0}, SUMPLUS)
    assert value_of_finite_word(wa, "aaab") == 3
    assert value_of_finite_word(wa, "aa") is INFINITY
    assert value_of_finite_word(wa, "") is INFINITY


def test_empty_word_is_bottom_when_accepted():
    base = Automaton("a", [0], {0}, [], {0}, FINITE)
    assert value_of_finite_word(WeightedAutomaton(base, {}, MAX), "") is BOTTOM


@given(st.integers(0, 10 ** 6), st.sampled_from([MAX, MIN, SUM, SUMPLUS, BSum(2)]), st.booleans())
@settings(max_examples=60)
def test_value_matches_run_enumeration(seed, fn, det):
    wa = rnd_slave(seeded(seed), "ab", fn, det=det)
    for w in words:
        assert value_of_finite_word(wa, w) == brute(wa, w)


@given(st.integers(0, 10 ** 6), regular, st.booleans())
@settings(max_examples=60)
def test_decomposition_partitions_the_domain(seed, fn, det):
    wa = rnd_slave(seeded(seed), "ab", fn, det=det)
    dec = decompose(wa)
    for w in words:
        assert dec.lookup(w) == value_of_finite_word(wa, w)


def test_sum_is_not_decomposable():
    wa = rnd_slave(seeded(1), "ab", SUM)
    with pytest.raises(UnsupportedValueFn):
        decompose(wa)
