import itertools
from fractions import Fraction

import pytest

from gen import rnd_dfa, seeded
from nestwa.core import Automaton, LassoWord
from nestwa.decide import DECIDED, EMPTINESS, route
from nestwa.gallery import (EmptyInstance, MeasureProblem, build_arc, build_art,
                            build_bounded_delay_measure, build_context_switch_measure,
                            build_example9, build_intersection_instance, build_stuttering,
                            empty_spec, model_measure_decide, model_repair_decide, universal_model)
from nestwa.nested import DETERMINISTIC, classify, eval_det, validate_nwa
from nestwa.oracle import oracle_value
from nestwa.values import INFINITY


def L(u, v):
    return LassoWord(tuple(u), tuple(v))


def test_stuttering_value():
    nwa = build_stuttering(1)
    validate_nwa(nwa)
    assert eval_det(nwa, L("", "aaab")) == Fraction(7, 4)
    assert eval_det(nwa, L("", "a")) is INFINITY


@pytest.mark.parametrize("n", range(1, 9))
def test_stuttering_closed_form(n):
    assert eval_det(build_stuttering(1), L("", "a" * n + "b")) == Fraction(n * (n + 1) // 2 + 1, n + 1)


def test_stuttering_variant_two():
    assert eval_det(build_stuttering(2), L("", "aaab")) == 2


def test_art_values():
    art = build_art()
    assert classify(art) == DETERMINISTIC
    assert eval_det(art, L("", "rig")) == 2
    assert eval_det(art, L("", "rrg")) == Fraction(3, 2)
    assert eval_det(art, L("", "rg")) == 1
    assert eval_det(build_art(2), L([], ["r1", "r2", "g1", "g2"])) == 2


@pytest.mark.parametrize("n", range(1, 7))
def test_art_request_bursts_match_oracle(n):
    w = L("", "r" * n + "g")
    assert eval_det(build_art(), w) == oracle_value(build_art(), w).value == Fraction(n + 1, 2)


def test_art_idle_variant_counts_idle_steps():
    art = build_art(variant="idle")
    assert eval_det(art, L("", "rg")) == 0
    assert eval_det(art, L("", "riig")) == 2


@pytest.mark.parametrize("k", range(1, 13))
def test_example9_closed_form(k):
    v = eval_det(build_example9(), L("", "b" + "a" * k))
    expect = Fraction(3 * k + 4, 2 * k + 2) if k % 2 == 0 else Fraction(3 * k + 5, 2 * k + 2)
    assert v == expect > Fraction(3, 2)


@pytest.mark.parametrize("k", range(1, 5))
def test_arc_counts_held_resources(k):
    arc = build_arc(1, k)
    assert classify(arc) == DETERMINISTIC
    for j in range(k + 1):
        w = L([], ["s1"] + [f"a1r{r}" for r in range(1, j + 1)] + ["t1"])
        assert eval_det(arc, w) == j


def test_arc_two_tasks():
    assert eval_det(build_arc(2, 1), L([], ["s1", "s2", "a1r1", "t1", "t2"])) == Fraction(1, 2)


def test_bounded_delay_values():
    bd = build_bounded_delay_measure()
    assert eval_det(bd, L([], ["s1", "r1", "$"])) == 1
    assert eval_det(bd, L([], ["s1", "$", "$", "r1"])) == 3
    assert eval_det(bd, L([], ["$"])) is INFINITY


def test_context_switch_values():
    cs = build_context_switch_measure()
    assert classify(cs) == DETERMINISTIC
    assert eval_det(cs, L("", "cxxcxxxx")) == -3
    assert eval_det(cs, L("", "c")) == -1


def shortest_common(ds, n=8):
    for k in range(n + 1):
        for w in itertools.product("ab", repeat=k):
            if all(d.accepts_finite(w) for d in ds):
                return True
    return False


@pytest.mark.parametrize("seed", range(30))
def test_intersection_reduction(seed):
    rng = seeded(seed)
    ds = [rnd_dfa(rng, rng.randint(1, 4)) for _ in range(rng.randint(1, 3))]
    nwa = build_intersection_instance(ds)
    v = route(nwa, EMPTINESS, 0)
    assert v.kind == DECIDED
    assert v.answer == shortest_common(ds)
    if v.witness is not None:
        assert eval_det(nwa, v.witness) == 0


def test_intersection_needs_a_dfa():
    with pytest.raises(EmptyInstance):
        build_intersection_instance([])


def within2(al):
    """Every send s_k is answered by r_k within two steps."""
    st = ["ok"] + [(k, d) for k in (1, 2) for d in (0, 1)] + ["bad"]
    tr = []
    for q in st:
        for a in al:
            if q == "bad":
                tr.append((q, a, "bad"))
            elif q == "ok":
                tr.append((q, a, (int(a[1]), 0) if a[0] == "s" else "ok"))
            else:
                k, d = q
                if a == f"r{k}":
                    tr.append((q, a, "ok"))
                else:
                    tr.append((q, a, "bad" if d == 1 else (k, 1)))
    return Automaton(al, st, {"ok"}, tr, {"ok"})


def test_model_measuring_stability_radius():
    bd = build_bounded_delay_measure()
    al = bd.alphabet
    model, spec = universal_model(al), within2(al)
    got = {lam: model_measure_decide(MeasureProblem(model, spec, bd, Fraction(lam))).answer
           for lam in (2, 3, 4)}
    assert got == {2: False, 3: True, 4: True}
    assert not model_measure_decide(MeasureProblem(model, universal_model(al), bd, Fraction(5))).answer


def no_short_slot(al):
    return Automaton(al, ["s", "c", "bad"], {"s"},
                     [("s", "c", "c"), ("s", "x", "s"), ("c", "c", "bad"), ("c", "x", "s"),
                      ("bad", "c", "bad"), ("bad", "x", "bad")], {"s", "c"})


def test_model_repair():
    cs = build_context_switch_measure()
    al = cs.alphabet
    model = universal_model(al)
    got = {lam: model_repair_decide(model, cs, no_short_slot(al), Fraction(lam)).answer
           for lam in (-3, -2, -1, 0)}
    assert got == {-3: False, -2: False, -1: True, 0: True}
    assert not model_repair_decide(model, cs, universal_model(al), Fraction(5)).answer
    assert model_repair_decide(model, cs, empty_spec(al), Fraction(0)).answer
