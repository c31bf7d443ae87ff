import json
import pathlib
from fractions import Fraction

import pytest

from gen import rnd_nwa, rnd_weighted, seeded, total_nwa
from nestwa.core import ResourceLimit, WeightedAutomaton
from nestwa.decide import (DECIDED, EMPTINESS, OPEN, ROUTING, UNDECIDABLE, UNIVERSALITY, UNSUPPORTED,
                           ComplementationTooLarge, empty_nonnested, min_limavg, route,
                           value_of_lasso)
from nestwa.nested import eval_det
from nestwa.oracle import (OracleBudget, WitnessFound, lassos, oracle_at_most, oracle_empty,
                           oracle_value)
from nestwa.values import (INF, INFINITY, LIMAVG, LIMINF, LIMSUP, MAX, MIN, SUM, SUMPLUS, SUP, BSum)

DATA = pathlib.Path(__file__).parent / "data"
SKIPPED = (ResourceLimit, ComplementationTooLarge)


@pytest.fixture(autouse=True)
def small_limit(monkeypatch):
    monkeypatch.setenv("NWA_STATE_LIMIT", "5000")


def clamp(nwa, lo, hi):
    return nwa.with_(slaves=tuple(
        WeightedAutomaton(s.base, {t: max(lo, min(hi, w)) for t, w in s.weight.items()}, s.valuefn)
        for s in nwa.slaves))


def test_routing_table_frozen():
    rows = json.loads((DATA / "routing.json").read_text())
    frozen = {(r["column"], r["row"], r["problem"], r["functional"]): (r["kind"], r["target"]) for r in rows}
    assert frozen == ROUTING


@pytest.mark.parametrize("f,g,problem,det,kind", [
    (SUP, SUM, EMPTINESS, True, UNDECIDABLE),
    (LIMAVG, SUM, EMPTINESS, False, OPEN),
    (LIMAVG, SUM, UNIVERSALITY, True, OPEN),
    (LIMAVG, SUM, UNIVERSALITY, False, UNDECIDABLE),
    (INF, SUM, UNIVERSALITY, True, UNDECIDABLE),
    (SUP, SUM, UNIVERSALITY, False, UNDECIDABLE),
    (LIMAVG, MAX, UNIVERSALITY, False, UNDECIDABLE),
    (LIMAVG, SUMPLUS, UNIVERSALITY, False, UNDECIDABLE),
])
def test_route_reports_hard_cells(f, g, problem, det, kind):
    for seed in range(20):
        nwa = rnd_nwa(seeded(seed), f, g, det=det)
        if det or not nwa.functional:
            break
    v = route(nwa, problem, 0)
    assert v.kind == kind
    assert v.citation.startswith("Table 1:" if det else "Table 2:")


def test_mixed_slave_functions_unsupported():
    for seed in range(50):
        nwa = rnd_nwa(seeded(seed), INF, MAX, det=True)
        other = rnd_nwa(seeded(seed + 1), INF, MIN, det=True).slaves[1]
        mixed = nwa.with_(slaves=(nwa.slaves[0], other))
        if len(mixed.slave_fns()) == 2:
            break
    assert route(mixed, EMPTINESS, 0).kind == UNSUPPORTED


def emptiness_cases():
    rng = seeded(11)
    out = []
    for i in range(40):
        kind = ["infsum", "sp", "reg", "lavg"][i % 4]
        if kind == "infsum":
            f, g, wr = rng.choice([INF, LIMINF]), SUM, (-2, 2)
        elif kind == "sp":
            f, g, wr = rng.choice([INF, SUP, LIMINF, LIMSUP]), SUMPLUS, (0, 2)
        elif kind == "reg":
            f, g, wr = rng.choice([INF, SUP, LIMINF, LIMSUP]), rng.choice([MAX, MIN, BSum(2)]), (-2, 2)
        else:
            f, g, wr = LIMAVG, rng.choice([MAX, MIN, BSum(2)]), (-2, 2)
        det = i % 8 < 4
        nwa = clamp(rnd_nwa(rng, f, g, det=det), *wr)
        out.append((i, nwa, Fraction(rng.randint(-2, 3))))
    return out


@pytest.mark.parametrize("i,nwa,lam", emptiness_cases(), ids=lambda x: str(x) if isinstance(x, int) else "")
def test_emptiness_against_oracle(i, nwa, lam):
    try:
        v = route(nwa, EMPTINESS, lam)
    except SKIPPED:
        pytest.skip("state limit")
    assert v.kind == DECIDED
    if v.answer and v.witness is not None:
        assert oracle_at_most(nwa, v.witness, lam, OracleBudget(max_slave_len=12))
    o = oracle_empty(nwa, lam, OracleBudget(3, 4, 10, 3))
    if isinstance(o, WitnessFound):
        assert v.answer


def universality_cases():
    rng = seeded(5)
    out = []
    for i in range(40):
        kind = ["reg", "reg", "sp", "sum"][i % 4]
        if kind == "reg":
            f, g, wr = rng.choice([INF, SUP, LIMINF, LIMSUP, LIMAVG]), rng.choice([MAX, MIN, BSum(2)]), (-2, 2)
        elif kind == "sp":
            f, g, wr = rng.choice([INF, SUP, LIMINF, LIMSUP, LIMAVG]), SUMPLUS, (0, 2)
        else:
            f, g, wr = rng.choice([SUP, LIMSUP]), SUM, (-2, 2)
        make = total_nwa if i % 2 else (lambda r, a, b: rnd_nwa(r, a, b, det=True))
        out.append((i, clamp(make(rng, f, g), *wr), Fraction(rng.randint(0, 3))))
    return out


@pytest.mark.parametrize("i,nwa,lam", universality_cases(), ids=lambda x: str(x) if isinstance(x, int) else "")
def test_universality_against_enumeration(i, nwa, lam):
    try:
        v = route(nwa, UNIVERSALITY, lam)
    except SKIPPED:
        pytest.skip("state limit")
    assert v.kind == DECIDED
    bad = [w for w in lassos("ab", 2, 3) if not (lambda x: x is not INFINITY and x <= lam)(eval_det(nwa, w))]
    if v.answer:
        assert not bad
    elif v.counterexample is not None:
        x = eval_det(nwa, v.counterexample)
        assert x is INFINITY or x > lam


@pytest.mark.parametrize("seed", range(30))
@pytest.mark.parametrize("f", [INF, SUP, LIMINF, LIMSUP, LIMAVG])
def test_nonnested_emptiness(seed, f):
    wa = rnd_weighted(seeded(seed), f, det=seed % 2 == 0)
    for lam in (Fraction(-1), Fraction(0), Fraction(1, 2)):
        v = empty_nonnested(wa, lam)
        assert v.kind == DECIDED
        if v.answer and v.witness is not None:
            x = value_of_lasso(wa, v.witness)
            assert x is not INFINITY and x <= lam
        o = oracle_empty(wa, lam, OracleBudget(2, 4))
        if isinstance(o, WitnessFound):
            assert v.answer


@pytest.mark.parametrize("seed", range(30))
def test_min_limavg_bounds_lassos(seed):
    wa = rnd_weighted(seeded(seed), LIMAVG, det=seed % 2 == 0)
    m = min_limavg(wa)
    vals = [oracle_value(wa, w).value for w in lassos("ab", 2, 4)]
    vals = [x for x in vals if x is not INFINITY]
    if m is INFINITY:
        assert not vals
    else:
        assert all(m <= x for x in vals)
