"""Cross-check the deciders against the brute-force oracle on random instances.

Emptiness answers are compared with lasso enumeration (a found witness
must be matched by a true answer) and every returned witness is re-checked.
Universality is checked on deterministic instances by evaluating all short
lassos.
"""

import argparse
import os
import pathlib
import random
import sys
import time
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "tests"))

from gen import rnd_nwa, total_nwa  # noqa: E402
from nestwa.core import ResourceLimit, WeightedAutomaton  # noqa: E402
from nestwa.decide import (DECIDED, EMPTINESS, UNIVERSALITY, ComplementationTooLarge,  # noqa: E402
                           route)
from nestwa.nested import eval_det  # noqa: E402
from nestwa.oracle import OracleBudget, WitnessFound, lassos, oracle_at_most, oracle_empty  # noqa: E402
from nestwa.values import INF, INFINITY, LIMAVG, LIMINF, LIMSUP, MAX, MIN, SUM, SUMPLUS, SUP, BSum  # noqa: E402

EMPTY_FRAGMENTS = [(INF, SUM), (LIMINF, SUM), (INF, SUMPLUS), (SUP, SUMPLUS), (LIMINF, SUMPLUS),
                   (LIMSUP, SUMPLUS), (LIMAVG, MIN), (LIMAVG, MAX), (LIMAVG, BSum(2))]


@dataclass
class Config:
    seed: int = 0
    n: int = 100
    state_limit: int = 20000
    problem: str = "empty"


def clamp(nwa, g):
    lo, hi = (0, 2) if g == SUMPLUS else (-2, 2)
    return nwa.with_(slaves=tuple(
        WeightedAutomaton(s.base, {t: max(lo, min(hi, w)) for t, w in s.weight.items()}, s.valuefn)
        for s in nwa.slaves))


def check_empty(rng, i, tally):
    f, g = EMPTY_FRAGMENTS[i % len(EMPTY_FRAGMENTS)]
    det = rng.random() < 0.5
    nwa = clamp(rnd_nwa(rng, f, g, det=det), g)
    lam = Fraction(rng.randint(-2, 3))
    key = f"{f.name};{g.name}{'' if det else ' nondet'}"
    v = route(nwa, EMPTINESS, lam)
    if v.kind != DECIDED:
        return key, "not decided"
    if v.answer and v.witness is not None and not oracle_at_most(nwa, v.witness, lam):
        return key, "bad witness"
    o = oracle_empty(nwa, lam, OracleBudget(4, 6, 12, 3))
    if isinstance(o, WitnessFound):
        tally["conclusive"] += 1
        if not v.answer:
            return key, "missed"
    return key, "ok"


def check_universal(rng, i, tally):
    f = rng.choice([INF, SUP, LIMINF, LIMSUP, LIMAVG])
    g = rng.choice([MAX, MIN, BSum(2), SUMPLUS] + ([SUM] if f in (SUP, LIMSUP) else []))
    nwa = total_nwa(rng, f, g) if i % 2 else rnd_nwa(rng, f, g, det=True)
    nwa = clamp(nwa, g)
    lam = Fraction(rng.randint(0, 3))
    key = f"{f.name};{g.name}"
    v = route(nwa, UNIVERSALITY, lam)
    if v.kind != DECIDED:
        return key, "not decided"
    above = [w for w in lassos("ab", 2, 3) if (lambda x: x is INFINITY or x > lam)(eval_det(nwa, w))]
    if v.answer and above:
        return key, "wrong true"
    if not v.answer and v.counterexample is not None:
        x = eval_det(nwa, v.counterexample)
        if x is not INFINITY and x <= lam:
            return key, "bad counterexample"
    tally["true" if v.answer else "false"] += 1
    return key, "ok"


def main(cfg):
    os.environ["NWA_STATE_LIMIT"] = str(cfg.state_limit)
    rng = random.Random(cfg.seed)
    check = check_empty if cfg.problem == "empty" else check_universal
    outcomes = Counter()
    tally = Counter()
    t0 = time.time()
    for i in range(cfg.n):
        try:
            key, res = check(rng, i, tally)
        except (ResourceLimit, ComplementationTooLarge):
            key, res = "-", "over state limit"
        outcomes[(key, res)] += 1
        if res not in ("ok", "over state limit"):
            print(f"instance {i}: {key}: {res}", flush=True)
    for (key, res), c in sorted(outcomes.items()):
        print(f"{key:<24} {res:<18} {c}")
    print(f"{dict(tally)}  total {time.time() - t0:.1f}s")
    return sum(c for (_, r), c in outcomes.items() if r not in ("ok", "over state limit"))


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-n", type=int, default=100)
    p.add_argument("--state-limit", type=int, default=20000)
    p.add_argument("--problem", choices=["empty", "universal"], default="empty")
    a = p.parse_args()
    sys.exit(1 if main(Config(a.seed, a.n, a.state_limit, a.problem)) else 0)
