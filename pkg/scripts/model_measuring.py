"""Model measuring and model repair on the two measure automata.

Stability radius: the smallest threshold at which every model behaviour
within the bounded-delay measure satisfies the "answer within two steps"
spec.  Repair: which thresholds on the context-switch measure let a model
avoid slots shorter than two steps.
"""

import argparse
from dataclasses import dataclass
from fractions import Fraction

from nestwa.core import Automaton
from nestwa.gallery import (MeasureProblem, build_bounded_delay_measure,
                            build_context_switch_measure, model_measure_decide,
                            model_repair_decide, universal_model)


@dataclass
class Config:
    max_lam: int = 5


def within_two(al):
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


def no_short_slot(al):
    return Automaton(al, ["s", "c", "bad"], {"s"},
                     [("s", "c", "c"), ("s", "x", "s"), ("c", "c", "bad"), ("c", "x", "s"),
                      ("bad", "c", "bad"), ("bad", "x", "bad")], {"s", "c"})


def main(cfg):
    bd = build_bounded_delay_measure()
    model, spec = universal_model(bd.alphabet), within_two(bd.alphabet)
    radius = None
    for lam in range(cfg.max_lam + 1):
        v = model_measure_decide(MeasureProblem(model, spec, bd, Fraction(lam)))
        print(f"measure  lam={lam}  {v.kind} {v.answer}  witness={v.witness}")
        if v.answer and radius is None:
            radius = lam
    print(f"stability radius: {radius}")
    cs = build_context_switch_measure()
    m = universal_model(cs.alphabet)
    for lam in range(-4, 2):
        v = model_repair_decide(m, cs, no_short_slot(cs.alphabet), Fraction(lam))
        print(f"repair   lam={lam:>2}  {v.kind} {v.answer}  witness={v.witness}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--max-lam", type=int, default=5)
    main(Config(p.parse_args().max_lam))
