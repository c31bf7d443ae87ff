"""Emptiness of (LimAvg;Sum+) automata across thresholds.

Runs the bounded-multiplicity pipeline on ART and Example 9 and reports the
verdict, the lower/upper estimates it used and the witness, if any.
"""

import argparse
import time
from dataclasses import dataclass, field
from fractions import Fraction

from nestwa.decide import empty_limavg_sum_plus
from nestwa.gallery import build_art, build_example9
from nestwa.nested import eval_det
from nestwa.values import fmt_value


@dataclass
class Config:
    thresholds: list = field(default_factory=lambda: ["1/2", "9/10", "1", "3/2", "2"])
    max_guess: int = None


def main(cfg):
    for name, nwa in (("art", build_art()), ("art idle", build_art(variant="idle")),
                      ("example9", build_example9())):
        for lam in map(Fraction, cfg.thresholds):
            t = time.time()
            v = empty_limavg_sum_plus(nwa, lam, max_guess=cfg.max_guess)
            dt = time.time() - t
            wit = ""
            if v.witness is not None:
                wit = f"witness {v.witness} value {fmt_value(eval_det(nwa, v.witness))}"
            elif v.note:
                wit = v.note
            stats = " ".join(f"{k}={fmt_value(x) if isinstance(x, Fraction) else x}"
                             for k, x in sorted(v.stats.items()))
            print(f"{name:<9} lam={fmt_value(lam):<6} {str(v.answer):<5} {dt:6.2f}s  {stats}  {wit}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--thresholds", nargs="+", default=Config().thresholds)
    p.add_argument("--max-guess", type=int)
    a = p.parse_args()
    main(Config(a.thresholds, a.max_guess))
