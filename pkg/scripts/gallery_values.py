"""Print the values of the gallery automata on their characteristic words."""

import argparse
from dataclasses import dataclass

from nestwa.core import LassoWord
from nestwa.gallery import (build_arc, build_art, build_bounded_delay_measure,
                            build_context_switch_measure, build_example9, build_stuttering)
from nestwa.nested import eval_det
from nestwa.values import fmt_value


@dataclass
class Config:
    max_n: int = 8
    max_k: int = 4


def row(name, word, value):
    print(f"{name:<22} {word:<28} {fmt_value(value)}")


def main(cfg):
    stu = build_stuttering(1)
    for n in range(1, cfg.max_n + 1):
        row("stuttering", f"(a^{n} b)^w", eval_det(stu, LassoWord("", "a" * n + "b")))
    art = build_art()
    for n in range(1, cfg.max_n + 1):
        row("art", f"(r^{n} g)^w", eval_det(art, LassoWord("", "r" * n + "g")))
    row("art", "(r i g)^w", eval_det(art, LassoWord("", "rig")))
    row("art idle", "(r i i g)^w", eval_det(build_art(variant="idle"), LassoWord("", "riig")))
    e9 = build_example9()
    for k in range(1, 2 * cfg.max_n + 1):
        row("example9", f"(b a^{k})^w", eval_det(e9, LassoWord("", "b" + "a" * k)))
    for k in range(1, cfg.max_k + 1):
        arc = build_arc(1, k)
        for j in range(k + 1):
            w = ["s1"] + [f"a1r{r}" for r in range(1, j + 1)] + ["t1"]
            row(f"arc k={k}", f"({' '.join(w)})^w", eval_det(arc, LassoWord((), w)))
    bd = build_bounded_delay_measure()
    row("bounded delay", "(s1 r1 $)^w", eval_det(bd, LassoWord((), ["s1", "r1", "$"])))
    row("bounded delay", "(s1 $ $ r1)^w", eval_det(bd, LassoWord((), ["s1", "$", "$", "r1"])))
    cs = build_context_switch_measure()
    row("context switch", "(c x x c x x x x)^w", eval_det(cs, LassoWord("", "cxxcxxxx")))
    row("context switch", "c^w", eval_det(cs, LassoWord("", "c")))


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--max-n", type=int, default=Config.max_n)
    p.add_argument("--max-k", type=int, default=Config.max_k)
    a = p.parse_args()
    main(Config(a.max_n, a.max_k))
