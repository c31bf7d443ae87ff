"""Finite-word weighted automata: word values and the regular decomposition."""

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .core import FINITE, Automaton, NestwaError, minimize_dfa, trim
from .values import BOTTOM, INFINITY

OVER = "over"  # running bounded sum left [-B, B]
DECOMPOSE_CAP = 2 ** 14


class UnsupportedValueFn(NestwaError):
    pass


class DecompositionTooLarge(NestwaError):
    pass


def _track(f, t, w):
    """Update the tracked quantity t (None before the first weight)."""
    n = f.name
    if n == "Min":
        return w if t is None or w < t else t
    if n == "Max":
        return w if t is None or w > t else t
    if n == "BSum":
        if t == OVER:
            return OVER
        s = (t or Fraction(0)) + w
        return OVER if abs(s) > f.bound else s
    raise UnsupportedValueFn(f"{f} is not a regular value function")


def _output(f, t):
    if t is None:
        return BOTTOM
    if t == OVER:
        return Fraction(f.bound)
    return t


def value_of_finite_word(wa, word):
    f = wa.valuefn
    if not f.finite:
        raise UnsupportedValueFn(f"{f} is not a finite-word value function")
    word = tuple(word)
    init = wa.base.initial_ordered()
    if not word:
        return BOTTOM if any(q in wa.accepting for q in init) else INFINITY
    n = f.name
    if n in ("Sum", "SumPlus", "Min", "Max"):
        # best running value per state; sound because each f is monotone
        best = {q: None for q in init}
        for a in word:
            nxt = {}
            for q, v in best.items():
                for r in wa.base.succ.get((q, a), ()):
                    w = wa.weight[(q, a, r)]
                    if n == "Sum":
                        c = (v or 0) + w
                    elif n == "SumPlus":
                        c = (v or 0) + abs(w)
                    else:
                        c = _track(f, v, w)
                    if r not in nxt or c < nxt[r]:
                        nxt[r] = c
            best = nxt
        vals = [Fraction(v) for q, v in best.items() if q in wa.accepting]
        return min(vals) if vals else INFINITY
    cur = {(q, None) for q in init}
    for a in word:
        nxt = set()
        for q, t in cur:
            for r in wa.base.succ.get((q, a), ()):
                nxt.add((r, _track(f, t, wa.weight[(q, a, r)])))
        cur = nxt
    vals = [_output(f, t) for q, t in cur if q in wa.accepting]
    return min(vals) if vals else INFINITY


def _vkey(v):
    return (0, 0) if v is BOTTOM else (1, v)


@dataclass(frozen=True)
class ValueDecomposition:
    entries: tuple  # (value, DFA), values ascending with BOTTOM first

    @property
    def values(self):
        return [v for v, _ in self.entries]

    def recognizer(self, value):
        for v, d in self.entries:
            if v == value:
                return d
        return None

    def lookup(self, word):
        hits = [v for v, d in self.entries if d.accepts_finite(word)]
        if len(hits) > 1:
            raise AssertionError("recognizers overlap")
        return hits[0] if hits else INFINITY


def decompose(wa, valuefn=None, cap=DECOMPOSE_CAP):
    """One trimmed DFA per achievable value; the DFA for value v accepts
    exactly the words whose automaton value is v."""
    f = valuefn or wa.valuefn
    if not f.regular:
        raise UnsupportedValueFn(f"{f} values are not drawn from a finite set")
    start = frozenset((q, None) for q in wa.base.initial_ordered())
    seen = {start: 0}
    order = [start]
    trans = []
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for a in wa.alphabet:
            t = set()
            for q, x in s:
                for r in wa.base.succ.get((q, a), ()):
                    t.add((r, _track(f, x, wa.weight[(q, a, r)])))
            if not t:
                continue
            t = frozenset(t)
            if t not in seen:
                if len(seen) >= cap:
                    raise DecompositionTooLarge(f"more than {cap} subset states")
                seen[t] = len(seen)
                order.append(t)
                queue.append(t)
            trans.append((seen[s], a, seen[t]))
    value = {}
    for s in order:
        vals = [_output(f, x) for q, x in s if q in wa.accepting]
        if vals:
            value[seen[s]] = BOTTOM if BOTTOM in vals else min(vals)
    states = list(range(len(order)))
    entries = []
    for v in sorted(set(value.values()), key=_vkey):
        acc = {i for i, x in value.items() if x == v}
        d = minimize_dfa(Automaton(wa.alphabet, states, {0}, trans, acc, FINITE))
        if d.states:
            entries.append((v, d))
    return ValueDecomposition(tuple(entries))
