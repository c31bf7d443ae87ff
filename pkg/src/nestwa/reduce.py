"""Reductions from nested weighted automata to (silent) weighted automata."""

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .core import (FINITE, INFINITE, Automaton, NestwaError, ResourceLimit, WeightedAutomaton,
                   degeneralize, determinize, is_deterministic, reachable, state_limit, trim,
                   union_dfa)
from .finword import UnsupportedValueFn, ValueDecomposition, decompose
from .nested import (DETERMINISTIC, NestedWeightedAutomaton, classify, configuration_count,
                     is_epsilon_only)
from .values import BOTTOM, LIMAVG, SILENT, SUMPLUS, BSum


class NotRegularSlave(NestwaError):
    pass


class CapExceededEverywhere(NestwaError):
    pass


def _vkey(v):
    return (0, 0) if v is BOTTOM else (1, v)


def build_weighted(alphabet, states, initial, edges, accepting, valuefn, mode=INFINITE):
    """Weighted automaton from (src, letter, dst, weight) edges.  Parallel
    edges keep the smaller weight, which is sound for monotone value
    functions; silent and weighted parallels are kept apart by callers."""
    weight = {}
    for p, a, q, w in edges:
        t = (p, a, q)
        if t in weight:
            old = weight[t]
            if (old is SILENT) != (w is SILENT):
                raise AssertionError(f"silent and weighted parallel edge {t!r}")
            if w is not SILENT and w < old:
                weight[t] = w
        else:
            weight[t] = w
    base = Automaton(alphabet, states, initial, list(weight), accepting, mode)
    return WeightedAutomaton(base, weight, valuefn)


# --- the key reduction: guess the slave's value, check it on the side --------

def _breakpoint_graph(nwa, options, step, limit):
    """Explore states (q, v, P1, P2): master state, value returned by the
    last slave, obligations since the last breakpoint and the ones being
    waited for.  options(i, a) lists (value, new obligations); step(P, a)
    moves obligations (dropping finished ones) or returns None."""
    start = [(q, None, frozenset(), frozenset()) for q in nwa.master.initial_ordered()]
    seen = set(start)
    order = list(start)
    edges = []
    queue = deque(start)
    outs = nwa.master.out
    while queue:
        node = queue.popleft()
        q, _, p1, p2 = node
        for t in outs.get(q, ()):
            a, r = t[1], t[2]
            s1 = step(p1, a)
            if s1 is None:
                continue
            if p2:
                s2 = step(p2, a)
                if s2 is None:
                    continue
            for val, new in options(nwa.labels[t], a):
                if p2:
                    tgt = (r, val, s1 | new, s2)
                else:
                    tgt = (r, val, new, s1)
                edges.append((node, t, val, tgt))
                if tgt not in seen:
                    seen.add(tgt)
                    order.append(tgt)
                    queue.append(tgt)
                    if len(seen) > limit:
                        raise ResourceLimit(len(seen), limit)
    return order, start, edges


def _dfa_step(dfas):
    def step(p, a):
        res = set()
        for key in p:
            d = dfas[key[:-1]]
            nxt = d.succ.get((key[-1], a))
            if not nxt:
                return None
            if nxt[0] not in d.accepting:
                res.add(key[:-1] + (nxt[0],))
        return frozenset(res)
    return step


def slave_decompositions(nwa):
    out = []
    for i, s in enumerate(nwa.slaves, 1):
        if not s.valuefn.regular:
            if is_epsilon_only(s.base):
                out.append(decompose(s, BSum(0)))
                continue
            raise NotRegularSlave(f"slave {i} uses {s.valuefn}")
        out.append(decompose(s))
    return out


def threshold_classes(dec, lam, strict=False):
    """Merge a value decomposition into at most two classes around lam:
    values passing the threshold (kept as their largest value) and the
    rest (kept as their smallest).  Threshold questions on Inf, Sup, LimInf
    and LimSup only see which side each slave value falls on."""
    low = [(v, d) for v, d in dec.entries if v is not BOTTOM and (v < lam if strict else v <= lam)]
    high = [(v, d) for v, d in dec.entries if v is not BOTTOM and (v >= lam if strict else v > lam)]
    entries = [(v, d) for v, d in dec.entries if v is BOTTOM]
    if low:
        entries.append((low[-1][0], union_dfa(d for _, d in low)))
    if high:
        entries.append((high[0][0], union_dfa(d for _, d in high)))
    return ValueDecomposition(tuple(entries))


def lemma4_reduce(nwa, limit=None, threshold=None, strict=False):
    """Silent automaton with the master's value function and the same value
    on every word.  Acceptance is degeneralized from
    {master accepting} and {no pending obligations}.

    With a threshold, slave values are merged by threshold_classes; the
    result then only agrees with the NWA on which side of the threshold
    each word lies (not meaningful for LimAvg)."""
    limit = limit or state_limit()
    decs = slave_decompositions(nwa)
    if threshold is not None:
        if nwa.masterfn.name == "LimAvg":
            raise ValueError("threshold merging does not preserve LimAvg values")
        decs = [threshold_classes(d, Fraction(threshold), strict) for d in decs]
    dfas = {}
    for i, dec in enumerate(decs, 1):
        for j, (_, d) in enumerate(dec.entries):
            dfas[(i, j)] = d

    def options(i, a):
        res = []
        for j, (v, d) in enumerate(decs[i - 1].entries):
            if v is BOTTOM:
                res.append((BOTTOM, frozenset()))
                continue
            (s0,) = d.initial
            nxt = d.succ.get((s0, a))
            if not nxt:
                continue
            s1 = nxt[0]
            res.append((v, frozenset() if s1 in d.accepting else frozenset([(i, j, s1)])))
        return res

    nodes, start, edges = _breakpoint_graph(nwa, options, _dfa_step(dfas), limit)
    f1 = {n for n in nodes if n[0] in nwa.master.accepting}
    f2 = {n for n in nodes if not n[3]}
    dn, dinit, dedges, dacc = degeneralize(nodes, start, [(u, (t, v), w) for u, t, v, w in edges], [f1, f2])
    # integer names: the structured ones are slow to hash downstream
    ren = {n: j for j, n in enumerate(dn)}
    return build_weighted(nwa.alphabet, list(range(len(dn))), [ren[n] for n in dinit],
                          [(ren[u], lab[0][1], ren[w], lab[1] if lab[1] is not BOTTOM else SILENT)
                           for u, lab, w in dedges],
                          {ren[n] for n in dacc}, nwa.masterfn)


@dataclass
class Projection:
    """Degeneralized Boolean projection, with the master transition and
    silence of each edge kept for later constructions."""
    nodes: list
    initial: list
    edges: list  # (src, master transition, nonsilent, dst)
    accepting: set
    alphabet: tuple

    def automaton(self):
        return Automaton(self.alphabet, self.nodes, self.initial,
                         [(u, t[1], w) for u, t, _, w in self.edges], self.accepting)


def projection_graph(nwa, limit=None):
    limit = limit or state_limit()
    dfas = {}
    for i, s in enumerate(nwa.slaves, 1):
        dfas[(i,)] = trim(determinize(s.base))

    def options(i, a):
        d = dfas[(i,)]
        res = []
        if d.initial & d.accepting:
            res.append((False, frozenset()))
        for s0 in d.initial:
            nxt = d.succ.get((s0, a))
            if nxt:
                s1 = nxt[0]
                res.append((True, frozenset() if s1 in d.accepting else frozenset([(i, s1)])))
        return res

    nodes, start, edges = _breakpoint_graph(nwa, options, _dfa_step(dfas), limit)
    f1 = {n for n in nodes if n[0] in nwa.master.accepting}
    f2 = {n for n in nodes if not n[3]}
    f3 = {n for n in nodes if n[1] is True}
    dn, dinit, dedges, dacc = degeneralize(nodes, start, [(u, (t, v), w) for u, t, v, w in edges],
                                           [f1, f2, f3])
    return Projection(dn, dinit, [(u, lab[0], lab[1], w) for u, lab, w in dedges], dacc, nwa.alphabet)


def boolean_projection(nwa, limit=None):
    """Büchi automaton for the words on which the NWA has an accepting run."""
    return projection_graph(nwa, limit).automaton()


# --- silent transitions ------------------------------------------------------

def _replacement(f, lam, strict):
    if f.name in ("Inf", "LimInf"):
        return lam if strict else lam + 1
    if f.name in ("Sup", "LimSup"):
        return lam - 1
    raise UnsupportedValueFn(f"silent elimination does not apply to {f}")


def eliminate_silent(wa, f=None, lam=0, strict=False):
    """Replace silent weights by a value on the harmless side of lam.  The
    product with a 'last step was weighted' bit keeps the requirement that
    weighted steps recur."""
    f = f or wa.valuefn
    rep = _replacement(f, Fraction(lam), strict)
    edges = []
    nodes = set()
    for q in wa.states:
        for b in (False, True):
            nodes.add((q, b))
    raw = []
    for p, a, q in wa.transitions:
        w = wa.weight[(p, a, q)]
        ns = w is not SILENT
        for b in (False, True):
            raw.append(((p, b), (a, rep if not ns else w), (q, ns)))
    order = [(q, b) for q in wa.states for b in (False, True)]
    f1 = {(q, b) for q, b in order if q in wa.accepting}
    f2 = {(q, b) for q, b in order if b}
    dn, dinit, dedges, dacc = degeneralize(order, [(q, False) for q in wa.base.initial_ordered()],
                                           raw, [f1, f2])
    del nodes
    edges = [(u, lab[0], w, lab[1]) for u, lab, w in dedges]
    return build_weighted(wa.alphabet, dn, dinit, edges, dacc, f)


@dataclass
class Afix:
    automaton: WeightedAutomaton
    expansion: dict = field(default_factory=dict)  # transition -> original transitions


def afix(wa):
    """Collapse silent steps into the following weighted step.

    A state (q, m) records whether the silent stretch that led into q passed an
    accepting state; such states count as accepting.  Edge weights are the
    minimum over the collapsed paths with that mark."""
    out = {q: [] for q in wa.states}
    for t in wa.transitions:
        out[t[0]].append(t)
    acc = wa.accepting
    best = {}  # (q1, a, q2, mark) -> (weight, path)
    for q1 in wa.states:
        parent = {(q1, False): None}
        queue = deque([(q1, False)])
        while queue:
            x, flag = queue.popleft()
            for t in out[x]:
                w = wa.weight[t]
                if w is SILENT:
                    nxt = (t[2], flag or t[2] in acc)
                    if nxt not in parent:
                        parent[nxt] = ((x, flag), t)
                        queue.append(nxt)
                    continue
                path = [t]
                node = (x, flag)
                while parent[node] is not None:
                    node, st = parent[node]
                    path.append(st)
                path.reverse()
                for mark in ((False, True) if flag else (False,)):
                    key = (q1, t[1], t[2], mark)
                    if key not in best or w < best[key][0]:
                        best[key] = (w, path)
    adj = {}
    for (q1, a, q2, mark), (w, path) in best.items():
        adj.setdefault(q1, []).append((a, q2, mark, w, path))
    start = [(q, False) for q in wa.base.initial_ordered()]
    nodes = reachable(start, lambda n: [(e[1], e[2]) for e in adj.get(n[0], ())])
    edges = []
    expansion = {}
    for n in nodes:
        for a, q2, mark, w, path in adj.get(n[0], ()):
            edges.append((n, a, (q2, mark), w))
            expansion[(n, a, (q2, mark))] = path
    accepting = {n for n in nodes if n[1] or n[0] in acc}
    res = build_weighted(wa.alphabet, nodes, start, edges, accepting, LIMAVG)
    return Afix(res, expansion)


# --- Sum+ slaves against a threshold ------------------------------------------

def bound_sum_plus(nwa, lam):
    """Replace Sum+ slaves by bounded sums with bound floor(lam)+1 over the
    absolute weights.  Values <= lam are kept, larger ones stay > lam."""
    lam = Fraction(lam)
    if lam < 0:
        raise ValueError("threshold must be nonnegative")
    b = math.floor(lam) + 1
    slaves = []
    for s in nwa.slaves:
        w = {t: abs(x) for t, x in s.weight.items()}
        slaves.append(WeightedAutomaton(s.base, w, BSum(b)))
    return nwa.with_(slaves=tuple(slaves))


def a_minus(wa, f, lam):
    """Optional threshold-specific shrinking of a reduced automaton: weights
    on the irrelevant side of lam are merged into one value, then states with
    the same weighted future are merged (bisimulation quotient)."""
    lam = Fraction(lam)
    hi, lo = lam + 1, lam - 1

    def collapse(w):
        if w is SILENT:
            return w
        if f.name in ("Inf", "LimInf"):
            return hi if w > lam else w
        if f.name in ("Sup", "LimSup"):
            return lo if w <= lam else w
        raise UnsupportedValueFn(f"{f}")

    weight = {t: collapse(w) for t, w in wa.weight.items()}
    block = {q: (q in wa.accepting) for q in wa.states}
    while True:
        sig = {}
        for q in wa.states:
            outs = frozenset((t[1], _vkey(weight[t]) if weight[t] is not SILENT else "s", block[t[2]])
                             for t in wa.base.out[q])
            sig[q] = (block[q], outs)
        ids = {}
        new = {}
        for q in wa.states:
            new[q] = ids.setdefault(sig[q], len(ids))
        if len(set(new.values())) == len(set(block.values())):
            block = new
            break
        block = new
    states = sorted(set(block.values()))
    edges = [(block[p], a, block[q], weight[(p, a, q)]) for p, a, q in wa.transitions]
    init = {block[q] for q in wa.initial}
    accepting = {block[q] for q in wa.accepting}
    return build_weighted(wa.alphabet, states, init, edges, accepting, wa.valuefn)


# --- (LimAvg;Sum+): determinization over an extended alphabet --------------------

INIT = ("init",)


def _choice_tables(auts):
    """For each automaton (identified by key) and letter, the choices of each
    state with several options.  auts: key -> list of (state, letter, choice)."""
    table = {}
    for key, entries in auts.items():
        for q, a, ch in entries:
            table.setdefault(a, {}).setdefault((key, q), []).append(ch)
    return table


def determinize_limavg_sum(nwa):
    return determinize_with_map(nwa)[0]


def determinize_with_map(nwa):
    """Deterministic NWA over letters (a, k) where k picks one transition for
    every state that has several; returns (nwa, letter -> base letter).

    Slaves get separate 'stop' copies of accepting states with successors and
    an explicit choice between the empty run and a proper run, so that all
    slaves become deterministic and prefix-free."""
    alphabet = nwa.alphabet
    # master: fresh initial state when needed, choices over transitions
    m = nwa.master
    m_init = m.initial_ordered()
    m_trans = list(m.transitions)
    labels = dict(nwa.labels)
    if len(m_init) > 1:
        for q0 in m_init:
            for t in m.out[q0]:
                nt = (INIT, t[1], t[2])
                if nt not in labels:
                    m_trans.append(nt)
                    labels[nt] = nwa.labels[t]
        m_init = [INIT]
    # slaves: absolute weights, split epsilon and stop/continue choices
    new_slaves = []
    eps_index = {}
    run_index = {}
    for i, s in enumerate(nwa.slaves, 1):
        eps = bool(s.initial & s.accepting)
        if eps:
            eps_index[i] = len(new_slaves) + 1
            new_slaves.append(("eps", i))
        if not is_epsilon_only(s.base):
            run_index[i] = len(new_slaves) + 1
            new_slaves.append(("run", i))
    # master transitions become (src, (letter, label choice), dst) options
    m_opts = {}
    for t in m_trans:
        i = labels[t]
        for kind, idx in (("eps", eps_index.get(i)), ("run", run_index.get(i))):
            if idx is not None:
                m_opts.setdefault((t[0], t[1]), []).append((t[2], idx))
    slave_opts = {}
    slave_tabs = []
    for kind, i in new_slaves:
        s = nwa.slave(i)
        if kind == "eps":
            slave_tabs.append(None)
            continue
        opts = {}

        def targets(r):
            res = []
            if r in s.accepting:
                res.append(("stop", r))
            if s.base.out[r]:
                res.append(("go", r))
            return res

        for q0 in s.base.initial_ordered():
            for t in s.base.out[q0]:
                for tgt in targets(t[2]):
                    opts.setdefault((INIT, t[1]), []).append((tgt, abs(s.weight[t])))
        for q in s.states:
            for t in s.base.out[q]:
                for tgt in targets(t[2]):
                    opts.setdefault((("go", q), t[1]), []).append((tgt, abs(s.weight[t])))
        slave_tabs.append(opts)
        slave_opts[len(slave_tabs)] = opts
    # extended letters
    branching = {}
    for a in alphabet:
        br = []
        for (q, x), ch in sorted(m_opts.items(), key=repr):
            if x == a and len(ch) > 1:
                br.append((("m", q), ch))
        for k, opts in sorted(slave_opts.items()):
            for (q, x), ch in sorted(opts.items(), key=repr):
                if x == a and len(ch) > 1:
                    br.append(((k, q), ch))
        branching[a] = br
    letters = []
    base_of = {}
    choice_of = {}
    for a in alphabet:
        br = branching[a]
        if not br:
            letters.append(a)
            base_of[a] = a
            choice_of[a] = {}
            continue
        for n, combo in enumerate(itertools.product(*[range(len(ch)) for _, ch in br])):
            x = (a, n)
            letters.append(x)
            base_of[x] = a
            choice_of[x] = {key: ch[c] for (key, ch), c in zip(br, combo)}

    def pick(key, opts, x):
        if len(opts) == 1:
            return opts[0]
        return choice_of[x][key]

    mt, ml = [], {}
    m_states = list(dict.fromkeys(list(m.states) + m_init))
    for x in letters:
        a = base_of[x]
        for q in m_states:
            opts = m_opts.get((q, a))
            if not opts:
                continue
            r, idx = pick(("m", q), opts, x)
            mt.append((q, x, r))
            ml[(q, x, r)] = idx
    master = Automaton(letters, m_states, m_init, mt, m.accepting)
    slaves = []
    for k, (kind, i) in enumerate(new_slaves, 1):
        s = nwa.slave(i)
        fn = SUMPLUS if s.valuefn.name in ("Sum", "SumPlus") else s.valuefn
        if kind == "eps":
            b = Automaton(letters, ["e"], {"e"}, [], {"e"}, FINITE)
            slaves.append(WeightedAutomaton(b, {}, fn))
            continue
        opts = slave_opts[k]
        states = [INIT] + [("go", q) for q in s.states if s.base.out[q]] + \
                 [("stop", q) for q in s.states if q in s.accepting]
        trans, w = [], {}
        for x in letters:
            a = base_of[x]
            for q in states:
                o = opts.get((q, a))
                if not o:
                    continue
                tgt, wt = pick((k, q), o, x)
                trans.append((q, x, tgt))
                w[(q, x, tgt)] = wt
        acc = {("stop", q) for q in s.states if q in s.accepting}
        slaves.append(WeightedAutomaton(Automaton(letters, states, {INIT}, trans, acc, FINITE), w, fn))
    det = NestedWeightedAutomaton(master, ml, nwa.masterfn, tuple(slaves), nwa.functional)
    return det, base_of


# --- (LimAvg;Sum+): bounded multiplicity -----------------------------------------

@dataclass(frozen=True)
class TransformInfo:
    n_bound: int
    guess_bound: int
    cap: int
    pending_bound: object
    base_of: dict = field(hash=False, compare=False)


def default_constants(nwa):
    conf = configuration_count(nwa, limit=1).bound
    qslv = sum(len(s.states) for s in nwa.slaves)
    n = (qslv + 2) * conf
    return n, 4 * n, 2 * n + 1


def bound_multiplicity_transform(nwa, n_bound=None, guess_bound=None, synchronize=True,
                                 pending_bound=None, with_info=False):
    """Deterministic NWA A0 whose slaves either return a guessed value at once
    (checked by the master) or run genuinely and must exceed the guess bound.

    Letters are (a, marker, mode): marker 1 marks the single position where
    accounting starts; mode is "s" exactly on master-silent steps, "r" for a
    genuine slave, or the guessed value.  With synchronize, genuine slaves
    emit 0 on silent steps and pay the deferred amount at the next weighted
    step.  Returns (A0, cap)."""
    if classify(nwa) != DETERMINISTIC:
        raise NestwaError("bound_multiplicity_transform needs a deterministic NWA")
    conf = configuration_count(nwa, limit=1).bound
    qslv = sum(len(s.states) for s in nwa.slaves)
    n = n_bound if n_bound is not None else (qslv + 2) * conf
    g = guess_bound if guess_bound is not None else 4 * n
    cap = 2 * n + 1
    lam_max = max((s.max_abs_weight() for s in nwa.slaves), default=Fraction(0))
    pend = pending_bound if pending_bound is not None else conf * lam_max
    silent = nwa.silent_slaves
    k = len(nwa.slaves)
    modes = ["s", "r"] + list(range(g + 1))
    letters = [(a, mk, md) for a in nwa.alphabet for mk in (0, 1) for md in modes]

    def sdelta(i, s, a):
        sl = nwa.slave(i)
        nxt = sl.base.succ.get((s, a))
        if not nxt:
            return None
        r = nxt[0]
        return r, abs(sl.weight[(s, a, r)])

    # slave numbering in A0
    SIL = 1
    zero = {i: 1 + i for i in range(1, k + 1)}
    dummy = {v: 1 + k + 1 + v for v in range(g + 1)}
    genuine = {i: 1 + k + g + 1 + i for i in range(1, k + 1)}

    def checker_step(p, a):
        res = set()
        for i, s, rem in p:
            st = sdelta(i, s, a)
            if st is None:
                return None
            r, w = st
            rem -= w
            if rem < 0:
                return None
            if r in nwa.slave(i).accepting:
                if rem != 0:
                    return None
                continue
            res.add((i, r, rem))
        return frozenset(res)

    def post_moves(q, p1, p2, a):
        """Transitions of the checked phase from (q, p1, p2) on a."""
        res = []
        nxt = nwa.master.succ.get((q, a))
        if not nxt:
            return res
        r = nxt[0]
        i = nwa.labels[(q, a, r)]
        s1 = checker_step(p1, a)
        if s1 is None:
            return res
        s2 = checker_step(p2, a) if p2 else frozenset()
        if s2 is None:
            return res
        if i in silent:
            choices = [("s", SIL, frozenset())]
        else:
            choices = [("r", genuine[i], frozenset())]
            (s0,) = nwa.slave(i).initial
            st = sdelta(i, s0, a)
            if st is not None:
                r1, w1 = st
                for v in range(g + 1):
                    rem = v - w1
                    if rem < 0:
                        continue
                    if r1 in nwa.slave(i).accepting:
                        if rem == 0:
                            choices.append((v, dummy[v], frozenset()))
                        continue
                    choices.append((v, dummy[v], frozenset([(i, r1, rem)])))
        for md, lab, new in choices:
            if p2:
                tgt = ("post", r, s1 | new, s2)
            else:
                tgt = ("post", r, new, s1)
            res.append((md, lab, tgt))
        return res

    (q0,) = nwa.master.initial
    start = [("pre", q0)]
    seen = set(start)
    order = list(start)
    raw = []
    queue = deque(start)
    while queue:
        node = queue.popleft()
        for a in nwa.alphabet:
            moves = []
            if node[0] == "pre":
                q = node[1]
                nxt = nwa.master.succ.get((q, a))
                if nxt:
                    r = nxt[0]
                    i = nwa.labels[(q, a, r)]
                    if i in silent:
                        moves.append(((a, 0, "s"), SIL, ("pre", r)))
                    else:
                        moves.append(((a, 0, "r"), zero[i], ("pre", r)))
                for md, lab, tgt in post_moves(q, frozenset(), frozenset(), a):
                    moves.append(((a, 1, md), lab, tgt))
            else:
                _, q, p1, p2 = node
                for md, lab, tgt in post_moves(q, p1, p2, a):
                    moves.append(((a, 0, md), lab, tgt))
            for x, lab, tgt in moves:
                raw.append((node, (x, lab), tgt))
                if tgt not in seen:
                    seen.add(tgt)
                    order.append(tgt)
                    queue.append(tgt)
    f1 = {n_ for n_ in order if n_[0] == "post" and n_[1] in nwa.master.accepting}
    f2 = {n_ for n_ in order if n_[0] == "post" and not n_[3]}
    dn, dinit, dedges, dacc = degeneralize(order, start, raw, [f1, f2])
    master = Automaton(letters, dn, dinit, [(u, lab[0], w) for u, lab, w in dedges], dacc)
    mlabels = {(u, lab[0], w): lab[1] for u, lab, w in dedges}

    slaves = [None] * (1 + k + g + 1 + k)
    slaves[SIL - 1] = WeightedAutomaton(Automaton(letters, ["e"], {"e"}, [], {"e"}, FINITE), {}, SUMPLUS)
    for i in range(1, k + 1):
        sl = nwa.slave(i)
        trans, w = [], {}
        for x in letters:
            for s in sl.states:
                st = sdelta(i, s, x[0])
                if st is not None:
                    t = (s, x, st[0])
                    trans.append(t)
                    w[t] = 0
        slaves[zero[i] - 1] = WeightedAutomaton(
            Automaton(letters, sl.states, sl.initial, trans, sl.accepting, FINITE), w, SUMPLUS)
    for v in range(g + 1):
        trans = [("d0", x, "d1") for x in letters]
        slaves[dummy[v] - 1] = WeightedAutomaton(
            Automaton(letters, ["d0", "d1"], {"d0"}, trans, {"d1"}, FINITE),
            {t: v for t in trans}, SUMPLUS)
    top = g + 1
    for i in range(1, k + 1):
        slaves[genuine[i] - 1] = _genuine_slave(nwa.slave(i), letters, top, pend, synchronize, sdelta, i)
    a0 = NestedWeightedAutomaton(master, mlabels, LIMAVG, tuple(slaves))
    if with_info:
        return a0, cap, TransformInfo(n, g, cap, pend, {x: x[0] for x in letters})
    return a0, cap


def _genuine_slave(sl, letters, top, pend, synchronize, sdelta, i):
    (s0,) = sl.initial
    start = ("h", s0, Fraction(0), Fraction(0))
    end = ("end",)
    states = [start, end]
    seen = {start, end}
    trans, w = [], {}
    queue = deque([start])

    def add(src, x, tgt, wt):
        t = (src, x, tgt)
        trans.append(t)
        w[t] = wt
        if tgt not in seen:
            seen.add(tgt)
            states.append(tgt)
            queue.append(tgt)

    while queue:
        node = queue.popleft()
        for x in letters:
            silent_step = x[2] == "s"
            if node[0] == "flush":
                if silent_step:
                    add(node, x, node, 0)
                else:
                    add(node, x, end, node[1])
                continue
            _, s, acc, p = node
            st = sdelta(i, s, x[0])
            if st is None:
                continue
            r, wt = st
            acc2 = min(acc + wt, Fraction(top))
            if synchronize and silent_step:
                out, p2 = Fraction(0), p + wt
                if p2 > pend:
                    continue
            else:
                out, p2 = p + wt, Fraction(0)
            if r in sl.accepting:
                if acc2 < top:
                    continue
                add(node, x, end if p2 == 0 else ("flush", p2), out)
            else:
                add(node, x, ("h", r, acc2, p2), out)
    return WeightedAutomaton(Automaton(letters, states, {start}, trans, {end}, FINITE), w, SUMPLUS)


@dataclass
class Simulation:
    automaton: WeightedAutomaton
    states: int
    pruned_by_cap: int


def _zero_tail(sl):
    """States from which no nonzero weight can be collected."""
    pred = {}
    hot = set()
    for t in sl.transitions:
        pred.setdefault(t[2], []).append(t[0])
        if sl.weight[t] != 0:
            hot.add(t[0])
    live = set(reachable(list(hot), lambda q: pred.get(q, ())))
    return {q for q in sl.states if q not in live}


def build_bounded_simulation(nwa, cap, saturate=False, limit=None, pend_cap=None):
    """Silent LimAvg automaton tracking the master state and how many slaves
    sit in each slave state.  Transition weight = sum of the slaves' weights
    times their multiplicities; silent iff the master step is silent.

    Exact mode drops runs whose multiplicities exceed cap (and silent steps
    that would lose weight).  With saturate, counts stop at cap+1 and extra
    slaves are simply not charged, which under-approximates every run.
    Weight earned on silent steps is then carried to the next visible step,
    saturating at pend_cap."""
    limit = limit or state_limit()
    if classify(nwa) != DETERMINISTIC:
        raise NestwaError("build_bounded_simulation needs a deterministic NWA")
    for s in nwa.slaves:
        if s.valuefn.name not in ("SumPlus", "BSum") and not is_epsilon_only(s.base):
            raise UnsupportedValueFn(f"slaves must be Sum+ automata, got {s.valuefn}")
    silent = nwa.silent_slaves
    kinds = {}
    kind_list = []

    def kind(i, s):
        key = (i, s)
        if key not in kinds:
            kinds[key] = len(kind_list)
            kind_list.append(key)
        return kinds[key]

    zt = {i: _zero_tail(s) for i, s in enumerate(nwa.slaves, 1)}
    top = cap + 1 if saturate else cap
    (q0,) = nwa.master.initial
    if pend_cap is None:
        pend_cap = Fraction(2 * cap + 2)
    start = (q0, (), frozenset(), Fraction(0))
    seen = {start: 0}
    order = [start]
    raw = []
    pruned = 0
    queue = deque([start])
    m = nwa.master
    while queue:
        node = queue.popleft()
        q, counts, p2, pend = node
        for t in m.out.get(q, ()):
            x, r = t[1], t[2]
            i = nwa.labels[t]
            moved = {}
            trans_kind = {}
            contrib = Fraction(0)
            dead = False
            for kd, n in counts:
                si, s = kind_list[kd]
                sl = nwa.slave(si)
                nxt = sl.base.succ.get((s, x))
                if not nxt:
                    dead = True
                    break
                s2 = nxt[0]
                contrib += n * sl.weight[(s, x, s2)]
                if s2 in sl.accepting:
                    trans_kind[kd] = None
                    continue
                k2 = kind(si, s2)
                trans_kind[kd] = k2
                moved[k2] = moved.get(k2, 0) + n
            if dead:
                continue
            first = None
            if i not in silent:
                sl = nwa.slave(i)
                (s0,) = sl.initial
                nxt = sl.base.succ.get((s0, x))
                if not nxt:
                    continue
                s1 = nxt[0]
                first = sl.weight[(s0, x, s1)]
                if s1 not in sl.accepting:
                    k1 = kind(i, s1)
                    moved[k1] = moved.get(k1, 0) + 1
            over = False
            for kd in list(moved):
                si, s = kind_list[kd]
                if s in zt[si]:
                    moved[kd] = 1
                elif moved[kd] > top:
                    if saturate:
                        moved[kd] = top
                    else:
                        over = True
            if over:
                pruned += 1
                continue
            pend2 = Fraction(0)
            if first is None:
                if contrib != 0 and not saturate:
                    continue
                wt = SILENT
                if saturate:
                    pend2 = min(pend + contrib, pend_cap)
            else:
                wt = contrib + first + pend
            src = counts if not p2 else [(kd, 1) for kd in p2]
            p2n = frozenset(trans_kind[kd] for kd, _ in src if trans_kind.get(kd) is not None)
            tgt = (r, tuple(sorted(moved.items())), p2n, pend2)
            raw.append((node, (x, wt), tgt))
            if tgt not in seen:
                seen[tgt] = len(order)
                order.append(tgt)
                queue.append(tgt)
                if len(order) > limit:
                    raise ResourceLimit(len(order), limit)
    f1 = {n for n in order if n[0] in m.accepting}
    f2 = {n for n in order if not n[2]}
    # compact state names keep the automaton light
    ren = {n: j for j, n in enumerate(order)}
    dn, dinit, dedges, dacc = degeneralize(
        [ren[n] for n in order], [0], [(ren[u], lab, ren[w]) for u, lab, w in raw],
        [{ren[n] for n in f1}, {ren[n] for n in f2}])
    wa = build_weighted(nwa.alphabet, dn, dinit, [(u, lab[0], w, lab[1]) for u, lab, w in dedges],
                        dacc, LIMAVG)
    sim = Simulation(wa, len(dn), pruned)
    sim.decode = {j: n for n, j in ren.items()}
    sim.kinds = kind_list
    if pruned and not _has_good_cycle(wa):
        raise CapExceededEverywhere(f"every run exceeds multiplicity cap {cap}")
    return sim


def _has_good_cycle(wa):
    from .core import sccs
    succ = {}
    for t in wa.transitions:
        succ.setdefault(t[0], []).append(t)
    for comp in sccs(list(wa.states), lambda v: [t[2] for t in succ.get(v, ())]):
        cs = set(comp)
        inner = [t for q in comp for t in succ.get(q, ()) if t[2] in cs]
        if inner and any(q in wa.accepting for q in comp) and any(wa.weight[t] is not SILENT for t in inner):
            return True
    return False
