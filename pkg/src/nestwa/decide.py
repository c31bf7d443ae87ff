"""Emptiness and universality deciders and the fragment routing matrix.

Thresholds are non-strict (value <= lam).  A few internal entry points take
strict=True; they are used for the dual checks inside universality.
"""

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .core import (Automaton, LassoWord, NestwaError, ResourceLimit, WeightedAutomaton, bfs_path,
                   buchi_lasso, cycle_in, degeneralize, howard, is_deterministic, lasso_membership, lasso_product,
                   min_mean_cycle, reachable, sccs, state_limit, tight_subgraph)
from .nested import DETERMINISTIC, NestedWeightedAutomaton, classify, configuration_count, eval_det
from .reduce import (CapExceededEverywhere, a_minus, afix, bound_multiplicity_transform,
                     bound_sum_plus, build_bounded_simulation, build_weighted, default_constants,
                     determinize_with_map, eliminate_silent, lemma4_reduce, projection_graph)
from .values import INFINITY, LIMAVG, LIMSUP, SILENT, BSum, as_fraction, dual

DECIDED = "Decided"
UNDECIDABLE = "Undecidable"
OPEN = "OpenProblem"
UNSUPPORTED = "Unsupported"


class ComplementationTooLarge(NestwaError):
    pass


@dataclass(frozen=True)
class FragmentVerdict:
    kind: str
    answer: bool = None
    witness: LassoWord = None
    citation: str = None
    reason: str = None
    note: str = None
    counterexample: LassoWord = None
    stats: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def decided(self):
        return self.kind == DECIDED


def decided(answer, witness=None, **kw):
    return FragmentVerdict(DECIDED, answer=answer, witness=witness, **kw)


def undecidable(citation):
    return FragmentVerdict(UNDECIDABLE, citation=citation)


def open_problem(citation):
    return FragmentVerdict(OPEN, citation=citation)


def unsupported(reason):
    return FragmentVerdict(UNSUPPORTED, reason=reason)


def _low(lam, strict):
    return (lambda w: w < lam) if strict else (lambda w: w <= lam)


def _letters(path):
    return [lab[1] for lab, _ in path]


def _succ_of(a):
    """node -> [(transition, target)] for an Automaton or weighted automaton."""
    out = {q: [] for q in a.states}
    for t in a.transitions:
        out[t[0]].append((t, t[2]))
    return out


def negate(wa, valuefn=None):
    w = {t: (x if x is SILENT else -x) for t, x in wa.weight.items()}
    return WeightedAutomaton(wa.base, w, valuefn or dual(wa.valuefn))


# --- exact value of a (silent) weighted automaton on a lasso --------------------

def value_of_lasso(wa, w):
    """Infimum over accepting runs of a (silent) f-automaton on u·v^ω."""
    g, init = lasso_product(wa.base, w)
    nodes = g.nodes
    acc = {n for n in nodes if n[0] in wa.accepting}
    weight = {}
    for u, t, v in g.edges():
        weight[(u, t, v)] = wa.weight[t]
    f = wa.valuefn.name
    edges = [(u, t, v, weight[(u, t, v)]) for u, t, v in g.edges()]

    def good_sccs(es):
        adj = {}
        for e in es:
            adj.setdefault(e[0], []).append(e)
        reach = set(reachable(init, lambda x: [e[2] for e in adj.get(x, ())]))
        res = []
        for comp in sccs(list(reach), lambda x: [e[2] for e in adj.get(x, ())]):
            cs = set(comp)
            inner = [e for x in comp for e in adj.get(x, ()) if e[2] in cs]
            if inner and cs & acc and any(e[3] is not SILENT for e in inner):
                res.append((comp, inner))
        return res, reach, adj

    comps, reach, adj = good_sccs(edges)
    if not comps:
        return INFINITY
    if f == "LimInf":
        return min(e[3] for _, inner in comps for e in inner if e[3] is not SILENT)
    if f == "LimAvg":
        pw = build_weighted(tuple({t for _, t, _ in g.edges()}), nodes, init,
                            [(u, t, v, x) for u, t, v, x in edges], acc, LIMAVG)
        return _limavg_best(pw, None, False)[0]
    ws = sorted({e[3] for e in edges if e[3] is not SILENT})
    if f == "Inf":
        good = set()
        for comp, _ in comps:
            good |= set(comp)
        pred = {}
        for e in edges:
            pred.setdefault(e[2], []).append(e[0])
        live = set(reachable(list(good), lambda x: pred.get(x, ())))
        cand = [e[3] for e in edges if e[0] in reach and e[2] in live and e[3] is not SILENT]
        return min(cand)
    for x in ws:
        keep = [e for e in edges if e[3] is SILENT or e[3] <= x]
        if f == "Sup" and good_sccs(keep)[0]:
            return x
        if f == "LimSup":
            # edges above x allowed only before the loop
            for comp, inner in comps:
                cs = set(comp)
                sub = [e for e in keep if e[0] in cs and e[2] in cs]
                if _has_good_cycle(comp, sub, acc):
                    return x
    return INFINITY


def _has_good_cycle(nodes, edges, acc):
    adj = {}
    for e in edges:
        adj.setdefault(e[0], []).append(e)
    for comp in sccs(list(nodes), lambda x: [e[2] for e in adj.get(x, ())]):
        cs = set(comp)
        inner = [e for x in comp for e in adj.get(x, ()) if e[2] in cs]
        if inner and cs & acc and any(e[3] is not SILENT for e in inner):
            return True
    return False


# --- non-nested emptiness ------------------------------------------------------

def empty_nonnested(wa, lam, strict=False):
    lam = as_fraction(lam)
    f = wa.valuefn
    if f.name == "LimAvg":
        return _empty_limavg(wa, lam, strict)
    elim = eliminate_silent(wa, f, lam, strict)
    w = _threshold_lasso(elim, f.name, _low(lam, strict))
    if w is None:
        return decided(False, stats={"states": len(elim.states)})
    return decided(True, w, stats={"states": len(elim.states)})


def _threshold_lasso(wa, f, low):
    """Lasso word with an accepting run whose f-value passes `low`, on an
    automaton without silent weights."""
    succ = _succ_of(wa)
    init = wa.base.initial_ordered()
    acc = wa.accepting
    weight = wa.weight
    reach = reachable(init, lambda v: [x for _, x in succ[v]])

    def stem_to(node):
        return _letters(bfs_path(init, lambda v: succ[v], lambda v: v == node)[1])

    if f == "Sup":
        lowsucc = lambda v: [(t, x) for t, x in succ[v] if low(weight[t])]
        res = buchi_lasso(reach, init, lowsucc, acc)
        if res is None:
            return None
        _, stem, cyc = res
        return LassoWord(_letters(stem), _letters(cyc))
    if f == "Inf":
        live = _live_nodes(reach, lambda v: [x for _, x in succ[v]], acc)
        for v in reach:
            for t, x in succ[v]:
                if not low(weight[t]) or x not in live:
                    continue
                _, stem, cyc = buchi_lasso(reach, [x], lambda u: succ[u], acc)
                return LassoWord(stem_to(v) + [t[1]] + _letters(stem), _letters(cyc))
        return None
    comps = sccs(reach, lambda v: [x for _, x in succ[v]])
    for comp in comps:
        cs = set(comp)
        accs = [q for q in comp if q in acc]
        if not accs:
            continue
        if f == "LimInf":
            for v in comp:
                for t, x in succ[v]:
                    if x not in cs or not low(weight[t]):
                        continue
                    a = accs[0]
                    inner = lambda u: [(s, y) for s, y in succ[u] if y in cs]
                    p1 = bfs_path([a], inner, lambda u: u == v)[1]
                    p2 = bfs_path([x], inner, lambda u: u == a)[1]
                    return LassoWord(stem_to(a), _letters(p1) + [t[1]] + _letters(p2))
        elif f == "LimSup":
            lowsucc = lambda u: [(s, y) for s, y in succ[u] if y in cs and low(weight[s])]
            res = buchi_lasso(comp, comp, lowsucc, acc)
            if res is None:
                continue
            start, stem, cyc = res
            return LassoWord(stem_to(start) + _letters(stem), _letters(cyc))
    return None


def _live_nodes(nodes, succ, acc):
    """Nodes from which an accepting cycle is reachable."""
    pred = {}
    good = set()
    for v in nodes:
        for w in succ(v):
            pred.setdefault(w, []).append(v)
    for comp in sccs(list(nodes), succ):
        cs = set(comp)
        if cs & acc and any(w in cs for v in comp for w in succ(v)):
            good |= cs
    return set(reachable(list(good), lambda v: pred.get(v, ())))


def _scc_mean(comp, inner):
    if len(comp) <= 64:
        return min_mean_cycle(comp, inner), None
    eta, pot, _ = howard(comp, inner)
    return min(eta.values()), pot


def _limavg_best(wa, lam, strict):
    """(best mean over good components, witness lasso or None)."""
    fx = afix(wa)
    a = fx.automaton
    succ = {}
    for t in a.transitions:
        succ.setdefault(t[0], []).append((t[0], t, t[2], a.weight[t]))
    init = a.base.initial_ordered()
    reach = reachable(init, lambda v: [e[2] for e in succ.get(v, ())])
    found = []
    for comp in sccs(reach, lambda v: [e[2] for e in succ.get(v, ())]):
        cs = set(comp)
        if not cs & a.accepting:
            continue
        inner = [e for v in comp for e in succ.get(v, ()) if e[2] in cs]
        if not inner:
            continue
        mu, pot = _scc_mean(comp, inner)
        found.append((mu, comp, inner, pot))
    if not found:
        return INFINITY, None, None
    found.sort(key=lambda x: x[0])
    best = found[0][0]
    if lam is None:
        return best, None, None
    low = _low(lam, strict)
    for mu, comp, inner, pot in found:
        if not low(mu):
            break
        cyc = _mean_witness_cycle(a, comp, inner, mu, pot, lam, strict)
        if cyc is None:
            continue
        start = cyc[0][0]
        stem = bfs_path(init, lambda v: [(e[1], e[2]) for e in succ.get(v, ())], lambda v: v == start)[1]
        pre = [x for lab, _ in stem for x in _expand(fx, lab)]
        per = [x for e in cyc for x in _expand(fx, e[1])]
        return best, LassoWord(pre, per), mu
    return best, None, found[0][0]


def min_limavg(wa):
    """Infimum of a (silent) LimAvg automaton over all words and runs."""
    return _limavg_best(wa, None, False)[0]


def _expand(fx, t):
    return [s[1] for s in fx.expansion[t]]


def _mean_witness_cycle(a, comp, inner, mu, pot, lam, strict):
    """Cycle (list of edges) through an accepting state with mean passing the
    threshold, or None when the optimum is only approached."""
    if pot is None:
        tight = tight_subgraph(comp, inner, mu)
    else:
        tight = [e for e in inner if pot[e[0]] == e[3] - mu + pot[e[2]]]
    tadj = {}
    for e in tight:
        tadj.setdefault(e[0], []).append(e)
    tsucc = lambda v: [(e, e[2]) for e in tadj.get(v, ())]
    tnodes = set(tadj)
    if not strict or mu < lam:
        for q in comp:
            if q in a.accepting and q in tnodes:
                c = cycle_in(tnodes, tsucc, q)
                if c is not None:
                    return [lab for lab, _ in c]
    if not mu < lam:
        return None
    zc = None
    for q in tnodes:
        zc = cycle_in(tnodes, tsucc, q)
        if zc is not None:
            break
    z = [lab for lab, _ in zc]
    cs = set(comp)
    adj = {}
    for e in inner:
        adj.setdefault(e[0], []).append(e)
    isucc = lambda v: [(e, e[2]) for e in adj.get(v, ())]
    z0 = z[0][0]
    p1 = bfs_path([z0], isucc, lambda v: v in a.accepting)
    p2 = bfs_path([p1[1][-1][1] if p1[1] else z0], isucc, lambda v: v == z0)
    detour = [lab for lab, _ in p1[1]] + [lab for lab, _ in p2[1]]
    if not detour:
        return z
    wz = sum((e[3] for e in z), Fraction(0))
    wp = sum((e[3] for e in detour), Fraction(0))
    low = _low(lam, strict)
    k = max(1, math.ceil((wp - lam * len(detour)) / (len(z) * (lam - mu))))
    while not low((k * wz + wp) / (k * len(z) + len(detour))):
        k += 1
    return z * k + detour


def _empty_limavg(wa, lam, strict):
    best, witness, mu = _limavg_best(wa, lam, strict)
    low = _low(lam, strict)
    stats = {"min_mean": best}
    if best is INFINITY or not low(best):
        return decided(False, stats=stats)
    if witness is None:
        return decided(True, None, note="the minimum mean is only reached in the limit; "
                                       "no ultimately periodic witness", stats=stats)
    return decided(True, witness, stats=stats)


# --- nested emptiness ------------------------------------------------------------

def empty_regular_slaves(nwa, lam, strict=False, optimize=False):
    lam = as_fraction(lam)
    limavg = nwa.masterfn.name == "LimAvg"
    red = lemma4_reduce(nwa, threshold=None if limavg else lam, strict=strict)
    if optimize and nwa.masterfn.name != "LimAvg":
        red = a_minus(red, nwa.masterfn, as_fraction(lam))
    v = empty_nonnested(red, lam, strict)
    return _with_stats(v, reduced_states=len(red.states))


def _with_stats(v, **kw):
    s = dict(v.stats)
    s.update(kw)
    return FragmentVerdict(v.kind, v.answer, v.witness, v.citation, v.reason, v.note,
                           v.counterexample, s)


def empty_f_sum_plus(nwa, lam, optimize=False):
    lam = as_fraction(lam)
    if lam < 0:
        return decided(False, note="Sum+ values are nonnegative")
    return empty_regular_slaves(bound_sum_plus(nwa, lam), lam, optimize=optimize)


def _good_region_ends(proj):
    """Nodes of the projection from which an accepting lasso exists."""
    succ = {}
    for u, t, ns, v in proj.edges:
        succ.setdefault(u, []).append(v)
    pred = {}
    for u, t, ns, v in proj.edges:
        pred.setdefault(v, []).append(u)
    good = set()
    for comp in sccs(proj.nodes, lambda v: succ.get(v, ())):
        cs = set(comp)
        if cs & proj.accepting and any(w in cs for v in comp for w in succ.get(v, ())):
            good |= cs
    return set(reachable(list(good), lambda v: pred.get(v, ())))


def empty_inf_sum(nwa, lam, strict=False, limit=None):
    """(Inf;Sum) and (LimInf;Sum) emptiness: look for an invoked slave run of
    small sum inside an accepting run of the Boolean projection."""
    f = nwa.masterfn.name
    if f not in ("Inf", "LimInf"):
        raise NestwaError(f"empty_inf_sum needs an Inf or LimInf master, got {f}")
    lam = as_fraction(lam)
    limit = limit or state_limit()
    proj = projection_graph(nwa, limit)
    psucc = {}
    for u, t, ns, v in proj.edges:
        psucc.setdefault(u, []).append((t, ns, v))
    if f == "Inf":
        live = _good_region_ends(proj)
        regions = [(set(proj.nodes), live)]
    else:
        regions = []
        sm = lambda v: [e[2] for e in psucc.get(v, ())]
        for comp in sccs(proj.nodes, sm):
            cs = set(comp)
            if cs & proj.accepting and any(w in cs for v in comp for w in sm(v)):
                regions.append((cs, cs))
    for region, ends in regions:
        hit = _sum_search(nwa, psucc, region, ends, lam, strict, limit)
        if hit is None:
            continue
        p_start, letters, p_end = hit
        init = proj.initial
        ps = lambda v: [((t, ns), w) for t, ns, w in psucc.get(v, ())]
        pre = _letters_t(bfs_path(init, ps, lambda v: v == p_start)[1])
        if f == "Inf":
            res = buchi_lasso(proj.nodes, [p_end], ps, proj.accepting)
            _, stem, cyc = res
            return decided(True, LassoWord(pre + letters + _letters_t(stem), _letters_t(cyc)))
        inner = lambda v: [(lab, w) for lab, w in ps(v) if w in region]
        a = next(q for q in region if q in proj.accepting)
        back = _letters_t(bfs_path([p_end], inner, lambda v: v == a)[1]) + \
            _letters_t(bfs_path([a], inner, lambda v: v == p_start)[1])
        return decided(True, LassoWord(pre, letters + back))
    return decided(False)


def _letters_t(path):
    return [lab[0][1] for lab, _ in path]


def _sum_search(nwa, psucc, region, ends, lam, strict, limit):
    """Shortest tracked-slave sums over the product of projection and slave.
    Returns (projection node before the invocation, letters, end node)."""
    starts = {}
    for p in region:
        for t, ns, p2 in psucc.get(p, ()):
            if not ns or p2 not in region:
                continue
            i = nwa.labels[t]
            sl = nwa.slave(i)
            for s0 in sl.base.initial_ordered():
                for r in sl.base.succ.get((s0, t[1]), ()):
                    node = (p2, i, r)
                    w = sl.weight[(s0, t[1], r)]
                    if node not in starts or w < starts[node][0]:
                        starts[node] = (w, p, t[1])
    adj = {}
    seen = set(starts)
    queue = deque(starts)
    while queue:
        node = queue.popleft()
        p, i, s = node
        sl = nwa.slave(i)
        lst = adj.setdefault(node, [])
        for t, ns, p2 in psucc.get(p, ()):
            if p2 not in region:
                continue
            for r in sl.base.succ.get((s, t[1]), ()):
                nxt = (p2, i, r)
                lst.append((nxt, sl.weight[(s, t[1], r)], t[1]))
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
                    if len(seen) > limit:
                        raise ResourceLimit(len(seen), limit)
    goals = {n for n in seen if n[0] in ends and n[2] in nwa.slave(n[1]).accepting}
    if not goals:
        return None
    pred = {}
    for u, lst in adj.items():
        for v, _, _ in lst:
            pred.setdefault(v, []).append(u)
    co = set(reachable(list(goals), lambda v: pred.get(v, ())))
    nodes = [n for n in seen if n in co]
    dist = {n: starts[n][0] for n in nodes if n in starts}
    parent = {n: None for n in dist}
    count = {}
    queue = deque(dist)
    inq = set(queue)
    bound = len(nodes) + 1
    cycle_node = None
    while queue:
        u = queue.popleft()
        inq.discard(u)
        for v, w, a in adj.get(u, ()):
            if v not in co:
                continue
            c = dist[u] + w
            if v not in dist or c < dist[v]:
                dist[v] = c
                parent[v] = (u, a, w)
                count[v] = count.get(v, 0) + 1
                if count[v] > bound:
                    cycle_node = v
                    queue.clear()
                    break
                if v not in inq:
                    inq.add(v)
                    queue.append(v)
    low = _low(lam, strict)
    if cycle_node is not None:
        return _pump_negative(nwa, starts, adj, parent, cycle_node, goals, co, low)
    best = None
    for g in goals:
        if g in dist and low(dist[g]) and (best is None or dist[g] < dist[best]):
            best = g
    if best is None:
        return None
    return _trace_back(starts, parent, best)


def _trace_back(starts, parent, node):
    letters = []
    v = node
    while parent[v] is not None:
        u, a, _ = parent[v]
        letters.append(a)
        v = u
    w0, p_start, a0 = starts[v]
    return p_start, [a0] + letters[::-1], node[0]


def _pump_negative(nwa, starts, adj, parent, v, goals, co, low):
    # walk parents until a node repeats: that loop has negative weight
    seen = {}
    path = []
    while v not in seen:
        seen[v] = len(path)
        path.append(v)
        v = parent[v][0]
    loop = path[seen[v]:][::-1]  # forward order
    cyc_letters, cyc_w = [], Fraction(0)
    for i, x in enumerate(loop):
        y = loop[(i + 1) % len(loop)]
        u, a, w = parent[y]
        cyc_letters.append(a)
        cyc_w += w
    c0 = loop[0]
    # a path from some start to c0 and from c0 to a goal, using any edges
    sp = {s: None for s in starts}
    q = deque(starts)
    while q and c0 not in sp:
        u = q.popleft()
        for x, w, a in adj.get(u, ()):
            if x in co and x not in sp:
                sp[x] = (u, a, w)
                q.append(x)
    letters, w_in = [], Fraction(0)
    x = c0
    while sp[x] is not None:
        u, a, w = sp[x]
        letters.append(a)
        w_in += w
        x = u
    w0, p_start, a0 = starts[x]
    pre = [a0] + letters[::-1]
    w_in += w0
    res = bfs_path([c0], lambda u: [((a, w), y) for y, w, a in adj.get(u, ()) if y in co],
                   lambda u: u in goals)
    _, tail = res
    goal = tail[-1][1] if tail else c0
    tail_letters = [lab[0] for lab, _ in tail]
    w_out = sum((lab[1] for lab, _ in tail), Fraction(0))
    k = 0
    while not low(w_in + k * cyc_w + w_out):
        k += 1
    return p_start, pre + cyc_letters * k + tail_letters, goal[0]


def empty_sup_sum_nonpositive(nwa, lam):
    """(Sup;Sum) or (LimSup;Sum) emptiness when every slave weight is <= 0.
    Slave values are then -(sum of |w|), and the question becomes a
    threshold question on bounded sums of absolute weights."""
    f = nwa.masterfn.name
    if f not in ("Sup", "LimSup"):
        raise NestwaError("needs a Sup or LimSup master")
    if any(w is not SILENT and w > 0 for s in nwa.slaves for w in s.weight.values()):
        raise NestwaError("slave weights must be nonpositive")
    lam = as_fraction(lam)
    b = max(0, math.ceil(-lam))
    slaves = tuple(WeightedAutomaton(s.base, {t: abs(w) for t, w in s.weight.items()}, BSum(b))
                   for s in nwa.slaves)
    red = lemma4_reduce(nwa.with_(slaves=slaves), threshold=-lam, strict=True)
    neg = negate(red, nwa.masterfn)
    return empty_nonnested(neg, lam)


# --- Büchi universality ---------------------------------------------------------

COMPLEMENT_CAP = 10 ** 5


def _live(a):
    """Restrict a Büchi automaton to states from which some word is accepted."""
    succ = {}
    pred = {}
    for p, x, q in a.transitions:
        succ.setdefault(p, []).append(q)
        pred.setdefault(q, []).append(p)
    good = set()
    for comp in sccs(list(a.states), lambda v: succ.get(v, ())):
        cs = set(comp)
        if cs & a.accepting and any(w in cs for v in comp for w in succ.get(v, ())):
            good |= cs
    live = set(reachable(list(good), lambda v: pred.get(v, ())))
    trans = [t for t in a.transitions if t[0] in live and t[2] in live]
    return Automaton(a.alphabet, [q for q in a.states if q in live], a.initial & live,
                     trans, a.accepting & live, a.mode)


def short_lassos(alphabet, max_prefix=2, max_period=3, cap=400):
    out = []
    for lp in range(max_prefix + 1):
        for lv in range(1, max_period + 1):
            for u in itertools.product(alphabet, repeat=lp):
                for v in itertools.product(alphabet, repeat=lv):
                    out.append(LassoWord(u, v))
                    if len(out) >= cap:
                        return out
    return out


def buchi_universal(a, cap=COMPLEMENT_CAP):
    """(True, None) or (False, counterexample lasso)."""
    a = _live(a)
    for w in short_lassos(a.alphabet):
        if not lasso_membership(a, w):
            return False, w
    if is_deterministic(a):
        return _dba_universal(a)
    return _kv_universal(a, cap)


def _dba_universal(a):
    # a word is rejected iff the run dies or visits accepting states finitely often
    sink = ("sink",)
    succ = {}
    for q in list(a.states) + [sink]:
        for x in a.alphabet:
            nxt = a.succ.get((q, x), ()) if q != sink else ()
            succ.setdefault(q, []).append(((q, x), nxt[0] if nxt else sink))
    init = a.initial_ordered()
    rej = {q for q in list(a.states) + [sink] if q not in a.accepting}
    reach = reachable(init, lambda v: [w for _, w in succ[v]])
    inner = lambda v: [(l, w) for l, w in succ[v] if w in rej] if v in rej else []
    for comp in sccs([v for v in reach if v in rej], lambda v: [w for _, w in inner(v)]):
        cs = set(comp)
        q = comp[0]
        cyc = cycle_in(cs, inner, q)
        if cyc is None:
            continue
        stem = bfs_path(init, lambda v: succ[v], lambda v: v == q)[1]
        return False, LassoWord([l[1] for l, _ in stem], [l[1] for l, _ in cyc])
    return True, None


def _kv_universal(a, cap):
    """Rank-based complementation explored on the fly, then Büchi emptiness."""
    states = a.initial_ordered() + [q for q in a.states if q not in a.initial]
    idx = {q: i for i, q in enumerate(states)}
    acc = {idx[q] for q in a.accepting}
    top = 2 * (len(states) - len(acc))
    succ = {}
    for p, x, q in a.transitions:
        succ.setdefault((idx[p], x), []).append(idx[q])
    start = (tuple((idx[q], top) for q in a.initial_ordered()), frozenset())
    seen = {start}
    order = [start]
    edges = {}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        ranks, o = node
        lst = edges.setdefault(node, [])
        for x in a.alphabet:
            bound = {}
            for q, r in ranks:
                for q2 in succ.get((q, x), ()):
                    bound[q2] = min(bound.get(q2, r), r)
            keys = sorted(bound)
            choices = []
            for q2 in keys:
                opts = [r for r in range(bound[q2] + 1) if q2 not in acc or r % 2 == 0]
                if not opts:
                    choices = None
                    break
                choices.append(opts)
            if choices is None:
                continue
            osucc = set()
            for q in o:
                osucc.update(succ.get((q, x), ()))
            for combo in itertools.product(*choices):
                g = tuple(zip(keys, combo))
                if o:
                    o2 = frozenset(q for q, r in g if q in osucc and r % 2 == 0)
                else:
                    o2 = frozenset(q for q, r in g if r % 2 == 0)
                tgt = (g, o2)
                lst.append((x, tgt))
                if tgt not in seen:
                    seen.add(tgt)
                    order.append(tgt)
                    queue.append(tgt)
                    if len(seen) > cap:
                        raise ComplementationTooLarge(f"complement exceeds {cap} states")
    accepting = {n for n in order if not n[1]}
    res = buchi_lasso(order, [start], lambda v: edges.get(v, ()), accepting)
    if res is None:
        return True, None
    _, stem, cyc = res
    return False, LassoWord([l for l, _ in stem], [l for l, _ in cyc])


def threshold_buchi(wa, lam, strict=False):
    """Büchi automaton for the words having an accepting run with value
    <= lam (or < lam), for f in Inf, Sup, LimInf, LimSup."""
    f = wa.valuefn.name
    lam = as_fraction(lam)
    low = _low(lam, strict)
    e = eliminate_silent(wa, wa.valuefn, lam, strict)
    trans, states, init, acc = [], set(), [], set()
    if f == "Sup":
        trans = [t for t in e.transitions if low(e.weight[t])]
        return Automaton(e.alphabet, e.states, e.initial, trans, e.accepting)
    if f in ("Inf", "LimSup"):
        for p, x, q in e.transitions:
            lw = low(e.weight[(p, x, q)])
            trans.append(((p, 0), x, (q, 0)))
            if lw:
                trans.append(((p, 0), x, (q, 1)))
                if f == "Inf":
                    trans.append(((p, 1), x, (q, 1)))
            elif f == "Inf":
                trans.append(((p, 1), x, (q, 1)))
        states = [(q, b) for q in e.states for b in (0, 1)]
        if f == "LimSup":
            trans += [((p, 1), x, (q, 1)) for p, x, q in e.transitions if low(e.weight[(p, x, q)])]
        init = [(q, 0) for q in e.base.initial_ordered()]
        acc = {(q, 1) for q in e.accepting}
        return Automaton(e.alphabet, states, init, trans, acc)
    if f == "LimInf":
        raw = []
        for p, x, q in e.transitions:
            lw = low(e.weight[(p, x, q)])
            for b in (False, True):
                raw.append(((p, b), x, (q, lw)))
        nodes = [(q, b) for q in e.states for b in (False, True)]
        f1 = {n for n in nodes if n[0] in e.accepting}
        f2 = {n for n in nodes if n[1]}
        dn, di, de, da = degeneralize(nodes, [(q, False) for q in e.base.initial_ordered()], raw,
                                      [f1, f2])
        return Automaton(e.alphabet, dn, di, de, da)
    raise NestwaError(f"threshold automaton not available for {f}")


# --- universality ---------------------------------------------------------------

def universal_regular(obj, lam):
    """Universality for (f;g) with g regular or Sum+ and f in Inf, Sup,
    LimInf, LimSup (and for plain f-automata): every word needs an accepting
    run of value <= lam."""
    lam = as_fraction(lam)
    if isinstance(obj, NestedWeightedAutomaton):
        g = obj.slavefn()
        if g.name == "SumPlus":
            if lam < 0:
                return decided(False, note="Sum+ values are nonnegative")
            obj = bound_sum_plus(obj, lam)
        wa = lemma4_reduce(obj, threshold=lam)
    else:
        wa = obj
    thr = threshold_buchi(wa, lam)
    ok, cex = buchi_universal(thr)
    return decided(ok, counterexample=cex, stats={"states": len(thr.states)})


def boolean_universal(nwa):
    return buchi_universal(projection_graph(nwa).automaton())


def universal_functional(obj, lam):
    """Universality for functional automata: every word has an accepting run
    and no word has a value above lam (checked as strict emptiness of the
    negated automaton at -lam)."""
    lam = as_fraction(lam)
    if isinstance(obj, WeightedAutomaton):
        ok, cex = buchi_universal(obj.base)
        if not ok:
            return decided(False, counterexample=cex, note="some word has no accepting run")
        v = empty_nonnested(negate(obj), -lam, strict=True)
        return decided(not v.answer, counterexample=v.witness)
    nwa = obj
    f, g = nwa.masterfn.name, nwa.slavefn().name
    if g == "SumPlus" and f != "LimAvg":
        if lam < 0:
            return decided(False, note="Sum+ values are nonnegative")
        # values above lam become rejecting slave runs, which also refute
        nwa = bound_sum_plus(nwa, lam)
        g = "BSum"
    ok, cex = boolean_universal(nwa)
    if not ok:
        return decided(False, counterexample=cex, note="some word has no accepting run")
    if g == "Sum":
        if f not in ("Sup", "LimSup"):
            raise NestwaError(f"functional ({f};Sum) universality is not decidable here")
        slaves = tuple(negate(s, s.valuefn) for s in nwa.slaves)
        neg = nwa.with_(slaves=slaves, masterfn=dual(nwa.masterfn))
        v = empty_inf_sum(neg, -lam, strict=True)
        return decided(not v.answer, counterexample=v.witness)
    if g == "SumPlus":
        return _universal_limavg_sum_plus(nwa, lam)
    red = lemma4_reduce(nwa, threshold=None if f == "LimAvg" else lam)
    v = empty_nonnested(negate(red), -lam, strict=True)
    return decided(not v.answer, counterexample=v.witness)


def _universal_limavg_sum_plus(nwa, lam):
    # either slave values are eventually bounded by B, or some run has
    # infinite value; the first case is a LimSup universality question
    conf = configuration_count(nwa, limit=1).bound
    big = max((s.max_abs_weight() for s in nwa.slaves), default=Fraction(0))
    bound = math.ceil(big * conf)
    limsup = nwa.with_(masterfn=LIMSUP)
    v = universal_functional(limsup, bound)
    if not v.answer:
        return decided(False, counterexample=v.counterexample,
                       note="some run has unbounded slave values")
    slaves = tuple(WeightedAutomaton(s.base, {t: abs(w) for t, w in s.weight.items()}, BSum(bound))
                   for s in nwa.slaves)
    red = lemma4_reduce(nwa.with_(slaves=slaves))
    v = empty_nonnested(negate(red), -lam, strict=True)
    return decided(not v.answer, counterexample=v.witness)


# --- (LimAvg;Sum+) emptiness ----------------------------------------------------------

def empty_limavg_sum_plus(nwa, lam, limit=None, max_guess=None):
    """Bracket the infimum between a relaxed simulation (a lower bound: extra
    slaves and silent-step weights are not charged) and an exact one (an
    upper bound), growing the guess bound and multiplicity cap until one of
    them settles the question."""
    lam = as_fraction(lam)
    if lam < 0:
        return decided(False, note="Sum+ values are nonnegative")
    limit = limit or state_limit()
    det, base_of = determinize_with_map(nwa)
    n_full, g_full, c_full = default_constants(det)
    g = 1
    stats = {}
    while True:
        g = min(g, g_full)
        c = min(2 * g + 1, c_full)
        full = g == g_full and c == c_full
        lo = _pipeline_mean(det, g, c, limit, exact=False)
        stats.update(guess_bound=g, cap=c, lower=lo[0])
        if lo[0] is INFINITY or lo[0] > lam:
            return decided(False, stats=dict(stats))
        hi = _pipeline_mean(det, g, c, limit, exact=True, lam=lam)
        stats.update(upper=hi[0])
        if hi[0] is not INFINITY and hi[0] <= lam:
            w = hi[1]
            if w is not None:
                w_det = LassoWord([x[0] for x in w.prefix], [x[0] for x in w.period])
                if eval_det(det, w_det) <= lam:
                    base = LassoWord([base_of[x] for x in w_det.prefix],
                                     [base_of[x] for x in w_det.period])
                    return decided(True, base, stats=dict(stats))
            return decided(True, None, stats=dict(stats),
                           note="infimum reached only in the limit; no ultimately periodic witness")
        if full or (max_guess is not None and g >= max_guess):
            return decided(False, stats=dict(stats))
        g *= 2


def pipeline_automaton(nwa, guess_bound=1, cap=None, limit=None):
    """The exact bounded simulation used as the upper side of the pipeline."""
    det, _ = determinize_with_map(nwa)
    g = guess_bound
    a0, _ = bound_multiplicity_transform(det, n_bound=g, guess_bound=g, synchronize=True,
                                         pending_bound=g)
    return build_bounded_simulation(a0, cap or 2 * g + 1, limit=limit).automaton


def _pipeline_mean(det, g, c, limit, exact, lam=None):
    a0, _ = bound_multiplicity_transform(det, n_bound=g, guess_bound=g, synchronize=exact,
                                         pending_bound=g)
    try:
        sim = build_bounded_simulation(a0, c, saturate=not exact, limit=limit)
    except CapExceededEverywhere:
        return INFINITY, None
    best, witness, _ = _limavg_best(sim.automaton, lam, False) if lam is not None else \
        _limavg_best(sim.automaton, None, False)
    return best, witness


# --- routing ------------------------------------------------------------------

EMPTINESS = "Emptiness"
UNIVERSALITY = "Universality"

COLUMNS = {"Inf": "Inf", "LimInf": "Inf", "Sup": "Sup", "LimSup": "Sup", "LimAvg": "LimAvg"}
ROWS = {"Min": "Regular", "Max": "Regular", "BSum": "Regular", "Sum": "Sum", "SumPlus": "SumPlus"}


def _cite(table, f, g, problem, what):
    return f"Table {table}: ({f};{g}) {problem.lower()} {what}"


def _table():
    """(column, row, problem, functional) -> (kind, decider or citation)."""
    t = {}
    for col in ("Inf", "Sup", "LimAvg"):
        for functional in (True, False):
            tab = 1 if functional else 2
            t[(col, "Regular", EMPTINESS, functional)] = (DECIDED, "empty_regular_slaves")
            if col == "LimAvg" and not functional:
                t[(col, "Regular", UNIVERSALITY, functional)] = (
                    UNDECIDABLE, _cite(tab, col, "Min/Max/BSum", UNIVERSALITY, "undecidable"))
            elif col == "LimAvg":
                t[(col, "Regular", UNIVERSALITY, functional)] = (DECIDED, "universal_functional")
            else:
                t[(col, "Regular", UNIVERSALITY, functional)] = (DECIDED, "universal_regular")
            if col == "Inf":
                t[(col, "Sum", EMPTINESS, functional)] = (DECIDED, "empty_inf_sum")
                t[(col, "Sum", UNIVERSALITY, functional)] = (
                    UNDECIDABLE, _cite(tab, "Inf", "Sum", UNIVERSALITY, "undecidable"))
            elif col == "Sup":
                t[(col, "Sum", EMPTINESS, functional)] = (
                    UNDECIDABLE, _cite(tab, "Sup", "Sum", EMPTINESS, "undecidable"))
                t[(col, "Sum", UNIVERSALITY, functional)] = (
                    (DECIDED, "universal_functional") if functional else
                    (UNDECIDABLE, _cite(tab, "Sup", "Sum", UNIVERSALITY, "undecidable")))
            else:
                t[(col, "Sum", EMPTINESS, functional)] = (
                    OPEN, _cite(tab, "LimAvg", "Sum", EMPTINESS, "open"))
                t[(col, "Sum", UNIVERSALITY, functional)] = (
                    (OPEN, _cite(tab, "LimAvg", "Sum", UNIVERSALITY, "open")) if functional else
                    (UNDECIDABLE, _cite(tab, "LimAvg", "Sum", UNIVERSALITY, "undecidable")))
            if col == "LimAvg":
                t[(col, "SumPlus", EMPTINESS, functional)] = (DECIDED, "empty_limavg_sum_plus")
                t[(col, "SumPlus", UNIVERSALITY, functional)] = (
                    (DECIDED, "universal_functional") if functional else
                    (UNDECIDABLE, _cite(tab, "LimAvg", "Sum+", UNIVERSALITY, "undecidable")))
            else:
                t[(col, "SumPlus", EMPTINESS, functional)] = (DECIDED, "empty_f_sum_plus")
                t[(col, "SumPlus", UNIVERSALITY, functional)] = (DECIDED, "universal_regular")
    return t


ROUTING = _table()


def routing_entry(f, g, problem, functional):
    return ROUTING[(COLUMNS[f], ROWS[g], problem, bool(functional))]


def is_functional(nwa, flag=False):
    return bool(flag or nwa.functional or classify(nwa) == DETERMINISTIC)


def route(obj, problem, lam, functional=False):
    lam = as_fraction(lam)
    if isinstance(obj, WeightedAutomaton):
        return _route_nonnested(obj, problem, lam, functional)
    nwa = obj
    f = nwa.masterfn.name
    g = nwa.slavefn()
    if g is None:
        return unsupported("slaves use different value functions")
    kind, what = routing_entry(f, g.name, problem, is_functional(nwa, functional))
    if kind == UNDECIDABLE:
        return undecidable(what)
    if kind == OPEN:
        return open_problem(what)
    if what == "universal_regular" and is_functional(nwa, functional):
        # the dual check avoids complementing a nondeterministic automaton
        what = "universal_functional"
    return DECIDERS[what](nwa, lam)


def _route_nonnested(wa, problem, lam, functional):
    if problem == EMPTINESS:
        return empty_nonnested(wa, lam)
    if wa.valuefn.name != "LimAvg":
        return universal_regular(wa, lam)
    if functional or is_deterministic(wa.base):
        return universal_functional(wa, lam)
    return unsupported("universality of nondeterministic LimAvg automata is not handled")


DECIDERS = {
    "empty_regular_slaves": empty_regular_slaves,
    "empty_inf_sum": empty_inf_sum,
    "empty_f_sum_plus": empty_f_sum_plus,
    "empty_limavg_sum_plus": empty_limavg_sum_plus,
    "universal_regular": universal_regular,
    "universal_functional": universal_functional,
}
