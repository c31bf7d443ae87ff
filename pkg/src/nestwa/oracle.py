"""Brute-force reference semantics.

Nothing here imports the nested/reduce/decide modules: runs are enumerated
directly from the definitions so the oracle can cross-check them.
"""

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .core import LassoWord, NestwaError, WeightedAutomaton, is_deterministic, is_prefix_free, sccs
from .values import BOTTOM, INFINITY


class BudgetExceeded(NestwaError):
    pass


@dataclass(frozen=True)
class OracleBudget:
    max_prefix: int = 3
    max_period: int = 4
    max_slave_len: int = 10
    max_branch: int = 3
    max_cycles: int = 50000

    def __post_init__(self):
        for k in ("max_prefix", "max_period", "max_slave_len", "max_branch"):
            if getattr(self, k) < 1:
                raise ValueError(f"{k} must be positive")


@dataclass(frozen=True)
class ExactValue:
    value: object


@dataclass(frozen=True)
class UpperBound:
    value: object


@dataclass(frozen=True)
class WitnessFound:
    word: LassoWord
    value: object


@dataclass(frozen=True)
class NoWitnessWithinBudget:
    pass


def verdict_value(v):
    return v.value


# --- value functions, written out from the definitions -----------------------

def _fin(fn, ws):
    if not ws:
        return BOTTOM
    name = fn.name
    if name == "Max":
        return max(ws)
    if name == "Min":
        return min(ws)
    if name == "Sum":
        return sum(ws, Fraction(0))
    if name == "SumPlus":
        return sum(map(abs, ws), Fraction(0))
    total = Fraction(0)
    for w in ws:
        total += w
        if abs(total) > fn.bound:
            return Fraction(fn.bound)
    return total


def _is_nwa(x):
    return hasattr(x, "master") and hasattr(x, "slaves")


def _nwa_deterministic(nwa):
    return is_deterministic(nwa.master) and all(
        is_deterministic(s) and is_prefix_free(s.base) for s in nwa.slaves)


def _letter(w, i):
    u, v = w.prefix, w.period
    return u[i] if i < len(u) else v[(i - len(u)) % len(v)]


# --- deterministic NWA: unroll and read the single run off ---------------------

def _det_slave(slave, w, pos, limit):
    (q,) = slave.initial
    if q in slave.accepting:
        return BOTTOM
    ws = []
    for i in range(pos, pos + limit):
        a = _letter(w, i)
        nxt = [t for t in slave.transitions if t[0] == q and t[1] == a]
        if not nxt:
            return INFINITY
        t = nxt[0]
        ws.append(slave.weight[t])
        q = t[2]
        if q in slave.accepting:
            return _fin(slave.valuefn, ws)
    return INFINITY


def _det_value(nwa, w):
    u, v = w.prefix, w.period
    (q,) = nwa.master.initial
    m_states = [q]
    m_trans = []
    boundary = {}
    i = 0
    while True:
        if i >= len(u) and (i - len(u)) % len(v) == 0:
            if q in boundary:
                start = boundary[q]
                break
            boundary[q] = i
        a = _letter(w, i)
        nxt = [t for t in nwa.master.transitions if t[0] == q and t[1] == a]
        if not nxt:
            return INFINITY
        m_trans.append(nxt[0])
        q = nxt[0][2]
        m_states.append(q)
        i += 1
    end = i
    if not any(s in nwa.master.accepting for s in m_states[start:end]):
        return INFINITY
    limit = max(len(s.states) for s in nwa.slaves) * (len(u) + len(v)) + len(u) + 1
    seq = []
    for pos, t in enumerate(m_trans):
        val = _det_slave(nwa.slaves[nwa.labels[t] - 1], w, pos, limit)
        if val is INFINITY:
            return INFINITY
        seq.append(val)
    head = [x for x in seq[:start] if x is not BOTTOM]
    loop = [x for x in seq[start:end] if x is not BOTTOM]
    if not loop:
        return INFINITY
    name = nwa.masterfn.name
    if name == "Sup":
        return max(head + loop)
    if name == "Inf":
        return min(head + loop)
    if name == "LimSup":
        return max(loop)
    if name == "LimInf":
        return min(loop)
    # partial averages over k and k+1 loops differ by exactly one loop's
    # contribution; the limit is the ratio of those increments
    s1, n1 = sum(head, Fraction(0)) + sum(loop), len(head) + len(loop)
    s2, n2 = s1 + sum(loop), n1 + len(loop)
    return Fraction(s2 - s1, n2 - n1)


# --- nondeterministic: lasso runs in the (state, phase) product ---------------

def _slave_options(slave, w, pos, det_limit, max_len):
    """(silent allowed, minimum non-silent value or None) for the slave
    started at position pos."""
    silent = bool(slave.initial & slave.accepting)
    if is_deterministic(slave) and is_prefix_free(slave.base):
        if silent:
            return True, None
        v = _det_slave(slave, w, pos, det_limit)
        return False, (None if v is INFINITY else v)
    # runs of equal length with the same state and folded value are
    # interchangeable, so each layer keeps one copy
    fn = slave.valuefn
    best = None
    layer = {(q, None) for q in slave.initial}
    for i in range(pos, pos + max_len):
        a = _letter(w, i)
        nxt = set()
        for q, acc in layer:
            for t in slave.base.out.get(q, ()):
                if t[1] == a:
                    nxt.add((t[2], _fold(fn, acc, slave.weight[t])))
        layer = nxt
        for q, acc in layer:
            if q in slave.accepting:
                val = _unfold(fn, acc)
                if best is None or val < best:
                    best = val
    return silent, best


_OVER = "over"


def _fold(fn, acc, x):
    """Running summary of a weight sequence; _unfold(_fold(...)) agrees
    with _fin on the sequence read so far."""
    name = fn.name
    if acc is None:
        if name == "SumPlus":
            return abs(x)
        if name == "BSum":
            return _OVER if abs(x) > fn.bound else x
        return x
    if name == "Max":
        return max(acc, x)
    if name == "Min":
        return min(acc, x)
    if name == "Sum":
        return acc + x
    if name == "SumPlus":
        return acc + abs(x)
    if acc is _OVER:
        return acc
    return _OVER if abs(acc + x) > fn.bound else acc + x


def _unfold(fn, acc):
    if acc is _OVER:
        return Fraction(fn.bound)
    return acc


def _phase_graph(trans_of, initial, w):
    """Product of an automaton with the lasso positions; trans_of(q, a)
    returns the transitions used for edges."""
    n = len(w.prefix) + len(w.period)

    def nxt(ph):
        return ph + 1 if ph + 1 < n else len(w.prefix)

    nodes = []
    edges = {}
    seen = set()
    stack = [(q, 0) for q in initial]
    for s in stack:
        seen.add(s)
    while stack:
        node = stack.pop()
        nodes.append(node)
        q, ph = node
        a = w.prefix[ph] if ph < len(w.prefix) else w.period[ph - len(w.prefix)]
        outs = []
        for t in trans_of(q, a):
            tgt = (t[2], nxt(ph))
            outs.append((t, tgt))
            if tgt not in seen:
                seen.add(tgt)
                stack.append(tgt)
        edges[node] = outs
    return nodes, edges


def _simple_cycles(nodes, edges, cap):
    order = {v: i for i, v in enumerate(nodes)}
    count = 0
    for s in nodes:
        stack = [(s, [], {s})]
        while stack:
            v, path, onpath = stack.pop()
            for e, t in edges[v]:
                if t == s:
                    count += 1
                    if count > cap:
                        raise BudgetExceeded("too many cycles in the run graph")
                    yield path + [(v, e, t)]
                elif order[t] > order[s] and t not in onpath:
                    stack.append((t, path + [(v, e, t)], onpath | {t}))


def _best_on_cycle(fn, opts):
    """opts: per edge (silent_ok, value or None).  Minimum of the aggregate
    over option choices with at least one non-silent entry."""
    must = [v for ok, v in opts if not ok and v is not None]
    may = sorted(v for ok, v in opts if ok and v is not None)
    if not must and not may:
        return None
    name = fn.name
    if name in ("LimInf", "Inf"):
        return min(must + may)
    if name in ("LimSup", "Sup"):
        return max(must) if must else may[0]
    best = None
    for k in range(len(may) + 1):
        chosen = must + may[:k]
        if chosen:
            m = Fraction(sum(chosen, Fraction(0)), len(chosen))
            if best is None or m < best:
                best = m
    return best


def _lasso_min(fn, nodes, edges, opt_of, accepting, cap, init):
    """Minimum value over lasso runs built from a simple cycle and any stem."""
    for v in nodes:
        edges[v] = [(e, t) for e, t in edges[v] if _usable(opt_of(v, e))]
    best = None
    for cyc in _simple_cycles(nodes, edges, cap):
        if not any(v[0] in accepting for v, _, _ in cyc):
            continue
        opts = [opt_of(v, e) for v, e, _ in cyc]
        val = _best_on_cycle(fn, opts)
        if val is None:
            continue
        x = cyc[0][0]
        if fn.name == "Inf":
            low = _stem_min(nodes, edges, opt_of, init, x)
            if low is None:
                continue
            if low is not INFINITY and low < val:
                val = low
        elif fn.name == "Sup":
            high = _stem_minimax(nodes, edges, opt_of, init, x)
            if high is None:
                continue
            if high is not BOTTOM and high > val:
                val = high
        elif not _reaches(edges, init, x):
            continue
        if best is None or val < best:
            best = val
    return INFINITY if best is None else best


def _usable(opt):
    ok, v = opt
    return ok or v is not None


def _reaches(edges, init, x):
    seen = set(init)
    stack = list(init)
    while stack:
        v = stack.pop()
        if v == x:
            return True
        for _, t in edges[v]:
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return False


def _stem_min(nodes, edges, opt_of, init, x):
    """Lowest value usable on some walk from init to x (INFINITY if the walk
    may stay silent); None if x is unreachable."""
    fwd = set(init)
    stack = list(init)
    while stack:
        v = stack.pop()
        for _, t in edges[v]:
            if t not in fwd:
                fwd.add(t)
                stack.append(t)
    if x not in fwd:
        return None
    back = {x}
    changed = True
    while changed:
        changed = False
        for v in fwd:
            if v not in back and any(t in back for _, t in edges[v]):
                back.add(v)
                changed = True
    vals = [opt_of(v, e)[1] for v in fwd & back for e, t in edges[v] if t in back]
    vals = [y for y in vals if y is not None]
    return min(vals) if vals else INFINITY


def _stem_minimax(nodes, edges, opt_of, init, x):
    """Smallest possible maximum of forced values along a walk init -> x;
    BOTTOM when some walk forces nothing; None if unreachable."""
    best = {v: BOTTOM for v in init}

    def key(c):
        return (0, 0) if c is BOTTOM else (1, c)

    changed = True
    while changed:
        changed = False
        for v in list(best):
            for e, t in edges[v]:
                ok, y = opt_of(v, e)
                c = best[v] if ok else (y if best[v] is BOTTOM else max(best[v], y))
                if t not in best or key(c) < key(best[t]):
                    best[t] = c
                    changed = True
    return best.get(x)


def _run_graph(obj, w, budget):
    """(value fn, nodes, edges, opt_of, accepting, start nodes) of the
    product of obj's (master) automaton with the lasso positions."""
    if _is_nwa(obj):
        nwa = obj
        det_limit = max(len(s.states) for s in nwa.slaves) * (len(w.prefix) + len(w.period)) + len(w.prefix) + 1
        cache = {}

        def opt_of(node, t):
            key = (nwa.labels[t], node[1])
            if key not in cache:
                cache[key] = _slave_options(nwa.slaves[key[0] - 1], w, node[1], det_limit,
                                            budget.max_slave_len)
            return cache[key]

        aut, fn = nwa.master, nwa.masterfn
    else:
        def opt_of(node, t):
            x = obj.weight[t]
            return (True, None) if x is BOTTOM else (False, x)

        aut, fn = obj.base, obj.valuefn
    mt = {}
    for t in aut.transitions:
        mt.setdefault((t[0], t[1]), []).append(t)
    init = sorted(aut.initial, key=repr)
    nodes, edges = _phase_graph(lambda q, a: mt.get((q, a), []), init, w)
    return fn, nodes, edges, opt_of, aut.accepting, [(q, 0) for q in init]


def _nwa_lasso_min(nwa, w, budget):
    fn, nodes, edges, opt_of, acc, init = _run_graph(nwa, w, budget)
    return _lasso_min(fn, nodes, edges, opt_of, acc, budget.max_cycles, init)


def _wa_lasso_min(wa, w, budget):
    fn, nodes, edges, opt_of, acc, init = _run_graph(wa, w, budget)
    return _lasso_min(fn, nodes, edges, opt_of, acc, budget.max_cycles, init)


def oracle_value(obj, w, budget=None):
    budget = budget or OracleBudget()
    if _is_nwa(obj):
        if _nwa_deterministic(obj):
            return ExactValue(_det_value(obj, w))
        return UpperBound(_nwa_lasso_min(obj, w, budget))
    if isinstance(obj, WeightedAutomaton):
        v = _wa_lasso_min(obj, w, budget)
        if is_deterministic(obj):
            return ExactValue(v)
        return UpperBound(v)
    raise TypeError("oracle_value needs an NWA or a weighted automaton")


# --- does some run on w reach value <= lam? -------------------------------------

def _closure(starts, succ):
    seen = set(starts)
    stack = list(starts)
    while stack:
        v = stack.pop()
        for t in succ(v):
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


def _components(nodes, arcs):
    """Strongly connected components of the nodes under arcs (v -> [(x, tgt)])."""
    return [set(c) for c in sccs(list(nodes), lambda v: [t for _, t in arcs.get(v, ()) if t in nodes])]


def _good_component(comp, arcs, acc, pick):
    """comp has an accepting node, and an internal arc whose choice
    satisfies pick (and so is non-silent)."""
    if not any(v[0] in acc for v in comp):
        return False
    return any(t in comp and pick(x) for v in comp for x, t in arcs.get(v, ()))


def oracle_at_most(obj, w, lam, budget=None):
    """True iff some accepting run on the lasso w has value <= lam.

    Works on the same (state, phase) graph as oracle_value but answers the
    threshold question with reachability and shortest walks, so long
    witnesses stay cheap to check."""
    budget = budget or OracleBudget()
    lam = Fraction(lam)
    fn, nodes, edges, opt_of, acc, init = _run_graph(obj, w, budget)
    # arcs: (value or None for a silent choice, target), one per option
    arcs = {}
    for v in nodes:
        out = []
        for t, tgt in edges[v]:
            ok, x = opt_of(v, t)
            if ok:
                out.append((None, tgt))
            if x is not None:
                out.append((x, tgt))
        arcs[v] = out
    name = fn.name
    reach = _closure(init, lambda v: [t for _, t in arcs[v]])
    if name in ("Sup", "LimSup"):
        low = {v: [(x, t) for x, t in arcs[v] if x is None or x <= lam] for v in nodes}
        start = _closure(init, lambda v: [t for _, t in low[v]]) if name == "Sup" else reach
        return any(_good_component(c, low, acc, lambda x: x is not None)
                   for c in _components(start, low))
    if name == "LimInf":
        return any(_good_component(c, arcs, acc, lambda x: x is not None and x <= lam)
                   for c in _components(reach, arcs))
    if name == "Inf":
        good = set()
        for c in _components(reach, arcs):
            if _good_component(c, arcs, acc, lambda x: x is not None):
                good |= c
        if not good:
            return False
        for v in reach:
            for x, t in arcs[v]:
                if x is not None and x <= lam and _closure([t], lambda y: [s for _, s in arcs[y]]) & good:
                    return True
        return False
    return _limavg_at_most(reach, arcs, acc, lam)


def _limavg_at_most(reach, arcs, acc, lam):
    # a lasso run has mean <= lam iff its cycle has sum(x - lam) <= 0 over
    # the non-silent choices and at least one of them; within one component
    # search shortest walks on (node, used a non-silent choice)
    for comp in _components(reach, arcs):
        if not any(v[0] in acc for v in comp):
            continue
        inner = [(v, x, t) for v in comp for x, t in arcs[v] if t in comp]
        if not any(x is not None for _, x, _ in inner):
            continue
        states = [(v, b) for v in comp for b in (0, 1)]
        moves = []
        for v, x, t in inner:
            for b in (0, 1):
                if x is None:
                    moves.append(((v, b), (t, b), Fraction(0)))
                else:
                    moves.append(((v, b), (t, 1), x - lam))
        for s in comp:
            if s[0] not in acc:
                continue
            dist = {st: None for st in states}
            dist[(s, 0)] = Fraction(0)
            for _ in range(len(states)):
                changed = False
                for u, t, c in moves:
                    if dist[u] is not None and (dist[t] is None or dist[u] + c < dist[t]):
                        dist[t] = dist[u] + c
                        changed = True
                if not changed:
                    break
            else:
                # still improving: a negative cycle, reachable inside comp
                return True
            if dist[(s, 1)] is not None and dist[(s, 1)] <= 0:
                return True
    return False


# --- emptiness by lasso enumeration -------------------------------------------

def _primitive(v):
    n = len(v)
    return not any(n % d == 0 and v == v[:d] * (n // d) for d in range(1, n))


def lassos(alphabet, max_prefix, max_period):
    """Canonical lassos ordered by total length: primitive period, and the
    prefix does not end with the period's last letter."""
    alphabet = list(alphabet)
    out = []
    for total in range(1, max_prefix + max_period + 1):
        for plen in range(max(1, total - max_prefix), min(max_period, total) + 1):
            ulen = total - plen
            for v in itertools.product(alphabet, repeat=plen):
                if not _primitive(v):
                    continue
                for u in itertools.product(alphabet, repeat=ulen):
                    if u and u[-1] == v[-1]:
                        continue
                    out.append(LassoWord(u, v))
    return out


def oracle_empty(obj, lam, budget=None):
    budget = budget or OracleBudget()
    for w in lassos(obj.alphabet if not _is_nwa(obj) else obj.master.alphabet,
                    budget.max_prefix, budget.max_period):
        val = oracle_value(obj, w, budget).value
        if val is not INFINITY and val <= lam:
            return WitnessFound(w, val)
    return NoWitnessWithinBudget()
