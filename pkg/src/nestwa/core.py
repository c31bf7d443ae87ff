"""Automata, weighted automata and the graph routines the deciders share."""

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from .values import BOTTOM, SILENT, ValueFn, as_fraction

FINITE = "finite"
INFINITE = "infinite"


class NestwaError(Exception):
    pass


@dataclass(frozen=True)
class Issue:
    kind: str
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.detail}"


class ValidationError(NestwaError):
    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))

    @property
    def kinds(self):
        return {i.kind for i in self.issues}


def _ordered(xs):
    if isinstance(xs, (set, frozenset)):
        return tuple(sorted(xs, key=repr))
    out = []
    seen = set()
    for x in xs:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return tuple(out)


@dataclass(frozen=True)
class Automaton:
    alphabet: tuple
    states: tuple
    initial: frozenset
    transitions: tuple
    accepting: frozenset
    mode: str = INFINITE

    def __post_init__(self):
        object.__setattr__(self, "alphabet", _ordered(self.alphabet))
        object.__setattr__(self, "states", _ordered(self.states))
        object.__setattr__(self, "initial", frozenset(self.initial))
        object.__setattr__(self, "transitions", _ordered(tuple(t) for t in self.transitions))
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        if self.mode not in (FINITE, INFINITE):
            raise ValueError(f"bad mode {self.mode}")

    @cached_property
    def succ(self):
        """(state, letter) -> tuple of successors, in transition order."""
        m = {}
        for p, a, q in self.transitions:
            m.setdefault((p, a), []).append(q)
        return {k: tuple(v) for k, v in m.items()}

    @cached_property
    def out(self):
        m = {q: [] for q in self.states}
        for t in self.transitions:
            m.setdefault(t[0], []).append(t)
        return m

    def step(self, qs, a):
        res = []
        seen = set()
        for q in qs:
            for r in self.succ.get((q, a), ()):
                if r not in seen:
                    seen.add(r)
                    res.append(r)
        return res

    def initial_ordered(self):
        return [q for q in self.states if q in self.initial]

    def accepts_finite(self, word):
        cur = self.initial_ordered()
        for a in word:
            cur = self.step(cur, a)
            if not cur:
                return False
        return any(q in self.accepting for q in cur)

    def with_(self, **kw):
        d = dict(alphabet=self.alphabet, states=self.states, initial=self.initial,
                 transitions=self.transitions, accepting=self.accepting, mode=self.mode)
        d.update(kw)
        return Automaton(**d)


@dataclass(frozen=True)
class WeightedAutomaton:
    base: Automaton
    weight: dict = field(hash=False, compare=True)
    valuefn: ValueFn = None

    def __post_init__(self):
        w = {}
        for t, x in dict(self.weight).items():
            w[tuple(t)] = x if x is BOTTOM else as_fraction(x)
        object.__setattr__(self, "weight", w)

    def __hash__(self):
        return hash((self.base, self.valuefn))

    alphabet = property(lambda self: self.base.alphabet)
    states = property(lambda self: self.base.states)
    initial = property(lambda self: self.base.initial)
    transitions = property(lambda self: self.base.transitions)
    accepting = property(lambda self: self.base.accepting)
    mode = property(lambda self: self.base.mode)

    @cached_property
    def wout(self):
        """state -> list of (letter, target, weight)."""
        m = {q: [] for q in self.states}
        for t in self.transitions:
            m[t[0]].append((t[1], t[2], self.weight[t]))
        return m

    def is_silent(self, t):
        return self.weight[t] is SILENT

    def max_abs_weight(self):
        ws = [abs(w) for w in self.weight.values() if w is not BOTTOM]
        return max(ws, default=Fraction(0))


@dataclass(frozen=True)
class GenBuchiAcceptance:
    sets: tuple

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(frozenset(s) for s in self.sets))
        if not self.sets:
            raise ValueError("generalized Büchi condition needs at least one set")


@dataclass(frozen=True)
class LassoWord:
    prefix: tuple
    period: tuple

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "period", tuple(self.period))
        if not self.period:
            raise ValueError("lasso period must be nonempty")

    def __len__(self):
        return len(self.prefix) + len(self.period)

    def letter(self, i):
        """Letter at 0-based position i of u·v^ω."""
        if i < len(self.prefix):
            return self.prefix[i]
        return self.period[(i - len(self.prefix)) % len(self.period)]

    def phase(self, i):
        """Canonical position: positions with equal phase see equal suffixes."""
        if i < len(self.prefix):
            return i
        return len(self.prefix) + (i - len(self.prefix)) % len(self.period)

    def next_phase(self, ph):
        ph += 1
        if ph == len(self):
            return len(self.prefix)
        return ph

    def __str__(self):
        return f"({'.'.join(map(str, self.prefix))})({'.'.join(map(str, self.period))})^w"


def validate(a):
    """Check the structural invariants; returns the automaton or raises
    ValidationError listing every violation."""
    base = a.base if isinstance(a, WeightedAutomaton) else a
    issues = []
    states = set(base.states)
    letters = set(base.alphabet)
    if not base.alphabet:
        issues.append(Issue("EmptyAlphabet", "alphabet is empty"))
    if not base.initial:
        issues.append(Issue("EmptyInitialSet", "no initial state"))
    for q in sorted(base.initial - states, key=repr):
        issues.append(Issue("UndeclaredState", f"initial state {q!r}"))
    for q in sorted(base.accepting - states, key=repr):
        issues.append(Issue("UndeclaredState", f"accepting state {q!r}"))
    for p, x, q in base.transitions:
        for s in (p, q):
            if s not in states:
                issues.append(Issue("UndeclaredState", f"transition ({p!r}, {x!r}, {q!r}) uses {s!r}"))
        if x not in letters:
            issues.append(Issue("UndeclaredLetter", f"transition ({p!r}, {x!r}, {q!r})"))
    if isinstance(a, WeightedAutomaton):
        ts = set(base.transitions)
        if set(a.weight) != ts:
            for t in sorted(ts - set(a.weight), key=repr):
                issues.append(Issue("MissingWeight", f"{t!r}"))
            for t in sorted(set(a.weight) - ts, key=repr):
                issues.append(Issue("UndeclaredTransition", f"weight for {t!r}"))
        if a.valuefn is None:
            issues.append(Issue("MissingValueFn", "no value function"))
        elif a.valuefn.finite != (base.mode == FINITE):
            issues.append(Issue("ValueFnModeMismatch", f"{a.valuefn} in {base.mode} mode"))
        if base.mode == FINITE and any(w is SILENT for w in a.weight.values()):
            issues.append(Issue("SilentWeightInFiniteMode", "silent weight on a finite-word automaton"))
    if issues:
        raise ValidationError(issues)
    return a


def is_deterministic(a):
    base = a.base if isinstance(a, WeightedAutomaton) else a
    if len(base.initial) != 1:
        return False
    return all(len(v) <= 1 for v in base.succ.values())


# --- finite-word helpers -------------------------------------------------

def determinize(a):
    """Subset construction; states of the result are frozensets.  Only
    nonempty subsets are materialized, so the result may be partial."""
    start = frozenset(a.initial)
    states = [start]
    seen = {start}
    trans = []
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for x in a.alphabet:
            t = frozenset(a.step(sorted(s, key=repr), x))
            if not t:
                continue
            trans.append((s, x, t))
            if t not in seen:
                seen.add(t)
                states.append(t)
                queue.append(t)
    acc = {s for s in states if s & a.accepting}
    return Automaton(a.alphabet, states, {start}, trans, acc, a.mode)


def reachable(starts, succ):
    seen = set()
    order = []
    stack = list(starts)[::-1]
    while stack:
        x = stack.pop()
        if x in seen:
            continue
        seen.add(x)
        order.append(x)
        for y in reversed(list(succ(x))):
            if y not in seen:
                stack.append(y)
    return order


def trim(a):
    """Restrict to states that are reachable and co-reachable."""
    fwd = set(reachable(a.initial_ordered(), lambda q: [t[2] for t in a.out[q]]))
    pred = {}
    for p, _, q in a.transitions:
        pred.setdefault(q, []).append(p)
    bwd = set(reachable([q for q in a.states if q in a.accepting], lambda q: pred.get(q, ())))
    keep = fwd & bwd
    states = [q for q in a.states if q in keep]
    trans = [t for t in a.transitions if t[0] in keep and t[2] in keep]
    init = a.initial & keep
    return a.with_(states=states, initial=init, transitions=trans, accepting=a.accepting & keep)


def minimize_dfa(a):
    """Moore partition refinement of a trimmed, possibly partial DFA; states
    of the result are block numbers, the initial block is 0."""
    a = trim(a)
    if not a.initial:
        return a
    (q0,) = a.initial
    letters = a.alphabet
    block = {q: int(q in a.accepting) for q in a.states}
    n_blocks = len(set(block.values()))
    while True:
        sig = {}
        for q in a.states:
            row = []
            for x in letters:
                nxt = a.succ.get((q, x))
                row.append(block[nxt[0]] if nxt else -1)
            sig[q] = (block[q], tuple(row))
        ids = {}
        for q in a.states:
            ids.setdefault(sig[q], len(ids))
        new = {q: ids[sig[q]] for q in a.states}
        if len(ids) == n_blocks:
            break
        block, n_blocks = new, len(ids)
    # renumber from the initial state in BFS order for stable output
    order = {}
    queue = deque([block[q0]])
    rep = {}
    for q in a.states:
        rep.setdefault(block[q], q)
    while queue:
        b = queue.popleft()
        if b in order:
            continue
        order[b] = len(order)
        for x in letters:
            nxt = a.succ.get((rep[b], x))
            if nxt and block[nxt[0]] not in order:
                queue.append(block[nxt[0]])
    trans = {(order[block[p]], x, order[block[q]]) for p, x, q in a.transitions}
    return Automaton(a.alphabet, list(range(len(order))), {0}, sorted(trans, key=repr),
                     {order[block[q]] for q in a.accepting}, a.mode)


def union_dfa(dfas):
    """Minimal DFA for the union of languages of deterministic automata."""
    dfas = list(dfas)
    alphabet = _ordered(x for d in dfas for x in d.alphabet)
    start = tuple(next(iter(d.initial), None) for d in dfas)
    seen = {start}
    queue = deque([start])
    trans, acc = [], set()
    while queue:
        node = queue.popleft()
        if any(q is not None and q in d.accepting for q, d in zip(node, dfas)):
            acc.add(node)
        for x in alphabet:
            nxt = tuple((d.succ.get((q, x)) or (None,))[0] if q is not None else None
                        for q, d in zip(node, dfas))
            if all(q is None for q in nxt):
                continue
            trans.append((node, x, nxt))
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    mode = dfas[0].mode if dfas else FINITE
    return minimize_dfa(Automaton(alphabet, list(seen), {start}, trans, acc, mode))


def is_prefix_free(a):
    d = trim(determinize(a))
    for q in d.states:
        if q not in d.accepting:
            continue
        nxt = [t[2] for t in d.out[q]]
        if any(r in d.accepting for r in reachable(nxt, lambda s: [t[2] for t in d.out[s]])):
            return False
    return True


def accepts_epsilon(a):
    return bool(a.initial & a.accepting)


def is_empty_finite(a):
    fwd = reachable(a.initial_ordered(), lambda q: [t[2] for t in a.out[q]])
    return not any(q in a.accepting for q in fwd)


# --- graphs ----------------------------------------------------------------

def sccs(nodes, succ):
    """Iterative Tarjan.  Returns components in reverse topological order."""
    index = {}
    low = {}
    on = set()
    stack = []
    comps = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on.add(w)
                    work.append((w, iter(succ(w))))
                    advanced = True
                    break
                if w in on:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


def bfs_path(starts, succ_edges, goal):
    """Shortest path from any start to a node satisfying goal.  succ_edges(v)
    yields (label, w).  Returns (start, [(label, node), ...]) or None."""
    parent = {}
    queue = deque()
    for s in starts:
        if s not in parent:
            parent[s] = None
            queue.append(s)
    while queue:
        v = queue.popleft()
        if goal(v):
            path = []
            while parent[v] is not None:
                u, lab = parent[v]
                path.append((lab, v))
                v = u
            return v, path[::-1]
        for lab, w in succ_edges(v):
            if w not in parent:
                parent[w] = (v, lab)
                queue.append(w)
    return None


class Graph:
    """Explicit labeled multigraph: edges are (u, label, v)."""

    def __init__(self, nodes=(), edges=()):
        self.nodes = []
        self._nodeset = set()
        self.adj = {}
        for v in nodes:
            self.add_node(v)
        for e in edges:
            self.add_edge(*e)

    def add_node(self, v):
        if v not in self._nodeset:
            self._nodeset.add(v)
            self.nodes.append(v)
            self.adj[v] = []

    def add_edge(self, u, lab, v):
        self.add_node(u)
        self.add_node(v)
        self.adj[u].append((lab, v))

    def succ(self, v):
        return [w for _, w in self.adj[v]]

    def edges(self):
        for u in self.nodes:
            for lab, v in self.adj[u]:
                yield u, lab, v

    def sccs(self):
        return sccs(self.nodes, self.succ)


def cycle_in(nodes, succ_edges, through):
    """A cycle inside the node set passing through node `through`:
    list of (label, node) ending back at `through`, or None."""
    nodes = set(nodes)
    parent = {}
    queue = deque()
    for lab, w in succ_edges(through):
        if w not in nodes:
            continue
        if w == through:
            return [(lab, w)]
        if w not in parent:
            parent[w] = (through, lab)
            queue.append(w)
    while queue:
        v = queue.popleft()
        for lab, w in succ_edges(v):
            if w not in nodes:
                continue
            if w == through:
                path = [(lab, w)]
                while v != through:
                    u, l2 = parent[v]
                    path.append((l2, v))
                    v = u
                return path[::-1]
            if w not in parent:
                parent[w] = (v, lab)
                queue.append(w)
    return None


def degeneralize(nodes, initial, edges, sets):
    """Counter construction turning a generalized Büchi graph into a Büchi one.

    edges are (u, label, v).  Node (v, i) waits for set i; it moves to i+1
    when leaving a node of set i.  Accepting nodes are (v, 0) with v in set 0.
    Returns (nodes, initial, edges, accepting) restricted to reachable nodes.
    """
    sets = [frozenset(s) for s in sets]
    k = len(sets)
    adj = {}
    for u, lab, v in edges:
        adj.setdefault(u, []).append((lab, v))
    start = [(q, 0) for q in initial]
    out_nodes = []
    out_edges = []
    seen = set()
    queue = deque()
    for s in start:
        if s not in seen:
            seen.add(s)
            queue.append(s)
    while queue:
        node = queue.popleft()
        out_nodes.append(node)
        q, i = node
        j = (i + 1) % k if q in sets[i] else i
        for lab, r in adj.get(q, ()):
            t = (r, j)
            out_edges.append((node, lab, t))
            if t not in seen:
                seen.add(t)
                queue.append(t)
    acc = {n for n in out_nodes if n[1] == 0 and n[0] in sets[0]}
    return out_nodes, start, out_edges, acc


def buchi_lasso(nodes, initial, succ_edges, accepting):
    """Find a reachable accepting cycle.  Returns (start, stem, cycle), stem
    and cycle as lists of (label, node), or None.  The cycle starts and ends
    at an accepting node."""
    reach = reachable(initial, lambda v: [w for _, w in succ_edges(v)])
    rs = set(reach)
    comps = sccs(reach, lambda v: [w for _, w in succ_edges(v)])
    for comp in reversed(comps):
        cs = set(comp)
        for q in comp:
            if q not in accepting:
                continue
            cyc = cycle_in(cs, succ_edges, q)
            if cyc is None:
                continue
            found = bfs_path(initial, lambda v: [(l, w) for l, w in succ_edges(v) if w in rs],
                             lambda v: v == q)
            start, stem = found
            return start, stem, cyc
    return None


def lasso_product(a, w):
    """Nodes (state, phase) of the run graph of `a` on u·v^ω.  Edges carry the
    automaton transition used."""
    g = Graph()
    init = [(q, 0) for q in a.initial_ordered()]
    for v in reachable(init, lambda n: [m for _, m in _lasso_succ(a, w, n)]):
        for t, m in _lasso_succ(a, w, v):
            g.add_edge(v, t, m)
        g.add_node(v)
    return g, init


def _lasso_succ(a, w, node):
    q, ph = node
    x = w.letter(ph)
    nph = w.next_phase(ph)
    return [((q, x, r), (r, nph)) for r in a.succ.get((q, x), ())]


def lasso_membership(a, w):
    g, init = lasso_product(a, w)
    acc = {n for n in g.nodes if n[0] in a.accepting}
    return buchi_lasso(g.nodes, init, lambda v: g.adj[v], acc) is not None


# --- mean cycles -----------------------------------------------------------

def min_mean_cycle(nodes, edges):
    """Karp's algorithm on one strongly connected node set.

    edges: list of (u, label, v, weight) with u, v in nodes.  Returns the
    minimum cycle mean as a Fraction, or None if there is no cycle.
    """
    nodes = list(nodes)
    n = len(nodes)
    if not edges:
        return None
    idx = {v: i for i, v in enumerate(nodes)}
    inc = [[] for _ in range(n)]
    for u, _, v, wt in edges:
        inc[idx[v]].append((idx[u], wt))
    INF = None
    d = [[INF] * n for _ in range(n + 1)]
    d[0][0] = Fraction(0)
    for k in range(1, n + 1):
        prev, cur = d[k - 1], d[k]
        for v in range(n):
            best = None
            for u, wt in inc[v]:
                if prev[u] is not None:
                    c = prev[u] + wt
                    if best is None or c < best:
                        best = c
            cur[v] = best
    res = None
    for v in range(n):
        if d[n][v] is None:
            continue
        worst = None
        for k in range(n):
            if d[k][v] is None:
                continue
            r = Fraction(d[n][v] - d[k][v], n - k)
            if worst is None or r > worst:
                worst = r
        if worst is not None and (res is None or worst < res):
            res = worst
    return res


def tight_subgraph(nodes, edges, mu):
    """Edges lying on cycles of mean exactly mu, found via potentials for
    the shifted weights w - mu (which have no negative cycle)."""
    pot = {v: Fraction(0) for v in nodes}
    shifted = [(u, lab, v, wt - mu) for u, lab, v, wt in edges]
    for _ in range(len(pot)):
        changed = False
        for u, _, v, wt in shifted:
            if pot[u] + wt < pot[v]:
                pot[v] = pot[u] + wt
                changed = True
        if not changed:
            break
    return [(u, lab, v, wt + mu) for u, lab, v, wt in shifted if pot[u] + wt == pot[v]]


def howard(nodes, edges):
    """Policy iteration for the minimum cycle mean of a graph where every
    node has an outgoing edge.  Returns (mean per node, potential per node,
    policy) with exact rationals; at the optimum every edge (u, v, w)
    satisfies pot[u] <= w - mean + pot[v] when mean[u] == mean[v].

    A floating-point pass finds a good policy first; the exact pass then
    only has to confirm (or finish) it."""
    out = {v: [] for v in nodes}
    for e in edges:
        out[e[0]].append(e)
    pol = {v: min(out[v], key=lambda e: e[3]) for v in nodes}
    fout = {v: [(e, float(e[3])) for e in es] for v, es in out.items()}
    fpol = {v: (pol[v], float(pol[v][3])) for v in nodes}
    for _ in range(10 * len(nodes) + 100):
        fpol, done = _improve(nodes, fout, fpol, 1e-9)
        if done:
            break
    pol = {v: fpol[v][0] for v in nodes}
    eout = {v: [(e, e[3]) for e in es] for v, es in out.items()}
    epol = {v: (pol[v], pol[v][3]) for v in nodes}
    while True:
        epol, done = _improve(nodes, eout, epol, 0)
        if done:
            pol = {v: epol[v][0] for v in nodes}
            eta, pot = _evaluate(nodes, {v: (None, None, p[0][2], p[1]) for v, p in epol.items()})
            return eta, pot, pol


def _improve(nodes, out, pol, eps):
    """One policy improvement step over (edge, weight) pairs."""
    eta, pot = _evaluate(nodes, {v: (None, None, p[0][2], p[1]) for v, p in pol.items()})
    pol = dict(pol)
    changed = False
    for v in nodes:
        best = pol[v]
        for p in out[v]:
            if eta[p[0][2]] < eta[best[0][2]] - eps:
                best = p
        if eta[best[0][2]] < eta[v] - eps:
            pol[v] = best
            changed = True
    if changed:
        return pol, False
    for v in nodes:
        cur = pot[v]
        for p in out[v]:
            t = p[0][2]
            if abs(eta[t] - eta[v]) <= eps:
                c = p[1] - eta[v] + pot[t]
                if c < cur - eps:
                    cur = c
                    pol[v] = p
                    changed = True
    return pol, not changed


def _evaluate(nodes, pol):
    eta, pot = {}, {}
    state = {}
    for v0 in nodes:
        if v0 in eta:
            continue
        path = []
        v = v0
        while v not in eta and v not in state:
            state[v] = len(path)
            path.append(v)
            v = pol[v][2]
        if v not in eta:
            # new cycle from index state[v]
            cyc = path[state[v]:]
            total = sum(pol[x][3] for x in cyc)
            mu = total / len(cyc) if isinstance(total, float) else Fraction(total, len(cyc))
            root = cyc[0]
            eta[root], pot[root] = mu, 0 * mu
            for x in reversed(cyc[1:]):
                e = pol[x]
                eta[x], pot[x] = mu, e[3] - mu + pot[e[2]]
            path = path[:state[v]]
        for x in reversed(path):
            e = pol[x]
            eta[x] = eta[e[2]]
            pot[x] = e[3] - eta[x] + pot[e[2]]
        for x in path:
            state.pop(x, None)
    return eta, pot


class ResourceLimit(NestwaError):
    def __init__(self, states, limit, what="states"):
        self.states = states
        self.limit = limit
        super().__init__(f"materialized {states} {what}, limit {limit}")


def state_limit(default=10 ** 6):
    import os
    v = os.environ.get("NWA_STATE_LIMIT")
    return int(v) if v else default
