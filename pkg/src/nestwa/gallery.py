"""Worked examples and applications as ready-made NWAs, the hardness
instance generator, and the model measuring / repair wrappers."""

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .core import FINITE, Automaton, NestwaError, WeightedAutomaton, degeneralize, is_deterministic
from .decide import EMPTINESS, UNDECIDABLE, empty_sup_sum_nonpositive, route
from .nested import SILENT_LABEL, make_nwa
from .values import LIMAVG, MAX, SILENT, SUM, SUMPLUS, SUP


class EmptyInstance(NestwaError):
    pass


def _slave(alphabet, edges, initial, accepting, fn):
    states = []
    for p, _, q, _ in edges:
        states += [p, q]
    states = [initial] + states + sorted(accepting, key=repr)
    base = Automaton(alphabet, states, {initial}, [(p, a, q) for p, a, q, _ in edges], accepting, FINITE)
    return WeightedAutomaton(base, {(p, a, q): w for p, a, q, w in edges}, fn)


def _one_state_master(alphabet, labels, masterfn, slaves, functional=False):
    """Single accepting master state; labels maps letter -> slave or "silent"."""
    master = Automaton(alphabet, ["m"], {"m"}, [("m", a, "m") for a in alphabet], {"m"})
    lab = {("m", a, "m"): labels[a] for a in alphabet}
    return make_nwa(master, lab, masterfn, slaves, functional)


# --- average stuttering ---------------------------------------------------------

def _counter(alphabet, x, y):
    """Counts x-letters until the first y (weight 1 per x, 0 on y)."""
    return _slave(alphabet, [("p0", x, "p0", 1), ("p0", y, "p1", 0)], "p0", {"p1"}, SUMPLUS)


def build_stuttering(variant=1):
    """Average letter repetition over {a, b}.

    Variant 1 starts a counting slave at every position; variant 2 only at
    the start of each block and stays silent inside blocks."""
    ab = ("a", "b")
    b1, b2 = _counter(ab, "a", "b"), _counter(ab, "b", "a")
    if variant == 1:
        return _one_state_master(ab, {"a": 1, "b": 2}, LIMAVG, [b1, b2])
    if variant != 2:
        raise ValueError(f"unknown stuttering variant {variant}")
    b3 = _slave(ab, [], "e", {"e"}, SUMPLUS)
    trans = [("q0", "a", "qa"), ("q0", "b", "qb"), ("qa", "a", "qa"), ("qa", "b", "qb"),
             ("qb", "b", "qb"), ("qb", "a", "qa")]
    labels = {t: (3 if t[0][1:] == t[1] else (1 if t[1] == "a" else 2)) for t in trans}
    master = Automaton(ab, ["q0", "qa", "qb"], {"q0"}, trans, {"q0", "qa", "qb"})
    return make_nwa(master, labels, LIMAVG, [b1, b2, b3])


# --- average response time ------------------------------------------------------

def _response_slave(alphabet, req, grant, idle=None):
    """From req to the matching grant.  Without idle every step costs 1;
    with idle only idle letters do."""
    edges = [("s0", req, "s1", 0)]
    for x in alphabet:
        if x == grant:
            edges.append(("s1", x, "s2", 0 if idle else 1))
        else:
            edges.append(("s1", x, "s1", (1 if x == idle else 0) if idle else 1))
    return _slave(alphabet, edges, "s0", {"s2"}, SUMPLUS)


def build_art(types=1, variant="distance"):
    """Average response time.  types=1 uses {r, g, i}; types=2 uses
    {r1, g1, r2, g2, i} with one slave per request type.  The idle variant
    counts only idle events instead of all steps."""
    if variant not in ("distance", "idle"):
        raise ValueError(f"unknown ART variant {variant}")
    idle = "i" if variant == "idle" else None
    if types == 1:
        alpha = ("r", "g", "i")
        s = _response_slave(alpha, "r", "g", idle)
        return _one_state_master(alpha, {"r": 1, "g": SILENT_LABEL, "i": SILENT_LABEL}, LIMAVG, [s])
    if types != 2:
        raise ValueError(f"unknown ART type count {types}")
    alpha = ("r1", "g1", "r2", "g2", "i")
    slaves = [_response_slave(alpha, f"r{k}", f"g{k}", idle) for k in (1, 2)]
    labels = {"r1": 1, "r2": 2, "g1": SILENT_LABEL, "g2": SILENT_LABEL, "i": SILENT_LABEL}
    return _one_state_master(alpha, labels, LIMAVG, slaves)


def build_example9():
    """(LimAvg;Sum+) automaton whose infimum 3/2 is not attained by any word.

    On a, a slave reads a^k b and returns k mod 2; on b, a slave reads
    b a^k b and returns k + 2."""
    ab = ("a", "b")
    parity = _slave(ab, [("ev", "a", "od", 0), ("od", "a", "ev", 0), ("ev", "b", "f", 0),
                         ("od", "b", "f", 1)], "ev", {"f"}, SUMPLUS)
    block = _slave(ab, [("b0", "b", "b1", 1), ("b1", "a", "b1", 1), ("b1", "b", "f", 1)],
                   "b0", {"f"}, SUMPLUS)
    return _one_state_master(ab, {"a": 1, "b": 2}, LIMAVG, [parity, block])


# --- average resource consumption -----------------------------------------------

def arc_alphabet(n, k):
    letters = []
    for i in range(1, n + 1):
        letters += [f"s{i}", f"t{i}"] + [f"a{i}r{r}" for r in range(1, k + 1)]
    return tuple(letters)


def _arc_slave(alphabet, i, k):
    """Max-automaton tracking which resources process i holds; each step
    weighs the number held so far."""
    edges = []
    for held in itertools.chain.from_iterable(itertools.combinations(range(1, k + 1), m)
                                              for m in range(k + 1)):
        src = ("h",) + held
        for x in alphabet:
            if x == f"t{i}":
                edges.append((src, x, "done", len(held)))
                continue
            new = held
            if x.startswith(f"a{i}r"):
                new = tuple(sorted(set(held) | {int(x[len(f"a{i}r"):])}))
            edges.append((src, x, ("h",) + new, len(new)))
    start = ("start",)
    for x in alphabet:
        if x == f"s{i}":
            edges.append((start, x, ("h",), 0))
    return _slave(alphabet, edges, start, {"done"}, MAX)


def build_arc(n, k=1):
    """Average number of distinct resources a process allocates between its
    start s_i and termination t_i; allocation letters are a{i}r{r}."""
    if n < 1 or k < 1:
        raise ValueError("need n, k >= 1")
    alpha = arc_alphabet(n, k)
    slaves = [_arc_slave(alpha, i, k) for i in range(1, n + 1)]
    labels = {x: (int(x[1:]) if x.startswith("s") else SILENT_LABEL) for x in alpha}
    return _one_state_master(alpha, labels, LIMAVG, slaves)


# --- model measuring and repair examples ------------------------------------------

def build_bounded_delay_measure():
    """(Sup;Sum+) maximum delay between a send s_k and its receive r_k."""
    alpha = ("s1", "r1", "s2", "r2", "$")
    slaves = []
    for k in (1, 2):
        edges = [("x0", f"s{k}", "x1", 0)]
        edges += [("x1", x, "f" if x == f"r{k}" else "x1", 1) for x in alpha]
        slaves.append(_slave(alpha, edges, "x0", {"f"}, SUMPLUS))
    labels = {"s1": 1, "s2": 2, "r1": SILENT_LABEL, "r2": SILENT_LABEL, "$": SILENT_LABEL}
    return _one_state_master(alpha, labels, SUP, slaves)


def build_context_switch_measure():
    """Functional (Sup;Sum) automaton over {c, x}: c is a context switch, x
    any other step.  Each c starts a slave paying -1 per step of the slot,
    so the value is minus the shortest slot length."""
    alpha = ("c", "x")
    s = _slave(alpha, [("z0", "c", "z1", -1), ("z1", "x", "z1", -1), ("z1", "c", "f", 0)],
               "z0", {"f"}, SUM)
    return _one_state_master(alpha, {"c": 1, "x": SILENT_LABEL}, SUP, [s], functional=True)


# --- hardness instances -----------------------------------------------------------

def build_intersection_instance(dfas):
    """Deterministic (LimAvg;Max) NWA over (#^n S* $)^omega that accepts some
    word iff the n DFAs share a word.  The i-th # invokes a slave skipping
    the remaining #s, running DFA i, and ending on $ from an accepting state.
    All weights are 0."""
    dfas = list(dfas)
    if not dfas:
        raise EmptyInstance("need at least one DFA")
    sigma = tuple(dfas[0].alphabet)
    for d in dfas:
        if set(d.alphabet) != set(sigma) or {"#", "$"} & set(sigma):
            raise ValueError("DFAs must share one alphabet without # and $")
        if not is_deterministic(d):
            raise ValueError("intersection instance needs deterministic automata")
    alpha = sigma + ("#", "$")
    n = len(dfas)
    slaves = []
    for d in dfas:
        (q0,) = d.initial
        edges = [("h", "#", "h", 0)]
        for src, real in [("h", q0)] + [(("d", q), q) for q in d.states]:
            for p, a, q in d.transitions:
                if p == real:
                    edges.append((src, a, ("d", q), 0))
            if real in d.accepting:
                edges.append((src, "$", "fin", 0))
        slaves.append(_slave(alpha, edges, "h", {"fin"}, MAX))
    trans = [(f"m{i}", "#", f"m{i + 1}") for i in range(n)]
    labels = {t: i + 1 for i, t in enumerate(trans)}
    for src in (f"m{n}", "w"):
        for a in sigma:
            trans.append((src, a, "w"))
        trans.append((src, "$", "m0"))
    labels.update({t: SILENT_LABEL for t in trans if t not in labels})
    master = Automaton(alpha, [f"m{i}" for i in range(n + 1)] + ["w"], {"m0"}, trans, {"m0"})
    return make_nwa(master, labels, LIMAVG, slaves)


# --- model measuring / repair -------------------------------------------------------

@dataclass(frozen=True)
class MeasureProblem:
    model: Automaton
    spec: Automaton
    measure: object
    threshold: Fraction


def complement_dba(spec):
    """Two-copy Büchi automaton for the complement of a deterministic Büchi
    automaton: guess the point after which no accepting state is seen."""
    if not is_deterministic(spec):
        raise ValueError("spec must be deterministic")
    sink = ("sink",)
    step = {}
    for p, a, q in spec.transitions:
        step[(p, a)] = q
    states = list(spec.states) + [sink]
    delta = {(p, a): step.get((p, a), sink) for p in states for a in spec.alphabet}
    trans = []
    for (p, a), q in delta.items():
        trans.append(((p, 0), a, (q, 0)))
        if q not in spec.accepting:
            trans.append(((p, 0), a, (q, 1)))
            if p not in spec.accepting:
                trans.append(((p, 1), a, (q, 1)))
    nodes = [(q, c) for c in (0, 1) for q in states]
    acc = {(q, 1) for q in states if q not in spec.accepting}
    return Automaton(spec.alphabet, nodes, {(q, 0) for q in spec.initial}, trans, acc)


def restrict_measure(measure, model, spec):
    """The measure NWA restricted to words of the model violating spec."""
    comp = complement_dba(spec)
    if set(model.alphabet) != set(measure.alphabet) or set(spec.alphabet) != set(measure.alphabet):
        raise ValueError("model, spec and measure must share one alphabet")
    m = measure.master
    msucc = {}
    for t in model.transitions:
        msucc.setdefault((t[0], t[1]), []).append(t[2])
    init = [(q, x, c) for q in m.initial for x in model.initial for c in comp.initial]
    nodes, edges, seen, todo = [], [], set(init), list(init)
    while todo:
        node = todo.pop()
        nodes.append(node)
        q, x, c = node
        for t in m.out.get(q, ()):
            a = t[1]
            for x2 in msucc.get((x, a), ()):
                for c2 in comp.succ.get((c, a), ()):
                    tgt = (t[2], x2, c2)
                    edges.append((node, (a, measure.labels[t]), tgt))
                    if tgt not in seen:
                        seen.add(tgt)
                        todo.append(tgt)
    sets = [{n for n in nodes if n[0] in m.accepting}, {n for n in nodes if n[1] in model.accepting},
            {n for n in nodes if n[2] in comp.accepting}]
    dn, dinit, dedges, dacc = degeneralize(nodes, init, edges, sets)
    ren = {v: j for j, v in enumerate(dn)}
    trans = [(ren[u], lab[0], ren[v]) for u, lab, v in dedges]
    labels = {(ren[u], lab[0], ren[v]): lab[1] for u, lab, v in dedges}
    master = Automaton(measure.alphabet, list(range(len(dn))), {ren[s] for s in dinit}, trans,
                       {ren[v] for v in dacc})
    return measure.with_(master=master, labels=labels)


def model_measure_decide(p):
    """Is the stability radius of spec in model at most the threshold?"""
    nwa = restrict_measure(p.measure, p.model, p.spec)
    return route(nwa, EMPTINESS, p.threshold, functional=p.measure.functional)


def model_repair_decide(model, measure, spec, lam):
    """Repair reading of the same emptiness question.  Functional (Sup;Sum)
    measures with nonpositive weights go through the bounded-sum dual,
    which is decidable even though the general cell is not."""
    nwa = restrict_measure(measure, model, spec)
    v = route(nwa, EMPTINESS, lam, functional=measure.functional)
    if v.kind == UNDECIDABLE and _nonpositive_sup_sum(nwa):
        return empty_sup_sum_nonpositive(nwa, lam)
    return v


def _nonpositive_sup_sum(nwa):
    g = nwa.slavefn()
    return (nwa.masterfn.name in ("Sup", "LimSup") and g is not None and g.name == "Sum"
            and all(w is SILENT or w <= 0 for s in nwa.slaves for w in s.weight.values()))


def universal_model(alphabet):
    return Automaton(alphabet, ["u"], {"u"}, [("u", a, "u") for a in alphabet], {"u"})


def empty_spec(alphabet):
    return Automaton(alphabet, ["z"], {"z"}, [("z", a, "z") for a in alphabet], set())

