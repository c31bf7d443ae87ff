"""Nested weighted automata: data model, classification, exact evaluation of
deterministic instances on lasso words, and run traces."""

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

from .core import (FINITE, INFINITE, Automaton, Issue, NestwaError, ValidationError,
                   WeightedAutomaton, is_deterministic, is_prefix_free, trim, validate)
from .values import BOTTOM, INFINITY, PeriodicWeightSeq, eval_fin, eval_inf

SILENT_LABEL = "silent"


class NotDeterministic(NestwaError):
    pass


@dataclass(frozen=True)
class NestedWeightedAutomaton:
    master: Automaton
    labels: dict = field(hash=False)
    masterfn: object = None
    slaves: tuple = ()
    functional: bool = False

    def __post_init__(self):
        object.__setattr__(self, "labels", {tuple(t): i for t, i in dict(self.labels).items()})
        object.__setattr__(self, "slaves", tuple(self.slaves))

    def __hash__(self):
        return hash((self.master, self.masterfn, self.slaves))

    @property
    def alphabet(self):
        return self.master.alphabet

    def slave(self, i):
        return self.slaves[i - 1]

    def label(self, t):
        return self.labels[t]

    @cached_property
    def silent_slaves(self):
        """1-based indices of slaves whose language is exactly {ε}."""
        return frozenset(i for i, s in enumerate(self.slaves, 1) if is_epsilon_only(s.base))

    def slave_fns(self):
        """Value functions of the slaves that can return a value."""
        return {s.valuefn for i, s in enumerate(self.slaves, 1) if i not in self.silent_slaves}

    def slavefn(self):
        fns = self.slave_fns()
        if len(fns) == 1:
            return next(iter(fns))
        if not fns:
            return self.slaves[0].valuefn if self.slaves else None
        return None

    def with_(self, **kw):
        d = dict(master=self.master, labels=self.labels, masterfn=self.masterfn,
                 slaves=self.slaves, functional=self.functional)
        d.update(kw)
        return NestedWeightedAutomaton(**d)


def is_epsilon_only(a):
    t = trim(a)
    return bool(t.initial & t.accepting) and not t.transitions


def epsilon_slave(alphabet, valuefn):
    base = Automaton(alphabet, ["e"], {"e"}, [], {"e"}, FINITE)
    return WeightedAutomaton(base, {}, valuefn)


def make_nwa(master, labels, masterfn, slaves, functional=False):
    """Build an NWA; a label "silent" is sugar for an extra slave accepting
    only the empty word."""
    slaves = list(slaves)
    labels = dict(labels)
    if any(v == SILENT_LABEL for v in labels.values()):
        fn = slaves[0].valuefn if slaves else None
        slaves.append(epsilon_slave(master.alphabet, fn))
        k = len(slaves)
        labels = {t: (k if v == SILENT_LABEL else v) for t, v in labels.items()}
    return NestedWeightedAutomaton(master, labels, masterfn, tuple(slaves), functional)


def validate_nwa(nwa):
    issues = []
    for part, a in [("master", nwa.master)] + [(f"slave {i}", s) for i, s in enumerate(nwa.slaves, 1)]:
        try:
            validate(a)
        except ValidationError as e:
            issues += [Issue(i.kind, f"{part}: {i.detail}") for i in e.issues]
    if nwa.master.mode != INFINITE:
        issues.append(Issue("ModeMismatch", "master must read infinite words"))
    if nwa.masterfn is None or nwa.masterfn.finite:
        issues.append(Issue("ValueFnModeMismatch", f"master value function {nwa.masterfn}"))
    for i, s in enumerate(nwa.slaves, 1):
        if s.mode != FINITE:
            issues.append(Issue("ModeMismatch", f"slave {i} must read finite words"))
        extra = set(s.alphabet) - set(nwa.alphabet)
        if extra:
            issues.append(Issue("UndeclaredLetter", f"slave {i} letters {sorted(extra, key=repr)}"))
    k = len(nwa.slaves)
    for t in nwa.master.transitions:
        lab = nwa.labels.get(t)
        if lab is None:
            issues.append(Issue("MissingLabel", f"master transition {t!r}"))
        elif not isinstance(lab, int) or not 1 <= lab <= k:
            issues.append(Issue("BadLabel", f"{t!r} -> {lab!r}"))
    for t in set(nwa.labels) - set(nwa.master.transitions):
        issues.append(Issue("UndeclaredTransition", f"label for {t!r}"))
    if issues:
        raise ValidationError(issues)
    return nwa


DETERMINISTIC = "Deterministic"
NONDETERMINISTIC = "Nondeterministic"


def classify(nwa):
    if not is_deterministic(nwa.master):
        return NONDETERMINISTIC
    for s in nwa.slaves:
        if not is_deterministic(s) or not is_prefix_free(s.base):
            return NONDETERMINISTIC
    return DETERMINISTIC


# --- deterministic evaluation --------------------------------------------

def _master_step(nwa, q, a):
    nxt = nwa.master.succ.get((q, a), ())
    return nxt[0] if nxt else None


def run_slave_det(slave, w, pos):
    """Run a deterministic prefix-free slave from 0-based position pos of the
    lasso w.  Returns (value, end) where end is the number of letters read, or
    (INFINITY, None) when it gets stuck or never terminates."""
    (q,) = slave.initial
    if q in slave.accepting:
        return BOTTOM, 0
    weights = []
    seen = set()
    i = pos
    while True:
        key = (q, w.phase(i))
        if key in seen:
            return INFINITY, None
        seen.add(key)
        a = w.letter(i)
        nxt = slave.base.succ.get((q, a), ())
        if not nxt:
            return INFINITY, None
        r = nxt[0]
        weights.append(slave.weight[(q, a, r)])
        q = r
        i += 1
        if q in slave.accepting:
            return eval_fin(slave.valuefn, weights), i - pos


def master_lasso(nwa, w):
    """Deterministic master run on u·v^ω as (states, transitions, loop_start):
    the run is periodic from loop_start on.  None if the master blocks."""
    (q,) = nwa.master.initial
    seen = {}
    states, trans = [], []
    i = 0
    while True:
        key = (q, w.phase(i))
        if key in seen:
            return states, trans, seen[key]
        seen[key] = i
        a = w.letter(i)
        r = _master_step(nwa, q, a)
        if r is None:
            return None
        states.append(q)
        trans.append((q, a, r))
        q = r
        i += 1


def eval_det(nwa, w):
    if classify(nwa) != DETERMINISTIC:
        raise NotDeterministic("eval_det needs a deterministic NWA")
    ml = master_lasso(nwa, w)
    if ml is None:
        return INFINITY
    states, trans, loop = ml
    if not any(q in nwa.master.accepting for q in states[loop:]):
        return INFINITY
    vals = []
    for i, t in enumerate(trans):
        v, _ = run_slave_det(nwa.slave(nwa.labels[t]), w, i)
        if v is INFINITY:
            return INFINITY
        vals.append(v)
    return eval_inf(nwa.masterfn, PeriodicWeightSeq(vals[:loop], vals[loop:]), skip_silent=True)


# --- traces and configurations -------------------------------------------

@dataclass(frozen=True)
class Configuration:
    master_state: object
    slave_states: frozenset


@dataclass(frozen=True)
class TraceStep:
    position: int
    configuration: Configuration
    multiplicity: dict = field(hash=False)
    returned: tuple = ()


def trace(nwa, w, horizon):
    """Steps 1..horizon of the run on w.  `returned` holds the value of the
    slave invoked at that position; the configuration is taken after the
    letter is read and lists the slaves still running."""
    if classify(nwa) != DETERMINISTIC:
        raise NotDeterministic("trace needs a deterministic NWA")
    steps = []
    (q,) = nwa.master.initial
    active = []  # (slave index, state)
    for i in range(horizon):
        a = w.letter(i)
        r = _master_step(nwa, q, a)
        if r is None:
            break
        idx = nwa.labels[(q, a, r)]
        slave = nwa.slave(idx)
        v, _ = run_slave_det(slave, w, i)
        moved = []
        for j, s in active:
            nxt = nwa.slave(j).base.succ.get((s, a), ())
            if nxt and nxt[0] not in nwa.slave(j).accepting:
                moved.append((j, nxt[0]))
        (s0,) = slave.initial
        if s0 not in slave.accepting:
            nxt = slave.base.succ.get((s0, a), ())
            if nxt and nxt[0] not in slave.accepting:
                moved.append((idx, nxt[0]))
        active = moved
        q = r
        mult = dict(sorted(Counter(active).items(), key=repr))
        steps.append(TraceStep(i + 1, Configuration(q, frozenset(active)), mult, (v,)))
    return steps


@dataclass(frozen=True)
class ConfigurationCount:
    bound: int
    reachable: int


def configuration_count(nwa, limit=200000):
    nslv = sum(len(s.states) for s in nwa.slaves)
    bound = len(nwa.master.states) * 2 ** nslv
    start = [Configuration(q, frozenset()) for q in nwa.master.initial_ordered()]
    seen = set(start)
    stack = list(start)
    while stack and len(seen) <= limit:
        c = stack.pop()
        for (p, a), targets in nwa.master.succ.items():
            if p != c.master_state:
                continue
            for r in targets:
                idx = nwa.labels[(p, a, r)]
                for nxt in _config_succ(nwa, c, a, idx):
                    cfg = Configuration(r, nxt)
                    if cfg not in seen:
                        seen.add(cfg)
                        stack.append(cfg)
    return ConfigurationCount(bound, len(seen))


def _config_succ(nwa, c, a, idx):
    # every active slave state moves to one of its successors or stops; the
    # new slave starts from one of its initial states
    options = []
    for j, s in sorted(c.slave_states, key=repr):
        sl = nwa.slave(j)
        opts = set()
        for r in sl.base.succ.get((s, a), ()):
            opts.add(None if r in sl.accepting and not sl.base.out[r] else (j, r))
            if r in sl.accepting:
                opts.add(None)
        options.append(sorted(opts, key=repr))
    sl = nwa.slave(idx)
    opts = set()
    for s0 in sl.initial:
        if s0 in sl.accepting:
            opts.add(None)
        for r in sl.base.succ.get((s0, a), ()):
            opts.add(None if r in sl.accepting and not sl.base.out[r] else (idx, r))
            if r in sl.accepting:
                opts.add(None)
    options.append(sorted(opts, key=repr))
    results = {frozenset()}
    for opts in options:
        if not opts:
            return set()
        results = {acc | ({o} if o is not None else set()) for acc in results for o in opts}
    return results
