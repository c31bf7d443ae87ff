"""Command line front end: JSON spec files in, JSON reports out.

Exit codes: 0 decided, 1 input error, 2 unsupported input, 3 undecidable or
open fragment, 4 resource limit.
"""

import argparse
import hashlib
import json
import re
import sys
import time
from fractions import Fraction

from . import gallery
from .core import (FINITE, INFINITE, Automaton, LassoWord, NestwaError, ResourceLimit,
                   ValidationError, WeightedAutomaton, degeneralize, validate)
from .decide import (DECIDED, EMPTINESS, OPEN, UNDECIDABLE, UNIVERSALITY, UNSUPPORTED,
                     pipeline_automaton, route, value_of_lasso)
from .nested import NestedWeightedAutomaton, NotDeterministic, eval_det, validate_nwa
from .oracle import OracleBudget, WitnessFound, oracle_empty, oracle_value
from .reduce import (NotRegularSlave, afix, bound_sum_plus, eliminate_silent, lemma4_reduce)
from .finword import UnsupportedValueFn
from .values import INFINITY, SILENT, BSum, ValueFn, fmt_value

EXIT_OK, EXIT_INPUT, EXIT_UNSUPPORTED, EXIT_UNDECIDABLE, EXIT_LIMIT = 0, 1, 2, 3, 4

_RATIONAL = re.compile(r"^-?\d+(/\d+)?$")


class ParseError(NestwaError):
    def __init__(self, issues):
        self.issues = list(issues) if isinstance(issues, (list, tuple)) else [issues]
        super().__init__("; ".join(self.issues))


class UnknownDemo(NestwaError):
    pass


# --- spec documents -------------------------------------------------------------

def _enc(x):
    """States and letters: tuples become arrays, everything else must
    already be a JSON scalar."""
    if isinstance(x, (tuple, list)):
        return [_enc(y) for y in x]
    if isinstance(x, frozenset):
        return {"set": sorted((_enc(y) for y in x), key=lambda v: json.dumps(v, sort_keys=True))}
    if isinstance(x, Fraction):
        return {"q": fmt_value(x)}
    if isinstance(x, (str, int)) and not isinstance(x, bool):
        return x
    raise TypeError(f"cannot serialize {x!r}")


def _dec(x):
    if isinstance(x, list):
        return tuple(_dec(y) for y in x)
    if isinstance(x, dict):
        if set(x) == {"set"}:
            return frozenset(_dec(y) for y in x["set"])
        if set(x) == {"q"}:
            return Fraction(x["q"])
        raise ParseError(f"unexpected object {x!r}")
    return x


def _weight_str(w):
    return "silent" if w is SILENT else fmt_value(w)


def _parse_weight(s, where):
    if s == "silent":
        return SILENT
    if isinstance(s, int) and not isinstance(s, bool):
        return Fraction(s)
    if not isinstance(s, str) or not _RATIONAL.match(s.strip()):
        raise ParseError(f"{where}: weight {s!r} is not an exact rational 'p/q'")
    f = Fraction(s.strip())
    return f


def _fn_doc(fn):
    d = {"valuefn": fn.name}
    if fn.bound is not None:
        d["bound"] = fn.bound
    return d


def _parse_fn(doc, where):
    name = doc.get("valuefn")
    if name is None:
        return None
    try:
        if name == "BSum":
            return BSum(int(doc.get("bound", 0)))
        return ValueFn(name)
    except (ValueError, TypeError) as e:
        raise ParseError(f"{where}.valuefn: {e}") from None


def automaton_doc(a, weights=None, fn=None, labels=None, kind="automaton"):
    trans = []
    for t in a.transitions:
        d = {"from": _enc(t[0]), "letter": _enc(t[1]), "to": _enc(t[2])}
        if weights is not None:
            d["weight"] = _weight_str(weights[t])
        if labels is not None:
            d["label"] = labels[t]
        trans.append(d)
    doc = {"kind": kind, "alphabet": [_enc(x) for x in a.alphabet], "states": [_enc(q) for q in a.states],
           "initial": [_enc(q) for q in a.initial_ordered()],
           "accepting": [_enc(q) for q in a.states if q in a.accepting], "mode": a.mode,
           "transitions": trans}
    if fn is not None:
        doc.update(_fn_doc(fn))
    return doc


def to_doc(obj):
    """Serialize an Automaton, WeightedAutomaton or NWA."""
    if isinstance(obj, NestedWeightedAutomaton):
        master = automaton_doc(obj.master, fn=obj.masterfn, labels=obj.labels)
        slaves = [to_doc(s) for s in obj.slaves]
        return {"kind": "nwa", "functional": bool(obj.functional), "master": master, "slaves": slaves}
    if isinstance(obj, WeightedAutomaton):
        return automaton_doc(obj.base, weights=obj.weight, fn=obj.valuefn, kind="weighted")
    if isinstance(obj, Automaton):
        return automaton_doc(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _need(doc, key, where, issues):
    if key not in doc:
        issues.append(f"{where}: missing {key!r}")
        return None
    return doc[key]


def _parse_automaton(doc, where, weighted=False, labelled=False):
    if not isinstance(doc, dict):
        raise ParseError(f"{where}: expected an object")
    missing = []
    alphabet = _need(doc, "alphabet", where, missing)
    states = _need(doc, "states", where, missing)
    initial = _need(doc, "initial", where, missing)
    accepting = _need(doc, "accepting", where, missing)
    transitions = _need(doc, "transitions", where, missing)
    if missing:
        raise ParseError(missing)
    mode = doc.get("mode", INFINITE)
    trans, weights, labels = [], {}, {}
    for j, t in enumerate(transitions):
        tw = f"{where}.transitions[{j}]"
        if not isinstance(t, dict) or not {"from", "letter", "to"} <= set(t):
            raise ParseError(f"{tw}: needs from, letter and to")
        key = (_dec(t["from"]), _dec(t["letter"]), _dec(t["to"]))
        trans.append(key)
        if weighted:
            if "weight" not in t:
                raise ParseError(f"{tw}: missing weight")
            weights[key] = _parse_weight(t["weight"], tw)
        if labelled:
            if "label" not in t:
                raise ParseError(f"{tw}: missing label")
            lab = t["label"]
            if not (isinstance(lab, int) and not isinstance(lab, bool)):
                raise ParseError(f"{tw}: label must be a slave index")
            labels[key] = lab
    states = [_dec(q) for q in states]
    initial = [_dec(q) for q in initial]
    alphabet = [_dec(x) for x in alphabet]
    if accepting and all(isinstance(s, list) for s in accepting) and mode == INFINITE \
            and not any(_dec(s) in states for s in accepting):
        # generalized Büchi: degeneralize on the spot
        sets = [{_dec(q) for q in s} for s in accepting]
        nodes, start, edges, acc = degeneralize(states, initial, [(p, (a, p, q), q) for p, a, q in trans],
                                                sets)
        trans2 = [(u, lab[0], v) for u, lab, v in edges]
        weights = {(u, lab[0], v): weights[lab] for u, lab, v in edges} if weighted else weights
        labels = {(u, lab[0], v): labels[lab] for u, lab, v in edges} if labelled else labels
        states, initial, trans, accepting = nodes, start, trans2, acc
    else:
        accepting = [_dec(q) for q in accepting]
    try:
        a = Automaton(alphabet, states, initial, trans, accepting, mode)
    except ValueError as e:
        raise ParseError(f"{where}.mode: {e}") from None
    validate(a)
    return a, weights, labels


def from_doc(doc):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ParseError("top level: expected an object with 'kind'")
    kind = doc["kind"]
    if kind == "automaton":
        return _parse_automaton(doc, "$")[0]
    if kind == "weighted":
        a, w, _ = _parse_automaton(doc, "$", weighted=True)
        return WeightedAutomaton(a, w, _parse_fn(doc, "$"))
    if kind == "nwa":
        for key in ("master", "slaves"):
            if key not in doc:
                raise ValidationError([_issue("MissingField", f"$: missing {key!r}")])
        m, _, labels = _parse_automaton(doc["master"], "$.master", labelled=True)
        slaves = []
        for j, s in enumerate(doc["slaves"]):
            a, w, _ = _parse_automaton(s, f"$.slaves[{j}]", weighted=True)
            slaves.append(WeightedAutomaton(a, w, _parse_fn(s, f"$.slaves[{j}]")))
        nwa = NestedWeightedAutomaton(m, labels, _parse_fn(doc["master"], "$.master"), tuple(slaves),
                                      bool(doc.get("functional", False)))
        return validate_nwa(nwa)
    raise ParseError(f"$.kind: unknown kind {kind!r}")


def _issue(kind, detail):
    from .core import Issue
    return Issue(kind, detail)


def parse_spec(path):
    """Read and validate a spec file.  Missing structural fields are
    validation errors; malformed JSON or values are parse errors."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ParseError(f"{path}: {e.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    try:
        return from_doc(doc)
    except ParseError as e:
        if any("missing" in i for i in e.issues):
            raise ValidationError([_issue("MissingField", i) for i in e.issues]) from None
        raise


def dumps(doc):
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# --- words and reports ------------------------------------------------------------

def parse_word(text, alphabet):
    """Letters separated by '.'; with single-character letters the dots may
    be left out."""
    if text == "":
        return ()
    known = {str(x): x for x in alphabet}
    if "." in text:
        parts = text.split(".")
    elif text in known:
        parts = [text]
    else:
        parts = list(text)
    bad = [p for p in parts if p not in known]
    if bad:
        raise ParseError(f"unknown letters {bad}")
    return tuple(known[p] for p in parts)


def fmt_word(word):
    return ".".join(str(x) for x in word)


def _witness_doc(w):
    if w is None:
        return None
    return {"prefix": fmt_word(w.prefix), "period": fmt_word(w.period)}


def _stats_doc(stats):
    out = {}
    for k, v in sorted(stats.items()):
        if isinstance(v, Fraction) or v is INFINITY:
            v = fmt_value(v)
        out[k] = v
    return out


class Report:
    def __init__(self, command, path=None, timing=False):
        self.doc = {"command": command}
        if path:
            with open(path, "rb") as fh:
                self.doc["inputs"] = {"sha256": hashlib.sha256(fh.read()).hexdigest()}
        self.timing = timing
        self.t0 = time.perf_counter()

    def emit(self, out=None):
        if self.timing:
            self.doc.setdefault("stats", {})["elapsed_s"] = f"{time.perf_counter() - self.t0:.3f}"
        (out or sys.stdout).write(dumps(self.doc))


def _load(path):
    return parse_spec(path)


# --- commands ---------------------------------------------------------------------

def cmd_eval(args):
    obj = _load(args.automaton)
    if not args.period:
        raise ParseError("period must be nonempty")
    alphabet = obj.master.alphabet if isinstance(obj, NestedWeightedAutomaton) else obj.alphabet
    w = LassoWord(parse_word(args.prefix, alphabet), parse_word(args.period, alphabet))
    rep = Report("eval", args.automaton, args.timing)
    if isinstance(obj, NestedWeightedAutomaton):
        v = eval_det(obj, w)
    elif isinstance(obj, WeightedAutomaton):
        v = value_of_lasso(obj, w)
    else:
        raise ParseError("eval needs a weighted automaton or an NWA")
    rep.doc.update(word=_witness_doc(w), value=fmt_value(v))
    rep.emit()
    return EXIT_OK


def _verdict_report(rep, v):
    rep.doc["verdict"] = v.kind
    if v.kind == DECIDED:
        rep.doc["answer"] = v.answer
        if v.witness is not None:
            rep.doc["witness"] = _witness_doc(v.witness)
        if v.counterexample is not None:
            rep.doc["counterexample"] = _witness_doc(v.counterexample)
    for key in ("citation", "reason", "note"):
        if getattr(v, key):
            rep.doc[key] = getattr(v, key)
    if v.stats:
        rep.doc["stats"] = _stats_doc(v.stats)
    return {DECIDED: EXIT_OK, UNDECIDABLE: EXIT_UNDECIDABLE, OPEN: EXIT_UNDECIDABLE,
            UNSUPPORTED: EXIT_UNSUPPORTED}[v.kind]


def _decide(args, problem):
    obj = _load(args.automaton)
    lam = _parse_weight(args.threshold, "--threshold")
    if lam is SILENT:
        raise ParseError("--threshold must be a rational")
    rep = Report("empty" if problem == EMPTINESS else "universal", args.automaton, args.timing)
    rep.doc["threshold"] = fmt_value(lam)
    code = _verdict_report(rep, route(obj, problem, lam, functional=args.functional))
    rep.emit()
    return code


def cmd_empty(args):
    return _decide(args, EMPTINESS)


def cmd_universal(args):
    return _decide(args, UNIVERSALITY)


def _renumber(wa):
    """Integer state names so that any reduced automaton serializes."""
    ren = {q: j for j, q in enumerate(wa.states)}
    base = Automaton(wa.alphabet, list(ren.values()), {ren[q] for q in wa.initial},
                     [(ren[p], a, ren[q]) for p, a, q in wa.transitions], {ren[q] for q in wa.accepting},
                     wa.mode)
    return WeightedAutomaton(base, {(ren[p], a, ren[q]): w for (p, a, q), w in wa.weight.items()},
                             wa.valuefn)


def _size(obj):
    if isinstance(obj, NestedWeightedAutomaton):
        return len(obj.master.states) + sum(len(s.states) for s in obj.slaves)
    return len(obj.states)


def cmd_reduce(args):
    obj = _load(args.automaton)
    rep = Report("reduce", args.automaton, args.timing)
    rep.doc["pass"] = args.pass_
    nested = isinstance(obj, NestedWeightedAutomaton)
    if args.pass_ in ("lemma4", "bound-sum", "pipeline") and not nested:
        raise ParseError(f"pass {args.pass_} needs an NWA")
    if args.pass_ in ("silent-elim", "afix") and not isinstance(obj, WeightedAutomaton):
        raise ParseError(f"pass {args.pass_} needs a weighted automaton")
    if args.pass_ == "lemma4":
        out = lemma4_reduce(obj)
    elif args.pass_ == "silent-elim":
        lam = _parse_weight(args.threshold or "0", "--threshold")
        out = eliminate_silent(obj, lam=lam)
    elif args.pass_ == "afix":
        out = afix(obj).automaton
        if not obj.transitions or all(w is SILENT for w in obj.weight.values()):
            rep.doc["warning"] = "no weighted transitions; the result has none"
    elif args.pass_ == "bound-sum":
        if args.threshold is None:
            raise ParseError("bound-sum needs --threshold")
        out = bound_sum_plus(obj, _parse_weight(args.threshold, "--threshold"))
    else:
        out = pipeline_automaton(obj, guess_bound=args.guess_bound)
    if isinstance(out, WeightedAutomaton):
        out = _renumber(out)
    rep.doc["states"] = {"before": _size(obj), "after": _size(out)}
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(dumps(to_doc(out)))
    rep.doc["out"] = args.out
    rep.emit()
    return EXIT_OK


def _intersection_demo():
    # two DFAs over {a, b} whose languages meet exactly in {ab}
    d1 = Automaton(("a", "b"), [0, 1, 2], {0}, [(0, "a", 1), (1, "b", 2)], {2}, FINITE)
    d2 = Automaton(("a", "b"), [0, 1, 2], {0}, [(0, "a", 1), (1, "b", 2), (2, "b", 2)], {2}, FINITE)
    return gallery.build_intersection_instance([d1, d2])


DEMOS = {
    "stuttering1": lambda a: gallery.build_stuttering(1),
    "stuttering2": lambda a: gallery.build_stuttering(2),
    "art": lambda a: gallery.build_art(1, a.variant),
    "art2": lambda a: gallery.build_art(2, a.variant),
    "arc": lambda a: gallery.build_arc(a.n, a.k),
    "example9": lambda a: gallery.build_example9(),
    "bounded-delay": lambda a: gallery.build_bounded_delay_measure(),
    "context-switch": lambda a: gallery.build_context_switch_measure(),
    "intersection": lambda a: _intersection_demo(),
}


def cmd_demo(args):
    if args.name not in DEMOS:
        raise UnknownDemo(f"unknown demo {args.name!r}; known: {', '.join(DEMOS)}")
    text = dumps(to_doc(DEMOS[args.name](args)))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_oracle(args):
    obj = _load(args.automaton)
    alphabet = obj.master.alphabet if isinstance(obj, NestedWeightedAutomaton) else obj.alphabet
    budget = OracleBudget(args.max_prefix, args.max_period, args.max_slave_len, args.max_branch)
    rep = Report("oracle", args.automaton, args.timing)
    if args.period:
        w = LassoWord(parse_word(args.prefix, alphabet), parse_word(args.period, alphabet))
        v = oracle_value(obj, w, budget)
        rep.doc.update(word=_witness_doc(w), value=fmt_value(v.value), exact=type(v).__name__ == "ExactValue")
    elif args.threshold is not None:
        lam = _parse_weight(args.threshold, "--threshold")
        v = oracle_empty(obj, lam, budget)
        rep.doc["threshold"] = fmt_value(lam)
        if isinstance(v, WitnessFound):
            rep.doc.update(found=True, witness=_witness_doc(v.word), value=fmt_value(v.value))
        else:
            rep.doc["found"] = False
    else:
        raise ParseError("oracle needs --period or --threshold")
    rep.emit()
    return EXIT_OK


# --- entry point ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_INPUT)


def build_parser():
    p = _Parser(prog="nestwa", description="Nested weighted automata toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--automaton", required=True, help="spec file")
        sp.add_argument("--timing", action="store_true", help="add elapsed time to the report")

    sp = sub.add_parser("eval", help="value of a lasso word")
    common(sp)
    sp.add_argument("--prefix", default="")
    sp.add_argument("--period", required=True)
    sp.set_defaults(func=cmd_eval)
    for name, fn in (("empty", cmd_empty), ("universal", cmd_universal)):
        sp = sub.add_parser(name, help=f"{name} question at a threshold")
        common(sp)
        sp.add_argument("--threshold", required=True)
        sp.add_argument("--functional", action="store_true", help="assert the input is functional")
        sp.set_defaults(func=fn)
    sp = sub.add_parser("reduce", help="run one reduction and write the result")
    common(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--pass", dest="pass_", default="lemma4",
                    choices=["lemma4", "silent-elim", "afix", "bound-sum", "pipeline"])
    sp.add_argument("--threshold")
    sp.add_argument("--guess-bound", type=int, default=1)
    sp.set_defaults(func=cmd_reduce)
    sp = sub.add_parser("demo", help="write a gallery automaton")
    sp.add_argument("--name", required=True)
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--variant", default="distance", choices=["distance", "idle"])
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_demo)
    sp = sub.add_parser("oracle", help="brute-force value or emptiness search")
    common(sp)
    sp.add_argument("--prefix", default="")
    sp.add_argument("--period")
    sp.add_argument("--threshold")
    sp.add_argument("--max-prefix", type=int, default=3)
    sp.add_argument("--max-period", type=int, default=4)
    sp.add_argument("--max-slave-len", type=int, default=10)
    sp.add_argument("--max-branch", type=int, default=3)
    sp.set_defaults(func=cmd_oracle)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ResourceLimit as e:
        sys.stderr.write(f"resource limit: {e}\n")
        return EXIT_LIMIT
    except (NotDeterministic, NotRegularSlave, UnsupportedValueFn) as e:
        sys.stderr.write(f"unsupported: {e}\n")
        return EXIT_UNSUPPORTED
    except (ParseError, ValidationError, UnknownDemo) as e:
        sys.stderr.write(f"input error: {e}\n")
        return EXIT_INPUT
    except (NestwaError, ValueError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
