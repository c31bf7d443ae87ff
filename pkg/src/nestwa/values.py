"""Value functions over finite and eventually-periodic weight sequences.

Values are exact: ``Fraction`` for rationals plus two sentinels, ``BOTTOM``
(the empty sequence, i.e. a silent step) and ``INFINITY`` (no accepting run).
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering


@total_ordering
class _Infinity:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "INFINITY"

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        return False

    def __gt__(self, other):
        return other is not self

    def __hash__(self):
        return hash("nestwa-infinity")

    def __reduce__(self):
        return (_Infinity, ())


class _Bottom:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "BOTTOM"

    def __hash__(self):
        return hash("nestwa-bottom")

    def __reduce__(self):
        return (_Bottom, ())


INFINITY = _Infinity()
BOTTOM = _Bottom()
# a silent transition weight is the same external value as an empty slave run
SILENT = BOTTOM


def is_rational(x):
    return isinstance(x, (Fraction, int)) and not isinstance(x, bool)


def as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not an exact rational: {x!r}")


def fmt_value(v):
    """Render a value the way reports print it."""
    if v is INFINITY:
        return "infinity"
    if v is BOTTOM:
        return "bottom"
    v = as_fraction(v)
    return f"{v.numerator}/{v.denominator}"


def parse_value(s):
    if s == "infinity":
        return INFINITY
    if s in ("bottom", "silent"):
        return BOTTOM
    return Fraction(s)


@dataclass(frozen=True)
class ValueFn:
    name: str
    bound: int = None

    def __post_init__(self):
        if self.name not in FIN_NAMES + INF_NAMES:
            raise ValueError(f"unknown value function {self.name}")
        if self.name == "BSum":
            if self.bound is None or self.bound < 0:
                raise ValueError("BSum needs a nonnegative bound")
        elif self.bound is not None:
            raise ValueError(f"{self.name} takes no bound")

    @property
    def finite(self):
        return self.name in FIN_NAMES

    @property
    def regular(self):
        return self.name in ("Min", "Max", "BSum")

    def __str__(self):
        if self.name == "BSum":
            return f"BSum({self.bound})"
        return self.name


FIN_NAMES = ("Max", "Min", "Sum", "SumPlus", "BSum")
INF_NAMES = ("Sup", "Inf", "LimSup", "LimInf", "LimAvg")

MAX = ValueFn("Max")
MIN = ValueFn("Min")
SUM = ValueFn("Sum")
SUMPLUS = ValueFn("SumPlus")
SUP = ValueFn("Sup")
INF = ValueFn("Inf")
LIMSUP = ValueFn("LimSup")
LIMINF = ValueFn("LimInf")
LIMAVG = ValueFn("LimAvg")


def BSum(bound):
    return ValueFn("BSum", int(bound))


FINVAL = (MAX, MIN, SUM, SUMPLUS)
INFVAL = (SUP, INF, LIMSUP, LIMINF, LIMAVG)

DUAL = {"Inf": SUP, "Sup": INF, "LimInf": LIMSUP, "LimSup": LIMINF, "LimAvg": LIMAVG}


def dual(f):
    """Value function g with g(-s) = -f(s)."""
    return DUAL[f.name]


def bsum_step(acc, w, bound):
    """One step of the bounded sum: returns the new running sum or None once
    the bound has been exceeded."""
    if acc is None:
        return None
    acc = acc + w
    if abs(acc) > bound:
        return None
    return acc


def eval_fin(f, seq):
    seq = [as_fraction(w) for w in seq]
    if not seq:
        return BOTTOM
    n = f.name
    if n == "Max":
        return max(seq)
    if n == "Min":
        return min(seq)
    if n == "Sum":
        return sum(seq, Fraction(0))
    if n == "SumPlus":
        return sum((abs(w) for w in seq), Fraction(0))
    if n == "BSum":
        acc = Fraction(0)
        for w in seq:
            acc = bsum_step(acc, w, f.bound)
            if acc is None:
                return Fraction(f.bound)
        return acc
    raise ValueError(f"{f} is not a finite-word value function")


@dataclass(frozen=True)
class PeriodicWeightSeq:
    prefix: tuple
    period: tuple

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "period", tuple(self.period))
        if not self.period:
            raise ValueError("period must be nonempty")


def eval_inf(f, seq, skip_silent=True):
    pre, per = list(seq.prefix), list(seq.period)
    if skip_silent:
        pre = [w for w in pre if w is not BOTTOM]
        per = [w for w in per if w is not BOTTOM]
        if not per:
            return INFINITY
    elif any(w is BOTTOM for w in pre + per):
        raise ValueError("silent entries need skip_silent")
    n = f.name
    if n == "Sup":
        return max(pre + per)
    if n == "Inf":
        return min(pre + per)
    if n == "LimSup":
        return max(per)
    if n == "LimInf":
        return min(per)
    if n == "LimAvg":
        return Fraction(sum(per, Fraction(0)), len(per))
    raise ValueError(f"{f} is not an infinite-word value function")


def leq(a, b):
    """a <= b over the extended values (BOTTOM is not comparable)."""
    if a is BOTTOM or b is BOTTOM:
        raise ValueError("BOTTOM has no order")
    if b is INFINITY:
        return True
    if a is INFINITY:
        return False
    return a <= b
