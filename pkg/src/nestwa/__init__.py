"""Nested weighted automata: exact evaluation, reductions and deciders."""

from .values import (BOTTOM, INFINITY, SILENT, BSum, LIMAVG, LIMINF, LIMSUP, INF, SUP,
                     MAX, MIN, SUM, SUMPLUS, ValueFn, PeriodicWeightSeq, eval_fin, eval_inf)
from .core import Automaton, WeightedAutomaton, LassoWord, GenBuchiAcceptance, validate

__version__ = "0.1.0"
