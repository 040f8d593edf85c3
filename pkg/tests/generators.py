"""Seeded random generators for formulas, models, automata and lassos."""

from __future__ import annotations

import random
from itertools import count

from hypertrace.automata import NBW, LassoWord
from hypertrace.syntax import (
    CTRACE,
    EXISTS,
    FORALL,
    NAT,
    PROP,
    SET,
    TIME,
    TRACE,
    And,
    Const,
    Eq,
    Iff,
    Implies,
    Less,
    Member,
    Next,
    Not,
    Or,
    Pred,
    Prop,
    Quant,
    QuantEntry,
    QuantifierPrefix,
    Succ,
    Until,
)
from hypertrace.traces import TraceSet, UPSet, UPTrace

PROPS = ("a", "b", "c")


# ---------------------------------------------------------------- words


def valuation(rng: random.Random, props) -> frozenset:
    return frozenset(p for p in props if rng.random() < 0.5)


def up_trace(rng: random.Random, props, max_prefix: int = 2, max_period: int = 2) -> UPTrace:
    pre = tuple(valuation(rng, props) for _ in range(rng.randint(0, max_prefix)))
    per = tuple(valuation(rng, props) for _ in range(rng.randint(1, max_period)))
    return UPTrace(pre, per)


def up_set(rng: random.Random, max_prefix: int = 2, max_period: int = 2) -> UPSet:
    pre = tuple(rng.random() < 0.5 for _ in range(rng.randint(0, max_prefix)))
    per = tuple(rng.random() < 0.5 for _ in range(rng.randint(1, max_period)))
    return UPSet(pre, per)


def model(rng: random.Random, props, max_traces: int = 3, min_traces: int = 1) -> TraceSet:
    k = rng.randint(min_traces, max_traces)
    return TraceSet.of(props, [up_trace(rng, props) for _ in range(k)])


# ---------------------------------------------------------------- hypertrace formulas


class HyperGen:
    """Random hypertrace formulas over a fixed alphabet.

    `sorts` lists the quantifier sorts that may appear; `kinds` maps a sort
    to its allowed polarities.
    """

    def __init__(self, rng, props=PROPS, sorts=(TRACE, CTRACE, TIME), kinds=None, leaf_bias=0.3):
        self.rng = rng
        self.props = tuple(props)
        self.sorts = tuple(sorts)
        self.kinds = kinds or {}
        self.leaf_bias = leaf_bias
        self._n = count()

    def fresh(self, sort: str) -> str:
        return ("i" if sort == TIME else "p") + str(next(self._n))

    def atom(self, traces, times):
        rng = self.rng
        r = rng.random()
        if traces and times and r < 0.7:
            return Pred(rng.choice(self.props), rng.choice(traces), rng.choice(times))
        if times and r < 0.9:
            cls = rng.choice((Less, Eq))
            return cls(rng.choice(times), rng.choice(times))
        if traces and times:
            return Pred(rng.choice(self.props), rng.choice(traces), rng.choice(times))
        return Const(rng.random() < 0.5)

    def matrix(self, depth: int, traces, times):
        """Quantifier-free formula with the given variables."""
        rng = self.rng
        if depth <= 1 or rng.random() < self.leaf_bias:
            f = self.atom(traces, times)
            return Not(f) if depth > 1 and rng.random() < 0.3 else f
        k = rng.randrange(6)
        if k == 0:
            return Not(self.matrix(depth - 1, traces, times))
        cls = (And, Or, Implies, Iff, And)[k - 1]
        return cls(self.matrix(depth - 1, traces, times), self.matrix(depth - 1, traces, times))

    def formula(self, depth: int, traces=(), times=()):
        """Arbitrary formula with quantifiers anywhere; depth counts nodes."""
        rng = self.rng
        traces, times = list(traces), list(times)
        if depth <= 1 or rng.random() < self.leaf_bias / 3:
            return self.atom(traces, times)
        k = rng.randrange(7)
        if k < 3 and self.sorts:
            sort = rng.choice(self.sorts)
            kind = rng.choice(self.kinds.get(sort, (EXISTS, FORALL)))
            v = self.fresh(sort)
            inner_tr = traces + [v] if sort != TIME else traces
            inner_ti = times + [v] if sort == TIME else times
            return Quant(kind, sort, v, self.formula(depth - 1, inner_tr, inner_ti))
        if k == 3:
            return Not(self.formula(depth - 1, traces, times))
        cls = (And, Or, Implies)[(k - 4) % 3]
        return cls(self.formula(depth - 1, traces, times), self.formula(depth - 1, traces, times))

    def prenex(self, entries, matrix_depth: int, free_traces=(), free_times=()):
        """Prenex formula over the given prefix entries (kind, sort)."""
        qs = []
        traces, times = list(free_traces), list(free_times)
        for kind, sort in entries:
            v = self.fresh(sort)
            qs.append(QuantEntry(kind, sort, v))
            (times if sort == TIME else traces).append(v)
        m = self.matrix(matrix_depth, traces, times)
        return QuantifierPrefix(tuple(qs)).attach(m)


def lemma43_prefix(rng, max_exists=2, max_forall=2, min_forall=1, max_q=2):
    """Entries of the shape E* (exists-hat)^n (forall-hat)^m Q*."""
    entries = []
    for _ in range(rng.randint(0, 1)):
        entries.append((EXISTS, rng.choice((TIME, TRACE))))
    n = rng.randint(1, max_exists)
    m = rng.randint(min_forall, max_forall)
    entries += [(EXISTS, CTRACE)] * n + [(FORALL, CTRACE)] * m
    for _ in range(rng.randint(0, max_q)):
        entries.append((rng.choice((EXISTS, FORALL)), rng.choice((TIME, TIME, TRACE))))
    if not any(s == TIME for _, s in entries):
        entries.append((rng.choice((EXISTS, FORALL)), TIME))
    return entries


def subset_closed_prefix(rng, length=4):
    """Prefix without constrained existentials."""
    choices = [(FORALL, CTRACE), (FORALL, CTRACE), (EXISTS, TIME), (FORALL, TIME), (EXISTS, TRACE), (FORALL, TRACE)]
    entries = [rng.choice(choices) for _ in range(rng.randint(1, length))]
    if not any(s == TIME for _, s in entries):
        entries.append((rng.choice((EXISTS, FORALL)), TIME))
    if not any(s != TIME for _, s in entries):
        entries.insert(0, (FORALL, CTRACE))
    return entries


# ---------------------------------------------------------------- S1S formulas


class S1SGen:
    """Random S1S formulas with first-order quantifiers and free set variables."""

    def __init__(self, rng, sets=("X", "Y"), leaf_bias=0.3):
        self.rng = rng
        self.sets = tuple(sets)
        self.leaf_bias = leaf_bias
        self._n = count()

    def atom(self, fo):
        rng = self.rng
        if not fo:
            return Const(rng.random() < 0.5)
        r = rng.random()
        if r < 0.5 and self.sets:
            return Member(rng.choice(self.sets), rng.choice(fo))
        if r < 0.75:
            return Succ(rng.choice(fo), rng.choice(fo))
        return Eq(rng.choice(fo), rng.choice(fo))

    def formula(self, depth: int, fo=()):
        rng = self.rng
        fo = list(fo)
        if depth <= 1 or rng.random() < self.leaf_bias:
            return self.atom(fo)
        k = rng.randrange(6)
        if k < 2:
            v = f"x{next(self._n)}"
            kind = rng.choice((EXISTS, FORALL))
            return Quant(kind, NAT, v, self.formula(depth - 1, fo + [v]))
        if k == 2:
            return Not(self.formula(depth - 1, fo))
        cls = (And, Or, And)[k - 3]
        return cls(self.formula(depth - 1, fo), self.formula(depth - 1, fo))


# ---------------------------------------------------------------- LTL / HyperQPTL


def ltl(rng, depth: int, atoms):
    """Random LTL formula over Prop atoms."""
    if depth <= 1 or rng.random() < 0.3:
        f = rng.choice(atoms)
        return Not(f) if rng.random() < 0.3 else f
    k = rng.randrange(6)
    if k == 0:
        return Not(ltl(rng, depth - 1, atoms))
    if k == 1:
        return Next(ltl(rng, depth - 1, atoms))
    cls = (And, Or, Until, Until)[k - 2]
    return cls(ltl(rng, depth - 1, atoms), ltl(rng, depth - 1, atoms))


def hqptl_sentence(rng, props=("a", "b"), body_depth: int = 3):
    """Trace and propositional quantifier prefix over an LTL body."""
    entries = []
    traces, qs = [], []
    n_tr = rng.randint(1, 2)
    n_q = rng.randint(0, 1)
    kinds = [TRACE] * n_tr + [PROP] * n_q
    rng.shuffle(kinds)
    for k, sort in enumerate(kinds):
        name = f"p{k}" if sort == TRACE else f"q{k}"
        entries.append(QuantEntry(rng.choice((EXISTS, FORALL)), sort, name))
        (traces if sort == TRACE else qs).append(name)
    atoms = [Prop(a, t) for a in props for t in traces] + [Prop(q) for q in qs]
    body = ltl(rng, body_depth, atoms)
    return QuantifierPrefix(tuple(entries)).attach(body)


# ---------------------------------------------------------------- automata


def nbw(rng, tracks=("x",), max_states: int = 4, density: float = 0.35) -> NBW:
    n = rng.randint(1, max_states)
    letters = 1 << len(tracks)
    delta = []
    for _ in range(n):
        row = {}
        for l in range(letters):
            succ = tuple(sorted(q for q in range(n) if rng.random() < density))
            if succ:
                row[l] = succ
        delta.append(row)
    initial = frozenset(q for q in range(n) if q == 0 or rng.random() < 0.2)
    accepting = frozenset(q for q in range(n) if rng.random() < 0.4)
    return NBW(tuple(tracks), frozenset(), n, initial, accepting, tuple(delta))


def lasso(rng, tracks, max_prefix: int = 3, max_cycle: int = 3) -> LassoWord:
    letters = 1 << len(tracks)
    pre = tuple(rng.randrange(letters) for _ in range(rng.randint(0, max_prefix)))
    cyc = tuple(rng.randrange(letters) for _ in range(rng.randint(1, max_cycle)))
    return LassoWord(tuple(tracks), pre, cyc)
