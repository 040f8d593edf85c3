"""Ultimately periodic traces, support sets, trace-set models and assignments."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import lcm
from typing import Iterable, Iterator, Mapping, Sequence

from .syntax import ParseError, TokenStream, parse_header_list

Valuation = frozenset  # set of true propositions

EMPTY = frozenset()


def _canon(prefix: tuple, period: tuple) -> tuple[tuple, tuple]:
    """Minimal (prefix, period) denoting the same infinite word."""
    if not period:
        raise ValueError("period must be nonempty")
    n = len(period)
    for d in range(1, n + 1):
        if n % d == 0 and period == period[:d] * (n // d):
            period = period[:d]
            break
    # fold: u·a·(v·a)^ω == u·(a·v)^ω
    while prefix and prefix[-1] == period[-1]:
        prefix = prefix[:-1]
        period = period[-1:] + period[:-1]
    return prefix, period


def _at(prefix: tuple, period: tuple, i: int):
    if i < len(prefix):
        return prefix[i]
    return period[(i - len(prefix)) % len(period)]


@dataclass(frozen=True)
class UPTrace:
    """The word prefix·period^ω of valuations, kept canonical."""

    prefix: tuple[frozenset, ...]
    period: tuple[frozenset, ...]

    def __post_init__(self):
        pre = tuple(frozenset(v) for v in self.prefix)
        per = tuple(frozenset(v) for v in self.period)
        pre, per = _canon(pre, per)
        object.__setattr__(self, "prefix", pre)
        object.__setattr__(self, "period", per)

    def __getitem__(self, i: int) -> frozenset:
        return _at(self.prefix, self.period, i)

    @property
    def stem_length(self) -> int:
        return len(self.prefix)

    @property
    def period_length(self) -> int:
        return len(self.period)

    def props(self) -> frozenset:
        return frozenset().union(*self.prefix, *self.period)

    def restrict(self, props: Iterable[str]) -> "UPTrace":
        keep = frozenset(props)
        return UPTrace(tuple(v & keep for v in self.prefix), tuple(v & keep for v in self.period))

    def rename(self, mapping: Mapping[str, str]) -> "UPTrace":
        def f(v):
            return frozenset(mapping.get(a, a) for a in v)

        return UPTrace(tuple(map(f, self.prefix)), tuple(map(f, self.period)))

    def unroll(self, n: int) -> list[frozenset]:
        return [self[i] for i in range(n)]

    def __str__(self) -> str:
        return render_word(self)


def value_at(trace: UPTrace, index: int) -> frozenset:
    return trace[index]


def canonicalize(trace: UPTrace) -> UPTrace:
    # construction already canonicalizes; kept as the public entry point
    return UPTrace(trace.prefix, trace.period)


def up(prefix: Iterable[Iterable[str]], period: Iterable[Iterable[str]]) -> UPTrace:
    return UPTrace(tuple(frozenset(v) for v in prefix), tuple(frozenset(v) for v in period))


def constant(valuation: Iterable[str] = ()) -> UPTrace:
    return UPTrace((), (frozenset(valuation),))


def joint_bound(*traces) -> int:
    """L + lcm of periods: two UP words agreeing up to this length agree forever."""
    if not traces:
        return 1
    return max(t.stem_length for t in traces) + lcm(*(t.period_length for t in traces))


def agree_on(t1: UPTrace, t2: UPTrace, props: Iterable[str]) -> bool:
    ys = frozenset(props)
    return all(t1[i] & ys == t2[i] & ys for i in range(joint_bound(t1, t2)))


@dataclass(frozen=True)
class UPSet:
    """Ultimately periodic subset of the naturals as a bit word."""

    prefix: tuple[bool, ...]
    period: tuple[bool, ...]

    def __post_init__(self):
        pre, per = _canon(tuple(map(bool, self.prefix)), tuple(map(bool, self.period)))
        object.__setattr__(self, "prefix", pre)
        object.__setattr__(self, "period", per)

    def __contains__(self, i: int) -> bool:
        return _at(self.prefix, self.period, i)

    def __getitem__(self, i: int) -> bool:
        return _at(self.prefix, self.period, i)

    @property
    def stem_length(self) -> int:
        return len(self.prefix)

    @property
    def period_length(self) -> int:
        return len(self.period)

    @property
    def is_empty(self) -> bool:
        return not any(self.prefix) and not any(self.period)

    @property
    def is_singleton(self) -> bool:
        return not any(self.period) and sum(self.prefix) == 1

    def elements_below(self, n: int) -> list[int]:
        return [i for i in range(n) if self[i]]

    @classmethod
    def from_elements(cls, elems: Iterable[int]) -> "UPSet":
        """Finite set."""
        es = set(elems)
        n = max(es) + 1 if es else 0
        return cls(tuple(i in es for i in range(n)), (False,))

    @classmethod
    def singleton(cls, i: int) -> "UPSet":
        return cls.from_elements([i])

    def __str__(self) -> str:
        bits = lambda bs: "".join("1" if b else "0" for b in bs)
        return f"{bits(self.prefix)}({bits(self.period)})^w"


def support_set(trace: UPTrace, prop: str) -> UPSet:
    return UPSet(tuple(prop in v for v in trace.prefix), tuple(prop in v for v in trace.period))


def from_support_sets(m: Mapping[str, UPSet]) -> UPTrace:
    """The unique trace whose support for each key is m[key]."""
    if not m:
        return constant()
    sets = list(m.items())
    n = max(s.stem_length for _, s in sets)
    p = lcm(*(s.period_length for _, s in sets))
    word = [frozenset(a for a, s in sets if s[i]) for i in range(n + p)]
    return UPTrace(tuple(word[:n]), tuple(word[n:]))


def combine(parts: Mapping[str, UPTrace], rename: Mapping[str, Mapping[str, str]] | None = None) -> UPTrace:
    """Pointwise union of several traces, optionally renaming propositions."""
    if not parts:
        return constant()
    ts = list(parts.items())
    n = max(t.stem_length for _, t in ts)
    p = lcm(*(t.period_length for _, t in ts))
    word = []
    for i in range(n + p):
        v = set()
        for name, t in ts:
            r = rename.get(name, {}) if rename else {}
            v |= {r.get(a, a) for a in t[i]}
        word.append(frozenset(v))
    return UPTrace(tuple(word[:n]), tuple(word[n:]))


def enumerate_words(letters: Sequence, max_prefix: int, max_period: int) -> list[tuple[tuple, tuple]]:
    """All canonical (prefix, period) pairs within the bounds, deduplicated."""
    seen = set()
    out = []
    for plen in range(max_prefix + 1):
        for qlen in range(1, max_period + 1):
            for pre in itertools.product(letters, repeat=plen):
                for per in itertools.product(letters, repeat=qlen):
                    c = _canon(pre, per)
                    if c not in seen:
                        seen.add(c)
                        out.append(c)
    return out


def enumerate_up_traces(props: Iterable[str], max_prefix: int, max_period: int) -> list[UPTrace]:
    ps = sorted(set(props))
    letters = [frozenset(c) for r in range(len(ps) + 1) for c in itertools.combinations(ps, r)]
    return [UPTrace(a, b) for a, b in enumerate_words(letters, max_prefix, max_period)]


def enumerate_up_sets(max_prefix: int, max_period: int) -> list[UPSet]:
    return [UPSet(a, b) for a, b in enumerate_words((False, True), max_prefix, max_period)]


# ---------------------------------------------------------------- models


@dataclass(frozen=True)
class TraceSet:
    """A finite model: named UP traces over a shared alphabet."""

    props: tuple[str, ...]
    names: tuple[str, ...]
    traces: tuple[UPTrace, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("trace names must be unique")
        if len(self.names) != len(self.traces):
            raise ValueError("names and traces differ in length")
        alphabet = set(self.props)
        for n, t in zip(self.names, self.traces):
            extra = t.props() - alphabet
            if extra:
                raise ValueError(f"trace {n!r} uses undeclared propositions {sorted(extra)}")

    @classmethod
    def of(cls, props: Iterable[str], traces: Iterable[UPTrace] | Mapping[str, UPTrace]) -> "TraceSet":
        if isinstance(traces, Mapping):
            items = list(traces.items())
        else:
            items = [(f"t{k}", t) for k, t in enumerate(traces)]
        return cls(tuple(props), tuple(n for n, _ in items), tuple(t for _, t in items))

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self) -> Iterator[UPTrace]:
        return iter(self.traces)

    def items(self):
        return zip(self.names, self.traces)

    def __getitem__(self, name: str) -> UPTrace:
        return self.traces[self.names.index(name)]

    def distinct(self) -> list[UPTrace]:
        return list(dict.fromkeys(self.traces))

    def subset(self, keep: Iterable[str]) -> "TraceSet":
        ks = set(keep)
        pairs = [(n, t) for n, t in self.items() if n in ks]
        return TraceSet(self.props, tuple(n for n, _ in pairs), tuple(t for _, t in pairs))

    def period_lcm(self) -> int:
        return lcm(*(t.period_length for t in self.traces)) if self.traces else 1

    def max_prefix(self) -> int:
        return max((t.stem_length for t in self.traces), default=0)


@dataclass
class Assignment:
    """Trace-variable and time-variable valuations."""

    traces: dict[str, UPTrace] = field(default_factory=dict)
    times: dict[str, int] = field(default_factory=dict)

    def with_trace(self, var: str, t: UPTrace) -> "Assignment":
        d = dict(self.traces)
        d[var] = t
        return Assignment(d, self.times)

    def with_time(self, var: str, i: int) -> "Assignment":
        d = dict(self.times)
        d[var] = i
        return Assignment(self.traces, d)

    def key(self) -> tuple:
        return (tuple(sorted(self.traces.items(), key=lambda kv: kv[0])), tuple(sorted(self.times.items())))


# ---------------------------------------------------------------- text format


def render_valuation(v: Iterable[str]) -> str:
    return "{" + ",".join(sorted(v)) + "}"


def render_word(t: UPTrace) -> str:
    pre = " ".join(render_valuation(v) for v in t.prefix)
    per = " ".join(render_valuation(v) for v in t.period)
    return f"[ {pre + ' ' if pre else ''}| {per} ]"


def render_traceset(ts: TraceSet) -> str:
    lines = [f"props: {', '.join(ts.props)};"]
    for n, t in ts.items():
        lines.append(f"trace {n} = {render_word(t)};")
    return "\n".join(lines) + "\n"


def _parse_valuation(s: TokenStream) -> frozenset:
    s.expect("{")
    names = []
    if not s.at("}"):
        names.append(s.ident())
        while s.accept(","):
            names.append(s.ident())
    s.expect("}")
    return frozenset(names)


def parse_word(s: TokenStream) -> UPTrace:
    s.expect("[")
    prefix = []
    while s.at("{"):
        prefix.append(_parse_valuation(s))
    s.expect("|")
    period = []
    while s.at("{"):
        period.append(_parse_valuation(s))
    if not period:
        s.error("period must contain at least one valuation")
    s.expect("]")
    return UPTrace(tuple(prefix), tuple(period))


def parse_traceset(text: str) -> TraceSet:
    s = TokenStream(text)
    props = parse_header_list(s, "props")
    if props is None:
        s.error("expected 'props:' header")
    alphabet = set(props)
    names, traces = [], []
    while s.peek().kind != "eof":
        kw = s.peek()
        if s.ident() != "trace":
            s.error("expected 'trace'", tok=kw)
        nt = s.peek()
        name = s.ident()
        if name in names:
            s.error(f"duplicate trace name {name!r}", tok=nt)
        s.expect("=")
        wt = s.peek()
        t = parse_word(s)
        extra = t.props() - alphabet
        if extra:
            raise ParseError(f"unknown proposition {sorted(extra)[0]!r}", "unknown-prop", wt.pos, text)
        s.expect(";")
        names.append(name)
        traces.append(t)
    return TraceSet(tuple(props), tuple(names), tuple(traces))
