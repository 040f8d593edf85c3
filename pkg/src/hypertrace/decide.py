"""Fragment classification, satisfiability routes, exact model checking and
the brute-force equisatisfiability oracle.

Satisfiability is over nonempty trace sets throughout.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator, Mapping

from .automata import ResourceError, from_s1s, is_empty
from .eval import EvalOptions, eval_hyper
from .syntax import (
    ATOMS,
    CTRACE,
    EXISTS,
    TIME,
    TRACE,
    Const,
    Formula,
    Fresh,
    Not,
    Quant,
    QuantifierPrefix,
    all_vars,
    children,
    conj,
    disj,
    free_vars,
    props_of,
    rebuild,
    split_prefix,
    substitute,
    to_prenex,
)
from .traces import (
    Assignment,
    TraceSet,
    UPSet,
    UPTrace,
    constant,
    enumerate_up_traces,
    from_support_sets,
    support_set,
)
from .transforms import insert_exists_hat, relax_existentials, to_s1s_with_names, to_unconstrained

UNCONSTRAINED_ONLY = "UnconstrainedOnly"
EXISTS_FORALL = "ExistsForallConstrained"
TRACE_PREFIXED = "TracePrefixedDecidable"
TIME_PREFIXED = "TimePrefixedDecidable"
UNDECIDABLE = "KnownUndecidable"
UNKNOWN = "Unknown"

DECIDABLE = (UNCONSTRAINED_ONLY, EXISTS_FORALL, TRACE_PREFIXED, TIME_PREFIXED)

# one letter per prefix entry: n/N time, t/T unconstrained trace,
# h/H constrained trace (lower case = existential)
_PATTERNS = (
    (UNCONSTRAINED_ONLY, re.compile(r"[nNtT]*")),
    (EXISTS_FORALL, re.compile(r"[nt]*h+H*[nNtT]*")),
    (TRACE_PREFIXED, re.compile(r"t*H+[tT]*[nN]*")),
    (TIME_PREFIXED, re.compile(r"n*H+[nNtT]*")),
)
_MINSKY = "nNnnNHhht"


@dataclass(frozen=True)
class FragmentClass:
    label: str
    reason: str | None = None
    prefix: str = ""

    @property
    def decidable(self) -> bool:
        return self.label in DECIDABLE

    def to_json(self) -> dict:
        out = {"class": self.label}
        if self.reason is not None:
            out["reason"] = self.reason
        out["prefix"] = self.prefix
        return out


def prefix_code(prefix: QuantifierPrefix) -> str:
    out = []
    for e in prefix:
        if e.is_time:
            c = "n"
        elif e.constrained:
            c = "h"
        else:
            c = "t"
        out.append(c if e.kind == EXISTS else c.upper())
    return "".join(out)


def _subsequence(needle: str, hay: str) -> bool:
    it = iter(hay)
    return all(c in it for c in needle)


def classify_code(code: str) -> FragmentClass:
    for label, pat in _PATTERNS:
        if pat.fullmatch(code):
            return FragmentClass(label, prefix=code)
    is_time = [c in "nN" for c in code]
    trace_first = not any(t and not n for t, n in zip(is_time, is_time[1:]))
    time_first = not any(n and not t for t, n in zip(is_time, is_time[1:]))
    if trace_first and any(is_time) and _subsequence("HHh", "".join(c for c in code if c in "hH")):
        return FragmentClass(UNDECIDABLE, "TracePrefix_AAE", code)
    if time_first and _subsequence(_MINSKY, code):
        return FragmentClass(UNDECIDABLE, "TimePrefix_Minsky", code)
    return FragmentClass(UNKNOWN, prefix=code)


def classify(f: Formula) -> FragmentClass:
    prefix, _ = split_prefix(to_prenex(f))
    return classify_code(prefix_code(prefix))


# ---------------------------------------------------------------- results


@dataclass(frozen=True)
class SatResult:
    verdict: str  # sat | unsat | unknown
    witness: TraceSet | None = None
    reason: str | None = None
    fragment: FragmentClass | None = None

    @property
    def is_sat(self) -> bool:
        return self.verdict == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.verdict == "unsat"

    def to_json(self) -> dict:
        out: dict = {"verdict": self.verdict}
        if self.reason is not None:
            out["reason"] = self.reason
        if self.fragment is not None:
            out["fragment"] = self.fragment.to_json()
        return out


def Sat(witness: TraceSet, fragment=None) -> SatResult:
    return SatResult("sat", witness, None, fragment)


def Unsat(reason: str | None = None, fragment=None) -> SatResult:
    return SatResult("unsat", None, reason, fragment)


def Unknown(reason: str, fragment=None) -> SatResult:
    return SatResult("unknown", None, reason, fragment)


# ---------------------------------------------------------------- satisfiability


def check_sat(f: Formula) -> SatResult:
    """Decide satisfiability (over nonempty trace sets) where a route exists."""
    tr, ti = free_vars(f)
    if tr or ti:
        raise ValueError(f"formula has free variables {sorted(tr | ti)}")
    cls = classify(f)
    try:
        if cls.decidable:
            return _decide(f, cls)
        relaxed = relax_existentials(f)
        rcls = classify(relaxed)
        if rcls.decidable:
            r = _decide(relaxed, rcls)
            if r.is_unsat:
                return Unsat("relaxation unsat", cls)
        return Unknown(cls.reason or cls.label, cls)
    except ResourceError:
        return Unknown("resource", cls)


def _decide(f: Formula, cls: FragmentClass) -> SatResult:
    props = props_of(f)
    g = to_prenex(f)
    prefix, _ = split_prefix(g)
    if cls.label != UNCONSTRAINED_ONLY:
        code = prefix_code(prefix)
        if "h" not in code:
            g = insert_exists_hat(g)
        witness_vars = [e.var for e in split_prefix(g)[0] if e.constrained and e.kind == EXISTS]
        u = to_unconstrained(g)
    else:
        u = g
        witness_vars = None
    # leading existentials become free tracks of the automaton
    lead = []
    body = u
    while isinstance(body, Quant) and body.kind == EXISTS:
        lead.append(body)
        body = body.body
    if witness_vars is None:
        witness_vars = [q.var for q in lead if q.sort == TRACE]
    s1s, names = to_s1s_with_names(body, props)
    a = from_s1s(s1s)
    w = is_empty(a)
    if w is None:
        return Unsat(fragment=cls)
    traces = []
    for v in witness_vars:
        sets = {}
        for x in props:
            name = names.get((v, x))
            sets[x] = w.track(name) if name in a.tracks else UPSet((), (False,))
        traces.append(from_support_sets(sets))
    if not traces:
        traces = [constant()]
    model = TraceSet.of(props, dict.fromkeys(traces).keys())
    if not model_check(model, f):  # pragma: no cover - soundness guard
        raise AssertionError("satisfiability witness failed model checking")
    return Sat(model, cls)


# ---------------------------------------------------------------- model checking


def expand_constrained(f: Formula, model: TraceSet, names: list[str]) -> Formula:
    """Replace constrained quantifiers by finite connectives over model traces.

    The k-th distinct model trace is referred to by the free trace variable
    names[k].
    """
    if isinstance(f, Quant) and f.sort == CTRACE:
        if not names:
            return Const(f.kind != EXISTS)
        parts = [expand_constrained(substitute(f.body, {f.var: n}), model, names) for n in names]
        return disj(parts) if f.kind == EXISTS else conj(parts)
    if isinstance(f, ATOMS):
        return f
    return rebuild(f, tuple(expand_constrained(k, model, names) for k in children(f)))


def model_check(model: TraceSet, f: Formula, asg: Assignment | None = None) -> bool:
    """Exact truth of f in the model via the automata route."""
    asg = asg or Assignment()
    tr, ti = free_vars(f)
    missing = (tr - set(asg.traces)) | (ti - set(asg.times))
    if missing:
        raise ValueError(f"free variables {sorted(missing)} are not assigned")
    # propositions outside the model alphabet are false on every model trace
    distinct = model.distinct()
    fresh = Fresh(all_vars(f))
    const_names = [fresh(f"m{k}") for k in range(len(distinct))]
    g = expand_constrained(f, model, const_names)
    props = props_of(f)
    s1s, names = to_s1s_with_names(g, props)
    fixed: dict[str, UPTrace] = dict(zip(const_names, distinct))
    fixed.update({v: t for v, t in asg.traces.items() if v in tr})
    constants: dict[str, UPSet] = {}
    for (v, x), n in names.items():
        constants[n] = support_set(fixed[v], x)
    for v, i in asg.times.items():
        if v in ti:
            constants[v] = UPSet.singleton(i)
    a = from_s1s(s1s, constants=constants)
    if a.tracks:  # pragma: no cover - every free variable is a constant
        raise AssertionError(f"unexpected free tracks {a.tracks}")
    return is_empty(a) is not None


# ---------------------------------------------------------------- bounded oracle


@dataclass(frozen=True)
class TraceUniverse:
    props: tuple[str, ...]
    max_prefix: int = 1
    max_period: int = 2

    def traces(self) -> list[UPTrace]:
        return enumerate_up_traces(self.props, self.max_prefix, self.max_period)

    def options(self, mode: str = "bounded") -> EvalOptions:
        return EvalOptions(mode=mode, universe_prefix=self.max_prefix, universe_period=self.max_period)


@dataclass(frozen=True)
class OracleVerdict:
    kind: str  # AgreeSat | AgreeUnsat | Disagree | Inconclusive
    witness: TraceSet | None = None
    which: str | None = None  # which formula the witness satisfies

    def __str__(self) -> str:
        return self.kind


def bounded_models(u: TraceUniverse, max_size: int) -> Iterator[TraceSet]:
    ts = u.traces()
    for k in range(1, max_size + 1):
        for combo in combinations(ts, k):
            yield TraceSet.of(u.props, combo)


def find_model(f: Formula, u: TraceUniverse, max_size: int, opts: EvalOptions | None = None) -> TraceSet | None:
    opts = opts or u.options()
    for m in bounded_models(u, max_size):
        if eval_hyper(m, None, f, opts):
            return m
    return None


def equisat_oracle(
    f: Formula, g: Formula, u: TraceUniverse, max_size: int, opts: EvalOptions | None = None
) -> OracleVerdict:
    """Compare bounded satisfiability of two closed formulas.

    Models are the nonempty subsets of the universe with at most `max_size`
    traces; unconstrained quantifiers range over the same universe.
    """
    mf = find_model(f, u, max_size, opts)
    mg = find_model(g, u, max_size, opts)
    if mf is not None and mg is not None:
        return OracleVerdict("AgreeSat")
    if mf is None and mg is None:
        return OracleVerdict("Inconclusive")
    if mf is not None:
        return OracleVerdict("Disagree", mf, "f")
    return OracleVerdict("Disagree", mg, "g")
