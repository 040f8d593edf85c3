"""Direct semantic evaluators over ultimately periodic models.

Time quantifiers are evaluated exactly by searching a finite window whose
length depends on the nesting depth of time quantifiers below the binder,
the largest time value already fixed, and the joint stem and period of all
traces that can be in scope (see `time_window`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import lcm
from typing import Callable, Mapping, Sequence

from .syntax import (
    CTRACE,
    EXISTS,
    NAT,
    PROP,
    SET,
    TIME,
    TRACE,
    And,
    Const,
    Eq,
    Formula,
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
    Succ,
    Until,
    children,
    free_vars,
    match_s1s_leq,
    props_by_trace,
    split_prefix,
)
from .traces import (
    Assignment,
    TraceSet,
    UPSet,
    UPTrace,
    combine,
    constant,
    enumerate_up_sets,
    enumerate_up_traces,
)


class EvalError(RuntimeError):
    pass


class HorizonError(EvalError):
    """The exact time window would exceed EvalOptions.max_horizon."""


@dataclass(frozen=True)
class EvalOptions:
    mode: str = "bounded"  # bounded | exact
    max_horizon: int = 10_000
    universe_prefix: int = 2
    universe_period: int = 2
    allow_unconstrained: bool = True
    trace_universe: tuple[UPTrace, ...] | None = None

    def __post_init__(self):
        if self.mode not in ("bounded", "exact"):
            raise ValueError(f"unknown evaluation mode {self.mode!r}")


DEFAULT_OPTIONS = EvalOptions()


def time_rank(f: Formula) -> int:
    """Nesting depth of first-order position quantifiers."""
    own = 1 if isinstance(f, Quant) and f.sort in (TIME, NAT) else 0
    kids = children(f)
    return own + (max(time_rank(k) for k in kids) if kids else 0)


def time_window(start: int, period: int, rank: int) -> int:
    """Positions [0, window) suffice for a position quantifier of the given rank.

    `start` bounds the stem of every trace and exceeds every time value in
    scope. Beyond `start` all structures repeat with `period`, and positions
    that far apart with the same residue cannot be told apart by formulas
    with fewer than `rank` position quantifiers.
    """
    return start + (2 ** (rank - 1) + 1) * period


class _Engine:
    """Compiles a formula to closures over a single environment dict."""

    def __init__(self, model: Sequence[UPTrace], opts: EvalOptions, stem: int, period: int, model_set: TraceSet | None):
        self.model = list(dict.fromkeys(model))
        self.model_set = model_set
        self.opts = opts
        self.stem = stem
        self.period = period
        self._universes: dict = {}

    def universe(self, props: frozenset) -> list[UPTrace]:
        if self.opts.trace_universe is not None:
            return list(self.opts.trace_universe)
        u = self._universes.get(props)
        if u is None:
            u = enumerate_up_traces(props, self.opts.universe_prefix, self.opts.universe_period)
            self._universes[props] = u
        return u

    def set_universe(self) -> list[UPSet]:
        u = self._universes.get("sets")
        if u is None:
            u = enumerate_up_sets(self.opts.universe_prefix, self.opts.universe_period)
            self._universes["sets"] = u
        return u

    def compile(self, f: Formula) -> Callable[[dict], bool]:
        if isinstance(f, Pred):
            p, tr, ti = f.prop, f.trace, f.time
            return lambda env: p in env[tr][env[ti]]
        if isinstance(f, Less):
            a, b = f.left, f.right
            return lambda env: env[a] < env[b]
        if isinstance(f, Eq):
            a, b = f.left, f.right
            return lambda env: env[a] == env[b]
        if isinstance(f, Succ):
            a, b = f.left, f.right
            return lambda env: env[a] + 1 == env[b]
        if isinstance(f, Member):
            x, i = f.set_var, f.pos
            return lambda env: env[x][env[i]]
        if isinstance(f, Const):
            v = f.value
            return lambda env: v
        if isinstance(f, Not):
            g = self.compile(f.arg)
            return lambda env: not g(env)
        if isinstance(f, And):
            g, h = self.compile(f.left), self.compile(f.right)
            return lambda env: g(env) and h(env)
        if isinstance(f, Or):
            g, h = self.compile(f.left), self.compile(f.right)
            return lambda env: g(env) or h(env)
        if isinstance(f, Implies):
            g, h = self.compile(f.left), self.compile(f.right)
            return lambda env: (not g(env)) or h(env)
        if isinstance(f, Iff):
            g, h = self.compile(f.left), self.compile(f.right)
            return lambda env: g(env) == h(env)
        if isinstance(f, Quant):
            return self.quantifier(f)
        raise EvalError(f"cannot evaluate node {type(f).__name__} here")

    def quantifier(self, f: Quant) -> Callable[[dict], bool]:
        if f.sort == SET:
            leq = match_s1s_leq(f)
            if leq is not None:
                a, b = leq
                return lambda env: env[a] <= env[b]
        tr, ti = free_vars(f)
        free = tuple(sorted(tr | ti))
        free_times = tuple(sorted(ti))
        btr, bti = free_vars(f.body)
        vacuous = f.var not in (btr | bti)
        body = self.compile(f.body)
        is_exists = f.kind == EXISTS
        var = f.var

        if f.sort in (TRACE,) and self.opts.mode == "exact" and not vacuous:
            return self._delegate(f, free)

        if vacuous:
            # every domain is nonempty except possibly the model
            if f.sort == CTRACE and not self.model:
                return lambda env: not is_exists
            return body

        if f.sort == CTRACE:
            domain = lambda env: self.model
        elif f.sort == TRACE:
            if not self.opts.allow_unconstrained:
                raise EvalError("unconstrained trace quantifier refused by options")
            used = frozenset(props_by_trace(f.body).get(var, ()))
            univ = self.universe(used)
            domain = lambda env: univ
        elif f.sort == SET:
            sets = self.set_universe()
            domain = lambda env: sets
        elif f.sort in (TIME, NAT):
            rank = time_rank(f)
            stem, period, cap = self.stem, self.period, self.opts.max_horizon

            def domain(env):
                start = max([stem] + [env[t] + 1 for t in free_times])
                n = time_window(start, period, rank)
                if n > cap:
                    raise HorizonError(f"time window {n} exceeds max_horizon {cap}")
                return range(n)

        else:
            raise EvalError(f"quantifier sort {f.sort!r} not supported by this evaluator")

        memo: dict = {}

        def run(env):
            key = tuple(env[v] for v in free)
            hit = memo.get(key)
            if hit is not None:
                return hit
            old = env.get(var, _MISSING)
            result = not is_exists
            try:
                for v in domain(env):
                    env[var] = v
                    if body(env) == is_exists:
                        result = is_exists
                        break
            finally:
                if old is _MISSING:
                    env.pop(var, None)
                else:
                    env[var] = old
            memo[key] = result
            return result

        return run

    def _delegate(self, f: Quant, free: tuple[str, ...]):
        from .decide import model_check

        if self.model_set is None:
            raise EvalError("exact mode needs a TraceSet model")
        memo: dict = {}
        _, ti = free_vars(f)

        def run(env):
            key = tuple(env[v] for v in free)
            if key not in memo:
                asg = Assignment(
                    {v: env[v] for v in free if v not in ti},
                    {v: env[v] for v in free if v in ti},
                )
                memo[key] = model_check(self.model_set, f, asg)
            return memo[key]

        return run


_MISSING = object()


def _uses_sort(f: Formula, sort: str) -> bool:
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Quant) and g.sort == sort:
            return True
        stack.extend(children(g))
    return False


def eval_hyper(
    model: TraceSet, asg: Assignment | None, f: Formula, opts: EvalOptions = DEFAULT_OPTIONS
) -> bool:
    """Truth of a hypertrace formula in a model under an assignment."""
    asg = asg or Assignment()
    tr, ti = free_vars(f)
    missing = (tr - set(asg.traces)) | (ti - set(asg.times))
    if missing:
        raise EvalError(f"unbound variables {sorted(missing)}")
    traces = list(model.traces) + list(asg.traces.values())
    stem = max([t.stem_length for t in traces] + [0])
    period = lcm(*[t.period_length for t in traces] + [1])
    if opts.mode == "bounded" and _uses_sort(f, TRACE):
        if opts.trace_universe is not None:
            stem = max([stem] + [t.stem_length for t in opts.trace_universe])
            period = lcm(period, *[t.period_length for t in opts.trace_universe])
        else:
            stem = max(stem, opts.universe_prefix)
            period = lcm(period, *range(1, opts.universe_period + 1))
    eng = _Engine(model.traces, opts, stem, period, model)
    env: dict = dict(asg.traces)
    env.update(asg.times)
    return eng.compile(f)(env)


def eval_s1s(
    f: Formula,
    sets: Mapping[str, UPSet] | None = None,
    positions: Mapping[str, int] | None = None,
    opts: EvalOptions = DEFAULT_OPTIONS,
) -> bool:
    """Bounded S1S evaluator.

    First-order quantifiers are exact (windowed as in eval_hyper);
    second-order quantifiers enumerate UP sets within the option bounds,
    except that the expansion of i <= j is recognised and decided directly.
    """
    sets = dict(sets or {})
    positions = dict(positions or {})
    so, fo = free_vars(f)
    missing = (so - set(sets)) | (fo - set(positions))
    if missing:
        raise EvalError(f"unbound variables {sorted(missing)}")
    vals = list(sets.values())
    stem = max([s.stem_length for s in vals] + [0])
    period = lcm(*[s.period_length for s in vals] + [1])
    if _uses_sort(f, SET):
        stem = max(stem, opts.universe_prefix)
        period = lcm(period, *range(1, opts.universe_period + 1))
    eng = _Engine((), opts, stem, period, None)
    env: dict = dict(sets)
    env.update(positions)
    return eng.compile(f)(env)


# ---------------------------------------------------------------- LTL on lassos


def _ltl_table(trace: UPTrace, f: Formula) -> list[bool]:
    n = trace.stem_length + trace.period_length
    stem = trace.stem_length

    def nxt(k):
        return k + 1 if k + 1 < n else stem

    def go(g: Formula) -> list[bool]:
        if isinstance(g, Prop):
            key = g.key
            return [key in trace[k] for k in range(n)]
        if isinstance(g, Const):
            return [g.value] * n
        if isinstance(g, Not):
            return [not x for x in go(g.arg)]
        if isinstance(g, And):
            a, b = go(g.left), go(g.right)
            return [x and y for x, y in zip(a, b)]
        if isinstance(g, Or):
            a, b = go(g.left), go(g.right)
            return [x or y for x, y in zip(a, b)]
        if isinstance(g, Implies):
            a, b = go(g.left), go(g.right)
            return [(not x) or y for x, y in zip(a, b)]
        if isinstance(g, Iff):
            a, b = go(g.left), go(g.right)
            return [x == y for x, y in zip(a, b)]
        if isinstance(g, Next):
            a = go(g.arg)
            return [a[nxt(k)] for k in range(n)]
        if isinstance(g, Until):
            a, b = go(g.left), go(g.right)
            out = list(b)
            # least fixpoint; two backward sweeps settle the cycle
            changed = True
            while changed:
                changed = False
                for k in reversed(range(n)):
                    v = b[k] or (a[k] and out[nxt(k)])
                    if v != out[k]:
                        out[k] = v
                        changed = True
            return out
        raise EvalError(f"not an LTL node: {type(g).__name__}")

    return go(f)


def _fold(trace: UPTrace, i: int) -> int:
    if i < trace.stem_length:
        return i
    return trace.stem_length + (i - trace.stem_length) % trace.period_length


def eval_ltl_lasso(trace: UPTrace, f: Formula, at: int = 0) -> bool:
    """Exact LTL satisfaction of the suffix of `trace` starting at `at`."""
    return _ltl_table(trace, f)[_fold(trace, at)]


# ---------------------------------------------------------------- HyperQPTL


def flattened_name(prop: str, trace_var: str) -> str:
    return f"{prop}[{trace_var}]"


def flatten_assignment(traces: Mapping[str, UPTrace], props: Mapping[str, UPTrace] | None = None) -> UPTrace:
    """One trace over indexed propositions a[pi] (plus quantified props q)."""
    parts: dict[str, UPTrace] = {}
    ren: dict[str, dict[str, str]] = {}
    for var, t in traces.items():
        key = ("t", var)
        parts[key] = t
        ren[key] = {a: flattened_name(a, var) for a in t.props()}
    for q, t in (props or {}).items():
        key = ("q", q)
        parts[key] = t.restrict([q])
        ren[key] = {}
    return combine(parts, ren) if parts else constant()


def eval_hqptl(
    traces: Mapping[str, UPTrace] | None,
    model: TraceSet,
    i: int,
    f: Formula,
    opts: EvalOptions = DEFAULT_OPTIONS,
    props: Mapping[str, UPTrace] | None = None,
) -> bool:
    """HyperQPTL satisfaction at time i.

    Trace quantifiers range over the model. Propositional quantifiers range
    over {q}-traces from the bounded universe, or are decided exactly through
    the translation into hypertrace logic in exact mode.
    """
    traces = dict(traces or {})
    props = dict(props or {})
    if opts.mode == "exact" and any(isinstance(g, Quant) and g.sort == PROP for g in _quants(f)):
        from .decide import model_check
        from .transforms import tr_hqptl_to_hyper

        if traces or props or i != 0:
            raise EvalError("exact HyperQPTL evaluation supports sentences at time 0 only")
        return model_check(model, tr_hqptl_to_hyper(f))
    prefix, body = split_prefix(f)
    model_traces = list(dict.fromkeys(model.traces))
    table_cache: dict = {}

    def go(k: int) -> bool:
        if k == len(prefix):
            flat = flatten_assignment(traces, props)
            key = flat
            if key not in table_cache:
                table_cache[key] = _ltl_table(flat, body)
            return table_cache[key][_fold(flat, i)]
        e = prefix[k]
        if e.sort == TRACE:
            domain, store = model_traces, traces
        elif e.sort == PROP:
            domain = enumerate_up_traces([e.var], opts.universe_prefix, opts.universe_period)
            store = props
        else:
            raise EvalError(f"unexpected quantifier sort {e.sort!r} in HyperQPTL")
        want = e.kind == EXISTS
        for v in domain:
            store[e.var] = v
            if go(k + 1) == want:
                del store[e.var]
                return want
        store.pop(e.var, None)
        return not want

    return go(0)


def _quants(f: Formula):
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Quant):
            yield g
        stack.extend(children(g))
