"""Two-counter Minsky machines: simulation, bounded lasso search, the
time-prefixed encoding of non-halting and witness models for it."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .automata import _sccs
from .eval import EvalOptions, eval_hyper
from .syntax import (
    CTRACE,
    EXISTS,
    FORALL,
    TIME,
    TRACE,
    And,
    Const,
    Eq,
    Formula,
    Iff,
    Implies,
    Less,
    Not,
    Or,
    ParseError,
    Pred,
    Quant,
    TokenStream,
    conj,
    disj,
    parse_header_list,
)
from .traces import Assignment, TraceSet, UPTrace

OPS = ("inc", "dec", "isZero")
COUNTERS = (1, 2)
GUESS_PROPS = ("guess", "guessed")
_RESERVED = {"mem1", "mem2", "to1", "to2", *OPS, *GUESS_PROPS}


@dataclass(frozen=True)
class Transition:
    source: str
    counter: int
    op: str
    target: str

    def __str__(self) -> str:
        return f"({self.source}, {self.counter}, {self.op}, {self.target})"


@dataclass(frozen=True)
class MinskyMachine:
    states: tuple[str, ...]
    initial: str
    delta: tuple[Transition, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "delta", tuple(self.delta))
        if len(set(self.states)) != len(self.states):
            raise ValueError("duplicate state names")
        if self.initial not in self.states:
            raise ValueError(f"initial state {self.initial!r} is not declared")
        for t in self.delta:
            if t.source not in self.states or t.target not in self.states:
                raise ValueError(f"transition {t} references an undeclared state")
            if t.counter not in COUNTERS:
                raise ValueError(f"transition {t} names counter {t.counter}; expected 1 or 2")
            if t.op not in OPS:
                raise ValueError(f"transition {t} has unknown operation {t.op!r}")
        names = set(self.states)
        derived = {f"{q}_{s}" for q in self.states for s in ("from", "to")}
        clash = (names & _RESERVED) | (names & derived)
        if clash:
            raise ValueError(f"state names clash with encoding propositions: {sorted(clash)}")

    @property
    def alphabet(self) -> tuple[str, ...]:
        return config_props(self) + transition_props(self) + GUESS_PROPS


@dataclass(frozen=True, order=True)
class Configuration:
    state: str
    counter1: int = 0
    counter2: int = 0

    def __post_init__(self):
        if self.counter1 < 0 or self.counter2 < 0:
            raise ValueError("counters must be nonnegative")

    def counter(self, c: int) -> int:
        return self.counter1 if c == 1 else self.counter2

    def __str__(self) -> str:
        return f"({self.state}, {self.counter1}, {self.counter2})"


def config_props(m: MinskyMachine) -> tuple[str, ...]:
    return tuple(m.states) + ("mem1", "mem2")


def transition_props(m: MinskyMachine) -> tuple[str, ...]:
    out = []
    for q in m.states:
        out += [f"{q}_to", f"{q}_from"]
    return tuple(out) + OPS + ("to1", "to2")


# ---------------------------------------------------------------- simulation


def _apply(op: str, n: int) -> int | None:
    if op == "inc":
        return n + 1
    if op == "dec":
        return n - 1 if n > 0 else None
    return 0 if n == 0 else None


def step(m: MinskyMachine, c: Configuration) -> list[tuple[Transition, Configuration]]:
    """All successors of a configuration, in transition order."""
    out = []
    for t in m.delta:
        if t.source != c.state:
            continue
        n = _apply(t.op, c.counter(t.counter))
        if n is None:
            continue
        c1, c2 = (n, c.counter2) if t.counter == 1 else (c.counter1, n)
        out.append((t, Configuration(t.target, c1, c2)))
    return out


@dataclass(frozen=True)
class Lasso:
    """An eventually cyclic computation; moves[k] leaves configuration k."""

    stem: tuple[Configuration, ...]
    cycle: tuple[Configuration, ...]
    moves: tuple[Transition, ...]

    def __post_init__(self):
        if not self.cycle:
            raise ValueError("lasso cycle must be nonempty")
        if len(self.moves) != len(self.stem) + len(self.cycle):
            raise ValueError("one transition per configuration is required")

    @property
    def configurations(self) -> tuple[Configuration, ...]:
        return self.stem + self.cycle

    def links(self) -> Iterator[tuple[Configuration, Transition, Configuration]]:
        cs = self.configurations
        for k, c in enumerate(cs):
            nxt = cs[k + 1] if k + 1 < len(cs) else self.cycle[0]
            yield c, self.moves[k], nxt

    def verify(self, m: MinskyMachine) -> bool:
        if self.configurations[0] != Configuration(m.initial):
            return False
        return all((t, d) in step(m, c) for c, t, d in self.links())

    def __len__(self) -> int:
        return len(self.stem) + len(self.cycle)


def find_lasso(m: MinskyMachine, counter_cap: int, step_cap: int) -> Lasso | None:
    """Bounded search for an infinite computation from (initial, 0, 0).

    Explores configurations with both counters at most `counter_cap` up to
    `step_cap` steps deep. None means nothing was found within the caps,
    not that the machine halts.
    """
    if counter_cap < 1 or step_cap < 1:
        raise ValueError("caps must be at least 1")
    start = Configuration(m.initial)
    depth = {start: 0}
    parent: dict[Configuration, tuple[Configuration, Transition] | None] = {start: None}
    order = [start]
    succ: dict[Configuration, list[tuple[Transition, Configuration]]] = {}
    queue = deque([start])
    while queue:
        c = queue.popleft()
        moves = [
            (t, d) for t, d in step(m, c) if d.counter1 <= counter_cap and d.counter2 <= counter_cap
        ]
        if depth[c] >= step_cap:
            # keep only edges back into the explored set
            moves = [(t, d) for t, d in moves if d in depth]
        succ[c] = moves
        for t, d in moves:
            if d not in depth:
                depth[d] = depth[c] + 1
                parent[d] = (c, t)
                order.append(d)
                queue.append(d)
    ids = {c: k for k, c in enumerate(order)}
    edges = lambda k: [ids[d] for _, d in succ[order[k]] if d in ids]
    on_cycle = set()
    for comp in _sccs(len(order), edges, [0]):
        if len(comp) > 1 or comp[0] in edges(comp[0]):
            on_cycle.update(comp)
    if not on_cycle:
        return None
    head = order[min(on_cycle)]
    # stem: BFS tree path to head
    stem, stem_moves = [], []
    cur = head
    while parent[cur] is not None:
        prev, t = parent[cur]
        stem.append(prev)
        stem_moves.append(t)
        cur = prev
    stem.reverse()
    stem_moves.reverse()
    # cycle: shortest path from head back to head
    back: dict[Configuration, tuple[Configuration, Transition]] = {}
    queue = deque([head])
    seen = set()
    found = None
    while queue and found is None:
        c = queue.popleft()
        for t, d in succ[c]:
            if d == head:
                found = (c, t)
                break
            if d not in seen and d not in back and d != head:
                seen.add(d)
                back[d] = (c, t)
                queue.append(d)
    last, t_last = found
    cycle, cycle_moves = [last], [t_last]
    while last != head:
        prev, t = back[last]
        cycle.append(prev)
        cycle_moves.append(t)
        last = prev
    cycle.reverse()
    cycle_moves.reverse()
    # cycle now starts at head; moves[k] leaves cycle[k]
    lasso = Lasso(tuple(stem), tuple(cycle), tuple(stem_moves) + tuple(cycle_moves))
    if not lasso.verify(m):  # pragma: no cover - internal consistency guard
        raise AssertionError("lasso failed re-verification")
    return lasso


# ---------------------------------------------------------------- encoding


def _p(prop: str, trace: str, time: str) -> Formula:
    return Pred(prop, trace, time)


def _leq(x: str, y: str) -> Formula:
    return Or(Less(x, y), Eq(x, y))


def exactly_one(atoms: Sequence[Formula]) -> Formula:
    """Disjunction over the atoms of 'this one and none of the others'."""
    atoms = list(atoms)
    return disj(conj([a] + [Not(b) for k2, b in enumerate(atoms) if k2 != k]) for k, a in enumerate(atoms))


def _single_tr(m, pi, i):
    return conj(
        [
            exactly_one([_p(f"{q}_to", pi, i) for q in m.states]),
            exactly_one([_p(f"{q}_from", pi, i) for q in m.states]),
            exactly_one([_p("to1", pi, i), _p("to2", pi, i)]),
            exactly_one([_p(op, pi, i) for op in OPS]),
        ]
    )


def _same_tr(m, pi, i, j):
    parts = [Iff(_p(f"{q}_to", pi, i), _p(f"{q}_to", pi, j)) for q in m.states]
    parts += [Iff(_p(f"{q}_from", pi, i), _p(f"{q}_from", pi, j)) for q in m.states]
    parts += [Iff(_p(f"to{c}", pi, i), _p(f"to{c}", pi, j)) for c in COUNTERS]
    parts += [Iff(_p(op, pi, i), _p(op, pi, j)) for op in OPS]
    return conj(parts)


def _valid_tr(m, pi, i):
    if not m.delta:
        return Const(False)
    return disj(
        conj([_p(f"{t.source}_from", pi, i), _p(f"to{t.counter}", pi, i), _p(t.op, pi, i), _p(f"{t.target}_to", pi, i)])
        for t in m.delta
    )


def _same_state(m, pi, i, j):
    return And(
        conj([Iff(_p(q, pi, i), _p(q, pi, j)) for q in m.states]),
        exactly_one([_p(q, pi, i) for q in m.states]),
    )


def _good_states(m, pi, pi2, i):
    return And(
        disj([Iff(_p(f"{q}_from", pi, i), _p(q, pi, i)) for q in m.states]),
        disj([Iff(_p(f"{q}_to", pi, i), _p(q, pi2, i)) for q in m.states]),
    )


def _stop_multiple_guess(m, pg, i, j):
    return Implies(Or(_p("guess", pg, i), _p("guessed", pg, i)), _p("guessed", pg, j))


def _op(m, pi, c, pi2, pg, i, ip, im):
    if c not in COUNTERS:
        raise ValueError(f"counter must be 1 or 2, got {c!r}")
    mc, mo = f"mem{c}", f"mem{3 - c}"
    fresh_guess = And(Not(_p("guessed", pg, i)), _p("guess", pg, i))
    return conj(
        [
            Iff(_p(mo, pi, i), _p(mo, pi2, i)),
            Implies(_p("isZero", pi, i), And(Not(_p(mc, pi, i)), Not(_p(mc, pi2, i)))),
            Implies(Or(Not(_p("guess", pg, i)), _p("guessed", pg, i)), Iff(_p(mc, pi, i), _p(mc, pi2, i))),
            Implies(
                And(fresh_guess, _p("inc", pi, i)),
                conj([Not(_p(mc, pi, i)), _p(mc, pi2, i), Not(_p(mc, pi2, ip))]),
            ),
            Implies(
                And(fresh_guess, _p("dec", pi, i)),
                conj([_p(mc, pi, i), Not(_p(mc, pi2, i)), _p(mc, pi2, im)]),
            ),
        ]
    )


HELPERS = {
    "singleTr": (_single_tr, 2),
    "sameTr": (_same_tr, 3),
    "validTr": (_valid_tr, 2),
    "sameState": (_same_state, 3),
    "goodStates": (_good_states, 3),
    "stopMultipleGuess": (_stop_multiple_guess, 3),
    "op": (_op, 7),
}


def helper_formula(kind: str, m: MinskyMachine, *args) -> Formula:
    """One of the building blocks of the encoding.

    Arguments are variable names in the order (trace, time) for singleTr
    and validTr, (trace, time, time) for sameTr and sameState,
    (trace, trace, time) for goodStates, (guess trace, time, time) for
    stopMultipleGuess and (trace, counter, trace, guess trace, time,
    next time, previous time) for op.
    """
    if kind not in HELPERS:
        raise ValueError(f"unknown helper {kind!r}; expected one of {sorted(HELPERS)}")
    fn, arity = HELPERS[kind]
    if len(args) != arity:
        raise ValueError(f"{kind} takes {arity} arguments, got {len(args)}")
    return fn(m, *args)


# variable names used by encode
PI, PI2, PIQ, PIG = "pi", "pi'", "pi_q", "pi_g"
I0, I, IP, IM, J = "i0", "i", "i_p", "i_m", "j"


def encode(m: MinskyMachine) -> Formula:
    """Time-prefixed sentence satisfiable iff m has an infinite computation."""
    guard = conj(
        [
            _leq(I0, J),
            _leq(IM, I),
            Less(I, IP),
            Implies(Less(I, J), _leq(IP, J)),
            Implies(Eq(IM, I), Eq(I, I0)),
            Implies(Less(J, I), _leq(J, IM)),
        ]
    )
    q0 = m.initial
    body = conj(
        [
            Implies(_p("mem1", PI, IP), _p("mem1", PI, I)),
            Implies(_p("mem2", PI, IP), _p("mem2", PI, I)),
            _p(q0, PIQ, I),
            Implies(_p(q0, PI, I), And(Not(_p("mem1", PI, I)), Not(_p("mem2", PI, I)))),
            _stop_multiple_guess(m, PIG, I, IP),
            _single_tr(m, PI, I),
            _same_tr(m, PI, I, IP),
            _valid_tr(m, PI, I),
            _same_state(m, PI, I, IP),
            _good_states(m, PI, PI2, I),
            Implies(_p("to1", PI, I), _op(m, PI, 1, PI2, PIG, I, IP, IM)),
            Implies(_p("to2", PI, I), _op(m, PI, 2, PI2, PIG, I, IP, IM)),
        ]
    )
    f: Formula = Implies(guard, body)
    prefix = [
        (EXISTS, TIME, I0),
        (FORALL, TIME, I),
        (EXISTS, TIME, IP),
        (EXISTS, TIME, IM),
        (FORALL, TIME, J),
        (FORALL, CTRACE, PI),
        (EXISTS, CTRACE, PI2),
        (EXISTS, CTRACE, PIQ),
        (EXISTS, TRACE, PIG),
    ]
    for kind, sort, var in reversed(prefix):
        f = Quant(kind, sort, var, f)
    return f


# ---------------------------------------------------------------- witness models


def _trace_for(m: MinskyMachine, c: Configuration, t: Transition, offset: int) -> UPTrace:
    const = frozenset({c.state, f"{t.source}_from", f"{t.target}_to", f"to{t.counter}", t.op})
    n1, n2 = offset + c.counter1, offset + c.counter2
    n = max(n1, n2)
    prefix = []
    for k in range(n):
        v = set(const)
        if k < n1:
            v.add("mem1")
        if k < n2:
            v.add("mem2")
        prefix.append(frozenset(v))
    return UPTrace(tuple(prefix), (const,))


def witness_model(m: MinskyMachine, lasso: Lasso, offset: int = 0) -> TraceSet:
    """One trace per lasso configuration, encoding it and its outgoing move.

    mem_c holds on the first offset + n_c positions. With offset 0 this is
    the plain unary layout; a positive offset leaves room before the start
    time for a decrement to zero.
    """
    if not lasso.verify(m):
        raise ValueError("lasso is not a computation of the machine")
    traces = {}
    for k, (c, t, _) in enumerate(lasso.links()):
        traces[f"c{k}"] = _trace_for(m, c, t, offset)
    return TraceSet.of(m.alphabet, traces)


def _const_props(t: UPTrace, props: Iterable[str], horizon: int) -> set[str] | None:
    """Props from `props` that hold at every position, or None if some prop varies."""
    n = max(horizon, t.stem_length + t.period_length)
    out = set()
    for x in props:
        vals = {x in t[k] for k in range(n)}
        if len(vals) > 1:
            return None
        if vals == {True}:
            out.add(x)
    return out


def _initial_segment(t: UPTrace, prop: str) -> int | None:
    """n if prop holds exactly on positions 0..n-1, else None."""
    if any(prop in v for v in t.period):
        return None
    holds = [prop in v for v in t.prefix]
    n = holds.index(False) if False in holds else len(holds)
    return n if not any(holds[n:]) else None


def decode_trace(m: MinskyMachine, t: UPTrace, offset: int = 0) -> tuple[Configuration, Transition] | None:
    """The configuration and move a well-shaped trace encodes, or None."""
    horizon = t.stem_length + t.period_length
    states = _const_props(t, m.states, horizon)
    trans = _const_props(t, transition_props(m), horizon)
    if states is None or trans is None or len(states) != 1:
        return None
    matches = [
        tr
        for tr in m.delta
        if trans == {f"{tr.source}_from", f"{tr.target}_to", f"to{tr.counter}", tr.op}
    ]
    (q,) = states
    if len(matches) != 1 or matches[0].source != q:
        return None
    n1, n2 = _initial_segment(t, "mem1"), _initial_segment(t, "mem2")
    if n1 is None or n2 is None or n1 < offset or n2 < offset:
        return None
    return Configuration(q, n1 - offset, n2 - offset), matches[0]


def check_shape(m: MinskyMachine, model: TraceSet, offset: int = 0) -> list[str]:
    """Structural problems with a candidate witness model (empty if none).

    Checks the shape required of every trace (one constant state, one
    constant transition from the machine leaving that state, mem supports
    that are initial segments) and that some trace encodes the initial
    configuration.
    """
    problems = []
    initial_seen = False
    for name, t in model.items():
        d = decode_trace(m, t, offset)
        if d is None:
            problems.append(f"trace {name} is not a well-shaped configuration trace")
            continue
        c, _ = d
        if c == Configuration(m.initial):
            initial_seen = True
    if not initial_seen:
        problems.append("no trace encodes the initial configuration")
    return problems


def guess_traces(horizon: int) -> list[UPTrace]:
    """The guess trace family: no guess, or one guess at g < horizon followed by guessed."""
    out = [UPTrace((), (frozenset(),))]
    for g in range(horizon):
        pre = [frozenset()] * g + [frozenset({"guess"})]
        out.append(UPTrace(tuple(pre), (frozenset({"guessed"}),)))
    return out


@dataclass
class HelperReport:
    """Failures per helper name; a helper with no entry passed everywhere."""

    failures: dict[str, list[str]]
    checked: int

    @property
    def ok(self) -> bool:
        return not self.failures

    def failed(self) -> list[str]:
        return sorted(self.failures)


def check_helpers(m: MinskyMachine, model: TraceSet, horizon: int | None = None, start: int = 0) -> HelperReport:
    """Evaluate the per-time obligations of the encoding on a model.

    For every model trace pi and every time i in [start, horizon), with
    i_p = i + 1 and i_m = i - 1 (or i itself at the start time, as the
    guard allows), each helper is evaluated with eval_hyper. The step
    obligation (goodStates, both op conjuncts and stopMultipleGuess) must
    hold for some successor trace of the model and some trace of the guess
    family. `initialTrace` requires a model trace carrying the initial
    state at every checked time.
    """
    if horizon is None:
        top = max((t.stem_length for t in model.traces), default=0)
        horizon = max(top, start) + 3
    opts = EvalOptions(mode="bounded")
    guesses = guess_traces(horizon)
    failures: dict[str, list[str]] = {}
    checked = 0

    def fail(kind, msg):
        failures.setdefault(kind, []).append(msg)

    single = helper_formula("singleTr", m, PI, I)
    same_tr = helper_formula("sameTr", m, PI, I, IP)
    valid = helper_formula("validTr", m, PI, I)
    same_state = helper_formula("sameState", m, PI, I, IP)
    mono = conj([Implies(_p(f"mem{c}", PI, IP), _p(f"mem{c}", PI, I)) for c in COUNTERS])
    init = Implies(_p(m.initial, PI, I), And(Not(_p("mem1", PI, I)), Not(_p("mem2", PI, I))))
    step_f = conj(
        [
            helper_formula("goodStates", m, PI, PI2, I),
            Implies(_p("to1", PI, I), helper_formula("op", m, PI, 1, PI2, PIG, I, IP, IM)),
            Implies(_p("to2", PI, I), helper_formula("op", m, PI, 2, PI2, PIG, I, IP, IM)),
            helper_formula("stopMultipleGuess", m, PIG, I, IP),
        ]
    )
    local = (
        ("singleTr", single),
        ("sameTr", same_tr),
        ("validTr", valid),
        ("sameState", same_state),
        ("memMonotone", mono),
        ("initState", init),
    )
    for i in range(start, horizon):
        im_choices = [i - 1] if i > start else ([start - 1] if start > 0 else []) + [start]
        times = {I: i, IP: i + 1}
        if not any(m.initial in t[i] for t in model.traces):
            fail("initialTrace", f"no trace carries {m.initial} at time {i}")
        for name, t in model.items():
            asg = Assignment({PI: t}, dict(times, **{IM: im_choices[0]}))
            for kind, f in local:
                checked += 1
                if not eval_hyper(model, asg, f, opts):
                    fail(kind, f"{name} at {i}")
            checked += 1
            ok = any(
                eval_hyper(model, Assignment({PI: t, PI2: t2, PIG: g}, dict(times, **{IM: im})), step_f, opts)
                for im in im_choices
                for t2 in model.traces
                for g in guesses
            )
            if not ok:
                fail("op", f"{name} at {i}")
    return HelperReport(failures, checked)


def mutate(model: TraceSet, name: str, prop: str, position: int) -> TraceSet:
    """Toggle one proposition of one trace at one position."""
    t = model[name]
    n = max(t.stem_length, position + 1)
    word = [set(t[k]) for k in range(n)]
    word[position] ^= {prop}
    new = UPTrace(tuple(frozenset(v) for v in word), t.period)
    return TraceSet(model.props, model.names, tuple(new if k == name else old for k, old in model.items()))


def mutations(
    m: MinskyMachine, model: TraceSet, count: int, rng: random.Random, start: int = 0, horizon: int | None = None
) -> list[tuple[tuple[str, str, int], TraceSet]]:
    """Random single-proposition mutations within [start, horizon - 1)."""
    if horizon is None:
        top = max((t.stem_length for t in model.traces), default=0)
        horizon = max(top, start) + 3
    props = config_props(m) + transition_props(m)
    out = []
    for _ in range(count):
        name = rng.choice(model.names)
        prop = rng.choice(props)
        pos = rng.randrange(start, horizon - 1)
        out.append(((name, prop, pos), mutate(model, name, prop, pos)))
    return out


# ---------------------------------------------------------------- machine files


def parse_machine(text: str) -> MinskyMachine:
    """Parse `states: ...; init: q; delta: (q, c, op, q'), ...;`."""
    ts = TokenStream(text)
    states = parse_header_list(ts, "states")
    if states is None:
        ts.error("expected 'states:' header")
    tok = ts.peek()
    if ts.ident() != "init":
        ts.error("expected 'init:'", tok=tok)
    ts.expect(":")
    init_tok = ts.peek()
    init = ts.ident()
    ts.expect(";")
    tok = ts.peek()
    if ts.ident() != "delta":
        ts.error("expected 'delta:'", tok=tok)
    ts.expect(":")
    delta = []
    if not ts.at(";"):
        delta.append(_parse_transition(ts, states))
        while ts.accept(","):
            delta.append(_parse_transition(ts, states))
    ts.expect(";")
    if ts.peek().kind != "eof":
        ts.error("unexpected input after machine")
    if init not in states:
        raise ParseError(f"initial state {init!r} is not declared", "unbound", init_tok.pos, text)
    try:
        return MinskyMachine(tuple(states), init, tuple(delta))
    except ValueError as e:
        raise ParseError(str(e), "syntax", 0, text) from None


def _parse_transition(ts: TokenStream, states: list[str]) -> Transition:
    ts.expect("(")
    src_tok = ts.peek()
    src = ts.ident()
    ts.expect(",")
    ctok = ts.next()
    if ctok.kind != "num" or ctok.text not in ("1", "2"):
        ts.error("counter must be 1 or 2", tok=ctok)
    ts.expect(",")
    op_tok = ts.peek()
    op = ts.ident()
    if op not in OPS:
        ts.error(f"unknown operation {op!r}", tok=op_tok)
    ts.expect(",")
    dst_tok = ts.peek()
    dst = ts.ident()
    ts.expect(")")
    for name, tok in ((src, src_tok), (dst, dst_tok)):
        if name not in states:
            raise ParseError(f"undeclared state {name!r}", "unbound", tok.pos, ts.text)
    return Transition(src, int(ctok.text), op, dst)


def render_machine(m: MinskyMachine) -> str:
    delta = ", ".join(str(t) for t in m.delta)
    return f"states: {', '.join(m.states)};\ninit: {m.initial};\ndelta: {delta};\n"


def render_lasso(lasso: Lasso) -> str:
    stem = " ".join(str(c) for c in lasso.stem)
    cycle = " ".join(str(c) for c in lasso.cycle)
    return f"stem: {stem}\ncycle: {cycle}\n"
