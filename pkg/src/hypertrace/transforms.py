"""Formula-to-formula translations between the hypertrace, S1S, LTL and
HyperQPTL dialects, and the quantifier eliminations for constrained traces."""

from __future__ import annotations

from itertools import product
from typing import Iterable, Mapping

from .syntax import (
    ATOMS,
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
    Formula,
    Fresh,
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
    all_vars,
    children,
    conj,
    free_vars,
    is_quantifier_free,
    match_s1s_leq,
    props_of,
    rebuild,
    rename_bound,
    s1s_less,
    split_prefix,
    substitute,
    to_prenex,
    walk,
)


class ShapeError(ValueError):
    """The formula's quantifier structure is outside a transform's domain."""

    def __init__(self, message: str, entry: QuantEntry | None = None):
        self.entry = entry
        if entry is not None:
            message = f"{message} (at {entry.kind} {entry.sort} {entry.var})"
        super().__init__(message)


# ---------------------------------------------------------------- flatten


def flat_name(trace_var: str, prop: str) -> str:
    return f"{trace_var}_{prop}"


def flatten_names(f: Formula, props: Iterable[str], vc: Iterable[str]) -> dict[tuple[str, str], str]:
    """Names used by `flatten` for the free trace variables in vc."""
    return _Flattener(f, props).names_for(vc)


class _Flattener:
    def __init__(self, f: Formula, props: Iterable[str]):
        self.props = tuple(props)
        self.fresh = Fresh(all_vars(f))

    def names_for(self, vc: Iterable[str]) -> dict[tuple[str, str], str]:
        return {(pi, x): self.fresh(flat_name(pi, x)) for pi in sorted(vc) for x in self.props}

    def go(self, f: Formula, names: Mapping[tuple[str, str], str]) -> Formula:
        if isinstance(f, Pred):
            key = (f.trace, f.prop)
            if key in names:
                return Pred(f.prop, names[key], f.time)
            if any(k[0] == f.trace for k in names):
                raise ValueError(f"proposition {f.prop!r} is not in the flattening alphabet")
            return f
        if isinstance(f, Quant) and f.sort == TRACE:
            new = self.names_for([f.var])
            inner = dict(names)
            inner.update(new)
            body = self.go(f.body, inner)
            for x in reversed(self.props):
                body = Quant(f.kind, TRACE, new[(f.var, x)], body)
            return body
        if isinstance(f, ATOMS):
            return f
        return rebuild(f, tuple(self.go(k, names) for k in children(f)))


def flatten(f: Formula, props: Iterable[str], vc: Iterable[str] = ()) -> Formula:
    """Split unconstrained trace variables into one variable per proposition.

    Free variables in `vc` are split as well, using the names returned by
    `flatten_names` with the same arguments.
    """
    vc = set(vc)
    tr, _ = free_vars(f)
    if not vc <= tr:
        raise ValueError(f"variables {sorted(vc - tr)} are not free trace variables")
    fl = _Flattener(f, props)
    return fl.go(f, fl.names_for(vc))


def split_assignment(traces: Mapping[str, "object"], names: Mapping[tuple[str, str], str]) -> dict:
    """The per-proposition assignment matching `flatten_names` output.

    Each new variable pi_x gets the trace of pi restricted to {x}; other
    variables are copied.
    """
    out = {}
    split = {pi for pi, _ in names}
    for (pi, x), name in names.items():
        out[name] = traces[pi].restrict([x])
    for v, t in traces.items():
        if v not in split:
            out[v] = t
    return out


# ---------------------------------------------------------------- removeForAll / removeExists


def _split_blocks(f: Formula):
    """Split a prenex formula into (E, exists-hat, forall-hat, Q, matrix) blocks."""
    prefix, matrix = split_prefix(f)
    entries = list(prefix)
    k = 0
    e_block = []
    while k < len(entries) and not entries[k].constrained:
        if entries[k].kind != EXISTS:
            raise ShapeError("leading block may contain only existential quantifiers", entries[k])
        e_block.append(entries[k])
        k += 1
    eh = []
    while k < len(entries) and entries[k].constrained and entries[k].kind == EXISTS:
        eh.append(entries[k])
        k += 1
    ah = []
    while k < len(entries) and entries[k].constrained and entries[k].kind == FORALL:
        ah.append(entries[k])
        k += 1
    q_block = entries[k:]
    for e in q_block:
        if e.constrained:
            raise ShapeError("constrained quantifier after the constrained block", e)
    return e_block, eh, ah, q_block, matrix


def remove_forall(f: Formula) -> Formula:
    """Replace the constrained universal block by a conjunction over all ways
    of mapping its variables to the constrained existential variables."""
    e_block, eh, ah, q_block, matrix = _split_blocks(f)
    if not is_quantifier_free(matrix):
        raise ShapeError("formula is not in prenex form")
    if not ah:
        return f
    if not eh:
        raise ShapeError("constrained universals need a preceding constrained existential", ah[0])
    tail = QuantifierPrefix(tuple(q_block)).attach(matrix)
    choices = list(product([e.var for e in eh], repeat=len(ah)))
    fresh = Fresh(all_vars(f))
    parts = []
    for k, choice in enumerate(choices, start=1):
        part = substitute(tail, {a.var: c for a, c in zip(ah, choice)})
        if len(choices) > 1:
            part = _rename_prefix(part, len(q_block), k, fresh)
        parts.append(part)
    body = conj(parts)
    return QuantifierPrefix(tuple(e_block + eh)).attach(body)


def _rename_prefix(f: Formula, n: int, k: int, fresh: Fresh) -> Formula:
    """Rename the first n (prefix) binders of f with suffix _k."""
    if n == 0:
        return f
    assert isinstance(f, Quant)
    new = fresh(f"{f.var}_{k}")
    body = substitute(f.body, {f.var: new})
    return Quant(f.kind, f.sort, new, _rename_prefix(body, n - 1, k, fresh))


def remove_exists_hats(f: Formula) -> Formula:
    """Make the constrained existential block unconstrained."""
    g = f
    e_block = []
    while isinstance(g, Quant) and not g.constrained:
        if g.kind != EXISTS:
            raise ShapeError("leading block may contain only existential quantifiers", QuantEntry(g.kind, g.sort, g.var))
        e_block.append(QuantEntry(g.kind, g.sort, g.var))
        g = g.body
    eh = []
    while isinstance(g, Quant) and g.constrained and g.kind == EXISTS:
        eh.append(QuantEntry(EXISTS, TRACE, g.var))
        g = g.body
    for h in walk(g):
        if isinstance(h, Quant) and h.constrained:
            raise ShapeError("constrained quantifier after the existential block", QuantEntry(h.kind, h.sort, h.var))
    return QuantifierPrefix(tuple(e_block + eh)).attach(g)


def insert_exists_hat(f: Formula) -> Formula:
    """Insert an unused constrained existential after the leading existential
    block. Over nonempty models this is an equivalence."""
    prefix, matrix = split_prefix(f)
    k = 0
    while k < len(prefix) and not prefix[k].constrained and prefix[k].kind == EXISTS:
        k += 1
    name = Fresh(all_vars(f))("pi0")
    entries = prefix.entries[:k] + (QuantEntry(EXISTS, CTRACE, name),) + prefix.entries[k:]
    return QuantifierPrefix(entries).attach(matrix)


def to_unconstrained(f: Formula) -> Formula:
    return remove_exists_hats(remove_forall(to_prenex(f)))


def relax_existentials(f: Formula) -> Formula:
    """Prenex, then turn every constrained existential into an unconstrained one.

    Every model of f is a model of the result.
    """
    g = to_prenex(f)
    prefix, matrix = split_prefix(g)
    entries = tuple(QuantEntry(e.kind, TRACE, e.var) if e.constrained and e.kind == EXISTS else e for e in prefix)
    return QuantifierPrefix(entries).attach(matrix)


# ---------------------------------------------------------------- S1S bridge


def to_s1s_with_names(f: Formula, props: Iterable[str] | None = None) -> tuple[Formula, dict[tuple[str, str], str]]:
    """S1S formula plus the set-variable names of the free trace variables."""
    for g in walk(f):
        if isinstance(g, Quant) and g.constrained:
            raise ShapeError("constrained quantifiers cannot be translated to S1S", QuantEntry(g.kind, g.sort, g.var))
    props = tuple(props) if props is not None else props_of(f)
    tr, _ = free_vars(f)
    fl = _Flattener(f, props)
    names = fl.names_for(tr)
    flat = fl.go(f, names)
    fresh = Fresh(all_vars(flat))
    return _sigma(flat, fresh), names


def to_s1s(f: Formula, props: Iterable[str] | None = None) -> Formula:
    return to_s1s_with_names(f, props)[0]


def _sigma(f: Formula, fresh: Fresh) -> Formula:
    if isinstance(f, Pred):
        return Member(f.trace, f.time)
    if isinstance(f, Less):
        return s1s_less(f.left, f.right, fresh)
    if isinstance(f, (Eq, Const)):
        return f
    if isinstance(f, Quant):
        sort = {TRACE: SET, TIME: NAT}[f.sort]
        return Quant(f.kind, sort, f.var, _sigma(f.body, fresh))
    if isinstance(f, Implies):
        return Or(Not(_sigma(f.left, fresh)), _sigma(f.right, fresh))
    if isinstance(f, Iff):
        a, b = f.left, f.right
        # each side occurs twice; bound names stay unique per path
        return Or(
            And(_sigma(a, fresh), _sigma(b, fresh)),
            And(Not(_sigma(a, fresh)), Not(_sigma(b, fresh))),
        )
    return rebuild(f, tuple(_sigma(k, fresh) for k in children(f)))


def hyper_trace_name(set_var: str) -> str:
    return f"pi_{set_var}"


def to_hyper_names(f: Formula) -> dict[str, str]:
    """Trace-variable name for each free second-order variable."""
    so, _ = free_vars(f)
    fresh = Fresh(all_vars(f))
    return {x: fresh(hyper_trace_name(x)) for x in sorted(so)}


def to_hyper(f: Formula) -> Formula:
    """Hypertrace formula for an S1S formula: X(i) becomes X(pi_X, i)."""
    fresh = Fresh(all_vars(f))
    so, _ = free_vars(f)
    names = {x: fresh(hyper_trace_name(x)) for x in sorted(so)}
    return _to_hyper(f, names, fresh)


def _leq(a: str, b: str) -> Formula:
    return Or(Less(a, b), Eq(a, b))


def _to_hyper(f: Formula, names: dict[str, str], fresh: Fresh) -> Formula:
    if isinstance(f, Member):
        return Pred(f.set_var, names[f.set_var], f.pos)
    if isinstance(f, Succ):
        i, i2 = f.left, f.right
        j = fresh("j")
        return And(Less(i, i2), Quant(FORALL, TIME, j, Implies(Less(i, j), _leq(i2, j))))
    if isinstance(f, (Eq, Less, Const)):
        return f
    if isinstance(f, Quant):
        leq = match_s1s_leq(f)
        if leq is not None:
            return _leq(*leq)
        if f.sort == SET:
            inner = dict(names)
            inner[f.var] = fresh(hyper_trace_name(f.var))
            return Quant(f.kind, TRACE, inner[f.var], _to_hyper(f.body, inner, fresh))
        if f.sort == NAT:
            return Quant(f.kind, TIME, f.var, _to_hyper(f.body, names, fresh))
        raise ValueError(f"not an S1S quantifier sort: {f.sort!r}")
    return rebuild(f, tuple(_to_hyper(k, names, fresh) for k in children(f)))


# ---------------------------------------------------------------- LTL / HyperQPTL


def ltl_to_fo(
    f: Formula,
    anchor: str,
    trace: str | Mapping[str, tuple[str, str]] = "t",
    fresh: Fresh | None = None,
) -> Formula:
    """First-order translation of an LTL formula evaluated at `anchor`.

    `trace` is the trace variable for plain atoms, or a map from atom keys
    (`a`, or `a[pi]` for indexed atoms) to (proposition, trace variable).
    """
    if fresh is None:
        fresh = Fresh(all_vars(f) | {anchor} | ({trace} if isinstance(trace, str) else set()))

    def atom(p: Prop) -> tuple[str, str]:
        if isinstance(trace, str):
            return p.name, (p.trace if p.trace is not None else trace)
        return trace[p.key]

    def go(g: Formula, t: str) -> Formula:
        if isinstance(g, Prop):
            prop, tv = atom(g)
            return Pred(prop, tv, t)
        if isinstance(g, Const):
            return Eq(t, t) if g.value else Not(Eq(t, t))
        if isinstance(g, Next):
            j, k = fresh("j"), fresh("k")
            succ = And(Less(t, j), Quant(FORALL, TIME, k, Implies(Less(t, k), _leq(j, k))))
            return Quant(EXISTS, TIME, j, And(succ, go(g.arg, j)))
        if isinstance(g, Until):
            j, k = fresh("j"), fresh("k")
            between = And(_leq(t, k), Less(k, j))
            return Quant(
                EXISTS,
                TIME,
                j,
                And(And(_leq(t, j), go(g.right, j)), Quant(FORALL, TIME, k, Implies(between, go(g.left, k)))),
            )
        if isinstance(g, (Not, And, Or, Implies, Iff)):
            return rebuild(g, tuple(go(c, t) for c in children(g)))
        raise ValueError(f"not an LTL node: {type(g).__name__}")

    return go(f, anchor)


def tr_hqptl_to_hyper(f: Formula) -> Formula:
    """Translate a HyperQPTL sentence into trace-prefixed hypertrace logic.

    Trace quantifiers become constrained trace quantifiers, each
    propositional quantifier q becomes an unconstrained quantifier over a
    fresh trace variable pi_q, and the body is anchored at time 0.
    """
    prefix, body = split_prefix(f)
    if not is_quantifier_free(body):
        raise ShapeError("HyperQPTL formula is not in prefix form")
    fresh = Fresh(all_vars(f))
    entries = []
    qtrace: dict[str, str] = {}
    for e in prefix:
        if e.sort == TRACE:
            entries.append(QuantEntry(e.kind, CTRACE, e.var))
        elif e.sort == PROP:
            name = fresh(f"pi_{e.var}")
            qtrace[e.var] = name
            entries.append(QuantEntry(e.kind, TRACE, name))
        else:
            raise ShapeError("unexpected quantifier in HyperQPTL prefix", e)
    atoms: dict[str, tuple[str, str]] = {}
    for g in walk(body):
        if isinstance(g, Prop):
            if g.trace is not None:
                atoms[g.key] = (g.name, g.trace)
            elif g.name in qtrace:
                atoms[g.key] = (g.name, qtrace[g.name])
            else:
                raise ShapeError(f"free proposition {g.name!r} in HyperQPTL body")
    i0, j = fresh("i0"), fresh("j")
    initial = Quant(FORALL, TIME, j, Or(Eq(i0, j), Less(i0, j)))
    matrix = Quant(EXISTS, TIME, i0, And(initial, ltl_to_fo(body, i0, atoms, fresh)))
    return QuantifierPrefix(tuple(entries)).attach(matrix)
