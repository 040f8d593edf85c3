"""Formula ASTs, parsers, printers and structural normal forms.

One set of node classes serves all four dialects (hypertrace logic, S1S,
LTL and HyperQPTL). Quantifiers carry a sort string that says which
dialect and domain they belong to.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

# quantifier sorts
TRACE = "trace"  # unconstrained trace (hyper) / model trace (hqptl)
CTRACE = "ctrace"  # constrained trace, ranges over the model
TIME = "time"
SET = "set"  # S1S second order
NAT = "nat"  # S1S first order
PROP = "prop"  # HyperQPTL propositional quantifier

EXISTS = "exists"
FORALL = "forall"

TRACE_SORTS = frozenset({TRACE, CTRACE})
POSITION_SORTS = frozenset({TIME, NAT})

DIALECTS = ("hyper", "s1s", "ltl", "hqptl")
_SORTS = {
    "hyper": (TRACE, CTRACE, TIME),
    "s1s": (SET, NAT),
    "ltl": (),
    "hqptl": (TRACE, PROP),
}


class ParseError(ValueError):
    """Raised for malformed formula, trace-set or machine text."""

    def __init__(self, message: str, kind: str = "syntax", pos: int | None = None, text: str | None = None):
        self.kind = kind
        self.pos = pos
        if pos is not None and text is not None:
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)


class FormulaWarning(UserWarning):
    pass


# ---------------------------------------------------------------- nodes


@dataclass(frozen=True)
class Pred:
    """x(pi, i): proposition `prop` holds on trace `trace` at time `time`."""

    prop: str
    trace: str
    time: str


@dataclass(frozen=True)
class Less:
    left: str
    right: str


@dataclass(frozen=True)
class Eq:
    left: str
    right: str


@dataclass(frozen=True)
class Succ:
    left: str
    right: str


@dataclass(frozen=True)
class Member:
    """X(i) in S1S."""

    set_var: str
    pos: str


@dataclass(frozen=True)
class Prop:
    """LTL proposition; `trace` is set for HyperQPTL indexed atoms a_pi."""

    name: str
    trace: str | None = None

    @property
    def key(self) -> str:
        return self.name if self.trace is None else f"{self.name}[{self.trace}]"


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Next:
    arg: "Formula"


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Quant:
    kind: str  # EXISTS | FORALL
    sort: str
    var: str
    body: "Formula"

    @property
    def constrained(self) -> bool:
        return self.sort == CTRACE

    @property
    def abbreviates_guard(self) -> bool:
        # a constrained quantifier stands for a T-guarded unconstrained one
        return self.sort == CTRACE


Atom = Union[Pred, Less, Eq, Succ, Member, Prop, Const]
Formula = Union[Atom, Not, And, Or, Implies, Iff, Next, Until, Quant]

ATOMS = (Pred, Less, Eq, Succ, Member, Prop, Const)
BINARY = (And, Or, Implies, Iff, Until)


def exists(sort: str, var: str, body: Formula) -> Quant:
    return Quant(EXISTS, sort, var, body)


def forall(sort: str, var: str, body: Formula) -> Quant:
    return Quant(FORALL, sort, var, body)


def dual(kind: str) -> str:
    return FORALL if kind == EXISTS else EXISTS


def conj(parts: Iterable[Formula]) -> Formula:
    """Left-nested conjunction; raises on an empty sequence."""
    it = iter(parts)
    try:
        out = next(it)
    except StopIteration:
        raise ValueError("empty conjunction") from None
    for p in it:
        out = And(out, p)
    return out


def disj(parts: Iterable[Formula]) -> Formula:
    it = iter(parts)
    try:
        out = next(it)
    except StopIteration:
        raise ValueError("empty disjunction") from None
    for p in it:
        out = Or(out, p)
    return out


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Not, Next)):
        return (f.arg,)
    if isinstance(f, BINARY):
        return (f.left, f.right)
    if isinstance(f, Quant):
        return (f.body,)
    return ()


def walk(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(children(g)))


def size(f: Formula) -> int:
    return sum(1 for _ in walk(f))


def depth(f: Formula) -> int:
    kids = children(f)
    return 1 + (max(depth(k) for k in kids) if kids else 0)


def rebuild(f: Formula, kids: tuple[Formula, ...]) -> Formula:
    if isinstance(f, Not):
        return Not(kids[0])
    if isinstance(f, Next):
        return Next(kids[0])
    if isinstance(f, BINARY):
        return type(f)(kids[0], kids[1])
    if isinstance(f, Quant):
        return Quant(f.kind, f.sort, f.var, kids[0])
    return f


# ---------------------------------------------------------------- variables


def _atom_vars(f: Formula) -> tuple[set[str], set[str]]:
    """(trace-like, position-like) variables mentioned by an atom."""
    if isinstance(f, Pred):
        return {f.trace}, {f.time}
    if isinstance(f, (Less, Eq, Succ)):
        return set(), {f.left, f.right}
    if isinstance(f, Member):
        return {f.set_var}, {f.pos}
    if isinstance(f, Prop):
        return ({f.trace} if f.trace is not None else set()), set()
    return set(), set()


def free_vars(f: Formula) -> tuple[frozenset[str], frozenset[str]]:
    """Free variables split into (trace-like, time-like).

    For S1S the split is (second order, first order). For HyperQPTL, bare
    proposition atoms count as trace-like references to quantified props.
    """
    traces, times = _free(f)
    return frozenset(traces), frozenset(times)


def _free(f: Formula) -> tuple[set[str], set[str]]:
    if isinstance(f, ATOMS):
        tr, ti = _atom_vars(f)
        if isinstance(f, Prop) and f.trace is None:
            tr = {f.name}
        return tr, ti
    if isinstance(f, Quant):
        tr, ti = _free(f.body)
        if f.sort in POSITION_SORTS:
            ti.discard(f.var)
        else:
            tr.discard(f.var)
        return tr, ti
    tr, ti = set(), set()
    for k in children(f):
        a, b = _free(k)
        tr |= a
        ti |= b
    return tr, ti


def all_vars(f: Formula) -> set[str]:
    out: set[str] = set()
    for g in walk(f):
        if isinstance(g, Quant):
            out.add(g.var)
        elif isinstance(g, ATOMS):
            a, b = _atom_vars(g)
            out |= a | b
            if isinstance(g, Prop) and g.trace is None:
                out.add(g.name)
    return out


def props_of(f: Formula) -> tuple[str, ...]:
    """Propositions used by hyper predicates or LTL atoms, sorted."""
    out = set()
    for g in walk(f):
        if isinstance(g, Pred):
            out.add(g.prop)
        elif isinstance(g, Prop):
            out.add(g.name)
    return tuple(sorted(out))


def props_by_trace(f: Formula) -> dict[str, set[str]]:
    """Map each trace variable to the propositions read through it."""
    out: dict[str, set[str]] = {}
    for g in walk(f):
        if isinstance(g, Pred):
            out.setdefault(g.trace, set()).add(g.prop)
        elif isinstance(g, Prop) and g.trace is not None:
            out.setdefault(g.trace, set()).add(g.name)
    return out


class Fresh:
    """Per-call fresh-name supply avoiding a set of taken names."""

    def __init__(self, taken: Iterable[str] = ()):
        self.taken = set(taken)

    def __call__(self, base: str) -> str:
        if base not in self.taken:
            self.taken.add(base)
            return base
        n = 1
        while f"{base}_{n}" in self.taken:
            n += 1
        name = f"{base}_{n}"
        self.taken.add(name)
        return name


def substitute(f: Formula, mapping: dict[str, str]) -> Formula:
    """Rename free variable occurrences (capture is the caller's concern)."""
    if not mapping:
        return f
    if isinstance(f, Pred):
        return Pred(f.prop, mapping.get(f.trace, f.trace), mapping.get(f.time, f.time))
    if isinstance(f, (Less, Eq, Succ)):
        return type(f)(mapping.get(f.left, f.left), mapping.get(f.right, f.right))
    if isinstance(f, Member):
        return Member(mapping.get(f.set_var, f.set_var), mapping.get(f.pos, f.pos))
    if isinstance(f, Prop):
        if f.trace is not None:
            return Prop(f.name, mapping.get(f.trace, f.trace))
        return Prop(mapping.get(f.name, f.name)) if f.name in mapping else f
    if isinstance(f, Const):
        return f
    if isinstance(f, Quant):
        inner = {k: v for k, v in mapping.items() if k != f.var}
        return Quant(f.kind, f.sort, f.var, substitute(f.body, inner))
    return rebuild(f, tuple(substitute(k, mapping) for k in children(f)))


def rename_bound(f: Formula, fresh: Fresh, always: bool = False) -> Formula:
    """Give bound variables names from `fresh` (new names only when taken,
    unless `always`)."""

    def go(g: Formula, ren: dict[str, str]) -> Formula:
        if isinstance(g, Quant):
            new = fresh(g.var) if not always else fresh(g.var + "_c")
            r2 = dict(ren)
            r2[g.var] = new
            return Quant(g.kind, g.sort, new, go(g.body, r2))
        if isinstance(g, ATOMS):
            return substitute(g, ren)
        return rebuild(g, tuple(go(k, ren) for k in children(g)))

    return go(f, {})


def rename_apart(f: Formula) -> Formula:
    """Make every bound name unique and distinct from the free names.

    Names are kept where no clash exists, so already-clean formulas are
    returned unchanged.
    """
    tr, ti = free_vars(f)
    fresh = Fresh(tr | ti)
    return rename_bound(f, fresh)


# ---------------------------------------------------------------- lexer

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<arrow><->|->|<=)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<num>[0-9]+)
  | (?P<sym>[()\[\]{},.;:|&!<=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", "lexical", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            out.append(Token("sym" if kind == "arrow" else kind, m.group(), pos))
        pos = m.end()
    out.append(Token("eof", "", len(text)))
    return out


class TokenStream:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.kind != "eof" and t.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text or t.kind == "eof":
            self.error(f"expected {text!r}, found {t.text or 'end of input'!r}")
        return self.next()

    def ident(self) -> str:
        t = self.peek()
        if t.kind != "ident":
            self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        return self.next().text

    def error(self, msg: str, kind: str = "syntax", tok: Token | None = None):
        t = tok or self.peek()
        raise ParseError(msg, kind, t.pos, self.text)


def parse_header_list(ts: TokenStream, key: str) -> list[str] | None:
    """Parse `key: a, b, c;` if present."""
    if ts.peek().text == key and ts.peek(1).text == ":":
        ts.next()
        ts.next()
        names = []
        if not ts.at(";"):
            names.append(ts.ident())
            while ts.accept(","):
                names.append(ts.ident())
        ts.expect(";")
        return names
    return None


# ---------------------------------------------------------------- parser

_LTL_KEYWORDS = {"X", "F", "G", "U", "true", "false"}


class _Parser:
    def __init__(self, text: str, dialect: str):
        if dialect not in DIALECTS:
            raise ValueError(f"unknown dialect {dialect!r}")
        self.ts = TokenStream(text)
        self.dialect = dialect
        self.temporal = dialect in ("ltl", "hqptl")

    def document(self) -> tuple[Formula, tuple[str, ...] | None]:
        props = parse_header_list(self.ts, "props")
        f = self.formula()
        if self.ts.peek().kind != "eof":
            self.ts.error(f"unexpected {self.ts.peek().text!r}")
        return f, (tuple(props) if props is not None else None)

    def formula(self) -> Formula:
        t = self.ts.peek()
        if t.kind == "ident" and t.text in (EXISTS, FORALL):
            kind = self.ts.next().text
            st = self.ts.peek()
            sort = self.ts.ident()
            if sort not in _SORTS[self.dialect]:
                self.ts.error(f"sort {sort!r} is not available in the {self.dialect} dialect", tok=st)
            var = self.ts.ident()
            self.ts.expect(".")
            return Quant(kind, sort, var, self.formula())
        return self.iff()

    def iff(self) -> Formula:
        f = self.implies()
        while self.ts.accept("<->"):
            f = Iff(f, self.implies())
        return f

    def implies(self) -> Formula:
        f = self.disj()
        if self.ts.accept("->"):
            return Implies(f, self.implies())
        return f

    def disj(self) -> Formula:
        f = self.conj()
        while self.ts.accept("|"):
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.until()
        while self.ts.accept("&"):
            f = And(f, self.until())
        return f

    def until(self) -> Formula:
        f = self.unary()
        if self.temporal and self.ts.peek().kind == "ident" and self.ts.peek().text == "U":
            self.ts.next()
            return Until(f, self.until())
        return f

    def unary(self) -> Formula:
        if self.ts.accept("!"):
            return Not(self.unary())
        t = self.ts.peek()
        if self.temporal and t.kind == "ident" and t.text in ("X", "F", "G"):
            self.ts.next()
            arg = self.unary()
            if t.text == "X":
                return Next(arg)
            if t.text == "F":
                return Until(Const(True), arg)
            return Not(Until(Const(True), Not(arg)))
        if self.ts.accept("("):
            f = self.formula()
            self.ts.expect(")")
            return f
        return self.atom()

    def atom(self) -> Formula:
        ts = self.ts
        t = ts.peek()
        if t.kind == "num":
            ts.error("unexpected number")
        name = ts.ident()
        if name in ("true", "false"):
            return Const(name == "true")
        if self.temporal:
            if self.dialect == "hqptl" and ts.accept("["):
                tr = ts.ident()
                ts.expect("]")
                return Prop(name, tr)
            return Prop(name)
        if self.dialect == "s1s":
            return self.s1s_atom(name, t)
        if ts.accept("("):
            tr = ts.ident()
            ts.expect(",")
            ti = ts.ident()
            ts.expect(")")
            return Pred(name, tr, ti)
        if ts.accept("<"):
            return Less(name, ts.ident())
        if ts.accept("="):
            return Eq(name, ts.ident())
        ts.error(f"expected predicate, '<' or '=' after {name!r}")

    def s1s_atom(self, name: str, t: Token) -> Formula:
        ts = self.ts
        fresh = self.fresh
        if ts.accept("("):
            a = ts.ident()
            if ts.accept(","):
                b = ts.ident()
                ts.expect(")")
                if name == "succ":
                    return Succ(a, b)
                if name == "subset":
                    return s1s_subset(a, b, fresh)
                ts.error(f"unknown binary S1S atom {name!r}", tok=t)
            ts.expect(")")
            if name == "succclosed":
                return s1s_succ_closed(a, fresh)
            return Member(name, a)
        if ts.accept("<="):
            return s1s_leq(name, ts.ident(), fresh)
        if ts.accept("<"):
            return s1s_less(name, ts.ident(), fresh)
        if ts.accept("="):
            if ts.peek().kind == "num":
                n = ts.next()
                if n.text != "0":
                    ts.error("only the constant 0 is supported", tok=n)
                return s1s_zero(name, fresh)
            return Eq(name, ts.ident())
        ts.error(f"expected S1S atom after {name!r}")

    def fresh(self, base: str) -> str:
        # placeholder names for abbreviation binders, fixed up after parsing
        return f"{base}\0"


def parse_document(
    text: str, dialect: str = "hyper", *, allow_free: bool = False, strict: bool = False
) -> tuple[Formula, tuple[str, ...] | None]:
    """Parse text with an optional `props: ...;` header.

    Returns the formula and the declared alphabet (None if undeclared).
    A variable rebound on the same path is renamed with a FormulaWarning,
    or rejected when `strict` is set.
    """
    p = _Parser(text, dialect)
    f, props = p.document()
    f = _fix_abbreviation_binders(f)
    f = check_formula(f, dialect, props, allow_free=allow_free, strict=strict, text=text)
    return f, props


def parse(text: str, dialect: str = "hyper", *, allow_free: bool = False, strict: bool = False) -> Formula:
    return parse_document(text, dialect, allow_free=allow_free, strict=strict)[0]


def _fix_abbreviation_binders(f: Formula) -> Formula:
    """Replace placeholder binder names from abbreviation expansion with
    names that clash with nothing in the formula."""
    names = {n for n in all_vars(f) if "\0" not in n}
    fresh = Fresh(names)

    def go(g: Formula, ren: dict[str, str]) -> Formula:
        if isinstance(g, Quant):
            if "\0" in g.var:
                new = fresh(g.var.rstrip("\0"))
                r2 = dict(ren)
                r2[g.var] = new
                return Quant(g.kind, g.sort, new, go(g.body, r2))
            r2 = {k: v for k, v in ren.items() if k != g.var}
            return Quant(g.kind, g.sort, g.var, go(g.body, r2))
        if isinstance(g, ATOMS):
            return substitute(g, ren)
        return rebuild(g, tuple(go(k, ren) for k in children(g)))

    return go(f, {})


def _sort_class(sort: str) -> str:
    if sort in POSITION_SORTS:
        return "time"
    if sort == PROP:
        return "prop"
    return "trace"


def check_formula(
    f: Formula,
    dialect: str,
    props: Iterable[str] | None = None,
    *,
    allow_free: bool = False,
    strict: bool = False,
    text: str | None = None,
) -> Formula:
    """Scope and sort checking; returns f with path-rebindings renamed."""
    alphabet = set(props) if props is not None else None
    binder_class: dict[str, str] = {}
    free_class: dict[str, str] = {}
    fresh = Fresh(all_vars(f))

    def err(msg: str, kind: str):
        raise ParseError(msg, kind)

    def use(name: str, cls: str, scope: dict[str, str]):
        if name in scope:
            if _sort_class_of(scope[name]) != cls:
                err(f"variable {name!r} is a {_sort_class_of(scope[name])} variable, used as {cls}", "sort-clash")
            return scope[name]
        if not allow_free:
            err(f"unbound variable {name!r}", "unbound")
        prev = free_class.setdefault(name, cls)
        if prev != cls:
            err(f"free variable {name!r} used both as {prev} and {cls}", "sort-clash")
        return name

    def _sort_class_of(binding: str) -> str:
        return binder_class[binding]

    def go(g: Formula, scope: dict[str, str]) -> Formula:
        # scope maps source names to current (possibly renamed) names
        if isinstance(g, Quant):
            cls = _sort_class(g.sort)
            new = g.var
            if g.var in scope:
                if strict:
                    err(f"variable {g.var!r} bound twice on one path", "double-binding")
                new = fresh(g.var)
                warnings.warn(f"renamed rebound variable {g.var!r} to {new!r}", FormulaWarning, stacklevel=4)
            prev = binder_class.get(new)
            if prev is not None and prev != cls:
                err(f"variable {g.var!r} bound both as {prev} and {cls}", "sort-clash")
            if g.var in free_class and free_class[g.var] != cls:
                err(f"variable {g.var!r} bound as {cls} but used free as {free_class[g.var]}", "sort-clash")
            binder_class[new] = cls
            s2 = dict(scope)
            s2[g.var] = new
            return Quant(g.kind, g.sort, new, go(g.body, s2))
        if isinstance(g, Pred):
            if alphabet is not None and g.prop not in alphabet:
                err(f"unknown proposition {g.prop!r}", "unknown-prop")
            tr = use(g.trace, "trace", scope)
            ti = use(g.time, "time", scope)
            return Pred(g.prop, tr, ti)
        if isinstance(g, (Less, Eq, Succ)):
            return type(g)(use(g.left, "time", scope), use(g.right, "time", scope))
        if isinstance(g, Member):
            return Member(use(g.set_var, "trace", scope), use(g.pos, "time", scope))
        if isinstance(g, Prop):
            if g.trace is not None:
                if alphabet is not None and g.name not in alphabet:
                    err(f"unknown proposition {g.name!r}", "unknown-prop")
                return Prop(g.name, use(g.trace, "trace", scope))
            if dialect == "hqptl":
                if g.name in scope:
                    return Prop(use(g.name, "prop", scope))
                if not allow_free:
                    err(f"unbound proposition variable {g.name!r}", "unbound")
                return g
            if alphabet is not None and g.name not in alphabet:
                err(f"unknown proposition {g.name!r}", "unknown-prop")
            return g
        if isinstance(g, Const):
            return g
        return rebuild(g, tuple(go(k, scope) for k in children(g)))

    out = go(f, {})
    # the scope check above registers binder classes lazily; bound names that
    # clash with free names of the other class are caught there as well
    return out


# ---------------------------------------------------------------- S1S abbreviations
#
# Expanded into primitives so that automata only ever see the Eq. 2 grammar.
# `fresh` supplies binder names.


def s1s_implies(a: Formula, b: Formula) -> Formula:
    return Or(Not(a), b)


def s1s_succ_closed(x: str, fresh) -> Formula:
    i, j = fresh("u"), fresh("v")
    return Quant(FORALL, NAT, i, Quant(FORALL, NAT, j, s1s_implies(And(Member(x, i), Succ(i, j)), Member(x, j))))


def s1s_subset(x: str, y: str, fresh) -> Formula:
    i = fresh("u")
    return Quant(FORALL, NAT, i, s1s_implies(Member(x, i), Member(y, i)))


def s1s_leq(x: str, y: str, fresh) -> Formula:
    z = fresh("Z")
    return Quant(FORALL, SET, z, s1s_implies(And(Member(z, x), s1s_succ_closed(z, fresh)), Member(z, y)))


def s1s_less(x: str, y: str, fresh) -> Formula:
    return And(s1s_leq(x, y, fresh), Not(Eq(x, y)))


def s1s_zero(x: str, fresh) -> Formula:
    j = fresh("w")
    return Quant(FORALL, NAT, j, Or(Eq(x, j), s1s_less(x, j, fresh)))


def match_s1s_leq(f: Formula) -> tuple[str, str] | None:
    """Recognise the expansion produced by s1s_leq (any binder names)."""
    if not (isinstance(f, Quant) and f.kind == FORALL and f.sort == SET):
        return None
    z = f.var
    b = f.body
    try:
        assert isinstance(b, Or) and isinstance(b.left, Not) and isinstance(b.right, Member)
        a = b.left.arg
        assert isinstance(a, And) and isinstance(a.left, Member)
        x, y = a.left.pos, b.right.pos
        sc = a.right
        assert isinstance(sc, Quant) and isinstance(sc.body, Quant)
        u, v = sc.var, sc.body.var
    except AssertionError:
        return None
    if len({z, u, v, x, y} - {x, y}) != 3 or z in (x, y) or u in (x, y) or v in (x, y):
        return None
    names = iter([u, v])
    expect = s1s_leq(x, y, lambda base: z if base == "Z" else next(names))
    return (x, y) if expect == f else None


# ---------------------------------------------------------------- printer

_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4, Until: 5}
_OPS = {Iff: "<->", Implies: "->", Or: "|", And: "&", Until: "U"}
_RIGHT_ASSOC = (Implies, Until)
_UNARY_PREC = 6


def _prec(f: Formula) -> int:
    if isinstance(f, Quant):
        return 0
    if isinstance(f, BINARY):
        return _PREC[type(f)]
    if isinstance(f, (Not, Next)):
        return _UNARY_PREC
    return 7


def render(f: Formula) -> str:
    """Concrete syntax that parses back to an equal AST."""
    return _render(f, 0)


def _render(f: Formula, need: int) -> str:
    p = _prec(f)
    s = _render_raw(f)
    return f"({s})" if p < need else s


def _render_raw(f: Formula) -> str:
    if isinstance(f, Pred):
        return f"{f.prop}({f.trace}, {f.time})"
    if isinstance(f, Less):
        return f"{f.left} < {f.right}"
    if isinstance(f, Eq):
        return f"{f.left} = {f.right}"
    if isinstance(f, Succ):
        return f"succ({f.left}, {f.right})"
    if isinstance(f, Member):
        return f"{f.set_var}({f.pos})"
    if isinstance(f, Prop):
        return f.name if f.trace is None else f"{f.name}[{f.trace}]"
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Not):
        return "!" + _render(f.arg, _UNARY_PREC)
    if isinstance(f, Next):
        return "X " + _render(f.arg, _UNARY_PREC)
    if isinstance(f, Quant):
        return f"{f.kind} {f.sort} {f.var}. {_render(f.body, 0)}"
    p = _PREC[type(f)]
    if isinstance(f, _RIGHT_ASSOC):
        left, right = _render(f.left, p + 1), _render(f.right, p)
    else:
        left, right = _render(f.left, p), _render(f.right, p + 1)
    return f"{left} {_OPS[type(f)]} {right}"


# ---------------------------------------------------------------- normal forms


def to_nnf(f: Formula) -> Formula:
    """Negation normal form: negations only on atoms; ->, <-> eliminated."""
    return _nnf(f, False)


def _nnf(f: Formula, neg: bool) -> Formula:
    if isinstance(f, Const):
        return Const(f.value != neg)
    if isinstance(f, ATOMS):
        return Not(f) if neg else f
    if isinstance(f, Not):
        return _nnf(f.arg, not neg)
    if isinstance(f, And):
        a, b = _nnf(f.left, neg), _nnf(f.right, neg)
        return Or(a, b) if neg else And(a, b)
    if isinstance(f, Or):
        a, b = _nnf(f.left, neg), _nnf(f.right, neg)
        return And(a, b) if neg else Or(a, b)
    if isinstance(f, Implies):
        return _nnf(Or(Not(f.left), f.right), neg)
    if isinstance(f, Iff):
        a, b = f.left, f.right
        if neg:
            return Or(And(_nnf(a, False), _nnf(b, True)), And(_nnf(a, True), _nnf(b, False)))
        return Or(And(_nnf(a, False), _nnf(b, False)), And(_nnf(a, True), _nnf(b, True)))
    if isinstance(f, Quant):
        kind = dual(f.kind) if neg else f.kind
        return Quant(kind, f.sort, f.var, _nnf(f.body, neg))
    if isinstance(f, Next):
        return Next(_nnf(f.arg, neg))
    if isinstance(f, Until):
        if neg:
            raise ValueError("negated Until has no NNF in this grammar")
        return Until(_nnf(f.left, False), _nnf(f.right, False))
    raise TypeError(f"not a formula: {f!r}")


def is_quantifier_free(f: Formula) -> bool:
    return not any(isinstance(g, Quant) for g in walk(f))


@dataclass(frozen=True)
class QuantEntry:
    kind: str
    sort: str
    var: str

    @property
    def polarity(self) -> str:
        return "∃" if self.kind == EXISTS else "∀"

    @property
    def constrained(self) -> bool:
        return self.sort == CTRACE

    @property
    def is_time(self) -> bool:
        return self.sort in POSITION_SORTS

    @property
    def is_trace(self) -> bool:
        return self.sort in TRACE_SORTS


@dataclass(frozen=True)
class QuantifierPrefix:
    entries: tuple[QuantEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, k):
        return self.entries[k]

    def attach(self, matrix: Formula) -> Formula:
        for e in reversed(self.entries):
            matrix = Quant(e.kind, e.sort, e.var, matrix)
        return matrix

    def pattern(self) -> str:
        """Compact pattern such as 'A^E^t'... see `symbol`."""
        return " ".join(symbol(e) for e in self.entries)


def symbol(e: QuantEntry) -> str:
    q = "∃" if e.kind == EXISTS else "∀"
    if e.sort == CTRACE:
        return q + "̂" + e.var
    return q + e.var


def split_prefix(f: Formula) -> tuple[QuantifierPrefix, Formula]:
    entries = []
    while isinstance(f, Quant):
        entries.append(QuantEntry(f.kind, f.sort, f.var))
        f = f.body
    return QuantifierPrefix(tuple(entries)), f


def quantifier_prefix(f: Formula) -> QuantifierPrefix:
    """Prefix of a prenex formula; raises ValueError if f is not prenex."""
    prefix, matrix = split_prefix(f)
    if not is_quantifier_free(matrix):
        raise ValueError("formula is not in prenex form")
    return prefix


def is_prenex(f: Formula) -> bool:
    return is_quantifier_free(split_prefix(f)[1])


def to_prenex(f: Formula) -> Formula:
    """Prenex form, pulling quantifiers left to right in encounter order.

    Bound variables are first renamed apart. Pulling a constrained
    quantifier across a connective is sound for nonempty models.
    """
    f = rename_apart(f)
    fresh = Fresh(all_vars(f))
    entries, matrix = _prenex(f, fresh)
    return QuantifierPrefix(tuple(entries)).attach(matrix)


def _flip(entries: list[QuantEntry]) -> list[QuantEntry]:
    return [QuantEntry(dual(e.kind), e.sort, e.var) for e in entries]


def _prenex(f: Formula, fresh: Fresh) -> tuple[list[QuantEntry], Formula]:
    if isinstance(f, ATOMS):
        return [], f
    if isinstance(f, Quant):
        entries, m = _prenex(f.body, fresh)
        return [QuantEntry(f.kind, f.sort, f.var)] + entries, m
    if isinstance(f, Not):
        entries, m = _prenex(f.arg, fresh)
        return _flip(entries), Not(m)
    if isinstance(f, (And, Or)):
        e1, m1 = _prenex(f.left, fresh)
        e2, m2 = _prenex(f.right, fresh)
        return e1 + e2, type(f)(m1, m2)
    if isinstance(f, Implies):
        e1, m1 = _prenex(f.left, fresh)
        e2, m2 = _prenex(f.right, fresh)
        return _flip(e1) + e2, Implies(m1, m2)
    if isinstance(f, Iff):
        if is_quantifier_free(f.left) and is_quantifier_free(f.right):
            return [], f
        # a <-> b == (a -> b) & (b -> a), second copy renamed apart
        a2 = rename_bound(f.left, fresh, always=True)
        b2 = rename_bound(f.right, fresh, always=True)
        return _prenex(And(Implies(f.left, f.right), Implies(b2, a2)), fresh)
    if isinstance(f, (Next, Until)):
        if is_quantifier_free(f):
            return [], f
        raise ValueError("cannot prenex quantifiers under temporal operators")
    raise TypeError(f"not a formula: {f!r}")
