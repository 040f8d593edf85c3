"""Büchi automata over multi-track bit-vector alphabets and the S1S compiler.

A letter is an int whose bit k is the value of track k at the current
position. Tracks named in `first_order` carry a first-order variable and
are expected to hold exactly one set bit over the whole word.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from itertools import product
from typing import Callable, Hashable, Iterable, Mapping

from .syntax import (
    NAT,
    SET,
    And,
    Const,
    Eq,
    EXISTS,
    FORALL,
    Formula,
    Implies,
    Iff,
    Member,
    Not,
    Or,
    Quant,
    Succ,
    free_vars,
    match_s1s_leq,
)
from .traces import UPSet

DEFAULT_STATE_CAP = 12
DEFAULT_OUTPUT_CAP = 200_000
SIMULATION_LIMIT = 400


class ResourceError(RuntimeError):
    """An automaton construction exceeded its state budget."""


def state_cap() -> int:
    return int(os.environ.get("HYPERTRACE_STATE_CAP", DEFAULT_STATE_CAP))


@dataclass(frozen=True, eq=False)
class NBW:
    tracks: tuple[str, ...]
    first_order: frozenset
    num_states: int
    initial: frozenset
    accepting: frozenset
    delta: tuple  # per state: dict letter -> tuple of successor states

    @property
    def num_letters(self) -> int:
        return 1 << len(self.tracks)

    def successors(self, q: int, letter: int) -> tuple[int, ...]:
        return self.delta[q].get(letter, ())

    def num_transitions(self) -> int:
        return sum(len(s) for d in self.delta for s in d.values())

    def is_deterministic(self) -> bool:
        return len(self.initial) <= 1 and all(len(s) <= 1 for d in self.delta for s in d.values())

    def __repr__(self) -> str:
        return (
            f"NBW(tracks={self.tracks}, states={self.num_states}, "
            f"initial={sorted(self.initial)}, accepting={sorted(self.accepting)})"
        )


@dataclass(frozen=True)
class LassoWord:
    tracks: tuple[str, ...]
    prefix: tuple[int, ...]
    cycle: tuple[int, ...]

    def __post_init__(self):
        if not self.cycle:
            raise ValueError("lasso cycle must be nonempty")

    def letter(self, i: int) -> int:
        if i < len(self.prefix):
            return self.prefix[i]
        return self.cycle[(i - len(self.prefix)) % len(self.cycle)]

    def track(self, name: str) -> UPSet:
        k = self.tracks.index(name)
        return UPSet(tuple(bool(l >> k & 1) for l in self.prefix), tuple(bool(l >> k & 1) for l in self.cycle))

    @classmethod
    def from_sets(cls, tracks: Iterable[str], sets: Mapping[str, UPSet]) -> "LassoWord":
        from math import lcm

        tracks = tuple(tracks)
        vals = [sets[t] for t in tracks]
        n = max((s.stem_length for s in vals), default=0)
        p = lcm(*(s.period_length for s in vals)) if vals else 1

        def letter(i):
            return sum(1 << k for k, s in enumerate(vals) if s[i])

        return cls(tracks, tuple(letter(i) for i in range(n)), tuple(letter(i) for i in range(n, n + p)))


# ---------------------------------------------------------------- construction


def explore(
    tracks: Iterable[str],
    first_order: Iterable[str],
    initial: Iterable[Hashable],
    moves: Callable[[Hashable], Iterable[tuple[int, Iterable[Hashable]]]],
    accepting: Callable[[Hashable], bool],
    cap: int | None = None,
) -> NBW:
    """Build the reachable part of an automaton given by a successor function."""
    cap = DEFAULT_OUTPUT_CAP if cap is None else cap
    index: dict = {}
    order: list = []
    queue: deque = deque()

    def add(s):
        k = index.get(s)
        if k is None:
            k = len(order)
            if k >= cap:
                raise ResourceError(f"automaton construction exceeded {cap} states")
            index[s] = k
            order.append(s)
            queue.append(s)
        return k

    inits = frozenset(add(s) for s in initial)
    delta = []
    while queue:
        s = queue.popleft()
        d = {}
        for letter, succs in moves(s):
            ks = {add(t) for t in succs}
            if ks:
                if letter in d:
                    ks |= set(d[letter])
                d[letter] = tuple(sorted(ks))
        delta.append(d)
    acc = frozenset(k for k, s in enumerate(order) if accepting(s))
    return NBW(tuple(tracks), frozenset(first_order), len(order), inits, acc, tuple(delta))


def _sccs(n: int, edges: Callable[[int], Iterable[int]], roots: Iterable[int]) -> list[list[int]]:
    """Tarjan's algorithm, iterative; only nodes reachable from roots."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    out = []
    counter = 0
    for root in roots:
        if root in index:
            continue
        work = [(root, iter(edges(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(edges(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def _post(a: NBW, q: int) -> set[int]:
    return {t for s in a.delta[q].values() for t in s}


def _nontrivial(a: NBW, comp: list[int]) -> bool:
    if len(comp) > 1:
        return True
    q = comp[0]
    return q in _post(a, q)


def _renumber(a: NBW, keep: list[int], accepting: Iterable[int] | None = None) -> NBW:
    new = {q: k for k, q in enumerate(keep)}
    delta = []
    for q in keep:
        d = {}
        for l, ss in a.delta[q].items():
            ts = tuple(sorted({new[t] for t in ss if t in new}))
            if ts:
                d[l] = ts
        delta.append(d)
    acc = a.accepting if accepting is None else accepting
    return NBW(
        a.tracks,
        a.first_order,
        len(keep),
        frozenset(new[q] for q in a.initial if q in new),
        frozenset(new[q] for q in acc if q in new),
        tuple(delta),
    )


def trim(a: NBW) -> NBW:
    """Keep only states that are reachable and can reach an accepting cycle."""
    comps = _sccs(a.num_states, lambda q: sorted(_post(a, q)), sorted(a.initial))
    good = set()
    for c in comps:
        if any(q in a.accepting for q in c) and _nontrivial(a, c):
            good.update(c)
    reach = set(q for c in comps for q in c)
    pred: dict[int, set[int]] = {q: set() for q in reach}
    for q in reach:
        for t in _post(a, q):
            pred[t].add(q)
    live = set(good)
    queue = deque(good)
    while queue:
        q = queue.popleft()
        for p in pred[q]:
            if p not in live:
                live.add(p)
                queue.append(p)
    return _renumber(a, sorted(live))


def reduce(a: NBW) -> NBW:
    """Quotient by the coarsest forward bisimulation respecting acceptance."""
    if a.num_states <= 1:
        return a
    labels: dict[bool, int] = {}
    block = [labels.setdefault(q in a.accepting, len(labels)) for q in range(a.num_states)]
    nblocks = len(labels)
    while True:
        sigs = {}
        new = []
        for q in range(a.num_states):
            sig = (
                block[q],
                frozenset((l, frozenset(block[t] for t in ss)) for l, ss in a.delta[q].items()),
            )
            new.append(sigs.setdefault(sig, len(sigs)))
        if len(sigs) == nblocks:
            break
        block, nblocks = new, len(sigs)
    if nblocks == a.num_states:
        return a
    rep = {}
    for q in range(a.num_states):
        rep.setdefault(block[q], q)
    delta = []
    for b in range(nblocks):
        q = rep[b]
        delta.append({l: tuple(sorted({block[t] for t in ss})) for l, ss in a.delta[q].items()})
    return NBW(
        a.tracks,
        a.first_order,
        nblocks,
        frozenset(block[q] for q in a.initial),
        frozenset(block[q] for q in a.accepting),
        tuple(delta),
    )


def simplify(a: NBW) -> NBW:
    return reduce(trim(a))


def direct_simulation(a: NBW) -> list[set[int]]:
    """sim[p] holds every q that direct-simulates p."""
    n = a.num_states
    F = a.accepting
    sim = [
        {q for q in range(n) if (p not in F or q in F) and all(l in a.delta[q] for l in a.delta[p])}
        for p in range(n)
    ]
    changed = True
    while changed:
        changed = False
        for p in range(n):
            drop = set()
            for q in sim[p]:
                dq = a.delta[q]
                for l, ps in a.delta[p].items():
                    qs = dq[l]
                    if not all(any(t in sim[s] for t in qs) for s in ps):
                        drop.add(q)
                        break
            if drop:
                sim[p] -= drop
                changed = True
    return sim


def prune_simulated(a: NBW) -> NBW:
    """Merge simulation-equivalent states and drop edges to strictly
    simulated siblings; the language is unchanged."""
    sim = direct_simulation(a)

    def strictly_below(t, ts):
        return any(u != t and u in sim[t] and t not in sim[u] for u in ts)

    rep = {}
    for p in range(a.num_states):
        rep[p] = min(q for q in sim[p] if p in sim[q])
    delta = []
    for p in range(a.num_states):
        d = {}
        for l, ts in a.delta[p].items():
            ts = {rep[t] for t in ts}
            d[l] = tuple(sorted(t for t in ts if not strictly_below(t, ts)))
        delta.append(d)
    init = {rep[q] for q in a.initial}
    init = frozenset(q for q in init if not strictly_below(q, init))
    out = NBW(a.tracks, a.first_order, a.num_states, init, a.accepting, tuple(delta))
    return simplify(out)


# ---------------------------------------------------------------- basic automata


def empty(tracks: Iterable[str] = (), first_order: Iterable[str] = ()) -> NBW:
    return NBW(tuple(tracks), frozenset(first_order), 0, frozenset(), frozenset(), ())


def discipline(tracks: Iterable[str], first_order: Iterable[str]) -> NBW:
    """All words in which every first-order track has exactly one set bit."""
    tracks = tuple(tracks)
    fo = frozenset(first_order)
    fo_mask = sum(1 << k for k, t in enumerate(tracks) if t in fo)
    letters = range(1 << len(tracks))

    def moves(seen):
        for l in letters:
            if l & seen & fo_mask:
                continue
            yield l, (seen | (l & fo_mask),)

    return explore(tracks, fo, [0], moves, lambda seen: seen == fo_mask)


def universal(tracks: Iterable[str] = (), first_order: Iterable[str] = ()) -> NBW:
    return discipline(tracks, first_order)


def true_automaton() -> NBW:
    return universal()


def is_zero_track_true(a: NBW) -> bool:
    return not a.tracks and is_empty(a) is None


def _atomic(tracks, first_order, n, initial, accepting, table) -> NBW:
    delta = [dict() for _ in range(n)]
    for q, l, t in table:
        delta[q].setdefault(l, set()).add(t)
    delta = tuple({l: tuple(sorted(s)) for l, s in d.items()} for d in delta)
    return NBW(tuple(tracks), frozenset(first_order), n, frozenset(initial), frozenset(accepting), delta)


def atom_eq(x: str, y: str) -> NBW:
    if x == y:
        return universal((x,), (x,))
    return _atomic((x, y), (x, y), 2, [0], [1], [(0, 0, 0), (0, 3, 1), (1, 0, 1)])


def atom_succ(x: str, y: str) -> NBW:
    if x == y:
        return empty((x,), (x,))
    return _atomic((x, y), (x, y), 3, [0], [2], [(0, 0, 0), (0, 1, 1), (1, 2, 2), (2, 0, 2)])


def atom_leq(x: str, y: str) -> NBW:
    if x == y:
        return universal((x,), (x,))
    return _atomic((x, y), (x, y), 3, [0], [2], [(0, 0, 0), (0, 3, 2), (0, 1, 1), (1, 0, 1), (1, 2, 2), (2, 0, 2)])


def atom_less(x: str, y: str) -> NBW:
    if x == y:
        return empty((x,), (x,))
    return _atomic((x, y), (x, y), 3, [0], [2], [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 2, 2), (2, 0, 2)])


def atom_member(set_var: str, pos: str, negated: bool = False) -> NBW:
    # tracks: bit0 = set, bit1 = position
    hit = 2 if negated else 3
    return _atomic(
        (set_var, pos), (pos,), 2, [0], [1], [(0, 0, 0), (0, 1, 0), (0, hit, 1), (1, 0, 1), (1, 1, 1)]
    )


# ---------------------------------------------------------------- track plumbing


def align(a: NBW, tracks: Iterable[str], first_order: Iterable[str] | None = None) -> NBW:
    """Re-express `a` over a superset of its tracks; new tracks are unconstrained."""
    tracks = tuple(tracks)
    if tracks == a.tracks:
        return a
    missing = set(a.tracks) - set(tracks)
    if missing:
        raise ValueError(f"tracks {sorted(missing)} missing from target track list")
    pos = [tracks.index(t) for t in a.tracks]
    extra = [k for k, t in enumerate(tracks) if t not in a.tracks]
    exts = [sum(b << k for b, k in zip(bits, extra)) for bits in product((0, 1), repeat=len(extra))]
    fo = a.first_order if first_order is None else frozenset(first_order)

    def move(l):
        return sum(1 << pos[k] for k in range(len(pos)) if l >> k & 1)

    delta = []
    for d in a.delta:
        nd = {}
        for l, ss in d.items():
            base = move(l)
            for e in exts:
                nd[base | e] = ss
        delta.append(nd)
    return NBW(tracks, fo, a.num_states, a.initial, a.accepting, tuple(delta))


def cylindrify(a: NBW, tracks: Iterable[str], first_order: Iterable[str] = ()) -> NBW:
    """Extend to more tracks, imposing the singleton discipline on new first-order tracks."""
    tracks = tuple(tracks)
    fo_new = frozenset(first_order) - set(a.tracks)
    b = align(a, tracks, a.first_order | fo_new)
    if fo_new:
        b = intersect(b, align(discipline(tuple(t for t in tracks if t in fo_new), fo_new), tracks, fo_new))
    return b


def _joint(a: NBW, b: NBW) -> tuple[tuple[str, ...], frozenset]:
    tracks = a.tracks + tuple(t for t in b.tracks if t not in a.tracks)
    return tracks, a.first_order | b.first_order


def intersect(a: NBW, b: NBW) -> NBW:
    """Two-phase product; tracks are merged (missing tracks are unconstrained)."""
    tracks, fo = _joint(a, b)
    a, b = align(a, tracks, fo), align(b, tracks, fo)
    a_all = len(a.accepting) == a.num_states
    b_all = len(b.accepting) == b.num_states
    if b_all or a_all:
        if a_all and not b_all:
            a, b = b, a

        def moves1(s):
            p, q = s
            bd = b.delta[q]
            for l, ps in a.delta[p].items():
                qs = bd.get(l)
                if qs:
                    yield l, [(x, y) for x in ps for y in qs]

        out = explore(tracks, fo, [(p, q) for p in a.initial for q in b.initial], moves1, lambda s: s[0] in a.accepting)
        return simplify(out)

    def moves(s):
        p, q, k = s
        if k == 0 and p in a.accepting:
            k2 = 1
        elif k == 1 and q in b.accepting:
            k2 = 0
        else:
            k2 = k
        bd = b.delta[q]
        for l, ps in a.delta[p].items():
            qs = bd.get(l)
            if qs:
                yield l, [(x, y, k2) for x in ps for y in qs]

    out = explore(
        tracks,
        fo,
        [(p, q, 0) for p in a.initial for q in b.initial],
        moves,
        # accept when the second phase completes: both components have then
        # passed their accepting sets, which keeps semi-determinism
        lambda s: s[2] == 1 and s[1] in b.accepting,
    )
    return simplify(out)


def union(a: NBW, b: NBW) -> NBW:
    """Union; first-order tracks new to either side get the discipline.

    Two deterministic operands give a deterministic product whose accepting
    states are those where either component accepts; otherwise the result
    is the disjoint union.
    """
    tracks, fo = _joint(a, b)
    a2 = cylindrify(a, tracks, fo)
    b2 = cylindrify(b, tracks, fo)
    if a2.is_deterministic() and b2.is_deterministic():
        return _product_union(a2, b2)
    n = a2.num_states
    delta = list(a2.delta) + [{l: tuple(t + n for t in ss) for l, ss in d.items()} for d in b2.delta]
    out = NBW(
        tracks,
        fo,
        n + b2.num_states,
        a2.initial | frozenset(q + n for q in b2.initial),
        a2.accepting | frozenset(q + n for q in b2.accepting),
        tuple(delta),
    )
    return simplify(out)


def _product_union(a: NBW, b: NBW) -> NBW:
    ca, sa = complete(a)
    cb, sb = complete(b)
    (ia,) = ca.initial
    (ib,) = cb.initial

    def moves(s):
        p, q = s
        if p == sa and q == sb:
            return
        for l in range(ca.num_letters):
            (x,) = ca.delta[p][l]
            (y,) = cb.delta[q][l]
            yield l, [(x, y)]

    out = explore(
        a.tracks, a.first_order, [(ia, ib)], moves, lambda s: s[0] in ca.accepting or s[1] in cb.accepting
    )
    return simplify(out)


def _mark_seen(a: NBW, k: int) -> NBW:
    """Pair states with a flag recording whether track k has fired; accepting
    states require the flag, so the accepting part never guesses track k."""
    bit = 1 << k

    def moves(s):
        q, seen = s
        for l, ts in a.delta[q].items():
            if l & bit:
                if seen:
                    continue
                yield l, [(t, True) for t in ts]
            else:
                yield l, [(t, seen) for t in ts]

    return explore(a.tracks, a.first_order, [(q, False) for q in a.initial], moves, lambda s: s[1] and s[0] in a.accepting)


def project(a: NBW, track: str) -> NBW:
    """Existentially quantify a track away."""
    if track not in a.tracks:
        raise ValueError(f"no track {track!r}")
    k = a.tracks.index(track)
    if track in a.first_order:
        a = _mark_seen(a, k)
    low = (1 << k) - 1
    delta = []
    for d in a.delta:
        nd: dict[int, set] = {}
        for l, ss in d.items():
            nl = ((l >> (k + 1)) << k) | (l & low)
            nd.setdefault(nl, set()).update(ss)
        delta.append({l: tuple(sorted(s)) for l, s in nd.items()})
    tracks = a.tracks[:k] + a.tracks[k + 1 :]
    out = NBW(tracks, a.first_order - {track}, a.num_states, a.initial, a.accepting, tuple(delta))
    return simplify(out)


def forall_first_order(a: NBW, track: str) -> NBW:
    """Universally quantify a first-order track of a deterministic automaton.

    Every placement of the position spawns one run; the breakpoint
    construction checks that all of them accept. The result is
    deterministic.
    """
    if not a.is_deterministic():
        raise ValueError("universal projection needs a deterministic automaton")
    if track not in a.tracks:
        raise ValueError(f"no track {track!r}")
    if not a.initial:
        return empty(tuple(t for t in a.tracks if t != track), a.first_order - {track})
    k = a.tracks.index(track)
    low = (1 << k) - 1
    tracks = a.tracks[:k] + a.tracks[k + 1 :]
    F = a.accepting

    def step(q, l):
        ts = a.delta[q].get(l)
        return ts[0] if ts else None

    def moves(st):
        u, S, O = st
        for l in range(1 << len(tracks)):
            l0 = ((l >> k) << (k + 1)) | (l & low)
            spawn = step(u, l0 | (1 << k))
            u2 = step(u, l0)
            if spawn is None or u2 is None:
                continue
            nxt = [step(q, l0) for q in S]
            if None in nxt:
                continue
            S2 = frozenset(nxt) | {spawn}
            if O:
                O2 = frozenset(step(q, l0) for q in O) - F
            else:
                O2 = S2 - F
            yield l, [(u2, S2, O2)]

    (q0,) = a.initial
    out = explore(tracks, a.first_order - {track}, [(q0, frozenset(), frozenset())], moves, lambda st: not st[2])
    return simplify(out)


def constrain_track_to_constant(a: NBW, track: str, s: UPSet) -> NBW:
    """Restrict `a` to words whose `track` equals the fixed set `s`."""
    if track not in a.tracks:
        raise ValueError(f"no track {track!r}")
    k = a.tracks.index(track)
    n, p = s.stem_length, s.period_length

    def moves(st):
        q, j = st
        bit = s[j]
        nj = j + 1 if j + 1 < n + p else n
        for l, qs in a.delta[q].items():
            if (l >> k & 1) == bit:
                yield l, [(t, nj) for t in qs]

    out = explore(a.tracks, a.first_order, [(q, 0) for q in a.initial], moves, lambda st: st[0] in a.accepting)
    return simplify(out)


def fix_track(a: NBW, track: str, s: UPSet) -> NBW:
    """Constrain a track to a constant and then drop it."""
    return project(constrain_track_to_constant(a, track, s), track)


# ---------------------------------------------------------------- complementation


def complete(a: NBW) -> tuple[NBW, int]:
    """Add a rejecting sink so every state reads every letter; returns (automaton, sink)."""
    sink = a.num_states
    delta = []
    letters = range(a.num_letters)
    for d in a.delta:
        delta.append({l: d.get(l, (sink,)) for l in letters})
    delta.append({l: (sink,) for l in letters})
    init = a.initial or frozenset([sink])
    return NBW(a.tracks, a.first_order, sink + 1, init, a.accepting, tuple(delta)), sink


def is_weak(a: NBW) -> bool:
    for c in _sccs(a.num_states, lambda q: sorted(_post(a, q)), range(a.num_states)):
        if _nontrivial(a, c) and len({q in a.accepting for q in c}) > 1:
            return False
    return True


def semi_deterministic_split(a: NBW) -> frozenset | None:
    """The deterministic accepting part Q2 if `a` is semi-deterministic."""
    q2 = set(a.accepting)
    queue = deque(q2)
    while queue:
        q = queue.popleft()
        for t in _post(a, q):
            if t not in q2:
                q2.add(t)
                queue.append(t)
    for q in q2:
        if any(len(ss) > 1 for ss in a.delta[q].values()):
            return None
    return frozenset(q2)


def _complement_fo(a: NBW) -> NBW:
    """Complement relative to disciplined words when every track is first-order."""
    full = (1 << len(a.tracks)) - 1
    # states from which the all-zero word is accepted
    zero = {q: a.delta[q].get(0, ()) for q in range(a.num_states)}
    sub = NBW((), frozenset(), a.num_states, frozenset(), a.accepting, tuple({0: zero[q]} if zero[q] else {} for q in range(a.num_states)))
    z = set()
    for c in _sccs(sub.num_states, lambda q: zero[q], range(sub.num_states)):
        if any(q in a.accepting for q in c) and _nontrivial(sub, c):
            z.update(c)
    changed = True
    while changed:
        changed = False
        for q in range(a.num_states):
            if q not in z and any(t in z for t in zero[q]):
                z.add(q)
                changed = True
    letters = range(1 << len(a.tracks))

    def moves(st):
        S, seen = st
        for l in letters:
            if l & seen:
                continue
            nxt = frozenset(t for q in S for t in a.delta[q].get(l, ()))
            yield l, [(nxt, seen | l)]

    out = explore(
        a.tracks,
        a.first_order,
        [(frozenset(a.initial), 0)],
        moves,
        lambda st: st[1] == full and not (st[0] & z),
    )
    return simplify(out)


def _complement_weak_det(a: NBW) -> NBW:
    c, _ = complete(a)
    acc = frozenset(range(c.num_states)) - c.accepting
    return simplify(NBW(c.tracks, c.first_order, c.num_states, c.initial, acc, c.delta))


def _complement_det(a: NBW) -> NBW:
    c, _ = complete(a)
    F = c.accepting

    def moves(st):
        phase, q = st
        for l, (t,) in c.delta[q].items():
            succ = []
            if phase == 0:
                succ.append((0, t))
            if t not in F:
                succ.append((1, t))
            yield l, succ

    (q0,) = c.initial
    inits = [(0, q0)] + ([(1, q0)] if q0 not in F else [])
    return simplify(explore(c.tracks, c.first_order, inits, moves, lambda st: st[0] == 1))


def _complement_ncsb(a: NBW, q2: frozenset) -> NBW:
    F = a.accepting
    letters = range(a.num_letters)

    cache: dict = {}

    def post(S, l):
        k = (S, l)
        r = cache.get(k)
        if r is None:
            r = cache[k] = frozenset(t for q in S for t in a.delta[q].get(l, ()))
        return r

    def moves(st):
        N, C, S, B = st
        for l in letters:
            nn = post(N, l)
            n1 = nn - q2
            s_forced = post(S, l)
            if s_forced & F:
                continue
            t = ((nn & q2) | post(C, l)) - s_forced
            # lazy guessing: between breakpoints only runs tracked in B may
            # move to S; any run can wait for the next breakpoint
            pb = post(B, l) if B else t
            free = sorted((pb & t) - F)
            succ = []
            for bits in product((0, 1), repeat=len(free)):
                x = frozenset(q for q, b in zip(free, bits) if b)
                c2 = t - x
                s2 = s_forced | x
                b2 = pb & c2
                succ.append((n1, c2, s2, b2))
            yield l, succ

    init = (frozenset(a.initial) - q2, frozenset(a.initial) & q2, frozenset(), frozenset())
    return simplify(explore(a.tracks, a.first_order, [init], moves, lambda st: not st[3]))


def _tight_rankings(states: list[int], upper: Mapping[int, int], F) -> Iterable[tuple]:
    """Tight level rankings of `states` under per-state upper bounds.

    Accepting states get even ranks; the maximum rank r is odd and every odd
    rank below r is used.
    """
    n = len(states)
    if n == 0:
        yield ()
        return
    for r in range(1, 2 * n, 2):
        odds = set(range(1, r + 1, 2))
        ranks = [0] * n

        def rec(k, missing):
            if len(missing) > n - k:
                return
            if k == n:
                yield tuple(zip(states, ranks))
                return
            q = states[k]
            top = min(upper.get(q, r), r)
            for v in range(top + 1):
                if q in F and v % 2:
                    continue
                ranks[k] = v
                yield from rec(k + 1, missing - {v})

        yield from rec(0, frozenset(odds))


def _complement_rank(a: NBW) -> NBW:
    F = a.accepting
    letters = range(a.num_letters)

    def moves(st):
        if st[0] == "S":
            S = st[1]
            for l in letters:
                nxt = sorted({t for q in S for t in a.delta[q].get(l, ())})
                succ = [("S", frozenset(nxt))]
                for g in _tight_rankings(nxt, {}, F):
                    succ.append(("R", g, frozenset()))
                yield l, succ
            return
        _, g, O = st
        for l in letters:
            upper: dict[int, int] = {}
            for q, rq in g:
                for t in a.delta[q].get(l, ()):
                    upper[t] = min(upper.get(t, rq), rq)
            nxt = sorted(upper)
            oset = {t for q in O for t in a.delta[q].get(l, ())}
            succ = []
            for g2 in _tight_rankings(nxt, upper, F):
                even = {q for q, r in g2 if r % 2 == 0}
                o2 = frozenset(even) if not O else frozenset(oset & even)
                succ.append(("R", g2, o2))
            yield l, succ

    return simplify(
        explore(a.tracks, a.first_order, [("S", frozenset(a.initial))], moves, lambda st: st[0] == "R" and not st[2])
    )


def complement(a: NBW, method: str | None = None, cap: int | None = None) -> NBW:
    """Automaton for the complement language over all words of the alphabet.

    `method` forces one construction ('weak-det', 'det', 'ncsb', 'rank');
    by default the cheapest applicable one is picked.
    """
    a = simplify(a)
    if method is None:
        if a.is_deterministic() and is_weak(complete(a)[0]):
            method = "weak-det"
        elif a.is_deterministic():
            method = "det"
        else:
            if a.num_states <= SIMULATION_LIMIT:
                b = prune_simulated(a)
                # merging may break semi-determinism; keep whichever is cheaper to complement
                if semi_deterministic_split(b) is not None or semi_deterministic_split(a) is None:
                    a = b
            if a.is_deterministic():
                return complement(a)
            method = "ncsb" if semi_deterministic_split(a) is not None else "rank"
    if method == "weak-det":
        return _complement_weak_det(a)
    if method == "det":
        return _complement_det(a)
    if method == "ncsb":
        q2 = semi_deterministic_split(a)
        if q2 is None:
            raise ValueError("automaton is not semi-deterministic")
        return _complement_ncsb(a, q2)
    if method == "rank":
        limit = state_cap() if cap is None else cap
        if a.num_states > limit:
            raise ResourceError(f"rank-based complement of {a.num_states} states exceeds cap {limit}")
        return _complement_rank(a)
    raise ValueError(f"unknown complement method {method!r}")


def negate(a: NBW) -> NBW:
    """Complement within the disciplined words of a's first-order tracks."""
    if not a.tracks:
        return universal() if is_empty(a) is None else empty()
    if set(a.tracks) == set(a.first_order):
        return _complement_fo(simplify(a))
    c = complement(a)
    if a.first_order:
        c = intersect(c, align(discipline(a.tracks, a.first_order), c.tracks, a.first_order))
    return NBW(c.tracks, a.first_order, c.num_states, c.initial, c.accepting, c.delta)


# ---------------------------------------------------------------- emptiness


def accepts(a: NBW, w: LassoWord) -> bool:
    if tuple(w.tracks) != a.tracks:
        raise ValueError(f"lasso tracks {w.tracks} do not match automaton tracks {a.tracks}")
    n, p = len(w.prefix), len(w.cycle)

    def nxt(node):
        q, i = node
        l = w.letter(i)
        j = i + 1 if i + 1 < n + p else n
        return [(t, j) for t in a.delta[q].get(l, ())]

    nodes = {}
    roots = [(q, 0) for q in sorted(a.initial)]
    ids = {}

    def nid(x):
        if x not in ids:
            ids[x] = len(ids)
            nodes[ids[x]] = x
        return ids[x]

    for r in roots:
        nid(r)
    succ_cache = {}

    def edges(k):
        if k not in succ_cache:
            succ_cache[k] = [nid(y) for y in nxt(nodes[k])]
        return succ_cache[k]

    for comp in _sccs(0, edges, [ids[r] for r in roots]):
        cs = set(comp)
        if len(comp) == 1 and comp[0] not in edges(comp[0]):
            continue
        if any(nodes[k][0] in a.accepting for k in cs):
            return True
    return False


def _bfs_path(a: NBW, sources: Iterable[int], targets: set[int], within: set[int] | None = None):
    """Shortest letter path from sources to a target, taking at least one step
    when a source is a target only if `within` is given (cycle search)."""
    prev = {}
    queue = deque()
    for s in sources:
        prev[("s", s)] = None
        queue.append(("s", s))
    while queue:
        node = queue.popleft()
        q = node[1]
        for l, ts in sorted(a.delta[q].items()):
            for t in ts:
                if within is not None and t not in within:
                    continue
                key = ("n", t)
                if key in prev:
                    continue
                prev[key] = (node, l)
                if t in targets:
                    letters = []
                    cur = key
                    while prev[cur] is not None:
                        cur, l2 = prev[cur]
                        letters.append(l2)
                    return cur[1], t, letters[::-1]
                queue.append(key)
    return None


def is_empty(a: NBW) -> LassoWord | None:
    """None if the language is empty, else an accepted lasso word."""
    comps = _sccs(a.num_states, lambda q: sorted(_post(a, q)), sorted(a.initial))
    for c in comps:
        if not _nontrivial(a, c):
            continue
        accs = [q for q in c if q in a.accepting]
        if not accs:
            continue
        target = min(accs)
        if target in a.initial:
            stem: list[int] = []
        else:
            _, _, stem = _bfs_path(a, sorted(a.initial), {target})
        _, _, cycle = _bfs_path(a, [target], {target}, within=set(c))
        w = LassoWord(a.tracks, tuple(stem), tuple(cycle))
        if not accepts(a, w):  # pragma: no cover - internal consistency guard
            raise AssertionError("emptiness witness failed re-verification")
        return w
    return None


# ---------------------------------------------------------------- DOT


def to_dot(a: NBW, name: str = "nbw") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for q in range(a.num_states):
        shape = "doublecircle" if q in a.accepting else "circle"
        lines.append(f'  q{q} [shape={shape}, label="{q}"];')
    for q in sorted(a.initial):
        lines.append(f"  init{q} [shape=point];")
        lines.append(f"  init{q} -> q{q};")
    k = len(a.tracks)
    for q in range(a.num_states):
        by_target: dict[int, list[int]] = {}
        for l, ts in a.delta[q].items():
            for t in ts:
                by_target.setdefault(t, []).append(l)
        for t in sorted(by_target):
            labels = ",".join(format(l, f"0{k}b")[::-1] if k else "ε" for l in sorted(by_target[t]))
            lines.append(f'  q{q} -> q{t} [label="{labels}"];')
    if k:
        lines.append(f'  // letter bits in track order: {", ".join(a.tracks)}')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- S1S compiler


def from_s1s(
    f: Formula,
    constants: Mapping[str, UPSet] | None = None,
    first_order: Iterable[str] = (),
    tracks: Iterable[str] | None = None,
) -> NBW:
    """Automaton for the satisfying assignments of an S1S formula.

    Free variables become tracks (sorted by name unless `tracks` is given).
    Variables in `constants` are fixed to the given sets instead; a
    first-order constant must be a singleton. `first_order` names free
    variables to treat as first-order even if only used in ways that do not
    say so.
    """
    compiler = _S1SCompiler(dict(constants or {}))
    a = compiler.compile(f, True)
    fo_free = set(first_order) | _fo_free(f)
    so, fo = free_vars(f)
    want = set(so | fo) - set(compiler.constants)
    order = tuple(tracks) if tracks is not None else tuple(sorted(want))
    fo_set = frozenset(t for t in order if t in fo_free)
    return cylindrify(a, order, fo_set)


def _mentions(f: Formula, var: str) -> bool:
    so, fo = free_vars(f)
    return var in so or var in fo


def _miniscope(f: Quant) -> Formula | None:
    """Push a quantifier past conjuncts or disjuncts that do not use its variable."""
    body = f.body
    if not isinstance(body, (And, Or)):
        return None
    if isinstance(body, Or) if f.kind == EXISTS else isinstance(body, And):
        # distributes over the matching connective
        return type(body)(Quant(f.kind, f.sort, f.var, body.left), Quant(f.kind, f.sort, f.var, body.right))
    left_uses, right_uses = _mentions(body.left, f.var), _mentions(body.right, f.var)
    if left_uses and right_uses:
        return None
    if not left_uses:
        return type(body)(body.left, Quant(f.kind, f.sort, f.var, body.right))
    return type(body)(Quant(f.kind, f.sort, f.var, body.left), body.right)


def _not_at(track: str, n: int) -> NBW:
    """Disciplined words over one first-order track whose position is not n."""
    past, done = n + 1, n + 2
    table = [(k, 0, k + 1) for k in range(n)] + [(k, 1, done) for k in range(n)]
    table += [(n, 0, past), (past, 0, past), (past, 1, done), (done, 0, done)]
    return _atomic((track,), (track,), n + 3, [0], [done], table)


def single_position(a: NBW, track: str) -> int | None:
    """n if `a` has the single first-order track and accepts exactly {n}."""
    if a.tracks != (track,):
        return None
    w = is_empty(a)
    if w is None:
        return None
    s = w.track(track)
    if not s.is_singleton:
        return None
    (n,) = s.elements_below(s.stem_length)
    return n if is_empty(intersect(a, _not_at(track, n))) is None else None


def _guarded(f: Quant) -> tuple[Formula, Formula] | None:
    """(guard, rest) for exists v. guard & rest and forall v. guard -> rest."""
    b = f.body
    if f.kind == EXISTS and isinstance(b, And):
        return b.left, b.right
    if f.kind == FORALL and isinstance(b, Implies):
        return b.left, b.right
    if f.kind == FORALL and isinstance(b, Or) and isinstance(b.left, Not):
        return b.left.arg, b.right
    return None


def _fo_free(f: Formula) -> set[str]:
    return set(free_vars(f)[1])


class _S1SCompiler:
    def __init__(self, constants: dict[str, UPSet]):
        self.constants = constants
        self.cache: dict = {}

    def compile(self, f: Formula, pos: bool) -> NBW:
        key = (f, pos, frozenset(self.constants.items()))
        hit = self.cache.get(key)
        if hit is None:
            hit = self._compile(f, pos)
            if not hit.tracks:
                hit = universal() if is_empty(hit) is not None else empty()
            self.cache[key] = hit
        return hit

    def _atom(self, a: NBW, pos: bool) -> NBW:
        if not pos:
            a = negate(a)
        for t in a.tracks:
            if t in self.constants:
                a = fix_track(a, t, self.constants[t])
        return a

    def _pinned(self, f: Quant, pos: bool) -> NBW | None:
        """A position variable fixed by its guard becomes a constant."""
        if f.sort != NAT:
            return None
        g = _guarded(f)
        if g is None:
            return None
        guard, rest = g
        if free_vars(guard) != (frozenset(), frozenset({f.var})):
            return None
        n = single_position(self.compile(guard, True), f.var)
        if n is None:
            return None
        self.constants[f.var] = UPSet.singleton(n)
        try:
            return self.compile(rest, pos)
        finally:
            del self.constants[f.var]

    def _compile(self, f: Formula, pos: bool) -> NBW:
        if isinstance(f, Const):
            return universal() if f.value == pos else empty()
        if isinstance(f, Eq):
            return self._atom(atom_eq(f.left, f.right), pos)
        if isinstance(f, Succ):
            return self._atom(atom_succ(f.left, f.right), pos)
        if isinstance(f, Member):
            return self._atom(atom_member(f.set_var, f.pos, negated=not pos), True)
        if isinstance(f, Not):
            return self.compile(f.arg, not pos)
        if isinstance(f, Implies):
            return self.compile(Or(Not(f.left), f.right), pos)
        if isinstance(f, Iff):
            return self.compile(Or(And(f.left, f.right), And(Not(f.left), Not(f.right))), pos)
        if isinstance(f, (And, Or)):
            left = self.compile(f.left, pos)
            conj = isinstance(f, And) == pos
            if not left.tracks:
                truth = left.num_states > 0
                if conj and not truth:
                    return empty()
                if not conj and truth:
                    return universal()
                return self.compile(f.right, pos)
            right = self.compile(f.right, pos)
            return intersect(left, right) if conj else union(left, right)
        if isinstance(f, Quant):
            if f.sort not in (SET, NAT):
                raise ValueError(f"quantifier sort {f.sort!r} is not S1S")
            leq = match_s1s_leq(f)
            if leq is not None:
                return self._atom(atom_leq(*leq), pos)
            if f.var in self.constants:
                raise ValueError(f"quantified variable {f.var!r} shadows a constant")
            pinned = self._pinned(f, pos)
            if pinned is not None:
                return pinned
            split = _miniscope(f)
            if split is not None:
                return self.compile(split, pos)
            universal_q = (f.kind == EXISTS) != pos
            if universal_q and f.sort == NAT:
                direct = self.compile(f.body, pos)
                if f.var not in direct.tracks:
                    return direct
                if direct.is_deterministic():
                    return forall_first_order(direct, f.var)
            # exists x. b = project(b); forall x. b = not exists x. not b
            body = self.compile(f.body, f.kind == EXISTS)
            if f.var in body.tracks:
                body = project(body, f.var)
            # a vacuous quantifier is dropped: both domains are nonempty
            return body if (f.kind == EXISTS) == pos else negate(body)
        raise TypeError(f"not an S1S formula node: {f!r}")
