import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import lasso, nbw, up_set
from hypertrace.automata import (
    NBW,
    LassoWord,
    ResourceError,
    accepts,
    complement,
    constrain_track_to_constant,
    direct_simulation,
    empty,
    from_s1s,
    intersect,
    is_empty,
    negate,
    project,
    prune_simulated,
    semi_deterministic_split,
    simplify,
    state_cap,
    to_dot,
    union,
    universal,
)
from hypertrace.eval import eval_s1s
from hypertrace.syntax import parse
from hypertrace.traces import UPSet


def s1s(text):
    return parse(text, "s1s", allow_free=True)


def same_language(a, b, rng, n=60):
    return all(accepts(a, w) == accepts(b, w) for w in (lasso(rng, a.tracks) for _ in range(n)))


# ---------------------------------------------------------------- basics


def test_succ_automaton_dot():
    a = from_s1s(s1s("succ(x,y)"))
    assert to_dot(a, "succ") == (
        "digraph succ {\n"
        "  rankdir=LR;\n"
        '  q0 [shape=circle, label="0"];\n'
        '  q1 [shape=circle, label="1"];\n'
        '  q2 [shape=doublecircle, label="2"];\n'
        "  init0 [shape=point];\n"
        "  init0 -> q0;\n"
        '  q0 -> q0 [label="00"];\n'
        '  q0 -> q1 [label="10"];\n'
        '  q1 -> q2 [label="01"];\n'
        '  q2 -> q2 [label="00"];\n'
        "  // letter bits in track order: x, y\n"
        "}\n"
    )
    assert to_dot(empty(), "e") == "digraph e {\n  rankdir=LR;\n}\n"


def test_lasso_tracks_round_trip():
    sets = {"X": UPSet((True,), (False, True)), "Y": UPSet.from_elements([2])}
    w = LassoWord.from_sets(("X", "Y"), sets)
    assert w.track("X") == sets["X"] and w.track("Y") == sets["Y"]
    assert w.letter(2) == 0b11 and w.letter(3) == 0b00
    with pytest.raises(ValueError):
        LassoWord(("X",), (1,), ())


def test_irreflexive_order_is_empty():
    a = from_s1s(parse("exists nat i. i < i", "s1s"))
    assert a.tracks == () and is_empty(a) is None


def test_infinitely_many_members():
    a = from_s1s(s1s("forall nat i. exists nat j. i < j & X(j)"))
    w = is_empty(a)
    assert w is not None and any(w.track("X")[len(w.prefix) + k] for k in range(len(w.cycle)))
    assert is_empty(constrain_track_to_constant(a, "X", UPSet((), (True, False)))) is not None
    assert is_empty(constrain_track_to_constant(a, "X", UPSet.from_elements([1, 2]))) is None


def test_empty_and_universal():
    e, u = empty(("x",)), universal(("x",))
    assert is_empty(e) is None and is_empty(u) is not None
    assert is_empty(complement(u)) is None
    assert is_empty(complement(e)) is not None
    rng = random.Random(1)
    a = nbw(rng)
    assert same_language(union(a, e), a, rng)
    assert same_language(intersect(a, u), a, rng)
    p = project(u, "x")
    assert p.tracks == () and is_empty(p) is not None


def test_zero_track_negation_flips_emptiness():
    t = from_s1s(parse("forall nat i. exists nat j. i < j", "s1s"))
    assert is_empty(t) is not None
    assert is_empty(negate(t)) is None


def test_rank_cap(monkeypatch):
    monkeypatch.setenv("HYPERTRACE_STATE_CAP", "3")
    assert state_cap() == 3
    rng = random.Random(0)
    while True:
        a = simplify(nbw(rng, max_states=6))
        if a.num_states > 3:
            break
    with pytest.raises(ResourceError):
        complement(a, method="rank")


# ---------------------------------------------------------------- complementation


@pytest.mark.parametrize("method", [None, "rank"])
def test_complement_flips_membership(method):
    rng = random.Random(77 if method else 78)
    for _ in range(60):
        a = nbw(rng, ("x", "y"), max_states=4)
        try:
            c = complement(a, method=method)
        except ResourceError:
            continue
        for _ in range(30):
            w = lasso(rng, a.tracks)
            assert accepts(c, w) != accepts(a, w)


def test_ncsb_on_semi_deterministic_inputs():
    rng = random.Random(80)
    done = 0
    while done < 40:
        a = simplify(nbw(rng, ("x",), max_states=5))
        if a.is_deterministic() or semi_deterministic_split(a) is None:
            continue
        c = complement(a, method="ncsb")
        for _ in range(30):
            w = lasso(rng, a.tracks)
            assert accepts(c, w) != accepts(a, w)
        done += 1


def test_non_semi_deterministic_rejected_by_ncsb():
    # the accepting state reaches state 1, which branches
    a = NBW(("x",), frozenset(), 3, frozenset({0}), frozenset({2}), ({0: (0, 1)}, {0: (1, 2)}, {0: (1, 2)}))
    assert semi_deterministic_split(a) is None
    with pytest.raises(ValueError):
        complement(a, method="ncsb")


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32))
def test_simulation_pruning_preserves_language(seed):
    rng = random.Random(seed)
    a = nbw(rng, ("x", "y"), max_states=6, density=0.4)
    sim = direct_simulation(a)
    assert all(q in sim[q] for q in range(a.num_states))
    b = prune_simulated(a)
    assert b.num_states <= a.num_states
    assert same_language(a, b, rng, 40)


# ---------------------------------------------------------------- S1S compilation


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_compiled_automaton_matches_evaluator(seed):
    rng = random.Random(seed)
    texts = [
        "X(x) & succ(x,y) & !X(y)",
        "forall nat z. X(z) -> Y(z)",
        "exists nat z. x < z & z < y & X(z)",
        "forall nat z. x <= z -> (exists nat u. z < u & Y(u))",
    ]
    f = s1s(rng.choice(texts))
    a = from_s1s(f, tracks=("X", "Y", "x", "y"), first_order=("x", "y"))
    sets = {"X": up_set(rng), "Y": up_set(rng)}
    pos = {"x": rng.randrange(4), "y": rng.randrange(4)}
    w = LassoWord.from_sets(a.tracks, {**sets, "x": UPSet.singleton(pos["x"]), "y": UPSet.singleton(pos["y"])})
    assert accepts(a, w) == eval_s1s(f, sets, pos)
