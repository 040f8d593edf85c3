import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import up_set, up_trace
from hypertrace.syntax import ParseError
from hypertrace.traces import (
    Assignment,
    TraceSet,
    UPSet,
    UPTrace,
    agree_on,
    canonicalize,
    combine,
    constant,
    enumerate_up_sets,
    enumerate_up_traces,
    from_support_sets,
    joint_bound,
    parse_traceset,
    render_traceset,
    render_word,
    support_set,
    up,
    value_at,
)

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

valuations = st.frozensets(st.sampled_from(["a", "b", "c"]))
traces = st.builds(
    up,
    st.lists(valuations, max_size=4),
    st.lists(valuations, min_size=1, max_size=4),
)


def test_value_at_stem_and_loop():
    t = up([{"a"}, {"b"}], [{"a", "b"}, set()])
    assert [value_at(t, i) for i in range(6)] == [
        {"a"},
        {"b"},
        {"a", "b"},
        set(),
        {"a", "b"},
        set(),
    ]


def test_canonical_forms():
    # a(ba)^w == (ab)^w, and (aa)^w == a^w
    assert up([{"a"}], [{"b"}, {"a"}]) == up([], [{"a"}, {"b"}])
    assert up([], [{"a"}, {"a"}]) == constant({"a"})
    t = up([{"a"}, set()], [set(), set()])
    assert (t.prefix, t.period) == ((frozenset({"a"}),), (frozenset(),))
    assert canonicalize(t) == t


def test_agree_on_needs_both_periods():
    t1 = up([{"a"}], [set()])
    t2 = up([], [{"a"}, set()])
    assert not agree_on(t1, t2, {"a"})
    assert agree_on(t1, t2, set())
    assert agree_on(up([{"a", "b"}], [{"b"}]), up([{"a"}], [set()]), {"a"})


def test_empty_period_rejected():
    with pytest.raises(ValueError):
        up([{"a"}], [])


@settings(max_examples=300)
@given(traces)
def test_canonical_is_minimal_and_equal(t):
    assert canonicalize(t) == t
    n = joint_bound(t) + 3
    assert t.unroll(n) == up(t.unroll(t.stem_length), t.period).unroll(n)
    # no shorter period and no foldable prefix
    p = t.period
    assert all(p != p[:d] * (len(p) // d) for d in range(1, len(p)) if len(p) % d == 0)
    assert not t.prefix or t.prefix[-1] != p[-1]


@settings(max_examples=300)
@given(traces, traces)
def test_agree_on_matches_long_unroll(t1, t2):
    ys = {"a", "b"}
    want = all(t1[i] & ys == t2[i] & ys for i in range(60))
    assert agree_on(t1, t2, ys) == want


@settings(max_examples=300)
@given(traces, st.integers(0, 40))
def test_support_sets_round_trip(t, i):
    sets = {p: support_set(t, p) for p in ("a", "b", "c")}
    back = from_support_sets(sets)
    assert back == t
    assert (i in sets["a"]) == ("a" in t[i])


def test_support_sets_round_trip_fixed_seed():
    rng = random.Random(500)
    for _ in range(500):
        t = up_trace(rng, ("a", "b"), max_prefix=4, max_period=4)
        assert from_support_sets({p: support_set(t, p) for p in ("a", "b")}) == t


def test_up_sets():
    s = UPSet.from_elements([1, 3])
    assert s.elements_below(6) == [1, 3]
    assert UPSet.singleton(2).is_singleton
    assert not s.is_singleton
    assert UPSet((), (False,)).is_empty
    assert str(UPSet((), (True, False))) == "(10)^w"
    rng = random.Random(7)
    for _ in range(100):
        u = up_set(rng, 3, 3)
        assert UPSet(u.prefix, u.period + u.period) == u


def test_enumeration_counts_are_deduplicated():
    # 0^w 1^w (01)^w (10)^w 0 1^w 1 0^w 0(01)^w 1(10)^w; 0(10)^w folds to (01)^w
    assert len(enumerate_up_sets(1, 2)) == 8
    ts = enumerate_up_traces(["a"], 1, 2)
    assert len(ts) == len(set(ts)) == 8


def test_combine_renames():
    t = combine({"x": constant({"a"}), "y": up([{"a"}], [set()])}, {"y": {"a": "a_y"}})
    assert t.unroll(3) == [{"a", "a_y"}, {"a"}, {"a"}]


def test_render_and_parse_trace_set():
    ts = TraceSet.of(["a", "b"], {"u": up([{"a"}], [{"a", "b"}, set()]), "v": constant()})
    text = render_traceset(ts)
    assert text == "props: a, b;\ntrace u = [ {a} | {a,b} {} ];\ntrace v = [ | {} ];\n"
    assert parse_traceset(text) == ts
    assert render_word(ts["v"]) == "[ | {} ]"


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.traces")), ids=lambda p: p.name)
def test_corpus_trace_files(path):
    ts = parse_traceset(path.read_text())
    assert len(ts) >= 1
    assert parse_traceset(render_traceset(ts)) == ts


@pytest.mark.parametrize(
    "text",
    [
        "trace t = [ | {} ];",
        "props: a; trace t = [ {a} | ];",
        "props: a; trace t = [ | {b} ];",
        "props: a; trace t = [ | {} ]; trace t = [ | {a} ];",
    ],
)
def test_bad_trace_files(text):
    with pytest.raises((ParseError, ValueError)):
        parse_traceset(text)


def test_trace_set_subset_and_assignment():
    ts = TraceSet.of(["a"], [constant(), constant({"a"}), constant()])
    assert len(ts.distinct()) == 2
    assert ts.subset(["t1"]).traces == (constant({"a"}),)
    asg = Assignment().with_trace("p", constant()).with_time("i", 3)
    assert asg.times == {"i": 3} and asg.with_time("i", 4).times["i"] == 4
    assert asg.times["i"] == 3


def test_trace_is_hashable_and_frozen():
    t = constant({"a"})
    assert {t: 1}[constant({"a"})] == 1
    with pytest.raises(AttributeError):
        t.prefix = ()
    assert isinstance(t, UPTrace)
