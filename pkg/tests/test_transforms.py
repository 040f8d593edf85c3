import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import PROPS, HyperGen, S1SGen, lemma43_prefix, ltl, model, up_set, up_trace
from hypertrace.eval import eval_hyper, eval_ltl_lasso, eval_s1s
from hypertrace.syntax import (
    CTRACE,
    EXISTS,
    FORALL,
    TRACE,
    And,
    Pred,
    Prop,
    TIME,
    Quant,
    QuantEntry,
    QuantifierPrefix,
    free_vars,
    parse,
    split_prefix,
    walk,
)
from hypertrace.traces import Assignment, TraceSet, constant, from_support_sets, support_set
from hypertrace.transforms import (
    ShapeError,
    insert_exists_hat,
    ltl_to_fo,
    relax_existentials,
    remove_exists_hats,
    remove_forall,
    to_hyper,
    to_hyper_names,
    to_s1s,
    to_s1s_with_names,
    to_unconstrained,
    tr_hqptl_to_hyper,
)

TWO_PLUS_ONE = parse(
    "exists ctrace p1. exists ctrace p2. forall ctrace p3. exists time i. exists time j. "
    "a(p1,i) & b(p3,j) & !a(p2,j)"
)


def prefix_of(f):
    return [(e.kind, e.sort) for e in split_prefix(f)[0]]


# ---------------------------------------------------------------- removing hats


def test_remove_forall_instantiates_each_existential():
    g = remove_forall(TWO_PLUS_ONE)
    assert g == parse(
        "exists ctrace p1. exists ctrace p2. "
        "(exists time i_1. exists time j_1. a(p1,i_1) & b(p1,j_1) & !a(p2,j_1)) & "
        "(exists time i_2. exists time j_2. a(p1,i_2) & b(p2,j_2) & !a(p2,j_2))"
    )
    assert not any(isinstance(h, Quant) and h.kind == FORALL and h.sort == CTRACE for h in walk(g))


def test_remove_forall_without_universal_hats_is_identity():
    f = parse("exists ctrace p1. exists time i. a(p1,i)")
    assert remove_forall(f) == f


def test_remove_exists_hats_drops_constraint():
    g = remove_exists_hats(remove_forall(TWO_PLUS_ONE))
    assert prefix_of(g)[:2] == [(EXISTS, TRACE), (EXISTS, TRACE)]
    assert to_unconstrained(TWO_PLUS_ONE) == g


def test_universal_hat_first_is_a_shape_error():
    with pytest.raises(ShapeError) as e:
        remove_forall(parse("forall ctrace p. exists time i. a(p,i)"))
    assert e.value.entry is not None


def test_insert_exists_hat_after_leading_existentials():
    f = parse("exists trace p. forall ctrace r. exists time i. a(r,i)")
    assert insert_exists_hat(f) == parse(
        "exists trace p. exists ctrace pi0. forall ctrace r. exists time i. a(r,i)"
    )


def _hat_formula(rng):
    entries = [QuantEntry(k, s, f"v{n}") for n, (k, s) in enumerate(lemma43_prefix(rng))]
    tr = [e.var for e in entries if not e.is_time]
    ti = [e.var for e in entries if e.is_time]
    body = HyperGen(rng, PROPS[:2], sorts=(TIME,)).formula(3, tr, ti)
    return QuantifierPrefix(tuple(entries)).attach(body)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_unconstrained_result_has_no_hats(seed):
    f = _hat_formula(random.Random(seed))
    g = to_unconstrained(f)
    assert not any(isinstance(h, Quant) and h.sort == CTRACE for h in walk(g))
    assert free_vars(g) == (set(), set())


def test_relax_is_implied_on_random_models():
    rng = random.Random(43)
    checked = 0
    for _ in range(300):
        props = PROPS[:2]
        f = HyperGen(rng, props).formula(4)
        g = relax_existentials(f)
        assert not any(isinstance(h, Quant) and h.sort == CTRACE and h.kind == EXISTS for h in walk(g))
        m = model(rng, props)
        if eval_hyper(m, None, f):
            checked += 1
            assert eval_hyper(m, None, g)
    assert checked > 50


# ---------------------------------------------------------------- S1S bridge


def test_to_s1s_splits_per_proposition():
    f = parse("exists trace p. forall time i. a(p,i) & b(p,i)")
    assert to_s1s(f, ["a", "b"]) == parse(
        "exists set p_a. exists set p_b. forall nat i. p_a(i) & p_b(i)", "s1s"
    )
    g, names = to_s1s_with_names(parse("forall time i. a(p,i)", allow_free=True), ["a"])
    assert names == {("p", "a"): "p_a"}
    with pytest.raises(ShapeError):
        to_s1s(parse("exists ctrace p. forall time i. a(p,i)"))


def test_to_s1s_agrees_on_free_traces():
    rng = random.Random(61)
    for _ in range(200):
        props = PROPS[:2]
        f = HyperGen(rng, props, sorts=(TIME,)).formula(4, ["p"], ["i"])
        t = up_trace(rng, props)
        at = rng.randrange(4)
        g, names = to_s1s_with_names(f, props)
        sets = {names[("p", a)]: s for a, s in ((a, support_set(t, a)) for a in props) if ("p", a) in names}
        assert eval_hyper(_empty(props), Assignment({"p": t}, {"i": at}), f) == eval_s1s(g, sets, {"i": at})


def _empty(props):
    return TraceSet.of(props, [constant()])


def test_to_hyper_atoms():
    f = parse("exists set X. forall nat x. X(x)", "s1s")
    g = to_hyper(f)
    assert prefix_of(g)[0] == (EXISTS, TRACE)
    assert any(isinstance(h, Pred) and h.trace == "pi_X" for h in walk(g))
    assert to_hyper_names(parse("X(x)", "s1s", allow_free=True)) == {"X": "pi_X"}


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_to_hyper_agrees_with_s1s(seed):
    rng = random.Random(seed)
    f = S1SGen(rng).formula(4)
    so, fo = free_vars(f)
    sets = {v: up_set(rng) for v in so}
    pos = {v: rng.randrange(4) for v in fo}
    g = to_hyper(f)
    names = to_hyper_names(f)
    tr = {names[v]: from_support_sets({v: s}) for v, s in sets.items()}
    assert eval_s1s(f, sets, pos) == eval_hyper(_empty([]), Assignment(tr, pos), g)


# ---------------------------------------------------------------- LTL and HyperQPTL


def test_ltl_to_fo_next():
    g = ltl_to_fo(parse("X a", "ltl"), "i0")
    assert g == parse(
        "exists time j. i0 < j & (forall time k. i0 < k -> j < k | j = k) & a(t,j)", allow_free=True
    )


def test_ltl_to_fo_matches_lasso_semantics():
    rng = random.Random(336)
    for _ in range(500):
        f = ltl(rng, 4, [Prop("a"), Prop("b")])
        t = up_trace(rng, ("a", "b"), 2, 3)
        at = rng.randrange(5)
        g = ltl_to_fo(f, "i0")
        assert eval_hyper(_empty(["a", "b"]), Assignment({"t": t}, {"i0": at}), g) == eval_ltl_lasso(t, f, at)


def test_hqptl_translation_shape():
    f = parse("forall trace p. exists prop q. q <-> a[p]", "hqptl")
    g = tr_hqptl_to_hyper(f)
    assert prefix_of(g)[:2] == [(FORALL, CTRACE), (EXISTS, TRACE)]
    assert isinstance(g.body.body.body, And)
