import random
from pathlib import Path

import pytest

from generators import up_trace
from hypertrace.decide import prefix_code
from hypertrace.eval import eval_hyper
from hypertrace.minsky import (
    Configuration,
    Lasso,
    Transition,
    check_helpers,
    check_shape,
    config_props,
    decode_trace,
    encode,
    find_lasso,
    guess_traces,
    helper_formula,
    mutate,
    parse_machine,
    render_lasso,
    render_machine,
    step,
    transition_props,
    witness_model,
)
from hypertrace.syntax import ParseError, free_vars, quantifier_prefix, to_prenex
from hypertrace.traces import Assignment, TraceSet, constant

MACHINES = Path(__file__).resolve().parent.parent / "corpus" / "machines"


def machine(name):
    return parse_machine((MACHINES / f"{name}.mm").read_text())


# ---------------------------------------------------------------- machines


def test_step_respects_guards():
    m = machine("two-counters")
    assert step(m, Configuration("q0")) == [(Transition("q0", 1, "inc", "q1"), Configuration("q1", 1, 0))]
    # dec and isZero are blocked unless the counter allows them
    assert step(m, Configuration("q3", 0, 0)) == []
    moves = step(m, Configuration("q2", 1, 0))
    assert [d for _, d in moves] == [Configuration("q3", 0, 0), Configuration("q0", 1, 0)]


def test_negative_counters_rejected():
    with pytest.raises(ValueError):
        Configuration("q0", -1, 0)


def test_pump_lasso():
    m = machine("pump")
    lasso = find_lasso(m, 3, 10)
    assert len(lasso) == 2 and lasso.stem == ()
    assert lasso.cycle == (Configuration("q0"), Configuration("q1", 1, 0))
    assert render_lasso(lasso) == "stem: \ncycle: (q0, 0, 0) (q1, 1, 0)\n"


def test_zero_loop_lasso():
    lasso = find_lasso(machine("zero-loop"), 1, 1)
    assert lasso.cycle == (Configuration("q0"),)


@pytest.mark.parametrize("name", ["stuck", "counter-up"])
def test_no_lasso_within_caps(name):
    assert find_lasso(machine(name), 4, 20) is None


def test_lasso_verification():
    m = machine("pump")
    bad = Lasso((), (Configuration("q0"),), (Transition("q0", 1, "inc", "q1"),))
    assert not bad.verify(m)
    with pytest.raises(ValueError):
        witness_model(m, bad)


@pytest.mark.parametrize(
    "text",
    [
        "states: q0; init: q1; delta: ;",
        "states: q0; init: q0; delta: (q0, 3, inc, q0);",
        "states: q0; init: q0; delta: (q0, 1, jump, q0);",
        "states: q0; init: q0; delta: (q0, 1, inc, q9);",
        "states: mem1; init: mem1; delta: ;",
    ],
)
def test_bad_machines(text):
    with pytest.raises(ParseError):
        parse_machine(text)


@pytest.mark.parametrize("path", sorted(MACHINES.glob("*.mm")), ids=lambda p: p.name)
def test_machine_round_trip(path):
    m = parse_machine(path.read_text())
    assert parse_machine(render_machine(m)) == m


# ---------------------------------------------------------------- encoding


def test_alphabet_sizes_single_state():
    m = machine("zero-loop")
    assert len(config_props(m)) == 3
    assert len(transition_props(m)) == 7
    assert len(m.alphabet) == 3 + 7 + 2


def test_encoding_shape():
    for name in ("zero-loop", "pump", "two-counters"):
        f = encode(machine(name))
        assert free_vars(f) == (set(), set())
        assert prefix_code(quantifier_prefix(to_prenex(f))) == "nNnnNHhht"


def test_helper_arity_checked():
    m = machine("pump")
    with pytest.raises(ValueError):
        helper_formula("singleTr", m, "pi")
    with pytest.raises(ValueError):
        helper_formula("nope", m)


def test_single_and_valid_transition():
    m = machine("pump")
    single = helper_formula("singleTr", m, "p", "i")
    valid = helper_formula("validTr", m, "p", "i")
    ts = TraceSet.of(m.alphabet, [constant()])
    good = constant({"q0_from", "q1_to", "to1", "inc"})
    wrong_move = constant({"q0_from", "q1_to", "to1", "dec"})
    two_ops = constant({"q0_from", "q1_to", "to1", "inc", "dec"})
    run = lambda f, t: eval_hyper(ts, Assignment({"p": t}, {"i": 0}), f)
    assert run(single, good) and run(valid, good)
    assert run(single, wrong_move) and not run(valid, wrong_move)
    assert not run(single, two_ops)


def test_same_transition_is_reflexive():
    m = machine("two-counters")
    f = helper_formula("sameTr", m, "p", "i", "i")
    rng = random.Random(9)
    props = transition_props(m)
    ts = TraceSet.of(m.alphabet, [constant()])
    for _ in range(50):
        t = up_trace(rng, props, 3, 2)
        assert eval_hyper(ts, Assignment({"p": t}, {"i": rng.randrange(6)}), f)


# ---------------------------------------------------------------- witness models


def test_zero_loop_witness_trace():
    m = machine("zero-loop")
    ts = witness_model(m, find_lasso(m, 1, 1))
    assert ts.names == ("c0",)
    assert ts["c0"] == constant({"q0", "q0_from", "q0_to", "to1", "isZero"})
    assert decode_trace(m, ts["c0"]) == (Configuration("q0"), Transition("q0", 1, "isZero", "q0"))
    assert check_shape(m, ts) == []


def test_witness_offset_shifts_memory():
    m = machine("pump")
    ts = witness_model(m, find_lasso(m, 3, 10), offset=1)
    t = ts["c1"]
    assert "mem1" in t[0] and "mem1" in t[1] and "mem1" not in t[2]
    assert decode_trace(m, t, offset=1)[0] == Configuration("q1", 1, 0)
    assert check_shape(m, ts, offset=1) == []


def test_helpers_hold_on_witnesses():
    for name in ("zero-loop", "pump", "two-counters"):
        m = machine(name)
        ts = witness_model(m, find_lasso(m, 3, 20), offset=1)
        report = check_helpers(m, ts, start=1)
        assert report.ok, (name, report.failures)
        assert report.checked > 0


def test_mutated_state_is_caught():
    m = machine("zero-loop")
    ts = witness_model(m, find_lasso(m, 1, 1), offset=1)
    bad = mutate(ts, "c0", "isZero", 2)
    assert not check_helpers(m, bad, start=1).ok
    assert check_shape(m, bad, offset=1)


def test_guess_family():
    gs = guess_traces(3)
    assert len(gs) == 4
    assert gs[0] == constant()
    assert gs[2].unroll(4) == [set(), {"guess"}, {"guessed"}, {"guessed"}]
