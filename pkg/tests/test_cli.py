import json
from pathlib import Path

import pytest

from hypertrace.cli import run
from hypertrace.syntax import parse_document

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
EXPECTED = json.loads((CORPUS / "expected.json").read_text())


def c(name):
    return str(CORPUS / name)


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def as_json(text):
    obj = json.loads(text)
    assert obj.pop("v") == 1
    return obj


@pytest.fixture(autouse=True)
def _restore_cap(monkeypatch):
    # --state-cap writes the environment; keep it local to each test
    monkeypatch.setenv("HYPERTRACE_STATE_CAP", "12")


# ---------------------------------------------------------------- syntax


@pytest.mark.parametrize("name", sorted(EXPECTED), ids=str)
def test_parse_round_trips(capsys, name):
    code, out, _ = call(capsys, "parse", c(name))
    assert code == 0
    assert parse_document(out)[0] == parse_document((CORPUS / name).read_text())[0]


def test_parse_error_reports_kind(capsys, tmp_path):
    bad = tmp_path / "bad.hlt"
    bad.write_text("exists trace p. a(p,p)")
    code, out, err = call(capsys, "parse", str(bad))
    assert code == 65 and out == ""
    assert as_json(err)["error"] == "sort-clash"


def test_normalize(capsys, tmp_path):
    f = tmp_path / "n.hlt"
    f.write_text("!(exists ctrace p. forall time i. a(p,i))")
    code, out, _ = call(capsys, "normalize", str(f), "--form", "nnf")
    assert code == 0 and out == "forall ctrace p. exists time i. !a(p, i)\n"
    code, out, _ = call(capsys, "normalize", c("independence.hlt"), "--form", "prenex")
    assert code == 0 and out.startswith("props: secret, pub;\nforall ctrace p.")


# ---------------------------------------------------------------- decision


def test_classify_json(capsys):
    code, out, _ = call(capsys, "classify", c("aae.hlt"))
    assert code == 0
    assert as_json(out) == {"class": "KnownUndecidable", "reason": "TracePrefix_AAE", "prefix": "HHhn"}


@pytest.mark.parametrize("name", sorted(EXPECTED), ids=str)
def test_sat_exit_codes(capsys, name):
    code, out, _ = call(capsys, "sat", c(name))
    verdict = EXPECTED[name]["verdict"]
    assert as_json(out)["verdict"] == verdict
    assert code == {"sat": 0, "unsat": 1, "unknown": 2}[verdict]


def test_sat_pretty(capsys):
    code, out, _ = call(capsys, "sat", c("always-a.hlt"), "--pretty")
    assert code == 0
    assert out.startswith("verdict: sat\nfragment: UnconstrainedOnly (tN)\n")
    assert "props: a;" in out


@pytest.mark.parametrize(
    "traces, verdict",
    [("T0.traces", True), ("T1.traces", True), ("T01.traces", False)],
)
@pytest.mark.parametrize("mode", ["exact", "bounded"])
def test_check_independence(capsys, traces, verdict, mode):
    code, out, _ = call(capsys, "check", c("independence.hlt"), c(traces), "--mode", mode)
    assert as_json(out) == {"verdict": verdict, "mode": mode}
    assert code == (0 if verdict else 1)


def test_check_bounded_flags(capsys):
    args = ("check", c("independence.hlt"), c("T01.traces"), "--mode", "bounded")
    code, _, err = call(capsys, *args, "--horizon-cap", "1")
    assert code == 70 and as_json(err)["error"] == "resource"
    code, _, _ = call(capsys, *args, "--universe-period", "0")
    assert code == 64
    code, out, _ = call(capsys, *args, "--universe-prefix", "1", "--universe-period", "1")
    assert code == 1 and as_json(out)["verdict"] is False


def test_check_unknown_prop(capsys):
    code, _, err = call(capsys, "check", c("always-a.hlt"), c("T0.traces"))
    assert code == 65 and as_json(err)["error"] == "unknown-prop"


# ---------------------------------------------------------------- transforms


def test_transform_remove_forall(capsys):
    code, out, _ = call(capsys, "transform", c("exists-forall.hlt"), "--pass", "remove-forall")
    assert code == 0
    assert "forall ctrace" not in out


def test_transform_shape_error(capsys):
    code, _, err = call(capsys, "transform", c("independence.hlt"), "--pass", "remove-forall")
    assert code == 65 and as_json(err)["error"] == "shape"


def test_transform_to_s1s(capsys):
    code, out, _ = call(capsys, "transform", c("always-a.hlt"), "--pass", "to-s1s")
    assert code == 0 and "set" in out and "nat" in out


# ---------------------------------------------------------------- minsky and automata


def test_minsky_run(capsys):
    code, out, _ = call(capsys, "minsky-run", str(CORPUS / "machines" / "pump.mm"))
    assert code == 0
    obj = as_json(out)
    assert obj["result"] == "lasso" and obj["cycle"] == [["q0", 0, 0], ["q1", 1, 0]]
    code, out, _ = call(capsys, "minsky-run", str(CORPUS / "machines" / "stuck.mm"), "--step-cap", "5")
    assert code == 2 and as_json(out)["result"] == "inconclusive"


def test_encode_minsky(capsys):
    code, out, _ = call(capsys, "encode-minsky", str(CORPUS / "machines" / "zero-loop.mm"))
    assert code == 0
    f, props = parse_document(out)
    assert len(props) == 12


def test_automaton(capsys, tmp_path):
    f = tmp_path / "a.s1s"
    f.write_text("forall nat i. exists nat j. i < j & X(j)")
    code, out, _ = call(capsys, "automaton", str(f))
    obj = as_json(out)
    assert code == 0 and obj["tracks"] == ["X"] and obj["empty"] is False
    code, out, _ = call(capsys, "automaton", str(f), "--dot")
    assert code == 0 and out.startswith("digraph nbw {")


# ---------------------------------------------------------------- usage


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["parse"],
        ["parse", "/nonexistent/file.hlt"],
        ["sat", "x.hlt", "--state-cap", "0"],
        ["normalize", "x.hlt"],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, err = call(capsys, *argv)
    assert code == 64
    assert as_json(err)["error"] == "usage"
