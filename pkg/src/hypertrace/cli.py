"""Command-line front end.

Every subcommand prints one JSON line (schema version "v": 1) or plain
formula text, and exits with a stable code:

    0   success / sat / true
    1   unsat / false
    2   unknown / inconclusive
    64  usage error
    65  malformed input (parse or shape error)
    70  resource cap exceeded
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Callable, Sequence

from . import automata, decide, minsky, syntax, transforms
from .eval import EvalOptions, HorizonError, eval_hyper
from .syntax import DIALECTS, ParseError, props_of, render
from .traces import parse_traceset, render_traceset

EXIT_OK, EXIT_NO, EXIT_UNKNOWN = 0, 1, 2
EXIT_USAGE, EXIT_DATA, EXIT_RESOURCE = 64, 65, 70

SCHEMA = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _emit(obj: dict, pretty: bool = False) -> None:
    out = {"v": SCHEMA, **obj}
    if pretty:
        print(json.dumps(out, indent=2, ensure_ascii=False))
    else:
        print(json.dumps(out, separators=(",", ":"), ensure_ascii=False))


def _document(text: str, props) -> str:
    head = f"props: {', '.join(props)};\n" if props else ""
    return head + text + "\n"


def _load(path: str, dialect: str = "hyper"):
    return syntax.parse_document(_read(path), dialect)


# ---------------------------------------------------------------- subcommands


def cmd_parse(args) -> int:
    f, props = _load(args.file, args.dialect)
    sys.stdout.write(_document(render(f), props))
    return EXIT_OK


def cmd_normalize(args) -> int:
    f, props = _load(args.file, args.dialect)
    g = syntax.to_nnf(f) if args.form == "nnf" else syntax.to_prenex(f)
    sys.stdout.write(_document(render(g), props))
    return EXIT_OK


def cmd_classify(args) -> int:
    f, _ = _load(args.file)
    _emit(decide.classify(f).to_json(), args.pretty)
    return EXIT_OK


_PASS_DIALECT = {"to-hyper": "s1s", "tr-h": "hqptl"}


def cmd_transform(args) -> int:
    dialect = args.dialect or _PASS_DIALECT.get(args.pass_, "hyper")
    f, props = _load(args.file, dialect)
    alphabet = tuple(props) if props is not None else props_of(f)
    p = args.pass_
    out_props = props
    if p == "flatten":
        g = transforms.flatten(f, alphabet)
        out_props = None
    elif p == "remove-forall":
        g = transforms.remove_forall(syntax.to_prenex(f))
    elif p == "remove-exists":
        g = transforms.remove_exists_hats(syntax.to_prenex(f))
    elif p == "to-unconstrained":
        g = transforms.to_unconstrained(f)
    elif p == "relax":
        g = transforms.relax_existentials(f)
    elif p == "to-s1s":
        g = transforms.to_s1s(f, alphabet)
        out_props = None
    elif p == "to-hyper":
        g = transforms.to_hyper(f)
    else:  # tr-h
        g = transforms.tr_hqptl_to_hyper(f)
    sys.stdout.write(_document(render(g), out_props))
    return EXIT_OK


def _set_cap(args) -> None:
    if getattr(args, "state_cap", None) is not None:
        if args.state_cap < 1:
            raise UsageError("--state-cap must be positive")
        os.environ["HYPERTRACE_STATE_CAP"] = str(args.state_cap)


def cmd_sat(args) -> int:
    _set_cap(args)
    f, _ = _load(args.file)
    r = decide.check_sat(f)
    out = r.to_json()
    if r.witness is not None:
        out["witness"] = render_traceset(r.witness)
    if args.pretty:
        print(f"verdict: {r.verdict}")
        if r.fragment is not None:
            print(f"fragment: {r.fragment.label} ({r.fragment.prefix})")
        if r.reason:
            print(f"reason: {r.reason}")
        if r.witness is not None:
            sys.stdout.write(render_traceset(r.witness))
    else:
        _emit(out)
    return {"sat": EXIT_OK, "unsat": EXIT_NO}.get(r.verdict, EXIT_UNKNOWN)


def cmd_check(args) -> int:
    _set_cap(args)
    f, _ = _load(args.formula)
    model = parse_traceset(_read(args.traces))
    missing = set(props_of(f)) - set(model.props)
    if missing:
        raise ParseError(f"formula uses propositions {sorted(missing)} missing from the trace set", "unknown-prop")
    if args.mode == "exact":
        verdict = decide.model_check(model, f)
    else:
        if min(args.horizon_cap, args.universe_prefix + 1, args.universe_period) < 1:
            raise UsageError("--horizon-cap and --universe-period must be positive, --universe-prefix nonnegative")
        opts = EvalOptions(
            mode="bounded",
            max_horizon=args.horizon_cap,
            universe_prefix=args.universe_prefix,
            universe_period=args.universe_period,
        )
        try:
            verdict = eval_hyper(model, None, f, opts)
        except HorizonError as e:
            raise automata.ResourceError(str(e)) from None
    _emit({"verdict": verdict, "mode": args.mode}, args.pretty)
    return EXIT_OK if verdict else EXIT_NO


def cmd_encode_minsky(args) -> int:
    m = minsky.parse_machine(_read(args.file))
    sys.stdout.write(_document(render(minsky.encode(m)), m.alphabet))
    return EXIT_OK


def cmd_minsky_run(args) -> int:
    m = minsky.parse_machine(_read(args.file))
    if args.counter_cap < 1 or args.step_cap < 1:
        raise UsageError("caps must be at least 1")
    lasso = minsky.find_lasso(m, args.counter_cap, args.step_cap)
    if lasso is None:
        if args.pretty:
            print("inconclusive")
        else:
            _emit({"result": "inconclusive", "counter_cap": args.counter_cap, "step_cap": args.step_cap})
        return EXIT_UNKNOWN
    if args.pretty:
        sys.stdout.write(minsky.render_lasso(lasso))
    else:
        conf = lambda c: [c.state, c.counter1, c.counter2]
        _emit(
            {
                "result": "lasso",
                "stem": [conf(c) for c in lasso.stem],
                "cycle": [conf(c) for c in lasso.cycle],
                "moves": [str(t) for t in lasso.moves],
            }
        )
    return EXIT_OK


def cmd_automaton(args) -> int:
    _set_cap(args)
    f, _ = syntax.parse_document(_read(args.file), "s1s", allow_free=True)
    a = automata.from_s1s(f)
    if args.dot:
        sys.stdout.write(automata.to_dot(a))
        return EXIT_OK
    w = automata.is_empty(a)
    out = {
        "tracks": list(a.tracks),
        "states": a.num_states,
        "accepting": len(a.accepting),
        "deterministic": a.is_deterministic(),
        "empty": w is None,
    }
    if w is not None:
        out["witness"] = {t: str(w.track(t)) for t in a.tracks}
    _emit(out, args.pretty)
    return EXIT_OK


# ---------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hypertrace", description="Hypertrace logic toolkit.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name: str, fn: Callable, help: str):
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(fn=fn)
        sp.add_argument("--pretty", action="store_true", help="human-readable output")
        return sp

    sp = add("parse", cmd_parse, "parse and re-render a formula")
    sp.add_argument("file")
    sp.add_argument("--dialect", choices=DIALECTS, default="hyper")

    sp = add("normalize", cmd_normalize, "negation or prenex normal form")
    sp.add_argument("file")
    sp.add_argument("--form", choices=("nnf", "prenex"), required=True)
    sp.add_argument("--dialect", choices=DIALECTS, default="hyper")

    sp = add("classify", cmd_classify, "decidability class of the quantifier prefix")
    sp.add_argument("file")

    sp = add("transform", cmd_transform, "apply one rewriting pass")
    sp.add_argument("file")
    sp.add_argument(
        "--pass",
        dest="pass_",
        required=True,
        choices=("flatten", "remove-forall", "remove-exists", "to-unconstrained", "relax", "to-s1s", "to-hyper", "tr-h"),
    )
    sp.add_argument("--dialect", choices=DIALECTS, default=None)

    sp = add("sat", cmd_sat, "decide satisfiability where a route exists")
    sp.add_argument("file")
    sp.add_argument("--state-cap", type=int, default=None)

    sp = add("check", cmd_check, "truth of a formula in a trace set")
    sp.add_argument("formula")
    sp.add_argument("traces")
    sp.add_argument("--mode", choices=("exact", "bounded"), default="exact")
    sp.add_argument("--state-cap", type=int, default=None)
    sp.add_argument("--horizon-cap", type=int, default=10_000, help="bounded mode: largest time window")
    sp.add_argument("--universe-prefix", type=int, default=2, help="bounded mode: stem bound for unconstrained traces")
    sp.add_argument("--universe-period", type=int, default=2, help="bounded mode: period bound for unconstrained traces")

    sp = add("encode-minsky", cmd_encode_minsky, "non-halting encoding of a machine")
    sp.add_argument("file")

    sp = add("minsky-run", cmd_minsky_run, "bounded search for an infinite computation")
    sp.add_argument("file")
    sp.add_argument("--counter-cap", type=int, default=100)
    sp.add_argument("--step-cap", type=int, default=10_000)

    sp = add("automaton", cmd_automaton, "Büchi automaton for an S1S formula")
    sp.add_argument("file")
    sp.add_argument("--dot", action="store_true", help="print Graphviz DOT")
    sp.add_argument("--state-cap", type=int, default=None)
    return p


def _fail(code: int, kind: str, message: str) -> int:
    err = {"v": SCHEMA, "error": kind, "message": message}
    print(json.dumps(err, separators=(",", ":"), ensure_ascii=False), file=sys.stderr)
    return code


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("a subcommand is required")
        return args.fn(args)
    except UsageError as e:
        return _fail(EXIT_USAGE, "usage", str(e))
    except ParseError as e:
        return _fail(EXIT_DATA, e.kind, str(e))
    except transforms.ShapeError as e:
        return _fail(EXIT_DATA, "shape", str(e))
    except automata.ResourceError as e:
        return _fail(EXIT_RESOURCE, "resource", str(e))


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
