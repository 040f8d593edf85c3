"""Hypertrace logic: parsing, evaluation over ultimately periodic traces,
equisatisfiability-preserving rewrites, an S1S/Büchi decision backend and
a time-prefixed Minsky-machine encoding."""

from .decide import (
    FragmentClass,
    SatResult,
    TraceUniverse,
    check_sat,
    classify,
    equisat_oracle,
    model_check,
)
from .eval import EvalOptions, eval_hqptl, eval_hyper, eval_ltl_lasso, eval_s1s
from .syntax import ParseError, parse, parse_document, render, to_nnf, to_prenex
from .traces import Assignment, TraceSet, UPSet, UPTrace, parse_traceset, render_traceset, up

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "EvalOptions",
    "FragmentClass",
    "ParseError",
    "SatResult",
    "TraceSet",
    "TraceUniverse",
    "UPSet",
    "UPTrace",
    "check_sat",
    "classify",
    "equisat_oracle",
    "eval_hqptl",
    "eval_hyper",
    "eval_ltl_lasso",
    "eval_s1s",
    "model_check",
    "parse",
    "parse_document",
    "parse_traceset",
    "render",
    "render_traceset",
    "to_nnf",
    "to_prenex",
    "up",
]
