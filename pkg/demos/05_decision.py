# coding: utf-8

# # Classifying and deciding formulas
#
# The quantifier prefix decides which procedure applies. Some prefixes are
# known to be undecidable; for those only a one-sided check is attempted.

# In[1]:

from pathlib import Path

from hypertrace.decide import TraceUniverse, check_sat, classify, equisat_oracle, model_check
from hypertrace.syntax import parse, parse_document
from hypertrace.traces import TraceSet, constant, up
from hypertrace.transforms import remove_forall

corpus = Path(__file__).resolve().parent.parent / "corpus"
for path in sorted(corpus.glob("*.hlt")):
    f, _ = parse_document(path.read_text())
    c = classify(f)
    print(f"{path.name:26} {c.prefix:10} {c.label}", c.reason or "")


# Satisfiable formulas come with a witness model.

# In[2]:

r = check_sat(parse("exists ctrace p. forall ctrace r. forall time i. a(p,i) <-> a(r,i)"))
print(r.verdict, [str(t) for t in r.witness.traces])
print(check_sat(parse("exists time i. i < i")).verdict)


# Model checking is exact, including for unconstrained quantifiers.

# In[3]:

f, props = parse_document((corpus / "bounded-promptness.hlt").read_text())
print(model_check(TraceSet.of(props, [constant({"q"})]), f))
print(model_check(TraceSet.of(props, [up([{"q"}], [set()]), up([set()], [{"q"}])]), f))


# A brute-force oracle compares two formulas on every small model. It is how
# the rewrites are cross-checked.

# In[4]:

g = parse("exists ctrace p. forall ctrace r. forall time i. a(r,i) -> a(p,i)")
print(equisat_oracle(g, remove_forall(g), TraceUniverse(("a",), 1, 2), 2))
