# coding: utf-8

# # Traces, models and evaluation
#
# A trace is stored as a finite prefix followed by a loop that repeats
# forever. Construction brings it to a canonical form, so equal words compare
# equal.

# In[1]:

from hypertrace.eval import EvalOptions, eval_hyper, eval_ltl_lasso
from hypertrace.syntax import parse
from hypertrace.traces import TraceSet, agree_on, constant, parse_traceset, render_traceset, support_set, up

t = up([{"a"}], [{"b"}, {"a"}])
print(t, "==", up([], [{"a"}, {"b"}]), t == up([], [{"a"}, {"b"}]))
print([sorted(t[i]) for i in range(5)])


# The support of a proposition is the set of positions where it holds.

# In[2]:

print(support_set(t, "a"))
print(agree_on(up([{"a"}], [set()]), up([], [{"a"}, set()]), {"a"}))


# Models are finite sets of named traces with a shared alphabet. They have a
# small text format.

# In[3]:

model = parse_traceset("props: secret, pub;\ntrace t0 = [ | {} ];\ntrace t1 = [ | {pub,secret} ];\n")
print(render_traceset(model), end="")


# `eval_hyper` decides truth directly on the model. In exact mode time
# quantifiers scan a window large enough to be conclusive; unconstrained
# trace quantifiers need the bounded mode, which enumerates short traces.

# In[4]:

phi = parse(
    "forall ctrace p. forall ctrace p2. exists ctrace pe. forall time i. "
    "(secret(p,i) <-> secret(pe,i)) & (pub(p2,i) <-> pub(pe,i))"
)
for name in ("t0", "t1"):
    print(name, eval_hyper(model.subset([name]), None, phi, EvalOptions(mode="exact")))
print("both", eval_hyper(model, None, phi, EvalOptions(mode="exact")))


# In[5]:

psi = parse("exists trace p. forall time i. a(p,i)")
print(eval_hyper(TraceSet.of(["a"], [constant()]), None, psi))


# LTL formulas are evaluated exactly on a single lasso.

# In[6]:

print(eval_ltl_lasso(up([set()], [{"a"}, set()]), parse("G F a", "ltl")))
