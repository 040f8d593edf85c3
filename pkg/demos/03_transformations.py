# coding: utf-8

# # Rewriting quantifiers
#
# Several rewrites trade model-trace quantifiers for simpler ones while
# keeping satisfiability.

# In[1]:

from hypertrace.syntax import parse, render
from hypertrace.transforms import (
    flatten,
    ltl_to_fo,
    relax_existentials,
    remove_exists_hats,
    remove_forall,
    to_hyper,
    to_s1s,
    tr_hqptl_to_hyper,
)

f = parse(
    "exists ctrace p1. exists ctrace p2. forall ctrace p3. exists time i. "
    "a(p1,i) & !a(p3,i) | a(p2,i)"
)


# A universal over model traces that follows existential ones can be replaced
# by one copy of the body per existential witness.

# In[2]:

g = remove_forall(f)
print(render(g))


# Once no universal model quantifiers remain, the existential ones can range
# over all traces.

# In[3]:

print(render(remove_exists_hats(g)))


# When the shape does not allow exact removal, relaxing the existentials gives
# a formula implied by the original.

# In[4]:

print(render(relax_existentials(parse("forall ctrace p. exists ctrace r. forall time i. a(p,i) <-> a(r,i)"))))


# Unconstrained formulas translate to S1S: each trace variable becomes one set
# variable per proposition. Flattening does the splitting for a free variable.

# In[5]:

print(render(flatten(parse("forall time i. a(p,i) | b(p,i)", allow_free=True), ["a", "b"], ["p"])))
print(render(to_s1s(parse("exists trace p. forall time i. a(p,i) | b(p,i)"), ["a", "b"])))


# The reverse direction maps set variables to traces.

# In[6]:

print(render(to_hyper(parse("exists set X. forall nat x. X(x) -> (exists nat y. x < y & !X(y))", "s1s"))))


# LTL operators become first-order formulas over positions, and HyperQPTL
# sentences become hypertrace formulas anchored at time 0.

# In[7]:

print(render(ltl_to_fo(parse("a U b", "ltl"), "i")))
print(render(tr_hqptl_to_hyper(parse("forall trace p. exists prop q. q <-> X a[p]", "hqptl"))))
