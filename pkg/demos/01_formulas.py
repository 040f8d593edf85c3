# coding: utf-8

# # Writing and normalizing formulas
#
# Formulas talk about a set of traces. `trace` quantifiers range over every
# ultimately periodic trace, `ctrace` quantifiers only over traces in the
# model, and `time` quantifiers over positions.

# In[1]:

from hypertrace.syntax import parse, quantifier_prefix, render, to_nnf, to_prenex
from hypertrace.decide import prefix_code

f = parse(
    "forall ctrace p. forall ctrace p2. exists ctrace pe. forall time i. "
    "(secret(p,i) <-> secret(pe,i)) & (pub(p2,i) <-> pub(pe,i))"
)
print(render(f))


# Rendering and parsing are inverse to each other, so printed formulas can be
# saved and read back.

# In[2]:

assert parse(render(f)) == f


# Negation normal form pushes `!` down to the atoms and flips quantifiers on
# the way.

# In[3]:

g = parse("!(exists ctrace p. forall time i. a(p,i) & b(p,i))")
print(render(to_nnf(g)))


# Prenex form moves every quantifier to the front. The prefix is summarized
# as a short code: n/N time, t/T unconstrained trace, h/H model trace, with
# lower case for existentials.

# In[4]:

h = parse("(exists time i. a(p,i)) | (forall ctrace r. exists time j. b(r,j))", allow_free=True)
p = to_prenex(h)
print(render(p))
print(prefix_code(quantifier_prefix(p)))


# Other dialects share the same parser: S1S over sets of naturals, plain LTL,
# and HyperQPTL with indexed atoms such as `a[p]`.

# In[5]:

print(render(parse("forall set X. exists nat x. X(x) & succ(x, x)", "s1s")))
print(render(parse("forall trace p. G (a[p] -> F b[p])", "hqptl")))
