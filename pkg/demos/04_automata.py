# coding: utf-8

# # Büchi automata for S1S
#
# Every S1S formula compiles to a Büchi automaton over one bit per free
# variable. Emptiness checking returns a lasso witness.

# In[1]:

from hypertrace.automata import LassoWord, accepts, complement, from_s1s, is_empty, to_dot
from hypertrace.syntax import parse
from hypertrace.traces import UPSet

a = from_s1s(parse("forall nat i. exists nat j. i < j & X(j)", "s1s", allow_free=True))
print(a)
w = is_empty(a)
print("witness for X:", w.track("X"))


# The automaton for `succ(x, y)` is small enough to draw.

# In[2]:

print(to_dot(from_s1s(parse("succ(x, y)", "s1s", allow_free=True)), "succ"))


# Complementation picks the cheapest exact construction that applies. Here the
# automaton for "X is finite" is complemented into "X is infinite".

# In[3]:

fin = from_s1s(parse("exists nat n. forall nat m. n < m -> !X(m)", "s1s", allow_free=True))
inf = complement(fin)
print(fin, inf, sep="\n")
for s in (UPSet.from_elements([0, 2]), UPSet((), (True, False))):
    word = LassoWord.from_sets(("X",), {"X": s})
    print(s, "finite:", accepts(fin, word), "infinite:", accepts(inf, word))


# Fixing a variable to a concrete set turns a formula into a yes/no question.

# In[4]:

from hypertrace.automata import constrain_track_to_constant

print(is_empty(constrain_track_to_constant(a, "X", UPSet((), (True, False)))) is not None)
print(is_empty(constrain_track_to_constant(a, "X", UPSet.from_elements([3]))) is not None)
