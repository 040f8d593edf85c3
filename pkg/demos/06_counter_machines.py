# coding: utf-8

# # Two-counter machines
#
# A machine has states and transitions that increment, decrement or test a
# counter for zero. The simulator looks for a computation that loops forever.

# In[1]:

from pathlib import Path

from hypertrace.decide import classify
from hypertrace.minsky import check_helpers, encode, find_lasso, parse_machine, render_lasso, witness_model

machines = Path(__file__).resolve().parent.parent / "corpus" / "machines"
m = parse_machine((machines / "pump.mm").read_text())
lasso = find_lasso(m, counter_cap=5, step_cap=50)
print(render_lasso(lasso), end="")


# The encoding produces one formula per machine. It has the same
# nine-quantifier prefix for every machine.

# In[2]:

phi = encode(m)
print(classify(phi))


# A looping computation yields a model: one trace per configuration, counters
# stored as the length of an initial run of `mem1` / `mem2`.

# In[3]:

model = witness_model(m, lasso, offset=1)
for name, t in model.items():
    print(name, t)


# Each building block of the encoding can be checked on that model.

# In[4]:

report = check_helpers(m, model, start=1)
print("all helpers hold:", report.ok, "checks:", report.checked)


# Machines without a loop give no lasso within the search bounds.

# In[5]:

print(find_lasso(parse_machine((machines / "stuck.mm").read_text()), 5, 50))
