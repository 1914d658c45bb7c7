# %% [markdown]
# # Plans: parsing, validating, canonical form
#
# A plan is a list of task objects. Planners tend to print them in a loose
# dialect: unquoted keys, single quotes, `<resource>-k` placeholders, a
# stray period at the end. The parser reads all of that.

# %%
from urbanplanner.golden import golden_item
from urbanplanner.parser import PlanSyntaxError, extract_plan_text, parse_relaxed
from urbanplanner.plan import canonicalize, serialize_strict, topo_order, validate

reply = golden_item(2).answer
print(reply)

# %%
plan = parse_relaxed(extract_plan_text(reply))
for task in plan.tasks:
    print(task.id, task.task.value, "needs", sorted(plan.effective_deps[task.id]))

# %% [markdown]
# Arguments come back typed. The `time: <resource>-1` slot became a time
# spec that points at task 1, and the location list is a resource reference.

# %%
print(plan.by_id[0].args)
print("execution order:", topo_order(plan))

# %% [markdown]
# Validation separates hard violations from warnings.

# %%
print(validate(plan))
broken = parse_relaxed("[{task: map_mapping, id: 0, dep: [1]}, {task: recommendation, id: 1, dep: [0]}]")
print(validate(broken))

# %% [markdown]
# Syntax errors carry a byte offset and the tokens that would have been accepted.

# %%
try:
    parse_relaxed("[{task: map_mapping, id: 0 dep: [-1]}]")
except PlanSyntaxError as err:
    print(err)

# %% [markdown]
# Canonical form renumbers ids so that two plans with the same structure
# serialize to the same bytes.

# %%
canon = canonicalize(plan)
print(serialize_strict(canon))
assert canonicalize(canon) == canon
