# %% [markdown]
# # Running a plan
#
# The executor walks the dependency graph, feeds each task's output into
# the `<resource>-k` slots of its consumers, and records everything.

# %%
from urbanplanner.adapters import stub_toolkit
from urbanplanner.executor import execute, templated_summary
from urbanplanner.golden import golden_item
from urbanplanner.registry import default_registry, match_all_fallback

registry = default_registry()
toolkit = stub_toolkit()
adapters = toolkit.adapters(registry)

plan = golden_item(31).plan
match = match_all_fallback(plan, registry)
trace = execute(plan, match, adapters, mode="parallel")
print(trace.order, trace.statuses)

# %% [markdown]
# Task 4 estimates the arrival time; the three forecasts receive it in their
# `time` slot.

# %%
for tid in (4, 0):
    rec = trace.records[tid]
    print(tid, rec.task.value, rec.resolved_args.get("time"))

# %%
print(templated_summary(trace))

# %% [markdown]
# A failing task does not stop independent branches. Its dependents are
# skipped and the summary says so.

# %%
def broken(task, args):
    raise RuntimeError("map service down")

bad = dict(adapters)
bad[match.assignments[5]] = broken
print(execute(plan, match, bad).statuses)
