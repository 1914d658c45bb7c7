# %% [markdown]
# # Scoring predicted plans
#
# Accuracy asks whether the predicted dependency graph (with task types as
# labels) matches the gold one after canonical renumbering. Precision,
# recall and F1 compare task-type multisets per example and are averaged.

# %%
from dataclasses import replace

from urbanplanner.evaluation import EvalExample, evaluate, example_prf
from urbanplanner.golden import golden_corpus
from urbanplanner.plan import Plan, TaskType

corpus = golden_corpus()


def wrong_first_task(plan):
    first = plan.tasks[0]
    swap = TaskType.BUS_ARRIVAL if first.task is not TaskType.BUS_ARRIVAL else TaskType.MAP_MAPPING
    return Plan((replace(first, task=swap),) + plan.tasks[1:])


rows = [EvalExample(g.query, g.plan, wrong_first_task(g.plan) if n % 4 == 0 else g.plan) for n, g in enumerate(corpus)]
report = evaluate(rows)
print(report.table())

# %%
print(example_prf(rows[0].predicted, rows[0].gold))
