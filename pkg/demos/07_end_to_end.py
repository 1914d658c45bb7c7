# %% [markdown]
# # One question, start to finish
#
# The bundled replay store answers the planning prompt for every reference
# query, so the whole pipeline runs offline.

# %%
from urbanplanner.config import load_config
from urbanplanner.golden import CASE_STUDY_QUERY
from urbanplanner.pipeline import Pipeline

pipe = Pipeline(load_config(matching="fallback"))
run = pipe.run(CASE_STUDY_QUERY)
print(run.raw_plan_text)
print(run.match.assignments)
print(run.response)
print({k: round(v, 2) for k, v in run.timings_ms.items()})
