# %% [markdown]
# # Growing a dataset from seeds
#
# Generation samples three seed examples per prompt and asks a model for a
# new (query, plan) pair. Replies that do not parse, do not validate, or
# repeat a known query are kept as rejections with a reason.
#
# Here a toy generator stands in for the model: it echoes one seed plan
# under a new query, and sometimes invents a task type.

# %%
import hashlib
import json
from collections import Counter

from urbanplanner.dataset import generate, golden_seeds, split_and_stratify
from urbanplanner.gateway import Gateway


class Echo:
    name = "replay"

    def send(self, request):
        prompt = request.messages[-1][1]
        h = hashlib.sha256(prompt.encode()).hexdigest()
        seed = golden_seeds()[int(h[:6], 16) % 34]
        plan = seed.gold.to_jsonable()
        if h[6] in "01":
            plan[0]["task"] = "mood_prediction"
        return json.dumps({"query": f"{seed.query} ({h[:6]})", "plan": plan})


examples = generate(golden_seeds(), 20, Gateway().register(Echo()), rng_seed=7)
print(Counter(e.accepted for e in examples))
print({e.provenance["rejection_reason"] for e in examples if not e.accepted})

# %%
split = split_and_stratify([e for e in examples if e.accepted], 0.8, rng_seed=7)
print({part: Counter(s for s, _ in rows) for part, rows in split.items()})
