# %% [markdown]
# # Prompts and model matching
#
# The planning prompt has three optional parts (scenario formulation, task
# understanding, causal understanding) plus the question. Leaving one out
# is how the ablations are run.

# %%
from urbanplanner.golden import golden_item
from urbanplanner.prompts import build_inference_prompt, chat_log, split_sections
from urbanplanner.registry import Registry, candidates_for, default_registry, match_all_fallback, match_llm
from urbanplanner.gateway import Gateway, ReplayBackend, ReplayStore

query = golden_item(1).query
full = build_inference_prompt(query)
no_tu = build_inference_prompt(query, ["sf", "cu"])
print({k: len(v) for k, v in split_sections(full).items()})
print({k: len(v) for k, v in split_sections(no_tu).items()})

# %% [markdown]
# Each sub-task is matched to a model card. Candidates are the cards that
# list the task type. Without an LLM, the card sharing the most domain words
# with the task wins, with ties going to the lowest id.

# %%
zoo = Registry.load("tests/three_card_zoo.json")
plan = golden_item(1).plan
tsp = plan.by_id[0]
for card in candidates_for(tsp, zoo):
    print(card.model_id, card.model_name, card.data_domain)

result = match_all_fallback(plan, default_registry())
print(result.assignments, result.sources)

# %% [markdown]
# With an LLM in the loop, an unusable reply falls back per task. Here the
# replay store is empty, so every task falls back.

# %%
empty = Gateway().register(ReplayBackend(ReplayStore()))
print(match_llm(plan, default_registry(), empty, chat_log=chat_log(query, plan)).method)
