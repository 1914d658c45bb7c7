"""A deterministic stand-in for a generator model, used to record replay stores."""

import hashlib
import json

from urbanplanner.gateway import ChatRequest
from urbanplanner.golden import golden_corpus

GOLDEN = golden_corpus()


class ParaphraseBackend:
    """Answers a generation prompt with one golden plan under a new query.

    Roughly one reply in eight names a task type that does not exist and one in
    eight is cyclic, so rejection paths get exercised too.
    """

    name = "replay"

    def send(self, request: ChatRequest) -> str:
        prompt = request.messages[-1][1]
        h = hashlib.sha256(prompt.encode("utf-8")).hexdigest()
        item = GOLDEN[int(h[:8], 16) % len(GOLDEN)]
        plan = item.plan.to_jsonable()
        query = f"{item.query} (variant {h[:10]})"
        mode = int(h[8:10], 16) % 8
        if mode == 0:
            plan[0]["task"] = "weather_divination"
        elif mode == 1:
            plan = [
                {"task": "map_mapping", "id": 0, "dep": [1], "args": {}},
                {"task": "map_mapping", "id": 1, "dep": [0], "args": {}},
            ]
        return "Here is a new example:\n" + json.dumps({"query": query, "plan": plan})
