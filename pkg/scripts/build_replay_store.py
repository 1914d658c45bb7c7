"""Rebuild the bundled planner replay store.

For every reference query (and the carpark case study) and every subset of prompt
components, the store maps the digest of the rendered planning prompt to the
reference plan text. It stands in for a planner that always answers correctly, so
the rest of the pipeline can run offline and deterministically.
"""

import itertools
from pathlib import Path

from urbanplanner.gateway import ReplayStore
from urbanplanner.golden import CASE_STUDY_ANSWER, CASE_STUDY_QUERY, golden_corpus
from urbanplanner.prompts import COMPONENTS, build_inference_prompt

OUT = Path(__file__).resolve().parents[1] / "src" / "urbanplanner" / "data" / "replay" / "planner.jsonl"


def build() -> ReplayStore:
    pairs = [(g.query, g.answer) for g in golden_corpus()] + [(CASE_STUDY_QUERY, CASE_STUDY_ANSWER)]
    store = ReplayStore()
    for r in range(len(COMPONENTS) + 1):
        for enabled in itertools.combinations(COMPONENTS, r):
            for query, answer in pairs:
                store.add(build_inference_prompt(query, enabled), answer)
    return store


if __name__ == "__main__":
    OUT.parent.mkdir(parents=True, exist_ok=True)
    build().save(OUT)
    print(f"wrote {OUT}")
