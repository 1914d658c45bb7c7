"""Independent reference computations used to check the library.

None of these import the code under test's algorithms; they recompute results the
slow, obvious way.
"""

from __future__ import annotations

import itertools
import math
import random

import numpy as np

from urbanplanner.plan import Plan, ResourceRef, TaskNode, TaskType, TimeSpec

R = 6_371_000.0


def chord_distance_m(a, b) -> float:
    """Great-circle distance through the 3-D chord, not the haversine formula."""
    def xyz(p):
        lat, lon = math.radians(p[0]), math.radians(p[1])
        return np.array([math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)])

    c = np.linalg.norm(xyz(a) - xyz(b))
    return 2 * R * math.asin(min(1.0, c / 2))


def multiset_prf(pred: list[str], gold: list[str]):
    """Greedy removal matching over plain lists."""
    remaining = list(gold)
    tp = 0
    for x in pred:
        if x in remaining:
            remaining.remove(x)
            tp += 1
    if not pred and not gold:
        return 1.0, 1.0, 1.0
    if not pred:
        return 0.0, 0.0, 0.0
    p = tp / len(pred)
    r = tp / len(gold) if gold else 0.0
    f = 0.0 if tp == 0 else 2 * p * r / (p + r)
    return p, r, f


def labelled_graph(plan: Plan):
    present = {t.id for t in plan.tasks}
    labels = {t.id: t.task.value for t in plan.tasks}
    edges = set()
    for t in plan.tasks:
        for d in t.declared_deps | t.refs:
            if d in present:
                edges.add((d, t.id))
    return labels, edges


def brute_isomorphic(a: Plan, b: Plan) -> bool:
    la, ea = labelled_graph(a)
    lb, eb = labelled_graph(b)
    if len(la) != len(lb) or len(ea) != len(eb):
        return False
    ids_a, ids_b = sorted(la), sorted(lb)
    for perm in itertools.permutations(ids_b):
        m = dict(zip(ids_a, perm))
        if all(la[i] == lb[m[i]] for i in ids_a) and {(m[x], m[y]) for x, y in ea} == eb:
            return True
    return False


def interp_oracle(values):
    """Loop-based linear interpolation with nearest-value edges."""
    known = [i for i, v in enumerate(values) if v is not None]
    out = []
    for i, v in enumerate(values):
        if v is not None:
            out.append(float(v))
            continue
        left = [k for k in known if k < i]
        right = [k for k in known if k > i]
        if not left:
            out.append(float(values[right[0]]))
        elif not right:
            out.append(float(values[left[-1]]))
        else:
            a, b = left[-1], right[0]
            out.append(values[a] + (values[b] - values[a]) * (i - a) / (b - a))
    return out


def zscore_flags(values, window=24, threshold=3.0):
    flags = []
    for t in range(window, len(values)):
        ref = values[t - window : t]
        mu = sum(ref) / window
        sd = math.sqrt(sum((x - mu) ** 2 for x in ref) / window)
        if sd == 0:
            if values[t] != mu:
                flags.append(t)
        elif abs(values[t] - mu) / sd > threshold:
            flags.append(t)
    return flags


TYPES = list(TaskType)


def random_plan(rng: random.Random, max_tasks: int = 8, n: int | None = None, refs: bool = True) -> Plan:
    """A random acyclic plan with shuffled, non-contiguous ids."""
    n = n or rng.randint(1, max_tasks)
    ids = rng.sample(range(0, 3 * n + 3), n)
    nodes = []
    for pos, tid in enumerate(ids):
        earlier = ids[:pos]
        deps = sorted(rng.sample(earlier, rng.randint(0, min(3, len(earlier))))) if earlier else []
        args = {}
        if refs and deps and rng.random() < 0.7:
            args["input"] = tuple(ResourceRef(d) for d in deps)
            declared = tuple(deps) if rng.random() < 0.8 else (-1,)
        else:
            declared = tuple(deps) or (-1,)
        if rng.random() < 0.5:
            args["domain"] = rng.choice(["parking", "air", "traffic speed"])
        nodes.append(TaskNode(rng.choice(TYPES), tid, declared, args))
    rng.shuffle(nodes)
    return Plan(tuple(nodes))


def relabel(plan: Plan, rng: random.Random) -> Plan:
    """The same plan with ids permuted and tasks shuffled."""
    ids = [t.id for t in plan.tasks]
    new = rng.sample(range(100, 100 + 4 * len(ids)), len(ids))
    m = dict(zip(ids, new))

    def sub(v):
        if isinstance(v, ResourceRef):
            return ResourceRef(m[v.target])
        if isinstance(v, TimeSpec) and v.kind == "resource":
            return TimeSpec.from_ref(ResourceRef(m[v.ref.target]))
        if isinstance(v, tuple):
            return tuple(sub(x) for x in v)
        return v

    nodes = [
        TaskNode(t.task, m[t.id], tuple(m.get(d, d) if d != -1 else -1 for d in t.dep), {k: sub(v) for k, v in t.args.items()})
        for t in plan.tasks
    ]
    rng.shuffle(nodes)
    return Plan(tuple(nodes))
