"""Iterated improvement: perturb the execution order, regenerate, keep strict gains."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from .memory import InsufficientCapacity, MemoryState
from .scheduler import ScheduleResult, SchedulerConfig, derive_seed, make_result, run_engine


@dataclass
class Iteration:
    passes_tried: int
    accepted: bool
    copies_before: int
    copies_after: int


@dataclass
class ImprovementTrace:
    iterations: list[Iteration] = field(default_factory=list)

    @property
    def accepted(self) -> int:
        return sum(1 for it in self.iterations if it.accepted)


def perturb_es(es: Sequence[int], net, rng, done=()) -> tuple[int, ...]:
    """Move a random other ready node in front of the node at a random step.

    ``done`` are nodes computed before ``es`` starts.
    """
    es = list(es)
    n = len(es)
    fanins = net.node_fanins
    for _ in range(n):
        t = rng.randrange(n)
        seen = set(done)
        seen.update(es[:t])
        cands = sorted(
            k for k in es[t + 1:] if all(f in seen for f in fanins[k])
        )
        if not cands:
            continue
        c = rng.choice(cands)
        rest = [k for k in es[t:] if k != c]
        return tuple(es[:t] + [c] + rest)
    return tuple(es)


def generate_instructions(net, es: Sequence[int], config: SchedulerConfig, seed: int,
                          start: MemoryState | None = None) -> ScheduleResult:
    """Instruction generation for a fixed order: only array and rows are chosen."""
    rng = random.Random(seed)
    instructions, scores = run_engine(net, config.layout, rng, start=start, order=list(es))
    return make_result(net, config.layout, instructions, seed, scores)


def improve(net, best: ScheduleResult, config: SchedulerConfig,
            start: MemoryState | None = None) -> tuple[ScheduleResult, ImprovementTrace]:
    trace = ImprovementTrace()
    passes = config.restarts
    done = start.computed_nodes() if start is not None else ()
    iteration = 0
    while True:
        before = best.copies
        accepted = False
        tried = 0
        for p in range(passes):
            tried = p + 1
            rng = random.Random(derive_seed(config.master_seed, "perturb", iteration, p))
            es = perturb_es(best.es, net, rng, done)
            try:
                cand = generate_instructions(
                    net, es, config, derive_seed(config.master_seed, "ig", iteration, p), start
                )
            except InsufficientCapacity:
                continue
            if cand.copies < best.copies:
                best = cand
                accepted = True
                break
        trace.iterations.append(Iteration(tried, accepted, before, best.copies))
        if not accepted:
            return best, trace
        iteration += 1
