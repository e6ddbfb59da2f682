"""Randomised priority-driven scheduling with restarts."""

from __future__ import annotations

import hashlib
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .energy import EnergyParams
from .memory import (
    Compute,
    Copy,
    InsufficientCapacity,
    MemLayout,
    MemoryState,
    init_state,
)
from .priority import Score, calc_priority


def derive_seed(master: int, *parts) -> int:
    """Stable 64-bit seed from a master seed and a path of labels/indices."""
    text = ":".join(str(p) for p in (master, *parts))
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big")


@dataclass(frozen=True)
class SchedulerConfig:
    layout: MemLayout
    restarts: int = 500
    master_seed: int = 0
    improve: bool = True
    energy: EnergyParams = field(default_factory=EnergyParams)

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass
class ScheduleResult:
    instructions: list
    es: tuple[int, ...]
    copies: int
    computes: int
    arrays_used: int
    seed: int
    layout: MemLayout
    scores: list = field(default_factory=list)  # chosen Score per step
    trace: object = None  # ImprovementTrace when improvement ran

    def energy(self, params: EnergyParams | None = None) -> float:
        params = params or EnergyParams()
        return params.energy(self.computes, self.copies)


def arrays_used(layout: MemLayout, num_pis: int, instructions) -> int:
    used = {layout.array_of(r) for r in range(1, num_pis + 1)}
    used.update(layout.array_of(ins.dst) for ins in instructions)
    return len(used)


def make_result(net, layout, instructions, seed, scores=()) -> ScheduleResult:
    es = tuple(ins.node for ins in instructions if isinstance(ins, Compute))
    copies = sum(1 for ins in instructions if isinstance(ins, Copy))
    return ScheduleResult(
        instructions=list(instructions),
        es=es,
        copies=copies,
        computes=len(es),
        arrays_used=arrays_used(layout, net.num_pis, instructions),
        seed=seed,
        layout=layout,
        scores=list(scores),
    )


class _Ready:
    """Incrementally maintained ready set."""

    def __init__(self, net, st: MemoryState):
        self.net = net
        self.waiting = [
            sum(1 for f in net.node_fanins[k] if not st.computed[f]) for k in range(net.num_nodes)
        ]
        self.ready = {k for k in range(net.num_nodes) if not st.computed[k] and self.waiting[k] == 0}

    def done(self, k: int) -> None:
        self.ready.discard(k)
        p = self.net.num_pis
        for z in self.net.fanout_nodes[p + k]:
            self.waiting[z] -= 1
            if self.waiting[z] == 0:
                self.ready.add(z)


def _missing(st: MemoryState, n: int, a: int) -> int:
    return sum(1 for v in st.net.fanin_distinct[n] if not st.row_in(v, a))


def _best_choice(st, nodes, rng, trace):
    best: Optional[Score] = None
    cands = []
    for n in nodes:
        for a in range(st.layout.num_arrays):
            if best is not None and _missing(st, n, a) > best.copies:
                continue  # copies can never undercut the missing-fanin count
            score, plan = calc_priority(st, n, a, rng, trace)
            if score is None:
                continue
            if best is None or score.rank < best.rank:
                best, cands = score, [plan]
            elif score.rank == best.rank:
                cands.append(plan)
    if not cands:
        return None, None
    return best, (rng.choice(cands) if len(cands) > 1 else cands[0])


def run_engine(net, layout: MemLayout, rng, start: MemoryState | None = None,
               order: Sequence[int] | None = None, trace: Callable | None = None):
    """Core loop.  With ``order`` the node at each step is forced (IG mode).

    Returns ``(instructions, scores)``; raises :class:`InsufficientCapacity`.
    """
    st = start.copy() if start is not None else init_state(net, layout)
    ready = _Ready(net, st)
    instructions, scores = [], []
    pending = net.num_nodes - sum(st.computed)
    steps = order if order is not None else [None] * pending
    for forced in steps:
        if forced is None:
            nodes = sorted(ready.ready)
        else:
            if forced not in ready.ready:
                raise ValueError(f"node {forced} is not ready at its position in the order")
            nodes = [forced]
        score, plan = _best_choice(st, nodes, rng, trace)
        if plan is None:
            raise InsufficientCapacity(
                f"no array can take {'any ready node' if forced is None else net.value_name(net.node_value(forced))}"
                f" after {len(scores)} steps"
            )
        for ins in plan.steps:
            st.apply(ins)
        instructions.extend(plan.steps)
        scores.append(score)
        ready.done(plan.node)
    return instructions, scores


def schedule_once(net, config: SchedulerConfig, seed: int, start: MemoryState | None = None,
                  trace: Callable | None = None) -> ScheduleResult:
    rng = random.Random(seed)
    instructions, scores = run_engine(net, config.layout, rng, start=start, trace=trace)
    return make_result(net, config.layout, instructions, seed, scores)


def _restart(args):
    net, config, seed, start = args
    try:
        return schedule_once(net, config, seed, start)
    except InsufficientCapacity:
        return None


def schedule(net, config: SchedulerConfig, start: MemoryState | None = None,
             threads: int = 1) -> ScheduleResult:
    """Best of ``config.restarts`` randomised runs, optionally improved."""
    seeds = [derive_seed(config.master_seed, i) for i in range(1, config.restarts + 1)]
    jobs = [(net, config, s, start) for s in seeds]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_restart, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    else:
        results = [_restart(j) for j in jobs]
    best = None
    for res in results:  # ties keep the lowest run index
        if res is not None and (best is None or res.copies < best.copies):
            best = res
    if best is None:
        raise InsufficientCapacity(f"all {config.restarts} runs failed")
    if config.improve:
        from .improve import improve

        best, trace = improve(net, best, config, start=start)
        best.trace = trace
    return best
