"""Deterministic random instance sets used by the test and comparison harnesses."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .memory import MemLayout
from .xmg import Netlist, fanout_counts, random_netlist


@dataclass(frozen=True)
class Instance:
    name: str
    net: Netlist
    layout: MemLayout


def single_array_rows(net: Netlist, es) -> int:
    """Rows one array needs for ``es`` when results reuse dying rows."""
    remaining = fanout_counts(net)
    p = net.num_pis
    live = 0
    peak = 0
    for k in es:
        for v, m in net.fanin_mult[k].items():
            remaining[v] -= m
            if remaining[v] == 0 and v >= p:
                live -= 1
        live += 1
        peak = max(peak, live)
        if remaining[p + k] == 0:
            live -= 1
    return p + peak


def squeezed_layout(net: Netlist, es, num_arrays: int = 3, squeeze: float = 0.6) -> MemLayout:
    """Rows per array below the single-array need, so several arrays are required."""
    need = single_array_rows(net, es)
    r = max(net.num_pis + 2, math.ceil(squeeze * need))
    if r >= need and need - 1 > net.num_pis + 1:
        r = need - 1
    return MemLayout(r, num_arrays)


def desk_corpus(count: int = 100, seed: int = 2024) -> list[Instance]:
    """4-10 PIs, 10-60 nodes, layouts squeezed to need 2-3 arrays."""
    from .baselines import reference_es

    rng = random.Random(seed)
    out = []
    for i in range(count):
        pis = rng.randint(4, 10)
        nodes = rng.randint(10, 60)
        pos = rng.randint(1, min(8, nodes))
        net = random_netlist(pis, nodes, pos, rng.getrandbits(32))
        k = 2 + i % 2
        layout = squeezed_layout(net, reference_es(net, 0), num_arrays=k, squeeze=0.45 if k == 3 else 0.6)
        out.append(Instance(f"rand{i:03d}", net, layout))
    return out


def tiny_corpus(count: int = 50, seed: int = 7) -> list[Instance]:
    """At most 8 nodes and 12 rows; every instance has some valid schedule."""
    from .oracle import Infeasible, ResourceLimit, min_copies

    rng = random.Random(seed)
    out = []
    while len(out) < count:
        pis = rng.randint(2, 4)
        nodes = rng.randint(4, 8)
        net = random_netlist(pis, nodes, rng.randint(1, 2), rng.getrandbits(32))
        k = rng.choice((2, 3))
        if pis + 1 > 12 // k:
            continue
        r = rng.randint(pis + 1, 12 // k)
        layout = MemLayout(r, k)
        try:
            min_copies(net, layout, max_states=200_000)
        except (Infeasible, ResourceLimit):
            continue
        out.append(Instance(f"tiny{len(out):02d}", net, layout))
    return out
