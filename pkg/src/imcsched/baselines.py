"""Comparison schedulers: a row-release list scheduler for the order, and
naive / greedy instruction generation over a fixed order.

These are simplified reconstructions of prior-work strategies, not
faithful ports.
"""

from __future__ import annotations

import random
from typing import Sequence

from .memory import (
    Compute,
    Copy,
    InsufficientCapacity,
    MemLayout,
    MemoryState,
    RowRef,
    init_state,
)
from .scheduler import ScheduleResult, make_result
from .xmg import CONST, Netlist, fanout_counts


def reference_es(net: Netlist, seed: int, done=()) -> tuple[int, ...]:
    """List schedule favouring nodes that release the most fanins."""
    rng = random.Random(seed)
    remaining = fanout_counts(net)
    done = set(done)
    for k in done:
        for v, m in net.fanin_mult[k].items():
            remaining[v] -= m
    waiting = [sum(1 for f in net.node_fanins[k] if f not in done) for k in range(net.num_nodes)]
    ready = {k for k in range(net.num_nodes) if k not in done and waiting[k] == 0}
    order = []
    p = net.num_pis
    while ready:
        best, cands = -1, []
        for k in sorted(ready):
            gain = sum(1 for v, m in net.fanin_mult[k].items() if remaining[v] == m)
            if gain > best:
                best, cands = gain, [k]
            elif gain == best:
                cands.append(k)
        k = rng.choice(cands)
        order.append(k)
        ready.discard(k)
        for v, m in net.fanin_mult[k].items():
            remaining[v] -= m
        for z in net.fanout_nodes[p + k]:
            waiting[z] -= 1
            if waiting[z] == 0:
                ready.add(z)
    return tuple(order)


def _grab(st: MemoryState, a: int, protect, out: list, tier: int) -> int | None:
    """Row of ``a`` to write into.

    tier 0: smallest free row only; 1: else a duplicated occupant;
    2: else evict a unique value to the smallest other array with room.
    """
    rows = [r for r in st.layout.rows_of(a) if not st.is_pinned(r)]
    for r in rows:
        v = st.holder(r)
        if v is None or not st.is_live(v):
            return r
    if tier < 1:
        return None
    for r in rows:
        v = st.holder(r)
        if v not in protect and len(st.arrays_of(v)) > 1:
            return r
    if tier < 2:
        return None
    for r in rows:
        v = st.holder(r)
        if v in protect:
            continue
        for b in range(st.layout.num_arrays):
            if b == a:
                continue
            dst = _grab(st, b, (), out, 1)
            if dst is not None:
                ev = Copy(r, dst)
                st.apply(ev)
                out.append(ev)
                return r
        return None
    return None


def _place(st: MemoryState, n: int, a: int, tier: int) -> list | None:
    """Copy missing fanins into ``a`` and compute ``n`` there; mutates ``st``."""
    net = st.net
    out: list = []
    fan = net.fanin_distinct[n]
    rows = {}
    for v in fan:
        r = st.row_in(v, a)
        if r is None:
            r = _grab(st, a, fan, out, tier)
            if r is None:
                return None
            cp = Copy(min(st.rows_of_value(v)), r)
            st.apply(cp)
            out.append(cp)
        rows[v] = r
    operands = tuple(
        op.index if op.kind == CONST else RowRef(rows[v], op.negated)
        for op, v in zip(net.nodes[n].operands, net.operand_values[n])
    )
    # result row is chosen after the node's dying fanins are released
    probe = st.copy()
    probe.mark_computed(n)
    evs: list = []
    dst = _grab(probe, a, fan, evs, tier)
    if dst is None:
        return None
    for ev in evs:
        st.apply(ev)
        out.append(ev)
    ins = Compute(n, dst, operands)
    st.apply(ins)
    out.append(ins)
    return out


def _ig(net: Netlist, es: Sequence[int], layout: MemLayout, choose, start=None) -> ScheduleResult:
    st = start.copy() if start is not None else init_state(net, layout)
    out: list = []
    for n in es:
        # an array qualifies at the cheapest tier where the placement goes through
        for tier in range(3):
            trial = {}
            for a in range(layout.num_arrays):
                scratch = st.copy()
                steps = _place(scratch, n, a, tier)
                if steps is not None:
                    trial[a] = (scratch, steps)
            if trial:
                break
        else:
            raise InsufficientCapacity(f"no array can host {net.value_name(net.node_value(n))}")
        a = choose(st, n, sorted(trial))
        st, steps = trial[a]
        out.extend(steps)
    return make_result(net, layout, out, seed=0)


def _missing(st, n, a):
    return sum(1 for v in st.net.fanin_distinct[n] if not st.row_in(v, a))


def naive_ig(net: Netlist, es: Sequence[int], layout: MemLayout, start=None) -> ScheduleResult:
    return _ig(net, es, layout, lambda st, n, arrays: arrays[0], start)


def greedy_ig(net: Netlist, es: Sequence[int], layout: MemLayout, start=None) -> ScheduleResult:
    return _ig(net, es, layout, lambda st, n, arrays: min(arrays, key=lambda a: (_missing(st, n, a), a)), start)
