"""Copy-count / close-partner-pair priority of placing a node in an array.

A priority is a :class:`Score` ``(copies, delta_cpp)``: fewer copies win,
then the larger change in close partner pairs.  ``None`` means infeasible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .memory import Compute, Copy, MemoryState, RowRef, cpp_total
from .xmg import CONST


@dataclass(frozen=True)
class Score:
    copies: int
    delta_cpp: int

    @property
    def rank(self) -> tuple[int, int]:
        """Sort key; smaller is better."""
        return (self.copies, -self.delta_cpp)


def better(a: Optional[Score], b: Optional[Score]) -> bool:
    """True if ``a`` strictly beats ``b`` (any score beats infeasible)."""
    if a is None:
        return False
    if b is None:
        return True
    return a.rank < b.rank


@dataclass(frozen=True)
class RowPick:
    row: int
    evictions: tuple[Copy, ...] = ()
    copies: int = 0
    delta_cpp: int = 0


@dataclass
class RowPlan:
    node: int
    array: int
    steps: list = field(default_factory=list)  # eviction copies, fanin copies, final compute
    fanin_rows: dict = field(default_factory=dict)  # value id -> row in `array`
    result_row: int = 0
    copies: int = 0
    delta_cpp: int = 0


def _protected(st: MemoryState, a: int, protect) -> set[int]:
    return {r for v in protect if (r := st.row_in(v, a))}


def pick_row(st: MemoryState, a: int, can_copy: bool, rng, protect=()) -> Optional[RowPick]:
    """Choose a row of array ``a`` to receive incoming data.

    ``protect`` lists values whose rows in ``a`` must not be evicted
    (the fanins of the node being placed).
    """
    layout = st.layout
    rows = st.rows
    remaining = st.remaining
    first = st.net.num_pis
    arows = [r for r in layout.rows_of(a) if r > first]

    free = [r for r in arows if rows[r - 1] < 0 or remaining[rows[r - 1]] == 0]
    if free:
        return RowPick(rng.choice(free) if len(free) > 1 else free[0])

    keep = _protected(st, a, protect)
    best, cands = None, []
    for r in arows:
        if r in keep:
            continue
        d = rows[r - 1]
        if len(st.arrays_of(d)) > 1:
            gain = -st.n_pa(d, a)
            if best is None or gain > best:
                best, cands = gain, [r]
            elif gain == best:
                cands.append(r)
    if cands:
        return RowPick(rng.choice(cands) if len(cands) > 1 else cands[0], (), 0, best)
    if not can_copy:
        return None

    best, cands = None, []
    victims = [r for r in arows if r not in keep]
    for b in range(layout.num_arrays):
        if b == a or not victims:
            continue
        sub = pick_row(st, b, False, rng)
        if sub is None:
            continue
        displaced = rows[sub.row - 1]
        displaced = displaced if displaced >= 0 and remaining[displaced] > 0 else -1
        for r in victims:
            v = rows[r - 1]
            gain = sub.delta_cpp + st.n_pa(v, b, exclude=displaced) - st.n_pa(v, a)
            if best is None or gain > best:
                best, cands = gain, [(r, sub)]
            elif gain == best:
                cands.append((r, sub))
    if not cands:
        return None
    r, sub = rng.choice(cands) if len(cands) > 1 else cands[0]
    return RowPick(r, (Copy(r, sub.row),), 1, best)


def calc_priority(st: MemoryState, n: int, a: int, rng,
                  trace: Callable | None = None) -> tuple[Optional[Score], Optional[RowPlan]]:
    """Score scheduling node ``n`` in array ``a`` and return the concrete plan.

    Works on a private copy; ``st`` is never modified.  ``trace`` (if given)
    is called with ``(score, scratch_before, scratch_after)``.
    """
    net = st.net
    scratch = st.copy()
    plan = RowPlan(n, a)
    fanins = net.fanin_distinct[n]
    for v in fanins:
        row = scratch.row_in(v, a)
        if row:
            plan.fanin_rows[v] = row
            continue
        pick = pick_row(scratch, a, True, rng, fanins)
        if pick is None:
            return None, None
        for ev in pick.evictions:
            scratch.apply(ev)
            plan.steps.append(ev)
        src = min(scratch.rows_of_value(v))
        cp = Copy(src, pick.row)
        scratch.apply(cp)
        plan.steps.append(cp)
        plan.fanin_rows[v] = pick.row
        plan.copies += pick.copies + 1

    operands = []
    for op, v in zip(net.nodes[n].operands, net.operand_values[n]):
        if op.kind == CONST:
            operands.append(op.index)
        else:
            operands.append(RowRef(plan.fanin_rows[v], op.negated))

    scratch.mark_computed(n)
    pick = pick_row(scratch, a, True, rng, fanins)
    if pick is None:
        return None, None
    for ev in pick.evictions:
        scratch.apply(ev)
        plan.steps.append(ev)
    scratch.place_result(n, pick.row)
    plan.steps.append(Compute(n, pick.row, tuple(operands)))
    plan.result_row = pick.row
    plan.copies += pick.copies
    plan.delta_cpp = scratch.cpp - st.cpp
    score = Score(plan.copies, plan.delta_cpp)
    if trace is not None:
        trace(score, st, scratch)
    return score, plan


def check_delta(score: Score, before: MemoryState, after: MemoryState) -> bool:
    """Recount both states from scratch and compare with the reported delta."""
    return score.delta_cpp == cpp_total(after) - cpp_total(before)
