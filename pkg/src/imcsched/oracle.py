"""Exact minimum copy count for tiny instances.

Search space: every legal COPY and COMPUTE of the instruction semantics.
A state is the set of computed nodes plus, per array, the set of *live*
values held in non-pinned rows (free rows are interchangeable, so only
their count matters).  Copies cost 1, computes 0; a 0-1 BFS therefore
pops states in order of copies spent and the first complete state is
optimal.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .memory import Compute, Copy, MemLayout, MemoryState, RowRef, init_state
from .xmg import CONST, Netlist


class Infeasible(Exception):
    pass


class ResourceLimit(Exception):
    pass


@dataclass
class OracleResult:
    optimum: int
    witness: list
    states: int


def _bits(mask):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def min_copies(net: Netlist, layout: MemLayout, bound: int | None = None,
               start: MemoryState | None = None, max_states: int = 2_000_000,
               max_nodes: int = 12, max_rows: int = 16, order=None) -> OracleResult:
    """Fewest copies over all legal instruction sequences.

    With ``order`` the nodes must be computed in exactly that sequence
    (the cost of a fixed execution order).
    """
    if net.num_nodes > max_nodes or layout.total_rows > max_rows:
        raise ResourceLimit(f"instance too large ({net.num_nodes} nodes, {layout.total_rows} rows)")
    st0 = start.copy() if start is not None else init_state(net, layout)
    p, n, K, r = net.num_pis, net.num_nodes, layout.num_arrays, layout.rows_per_array
    full = (1 << n) - 1

    home = [layout.array_of(i + 1) for i in range(p)]
    pinned_in = [0] * K
    for a in home:
        pinned_in[a] += 1
    fanin_mask = [sum(1 << v for v in net.fanin_distinct[k]) for k in range(n)]
    node_fanin_mask = [sum(1 << f for f in net.node_fanins[k]) for k in range(n)]
    fanout_mask = [sum(1 << z for z in net.fanout_nodes[v]) for v in range(p + n)]
    po_mask = sum(1 << v for v in net.pos)

    def live_mask(done):
        m = po_mask
        for v in range(p + n):
            if fanout_mask[v] & ~done:
                m |= 1 << v
        return m

    def present(v, arrays, a):
        return bool(arrays[a] >> v & 1) or (v < p and home[v] == a)

    def canon(done, arrays):
        live = live_mask(done)
        return (done, tuple(m & live for m in arrays))

    done0 = sum(1 << k for k in range(n) if st0.computed[k])
    if order is not None and sorted(order) != [k for k in range(n) if not done0 >> k & 1]:
        raise ValueError("order must list every uncomputed node exactly once")
    arr0 = [0] * K
    for row in range(1, layout.total_rows + 1):
        v = st0.holder(row)
        if v is not None and row > p:
            arr0[layout.array_of(row)] |= 1 << v
    s0 = canon(done0, arr0)

    dist = {s0: 0}
    parent = {s0: None}
    dq = deque([(0, s0)])
    expanded = 0
    goal = None
    while dq:
        cost, s = dq.popleft()
        if dist.get(s, cost) < cost:
            continue
        done, arrays = s
        if done == full:
            goal = s
            break
        expanded += 1
        if expanded > max_states:
            raise ResourceLimit(f"more than {max_states} states")
        live = live_mask(done)
        counts = [bin(m).count("1") + pinned_in[a] for a, m in enumerate(arrays)]

        def push(ns, c, move):
            if bound is not None and c > bound:
                return
            old = dist.get(ns)
            if old is None or c < old:
                dist[ns] = c
                parent[ns] = (s, move)
                if c == cost:
                    dq.appendleft((c, ns))
                else:
                    dq.append((c, ns))

        # computes
        if order is not None:
            allowed = [order[bin(done & ~done0).count("1")]]
        else:
            allowed = range(n)
        for k in allowed:
            if done >> k & 1 or node_fanin_mask[k] & ~done:
                continue
            for a in range(K):
                if any(not present(v, arrays, a) for v in _bits(fanin_mask[k])):
                    continue
                nd = done | 1 << k
                nlive = live_mask(nd)
                base = list(arrays)
                base[a] &= nlive
                used = bin(base[a]).count("1") + pinned_in[a]
                if used < r:
                    nb = list(base)
                    nb[a] |= 1 << (p + k)
                    push(canon(nd, nb), cost, ("compute", k, a, None))
                for w in _bits(base[a]):
                    if any(present(w, base, b) for b in range(K) if b != a):
                        nb = list(base)
                        nb[a] = (nb[a] & ~(1 << w)) | 1 << (p + k)
                        push(canon(nd, nb), cost, ("compute", k, a, w))
        # copies
        for v in _bits(live):
            held = [b for b in range(K) if present(v, arrays, b)]
            if not held:
                continue
            for b in range(K):
                if b in held:
                    continue
                if counts[b] < r:
                    nb = list(arrays)
                    nb[b] |= 1 << v
                    push((done, tuple(nb)), cost + 1, ("copy", v, b, None))
                for w in _bits(arrays[b]):
                    if any(present(w, arrays, c) for c in range(K) if c != b):
                        nb = list(arrays)
                        nb[b] = (nb[b] & ~(1 << w)) | 1 << v
                        push((done, tuple(nb)), cost + 1, ("copy", v, b, w))

    if goal is None:
        raise Infeasible("no valid schedule exists" + (f" within {bound} copies" if bound is not None else ""))
    moves = []
    s = goal
    while parent[s] is not None:
        s, move = parent[s]
        moves.append(move)
    moves.reverse()
    return OracleResult(dist[goal], _concretize(net, layout, st0, moves), expanded)


def _concretize(net, layout, st0, moves):
    """Turn abstract moves into row-level instructions by replaying them."""
    st = st0.copy()
    out = []

    def target(a, w):
        if w is not None:
            return st.row_in(w, a)
        for row in layout.rows_of(a):
            if row > net.num_pis and (st.holder(row) is None or not st.is_live(st.holder(row))):
                return row
        raise AssertionError("abstract state promised a free row")

    for kind, x, a, w in moves:
        if kind == "copy":
            ins = Copy(min(st.rows_of_value(x)), target(a, w))
        else:
            ops = tuple(
                op.index if op.kind == CONST else RowRef(st.row_in(v, a), op.negated)
                for op, v in zip(net.nodes[x].operands, net.operand_values[x])
            )
            probe = st.copy()
            probe.mark_computed(x)
            if w is not None:
                dst = st.row_in(w, a)
            else:
                dst = next(
                    row for row in layout.rows_of(a)
                    if row > net.num_pis and (probe.holder(row) is None or not probe.is_live(probe.holder(row)))
                )
            ins = Compute(x, dst, ops)
        st.apply(ins)
        out.append(ins)
    return out
