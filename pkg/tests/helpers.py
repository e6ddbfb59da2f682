"""Shared fixture builders for the test suite."""

from pathlib import Path

from imcsched.memory import Compute, Copy, MemLayout, RowRef, init_state
from imcsched.xmg import CONST, read_netlist

DATA = Path(__file__).parent / "data"


def load(name):
    return read_netlist(DATA / name)


def compute_in(st, name, dst, array):
    """Compute node ``name`` into ``dst`` reading its fanins from ``array``."""
    net = st.net
    k = net.node_by_name(name)
    ops = tuple(
        op.index if op.kind == CONST else RowRef(st.row_in(v, array), op.negated)
        for op, v in zip(net.nodes[k].operands, net.operand_values[k])
    )
    ins = Compute(k, dst, ops)
    st.apply(ins)
    return ins


def two_level_state(net, with_e=False):
    """State where a, b, c sit in A1 and d, f, h in A2 (rows 8 per array).

    Returns ``(state, prefix)`` where ``prefix`` is the instruction list
    that produced it from the initial state.
    """
    layout = MemLayout(8, 2)
    st = init_state(net, layout)
    prefix = [
        compute_in(st, "a", 3, 0),
        compute_in(st, "b", 4, 0),
        compute_in(st, "c", 5, 0),
    ]
    for ins in (Copy(1, 9), Copy(2, 10)):
        st.apply(ins)
        prefix.append(ins)
    prefix += [
        compute_in(st, "d", 11, 1),
        compute_in(st, "f", 12, 1),
        compute_in(st, "h", 13, 1),
    ]
    if with_e:
        prefix.append(compute_in(st, "e", 6, 0))
    return st, prefix


class ScriptedRng:
    """Stand-in for random.Random that returns preset draws."""

    def __init__(self, randranges=(), choices=()):
        self._rr = list(randranges)
        self._ch = list(choices)

    def randrange(self, n):
        return self._rr.pop(0)

    def choice(self, seq):
        want = self._ch.pop(0)
        assert want in seq, f"{want} not among {seq}"
        return want
