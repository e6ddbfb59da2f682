"""Multi-array row memory: occupancy, liveness, partner bookkeeping.

Rows are addressed globally from 1 (``R1`` ..), array ``a`` (0-based) owns
rows ``a*r + 1 .. (a+1)*r``.  The original PI rows are pinned.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Union

from .xmg import CONST, Netlist, fanout_counts


@dataclass(frozen=True)
class MemLayout:
    rows_per_array: int
    num_arrays: int

    def __post_init__(self):
        if self.rows_per_array < 1 or self.num_arrays < 1:
            raise ValueError("rows_per_array and num_arrays must be >= 1")

    @property
    def total_rows(self) -> int:
        return self.rows_per_array * self.num_arrays

    def array_of(self, row: int) -> int:
        if not 1 <= row <= self.total_rows:
            raise ValueError(f"row R{row} outside 1..{self.total_rows}")
        return (row - 1) // self.rows_per_array

    def rows_of(self, array: int) -> range:
        r = self.rows_per_array
        return range(array * r + 1, array * r + r + 1)


class CapacityError(Exception):
    """The layout cannot hold what the netlist needs."""


class InsufficientCapacity(CapacityError):
    """No feasible scheduling choice exists at some step."""


class InstructionError(ValueError):
    def __init__(self, rule: str, message: str):
        self.rule = rule
        super().__init__(f"{rule}: {message}")


# -- instructions --------------------------------------------------------------


@dataclass(frozen=True)
class RowRef:
    row: int
    negated: bool = False


@dataclass(frozen=True)
class Copy:
    src: int
    dst: int


@dataclass(frozen=True)
class Compute:
    node: int
    dst: int
    operands: tuple  # three of RowRef or constant bit (int)


Instruction = Union[Copy, Compute]


class RowClass(Enum):
    PINNED = "pinned"
    FREE = "free"
    DUPLICATED = "duplicated"
    UNIQUE = "unique"


# -- state ---------------------------------------------------------------------


class MemoryState:
    """Mutable memory snapshot.  ``copy()`` gives an independent scratch state.

    ``cpp`` is the close-partner-pair count, kept exact incrementally; the
    standalone :func:`cpp_total` recounts it from scratch.
    """

    __slots__ = ("net", "layout", "rows", "loc", "remaining", "computed", "cpp", "_k")

    def __init__(self, net: Netlist, layout: MemLayout):
        self.net = net
        self.layout = layout
        self._k = layout.num_arrays
        self.rows: list[int] = [-1] * layout.total_rows  # value id, -1 empty
        self.loc: list[int] = [0] * (net.num_values * self._k)  # row id or 0
        self.remaining: list[int] = fanout_counts(net)
        self.computed = bytearray(net.num_nodes)
        self.cpp = 0

    def copy(self) -> "MemoryState":
        st = MemoryState.__new__(MemoryState)
        st.net = self.net
        st.layout = self.layout
        st._k = self._k
        st.rows = self.rows[:]
        st.loc = self.loc[:]
        st.remaining = self.remaining[:]
        st.computed = bytearray(self.computed)
        st.cpp = self.cpp
        return st

    # -- queries --

    def holder(self, row: int) -> int | None:
        v = self.rows[row - 1]
        return None if v < 0 else v

    def row_in(self, v: int, a: int) -> int | None:
        return self.loc[v * self._k + a] or None

    def arrays_of(self, v: int) -> list[int]:
        base = v * self._k
        return [a for a in range(self._k) if self.loc[base + a]]

    def rows_of_value(self, v: int) -> list[int]:
        base = v * self._k
        return [self.loc[base + a] for a in range(self._k) if self.loc[base + a]]

    def is_pinned(self, row: int) -> bool:
        return row <= self.net.num_pis

    def is_live(self, v: int) -> bool:
        return self.remaining[v] > 0

    def is_computed(self, k: int) -> bool:
        return bool(self.computed[k])

    def computed_nodes(self) -> set[int]:
        return {k for k, c in enumerate(self.computed) if c}

    def classify_row(self, row: int) -> RowClass:
        if self.is_pinned(row):
            return RowClass.PINNED
        v = self.rows[row - 1]
        if v < 0 or self.remaining[v] == 0:
            return RowClass.FREE
        if len(self.arrays_of(v)) > 1:
            return RowClass.DUPLICATED
        return RowClass.UNIQUE

    def overwritable(self, row: int) -> bool:
        return self.classify_row(row) in (RowClass.FREE, RowClass.DUPLICATED)

    def partners(self, v: int) -> set[int]:
        net, computed = self.net, self.computed
        out = set()
        for z in net.fanout_nodes[v]:
            if not computed[z]:
                out.update(net.fanin_distinct[z])
        out.discard(v)
        return out

    def n_pa(self, v: int, a: int, exclude: int = -1) -> int:
        """Partners of ``v`` stored in array ``a`` (ignoring value ``exclude``)."""
        net, computed, loc, k = self.net, self.computed, self.loc, self._k
        seen = set()
        for z in net.fanout_nodes[v]:
            if computed[z]:
                continue
            for y in net.fanin_distinct[z]:
                if y != v and y != exclude and loc[y * k + a]:
                    seen.add(y)
        return len(seen)

    def state_key(self) -> tuple:
        return (tuple(self.rows), tuple(self.remaining), bytes(self.computed), self.cpp)

    # -- transitions --

    def apply(self, ins: Instruction) -> None:
        """Execute ``ins`` in place; raises :class:`InstructionError` on a rule violation."""
        if isinstance(ins, Copy):
            self._check_copy(ins)
            self._write(self.rows[ins.src - 1], ins.dst)
        elif isinstance(ins, Compute):
            self._check_compute(ins)
            self.mark_computed(ins.node)
            self._write(self.net.node_value(ins.node), ins.dst)
        else:
            raise TypeError(f"not an instruction: {ins!r}")

    def _check_row(self, row):
        if not 1 <= row <= self.layout.total_rows:
            raise InstructionError("RowOutOfRange", f"R{row}")

    def _check_copy(self, ins: Copy):
        self._check_row(ins.src)
        self._check_row(ins.dst)
        if ins.src == ins.dst:
            raise InstructionError("SelfCopy", f"R{ins.src}")
        v = self.rows[ins.src - 1]
        if v < 0:
            raise InstructionError("EmptySource", f"R{ins.src} holds nothing")
        if self.is_pinned(ins.dst):
            raise InstructionError("PinnedRowWrite", f"R{ins.dst}")
        a = self.layout.array_of(ins.dst)
        if self.loc[v * self._k + a]:
            raise InstructionError("AlreadyInArray", f"{self.net.value_name(v)} already in A{a + 1}")
        if not self.overwritable(ins.dst):
            raise InstructionError("LiveValueOverwrite", f"R{ins.dst} holds a unique live value")

    def _check_compute(self, ins: Compute):
        net = self.net
        k = ins.node
        if not 0 <= k < net.num_nodes:
            raise InstructionError("UnknownNode", str(k))
        if self.computed[k]:
            raise InstructionError("AlreadyComputed", net.value_name(net.node_value(k)))
        if any(not self.computed[f] for f in net.node_fanins[k]):
            raise InstructionError("NotReady", net.value_name(net.node_value(k)))
        self._check_row(ins.dst)
        if self.is_pinned(ins.dst):
            raise InstructionError("PinnedRowWrite", f"R{ins.dst}")
        a = self.layout.array_of(ins.dst)
        node = net.nodes[k]
        if len(ins.operands) != 3:
            raise InstructionError("OperandMismatch", "need 3 operands")
        for op, want, got in zip(node.operands, net.operand_values[k], ins.operands):
            if op.kind == CONST:
                if isinstance(got, RowRef) or got != op.index:
                    raise InstructionError("OperandMismatch", f"expected constant {op.index}")
                continue
            if not isinstance(got, RowRef):
                raise InstructionError("OperandMismatch", "expected a row operand")
            self._check_row(got.row)
            if self.layout.array_of(got.row) != a:
                raise InstructionError("SameArrayViolation", f"R{got.row} not in A{a + 1}")
            if self.rows[got.row - 1] != want or got.negated != op.negated:
                raise InstructionError("OperandMismatch", f"R{got.row} does not hold the expected fanin")
        occ = self.rows[ins.dst - 1]
        if occ >= 0:
            left = self.remaining[occ] - net.fanin_mult[k].get(occ, 0)
            if left > 0 and len(self.arrays_of(occ)) < 2:
                raise InstructionError("LiveValueOverwrite", f"R{ins.dst} holds a unique live value")

    def mark_computed(self, k: int) -> None:
        """First half of a compute: retire partnerships via ``k`` and consume fanin uses."""
        net = self.net
        fan = net.fanin_distinct[k]
        if len(fan) > 1:
            loc, kk, computed = self.loc, self._k, self.computed
            for i in range(len(fan)):
                y1 = fan[i]
                for y2 in fan[i + 1:]:
                    still = False
                    for z in net.fanout_nodes[y1]:
                        if z != k and not computed[z] and y2 in net.fanin_sets[z]:
                            still = True
                            break
                    if still:
                        continue
                    for a in range(kk):
                        if loc[y1 * kk + a] and loc[y2 * kk + a]:
                            self.cpp -= 1
        self.computed[k] = 1
        for v, m in net.fanin_mult[k].items():
            self.remaining[v] -= m

    def _write(self, v: int, row: int) -> None:
        a = (row - 1) // self.layout.rows_per_array
        occ = self.rows[row - 1]
        if occ >= 0:
            self.cpp -= self.n_pa(occ, a)
            self.loc[occ * self._k + a] = 0
        self.cpp += self.n_pa(v, a)
        self.rows[row - 1] = v
        self.loc[v * self._k + a] = row

    def place_result(self, k: int, row: int) -> None:
        """Second half of a compute (after :meth:`mark_computed`)."""
        self._write(self.net.node_value(k), row)

    def lost_values(self) -> list[int]:
        """Live values that are not stored anywhere (should always be empty)."""
        out = []
        for v in range(self.net.num_values):
            if self.remaining[v] > 0 and not self.rows_of_value(v):
                if v < self.net.num_pis or self.computed[v - self.net.num_pis]:
                    out.append(v)
        return out


def init_state(net: Netlist, layout: MemLayout) -> MemoryState:
    p = net.num_pis
    if p > layout.total_rows:
        raise CapacityError(f"{p} primary inputs do not fit in {layout.total_rows} rows")
    if p == layout.total_rows and net.num_nodes > 0:
        raise CapacityError("no working row left after placing the primary inputs")
    st = MemoryState(net, layout)
    for v in range(p):
        st.rows[v] = v
        st.loc[v * layout.num_arrays + layout.array_of(v + 1)] = v + 1
    st.cpp = cpp_total(st)
    return st


def apply_instruction(st: MemoryState, ins: Instruction) -> MemoryState:
    out = st.copy()
    out.apply(ins)
    return out


def n_pa(st: MemoryState, v: int, a: int) -> int:
    return st.n_pa(v, a)


def classify_row(st: MemoryState, row: int) -> RowClass:
    return st.classify_row(row)


def cpp_total(st: MemoryState) -> int:
    """Close partner pairs counted from scratch by scanning stored pairs."""
    net = st.net
    uncomputed = [k for k in range(net.num_nodes) if not st.computed[k]]
    total = 0
    for a in range(st.layout.num_arrays):
        stored = sorted({st.rows[r - 1] for r in st.layout.rows_of(a) if st.rows[r - 1] >= 0})
        for i, x in enumerate(stored):
            for y in stored[i + 1:]:
                if any(x in net.fanin_sets[z] and y in net.fanin_sets[z] for z in uncomputed):
                    total += 1
    return total


def replay(net: Netlist, layout: MemLayout, instructions: Iterable[Instruction],
           start: MemoryState | None = None) -> MemoryState:
    st = start.copy() if start is not None else init_state(net, layout)
    for ins in instructions:
        st.apply(ins)
    return st


# -- serialization -------------------------------------------------------------

_COPY_RE = re.compile(r"^R(\d+)\s*<-\s*COPY\(\s*R(\d+)\s*\)$")
_COMPUTE_RE = re.compile(r"^R(\d+)\s*<-\s*(XOR|MAJ)\((.*)\)$")


def _fmt_operand(o) -> str:
    if isinstance(o, RowRef):
        return ("!" if o.negated else "") + f"R{o.row}"
    return str(o)


def format_instruction(net: Netlist, ins: Instruction) -> str:
    if isinstance(ins, Copy):
        return f"R{ins.dst} <- COPY(R{ins.src})"
    args = ", ".join(_fmt_operand(o) for o in ins.operands)
    name = net.value_name(net.node_value(ins.node))
    return f"R{ins.dst} <- {net.nodes[ins.node].op}({args}) # node={name}"


def header(net: Netlist, layout: MemLayout) -> dict:
    return {
        "rows_per_array": layout.rows_per_array,
        "num_arrays": layout.num_arrays,
        "netlist_hash": net.digest(),
    }


def dump_text(net: Netlist, layout: MemLayout, instructions: Sequence[Instruction]) -> str:
    h = header(net, layout)
    lines = ["# " + " ".join(f"{k}={v}" for k, v in h.items())]
    lines += [format_instruction(net, ins) for ins in instructions]
    return "\n".join(lines) + "\n"


def dump_json(net: Netlist, layout: MemLayout, instructions: Sequence[Instruction]) -> str:
    records = []
    for ins in instructions:
        if isinstance(ins, Copy):
            records.append({"kind": "copy", "src": ins.src, "dst": ins.dst})
        else:
            ops = [
                {"row": o.row, "negated": o.negated} if isinstance(o, RowRef) else {"const": o}
                for o in ins.operands
            ]
            records.append({
                "kind": "compute",
                "node": net.value_name(net.node_value(ins.node)),
                "op": net.nodes[ins.node].op,
                "dst": ins.dst,
                "operands": ops,
            })
    return json.dumps({"header": header(net, layout), "instructions": records}, indent=1) + "\n"


class ISFormatError(ValueError):
    pass


_INT_HEADER_KEYS = ("rows_per_array", "num_arrays")


def parse_text(net: Netlist, text: str) -> tuple[dict, list[Instruction]]:
    """Parse the line format back into (header, instructions)."""
    head: dict = {}
    out: list[Instruction] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line, _, comment = raw.partition("#")
        line = line.strip()
        comment = comment.strip()
        if not line:
            for kv in comment.split():
                if "=" in kv:
                    k, v = kv.split("=", 1)
                    head[k] = int(v) if v.isdigit() and k in _INT_HEADER_KEYS else v
            continue
        m = _COPY_RE.match(line)
        if m:
            out.append(Copy(int(m.group(2)), int(m.group(1))))
            continue
        m = _COMPUTE_RE.match(line)
        if not m:
            raise ISFormatError(f"line {lineno}: cannot parse {line!r}")
        nm = re.search(r"node=(\S+)", comment)
        if not nm:
            raise ISFormatError(f"line {lineno}: compute needs a '# node=<name>' tag")
        try:
            k = net.node_by_name(nm.group(1))
        except KeyError:
            raise ISFormatError(f"line {lineno}: unknown node {nm.group(1)!r}") from None
        if net.nodes[k].op != m.group(2):
            raise ISFormatError(f"line {lineno}: node {nm.group(1)} is {net.nodes[k].op}, not {m.group(2)}")
        ops = []
        for tok in m.group(3).split(","):
            tok = tok.strip()
            if tok in ("0", "1"):
                ops.append(int(tok))
                continue
            om = re.match(r"^(!?)R(\d+)$", tok)
            if not om:
                raise ISFormatError(f"line {lineno}: bad operand {tok!r}")
            ops.append(RowRef(int(om.group(2)), bool(om.group(1))))
        out.append(Compute(k, int(m.group(1)), tuple(ops)))
    return head, out


def parse_json(net: Netlist, text: str) -> tuple[dict, list[Instruction]]:
    doc = json.loads(text)
    out: list[Instruction] = []
    for i, rec in enumerate(doc.get("instructions", [])):
        if rec["kind"] == "copy":
            out.append(Copy(int(rec["src"]), int(rec["dst"])))
        elif rec["kind"] == "compute":
            try:
                k = net.node_by_name(rec["node"])
            except KeyError:
                raise ISFormatError(f"record {i}: unknown node {rec['node']!r}") from None
            ops = tuple(
                int(o["const"]) if "const" in o else RowRef(int(o["row"]), bool(o.get("negated", False)))
                for o in rec["operands"]
            )
            out.append(Compute(k, int(rec["dst"]), ops))
        else:
            raise ISFormatError(f"record {i}: unknown kind {rec['kind']!r}")
    return doc.get("header", {}), out


def load_is(net: Netlist, text: str) -> tuple[dict, list[Instruction]]:
    if text.lstrip().startswith("{"):
        return parse_json(net, text)
    return parse_text(net, text)
