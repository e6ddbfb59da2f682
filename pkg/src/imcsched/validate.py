"""Independent checking of instruction sequences.

Nothing here reuses the scheduler's legality code: the replay below keeps
its own row contents and use counts, derived straight from the netlist.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .memory import Compute, Copy, MemLayout, RowRef
from .xmg import CONST, EVAL, Netlist, simulate_words


@dataclass(frozen=True)
class Violation:
    index: int  # instruction index, -1 for end-of-sequence checks
    rule: str
    message: str

    def __str__(self):
        where = "end" if self.index < 0 else f"#{self.index}"
        return f"{where}: {self.rule}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    po_rows: dict = field(default_factory=dict)  # PO value id -> rows holding it at the end

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> Counter:
        return Counter(v.rule for v in self.violations)


class _Replay:
    """Symbolic (and optionally bit-level) execution of an instruction list."""

    def __init__(self, net: Netlist, layout: MemLayout, words=None, mask=0):
        self.net = net
        self.layout = layout
        p = net.num_pis
        self.total = layout.total_rows
        self.label = [None] * (self.total + 1)  # value id per row, 1-based
        self.bits = [0] * (self.total + 1)
        for i in range(min(p, self.total)):
            self.label[i + 1] = i
            if words is not None:
                self.bits[i + 1] = words[i]
        self.mask = mask
        self.uses = [0] * net.num_values
        for node in net.nodes:
            for op in node.operands:
                if op.kind != CONST:
                    self.uses[net.value_of(op)] += 1
        for v in net.pos:
            self.uses[v] += 1
        self.done = [0] * net.num_nodes
        self.violations: list[Violation] = []

    def _flag(self, i, rule, msg):
        self.violations.append(Violation(i, rule, msg))

    def _array(self, row):
        return (row - 1) // self.layout.rows_per_array

    def _in_range(self, i, row) -> bool:
        if not isinstance(row, int) or not 1 <= row <= self.total:
            self._flag(i, "RowOutOfRange", f"R{row}")
            return False
        return True

    def _stored(self, v) -> bool:
        return any(self.label[r] == v for r in range(1, self.total + 1))

    def _overwrite(self, i, row, value, bit):
        old = self.label[row]
        self.label[row] = value
        self.bits[row] = bit
        if old is not None and old != value and self.uses[old] > 0 and not self._stored(old):
            self._flag(i, "LiveValueLost", f"{self.net.value_name(old)} overwritten in R{row} with no other copy")

    def step(self, i, ins):
        net = self.net
        if isinstance(ins, Copy):
            if not (self._in_range(i, ins.src) and self._in_range(i, ins.dst)):
                return
            if ins.src == ins.dst:
                self._flag(i, "SelfCopy", f"R{ins.src}")
                return
            if self.label[ins.src] is None:
                self._flag(i, "EmptySource", f"R{ins.src}")
                return
            if ins.dst <= net.num_pis:
                self._flag(i, "PinnedRowWrite", f"COPY into primary-input row R{ins.dst}")
                return
            self._overwrite(i, ins.dst, self.label[ins.src], self.bits[ins.src])
        elif isinstance(ins, Compute):
            k = ins.node
            if not 0 <= k < net.num_nodes:
                self._flag(i, "UnknownNode", str(k))
                return
            name = net.value_name(net.num_pis + k)
            if self.done[k]:
                self._flag(i, "DuplicateCompute", f"{name} computed again")
            node = net.nodes[k]
            for op in node.operands:
                if op.kind == "node" and not self.done[op.index]:
                    self._flag(i, "NotReady", f"{name} reads uncomputed {net.value_name(net.num_pis + op.index)}")
            if not self._in_range(i, ins.dst):
                return
            if len(ins.operands) != 3:
                self._flag(i, "OperandMismatch", f"{name}: {len(ins.operands)} operands")
                return
            a = self._array(ins.dst)
            got, ins_bits = [], []
            for o in ins.operands:
                if isinstance(o, RowRef):
                    if not self._in_range(i, o.row):
                        return
                    if self._array(o.row) != a:
                        self._flag(i, "SameArrayViolation", f"{name}: R{o.row} is not in A{a + 1}")
                    got.append(("v", self.label[o.row], bool(o.negated)))
                    b = self.bits[o.row]
                    ins_bits.append(b ^ self.mask if o.negated else b)
                else:
                    got.append(("c", int(o), False))
                    ins_bits.append(self.mask if o else 0)
            want = [
                ("c", op.index, False) if op.kind == CONST else ("v", net.value_of(op), op.negated)
                for op in node.operands
            ]
            if Counter(got) != Counter(want):
                self._flag(i, "OperandMismatch", f"{name}: operands do not match its fanins")
            if ins.dst <= net.num_pis:
                self._flag(i, "PinnedRowWrite", f"{name} written into primary-input row R{ins.dst}")
                return
            if not self.done[k]:
                self.done[k] = 1
                for op in node.operands:
                    if op.kind != CONST:
                        self.uses[net.value_of(op)] -= 1
            self._overwrite(i, ins.dst, net.num_pis + k, EVAL[node.op](*ins_bits))
        else:
            self._flag(i, "UnknownInstruction", repr(ins))

    def finish(self):
        net = self.net
        for k in range(net.num_nodes):
            if not self.done[k]:
                self._flag(-1, "MissingCompute", f"{net.value_name(net.num_pis + k)} never computed")
        po_rows = {}
        for v in net.pos:
            rows = [r for r in range(1, self.total + 1) if self.label[r] == v]
            po_rows[v] = rows
            if not rows:
                self._flag(-1, "POMissing", f"{net.value_name(v)} not stored at the end")
        return po_rows


def validate_is(net: Netlist, instructions: Sequence, layout: MemLayout) -> ValidationReport:
    rep = _Replay(net, layout)
    if net.num_pis > layout.total_rows:
        rep._flag(-1, "Capacity", "primary inputs do not fit")
        return ValidationReport(rep.violations)
    for i, ins in enumerate(instructions):
        rep.step(i, ins)
    po_rows = rep.finish()
    return ValidationReport(rep.violations, po_rows)


def run_words(net: Netlist, instructions: Sequence, layout: MemLayout,
              pi_words: Sequence[int], mask: int) -> list[int]:
    """Execute the sequence on bit-parallel columns; one word per PO."""
    rep = _Replay(net, layout, pi_words, mask)
    for i, ins in enumerate(instructions):
        rep.step(i, ins)
    po_rows = rep.finish()
    out = []
    for v in net.pos:
        if not po_rows[v]:
            raise ValueError(f"{net.value_name(v)} is not stored at the end of the sequence")
        out.append(rep.bits[po_rows[v][0]])
    return out


def simulate_is(net: Netlist, instructions: Sequence, layout: MemLayout,
                assignment: Sequence[int]) -> list[int]:
    if len(assignment) != net.num_pis:
        raise ValueError(f"expected {net.num_pis} input bits")
    return run_words(net, instructions, layout, [int(b) & 1 for b in assignment], 1)


@dataclass
class EquivalenceResult:
    ok: bool
    vectors: int
    witness: list | None = None  # first failing PI assignment
    expected: list | None = None
    got: list | None = None

    def __bool__(self):
        return self.ok


def make_vectors(num_pis: int, vectors: int | None = None, seed: int = 0,
                 exhaustive_limit: int = 10) -> list[list[int]]:
    """All assignments when ``num_pis`` is small, else ``vectors`` random ones."""
    if vectors is None and num_pis <= exhaustive_limit:
        return [[(j >> i) & 1 for i in range(num_pis)] for j in range(1 << num_pis)]
    rng = random.Random(seed)
    return [[rng.getrandbits(1) for _ in range(num_pis)] for _ in range(vectors or 1024)]


def _pack(vecs, num_pis):
    words = [0] * num_pis
    for j, vec in enumerate(vecs):
        for i, b in enumerate(vec):
            if b:
                words[i] |= 1 << j
    return words


def equivalence_check(net: Netlist, instructions: Sequence, layout: MemLayout,
                      vectors: Sequence[Sequence[int]] | None = None, seed: int = 0) -> EquivalenceResult:
    """Compare the sequence against direct netlist evaluation, all vectors at once."""
    vecs = [list(v) for v in vectors] if vectors is not None else make_vectors(net.num_pis, seed=seed)
    if not vecs:
        return EquivalenceResult(True, 0)
    mask = (1 << len(vecs)) - 1
    words = _pack(vecs, net.num_pis)
    ref_all = simulate_words(net, words, mask)
    ref = [ref_all[v] for v in net.pos]
    try:
        got = run_words(net, instructions, layout, words, mask)
    except ValueError:
        return EquivalenceResult(False, len(vecs), vecs[0], None, None)
    diff = 0
    for r, g in zip(ref, got):
        diff |= r ^ g
    if not diff:
        return EquivalenceResult(True, len(vecs))
    j = (diff & -diff).bit_length() - 1
    return EquivalenceResult(
        False, len(vecs), vecs[j],
        [(w >> j) & 1 for w in ref], [(w >> j) & 1 for w in got],
    )
