"""XOR-majority graph netlists.

A netlist holds primary inputs, 3-input XOR/MAJ nodes in topological order
and a list of primary outputs.  Internally every storable signal is a
*value id*: PIs are ``0 .. num_pis-1`` and node ``k`` is ``num_pis + k``.
Constants are never stored.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

XOR = "XOR"
MAJ = "MAJ"
OPS = (XOR, MAJ)

PI = "pi"
NODE = "node"
CONST = "const"

_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_NAME_RE = re.compile(rf"^{_NAME}$")
_NODE_RE = re.compile(rf"^\.node\s+({_NAME})\s*=\s*([A-Za-z]+)\s*\((.*)\)\s*$")


class NetlistError(ValueError):
    """Malformed or inconsistent netlist."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"line {line}, col {col or 1}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Operand:
    kind: str  # PI, NODE or CONST
    index: int  # pi index, node id, or the constant bit
    negated: bool = False

    def __post_init__(self):
        if self.kind == CONST and self.negated:
            raise NetlistError("constant operands cannot carry a negation")

    @staticmethod
    def const(bit: int) -> "Operand":
        return Operand(CONST, int(bit))


@dataclass(frozen=True)
class XmgNode:
    id: int
    op: str
    operands: tuple[Operand, Operand, Operand]
    name: str = ""


class Netlist:
    """Immutable XMG.  Build one with :func:`parse_netlist` or the constructor."""

    def __init__(
        self,
        pi_names: Sequence[str],
        nodes: Sequence[XmgNode],
        pos: Sequence[int],
    ):
        self.pi_names = tuple(pi_names)
        self.nodes = tuple(nodes)
        self.pos = tuple(pos)  # value ids, declaration order
        self._validate()
        self._index()

    # -- construction helpers -------------------------------------------------

    def _validate(self):
        p = len(self.pi_names)
        names = set()
        for nm in self.pi_names:
            if nm in names:
                raise NetlistError(f"duplicate name {nm!r}")
            names.add(nm)
        for k, node in enumerate(self.nodes):
            if node.id != k:
                raise NetlistError(f"node {node.name or k} has id {node.id}, expected {k}")
            if node.op not in OPS:
                raise NetlistError(f"unknown operation {node.op!r}")
            if len(node.operands) != 3:
                raise NetlistError(f"node {node.name or k} has {len(node.operands)} operands, expected 3")
            if node.name:
                if node.name in names:
                    raise NetlistError(f"duplicate name {node.name!r}")
                names.add(node.name)
            for op in node.operands:
                if op.kind == PI and not 0 <= op.index < p:
                    raise NetlistError(f"node {node.name or k}: PI index {op.index} out of range")
                if op.kind == NODE and not 0 <= op.index < k:
                    raise NetlistError(f"node {node.name or k}: operand node {op.index} is not earlier (cycle)")
                if op.kind == CONST and op.index not in (0, 1):
                    raise NetlistError(f"node {node.name or k}: bad constant {op.index}")
        if len(set(self.pos)) != len(self.pos):
            raise NetlistError("duplicate primary output")
        for v in self.pos:
            if not 0 <= v < self.num_values:
                raise NetlistError(f"primary output value {v} does not resolve")

    def _index(self):
        p = self.num_pis
        n = len(self.nodes)
        self.operand_values: list[tuple] = []  # per operand: value id or None (const)
        self.fanin_distinct: list[tuple[int, ...]] = []
        self.fanin_mult: list[dict[int, int]] = []
        self.node_fanins: list[tuple[int, ...]] = []  # distinct node-id fanins
        fanouts: list[list[int]] = [[] for _ in range(p + n)]
        for node in self.nodes:
            vals = tuple(self.value_of(o) for o in node.operands)
            self.operand_values.append(vals)
            mult: dict[int, int] = {}
            for v in vals:
                if v is not None:
                    mult[v] = mult.get(v, 0) + 1
            self.fanin_mult.append(mult)
            self.fanin_distinct.append(tuple(mult))
            self.node_fanins.append(tuple(v - p for v in mult if v >= p))
            for v in mult:
                fanouts[v].append(node.id)
        self.fanout_nodes = tuple(tuple(f) for f in fanouts)
        self.fanin_sets = tuple(frozenset(f) for f in self.fanin_distinct)
        self.po_set = frozenset(self.pos)

    # -- accessors ------------------------------------------------------------

    @property
    def num_pis(self) -> int:
        return len(self.pi_names)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_values(self) -> int:
        return self.num_pis + len(self.nodes)

    def value_of(self, op: Operand) -> int | None:
        if op.kind == PI:
            return op.index
        if op.kind == NODE:
            return self.num_pis + op.index
        return None

    def node_value(self, k: int) -> int:
        return self.num_pis + k

    def value_name(self, v: int) -> str:
        if v < self.num_pis:
            return self.pi_names[v]
        node = self.nodes[v - self.num_pis]
        return node.name or f"n{node.id}"

    def node_by_name(self, name: str) -> int:
        for node in self.nodes:
            if node.name == name:
                return node.id
        raise KeyError(name)

    def __eq__(self, other):
        if not isinstance(other, Netlist):
            return NotImplemented
        return (self.pi_names, self.nodes, self.pos) == (other.pi_names, other.nodes, other.pos)

    def __hash__(self):
        return hash((self.pi_names, self.nodes, self.pos))

    def __repr__(self):
        return f"Netlist(pis={self.num_pis}, nodes={self.num_nodes}, pos={len(self.pos)})"

    def digest(self) -> str:
        """Short content hash of the canonical text form."""
        return hashlib.sha256(write_netlist(self).encode()).hexdigest()[:16]


# -- text format ---------------------------------------------------------------


def parse_netlist(text: str) -> Netlist:
    defined_later: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        m = _NODE_RE.match(raw.split("#", 1)[0].strip())
        if m:
            defined_later.setdefault(m.group(1), lineno)

    pi_names: list[str] = []
    nodes: list[XmgNode] = []
    symbols: dict[str, tuple[str, int]] = {}
    outputs: list[tuple[str, int, int]] = []

    def declare(name, entry, lineno, col):
        if not _NAME_RE.match(name):
            raise NetlistError(f"bad name {name!r}", lineno, col)
        if name in symbols:
            raise NetlistError(f"duplicate name {name!r}", lineno, col)
        symbols[name] = entry

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        stripped = line.strip()
        if not stripped:
            continue
        indent = len(line) - len(line.lstrip())
        if stripped.startswith(".inputs"):
            for name, col in _words(line, ".inputs"):
                declare(name, (PI, len(pi_names)), lineno, col)
                pi_names.append(name)
        elif stripped.startswith(".outputs"):
            for name, col in _words(line, ".outputs"):
                outputs.append((name, lineno, col))
        elif stripped.startswith(".node"):
            m = _NODE_RE.match(stripped)
            if not m:
                raise NetlistError("expected '.node <name> = XOR(a, b, c)' or MAJ(...)", lineno, indent + 1)
            name, op, args = m.groups()
            op = op.upper()
            if op not in OPS:
                raise NetlistError(f"unknown operation {m.group(2)!r}", lineno, indent + m.start(2) + 1)
            arg_col = indent + m.start(3) + 1
            parts = args.split(",")
            if len(parts) != 3:
                raise NetlistError(f"{op} takes exactly 3 operands, got {len(parts)}", lineno, arg_col)
            operands = []
            offset = 0
            for part in parts:
                col = arg_col + offset + (len(part) - len(part.lstrip()))
                offset += len(part) + 1
                operands.append(_parse_operand(part.strip(), name, symbols, defined_later, lineno, col))
            k = len(nodes)
            nodes.append(XmgNode(k, op, tuple(operands), name))
            declare(name, (NODE, k), lineno, indent + m.start(1) + 1)
        elif stripped == ".end":
            continue
        else:
            raise NetlistError(f"unknown directive {stripped.split()[0]!r}", lineno, indent + 1)

    pos = []
    seen = set()
    for name, lineno, col in outputs:
        if name not in symbols:
            raise NetlistError(f"undefined output {name!r}", lineno, col)
        if name in seen:
            raise NetlistError(f"duplicate output {name!r}", lineno, col)
        seen.add(name)
        kind, idx = symbols[name]
        pos.append(idx if kind == PI else len(pi_names) + idx)
    return Netlist(pi_names, nodes, pos)


def _words(line: str, directive: str):
    start = line.index(directive) + len(directive)
    for m in re.finditer(r"\S+", line[start:]):
        yield m.group(0), start + m.start() + 1


def _parse_operand(tok, owner, symbols, defined_later, lineno, col) -> Operand:
    if tok in ("0", "1"):
        return Operand.const(int(tok))
    neg = tok.startswith("!")
    name = tok[1:].strip() if neg else tok
    if name in ("0", "1"):
        # fold the negation into the constant
        return Operand.const(1 - int(name))
    if not _NAME_RE.match(name):
        raise NetlistError(f"bad operand {tok!r}", lineno, col)
    if name == owner:
        raise NetlistError(f"node {owner!r} references itself (cycle)", lineno, col)
    if name not in symbols:
        if name in defined_later:
            raise NetlistError(
                f"{name!r} is defined later (line {defined_later[name]}); nodes must be in topological order",
                lineno, col,
            )
        raise NetlistError(f"undefined name {name!r}", lineno, col)
    kind, idx = symbols[name]
    return Operand(kind, idx, neg)


def write_netlist(net: Netlist) -> str:
    out = []
    if net.pi_names:
        out.append(".inputs " + " ".join(net.pi_names))
    for node in net.nodes:
        args = ", ".join(_format_operand(net, o) for o in node.operands)
        out.append(f".node {net.value_name(net.node_value(node.id))} = {node.op}({args})")
    if net.pos:
        out.append(".outputs " + " ".join(net.value_name(v) for v in net.pos))
    return "\n".join(out) + "\n"


def _format_operand(net: Netlist, op: Operand) -> str:
    if op.kind == CONST:
        return str(op.index)
    return ("!" if op.negated else "") + net.value_name(net.value_of(op))


def read_netlist(path) -> Netlist:
    with open(path, encoding="utf-8") as fh:
        return parse_netlist(fh.read())


# -- logic simulation ----------------------------------------------------------


def _xor3(a, b, c):
    return a ^ b ^ c


def _maj3(a, b, c):
    return (a & b) | (a & c) | (b & c)


EVAL = {XOR: _xor3, MAJ: _maj3}


def simulate_words(net: Netlist, pi_words: Sequence[int], mask: int = 1) -> list[int]:
    """Evaluate all nodes on bit-parallel words; returns one word per value id."""
    vals = list(pi_words)
    for node in net.nodes:
        ins = []
        for op in node.operands:
            if op.kind == CONST:
                ins.append(mask if op.index else 0)
            else:
                w = vals[net.value_of(op)]
                ins.append(w ^ mask if op.negated else w)
        vals.append(EVAL[node.op](*ins))
    return vals


def simulate_netlist(net: Netlist, assignment: Sequence[int]) -> list[int]:
    if len(assignment) != net.num_pis:
        raise ValueError(f"expected {net.num_pis} input bits, got {len(assignment)}")
    vals = simulate_words(net, [int(b) & 1 for b in assignment])
    return [vals[v] for v in net.pos]


# -- DAG utilities -------------------------------------------------------------


def ready_set(net: Netlist, computed: Iterable[int]) -> set[int]:
    done = set(computed)
    return {
        k for k in range(net.num_nodes)
        if k not in done and all(f in done for f in net.node_fanins[k])
    }


def fanout_counts(net: Netlist) -> list[int]:
    """Remaining-use count per value id: one per operand edge, plus one if it is a PO."""
    counts = [0] * net.num_values
    for mult in net.fanin_mult:
        for v, m in mult.items():
            counts[v] += m
    for v in net.pos:
        counts[v] += 1
    return counts


def topological_violations(net: Netlist, es: Sequence[int], done: Iterable[int] = ()) -> list[str]:
    """Problems with ``es`` as an execution order of every node not in ``done``."""
    done = set(done)
    expected = set(range(net.num_nodes)) - done
    problems = []
    if len(es) != len(expected) or set(es) != expected:
        problems.append("not a permutation of the unscheduled nodes")
    seen = set(done)
    for pos, k in enumerate(es):
        missing = [f for f in net.node_fanins[k] if f not in seen] if 0 <= k < net.num_nodes else [k]
        if missing:
            problems.append(f"position {pos}: node {k} precedes its fanin(s) {missing}")
        seen.add(k)
    return problems


def is_valid_es(net: Netlist, es: Sequence[int], done: Iterable[int] = ()) -> bool:
    return not topological_violations(net, es, done)


def random_netlist(num_pis: int, num_nodes: int, num_pos: int, seed: int) -> Netlist:
    if num_pis < 1:
        raise ValueError("need at least one primary input")
    if num_nodes < 0 or not 0 <= num_pos <= num_nodes:
        raise ValueError("need 0 <= num_pos <= num_nodes")
    rng = random.Random(seed)
    pi_names = [f"x{i + 1}" for i in range(num_pis)]
    nodes = []
    for k in range(num_nodes):
        pool = num_pis + k + 2  # PIs, earlier nodes, the two constants
        operands = []
        have_const = False
        while len(operands) < 3:
            j = rng.randrange(pool)
            if j >= num_pis + k:
                if have_const:
                    continue
                have_const = True
                operands.append(Operand.const(j - num_pis - k))
                continue
            neg = rng.random() < 0.5
            if j < num_pis:
                operands.append(Operand(PI, j, neg))
            else:
                operands.append(Operand(NODE, j - num_pis, neg))
        op = XOR if rng.random() < 0.5 else MAJ
        nodes.append(XmgNode(k, op, tuple(operands), f"n{k + 1}"))
    pos = sorted(rng.sample(range(num_nodes), num_pos))
    return Netlist(pi_names, nodes, [num_pis + k for k in pos])
