"""Run several schedulers on one netlist and tabulate copies and energy."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import asdict, dataclass, replace
from typing import Iterable, Sequence

from .baselines import greedy_ig, naive_ig, reference_es
from .energy import EnergyParams, params_for
from .memory import CapacityError, MemLayout, MemoryState
from .scheduler import ScheduleResult, SchedulerConfig, schedule
from .validate import equivalence_check, validate_is
from .xmg import Netlist

SCHEDULERS = ("masim", "naive", "greedy")

FOOTNOTE = (
    "naive/greedy are simplified baselines over a row-release list order; "
    "runtimes are wall-clock and baselines are not rerun to match runtime."
)


@dataclass
class RunRecord:
    instance: str
    scheduler: str
    rows_per_array: int
    num_arrays: int
    seed: int
    copies: int | None = None
    computes: int | None = None
    arrays_used: int | None = None
    energy: float | None = None
    normalized_energy: float | None = None
    runtime_ms: float | None = None
    valid: bool | None = None
    equivalent: bool | None = None
    error: str = ""


def run_scheduler(name: str, net: Netlist, layout: MemLayout, seed: int,
                  restarts: int = 500, improve: bool = True, threads: int = 1,
                  start: MemoryState | None = None) -> ScheduleResult:
    if name == "masim":
        cfg = SchedulerConfig(layout, restarts=restarts, master_seed=seed, improve=improve)
        return schedule(net, cfg, start=start, threads=threads)
    done = start.computed_nodes() if start is not None else ()
    es = reference_es(net, seed, done)
    if name == "naive":
        res = naive_ig(net, es, layout, start)
    elif name == "greedy":
        res = greedy_ig(net, es, layout, start)
    else:
        raise ValueError(f"unknown scheduler {name!r}; choose from {', '.join(SCHEDULERS)}")
    res.seed = seed
    return res


def normalize(records: Sequence[RunRecord]) -> None:
    """Energy divided by the largest energy among records of the same run group."""
    groups: dict = {}
    for rec in records:
        if rec.energy is not None:
            key = (rec.instance, rec.rows_per_array, rec.num_arrays, rec.seed)
            groups[key] = max(groups.get(key, 0.0), rec.energy)
    for rec in records:
        if rec.energy is not None:
            key = (rec.instance, rec.rows_per_array, rec.num_arrays, rec.seed)
            rec.normalized_energy = rec.energy / groups[key]


def compare(net: Netlist, layout: MemLayout, schedulers: Iterable[str] = SCHEDULERS,
            seeds: Sequence[int] = (0,), vectors: int | None = None, restarts: int = 500,
            improve: bool = True, energy_table: dict | None = None, instance: str = "netlist",
            sweep_rows: Sequence[int] | None = None, threads: int = 1,
            start: MemoryState | None = None, prefix: Sequence = ()) -> list[RunRecord]:
    """``start``/``prefix``: resume from a partial schedule; results are
    checked as ``prefix`` followed by the new instructions."""
    if start is not None and sweep_rows:
        raise ValueError("a start state fixes the layout; it cannot be swept")
    records = []
    layouts = [layout] if not sweep_rows else [replace(layout, rows_per_array=r) for r in sweep_rows]
    for lay in layouts:
        params: EnergyParams = params_for(energy_table, lay.rows_per_array)
        for seed in seeds:
            for name in schedulers:
                rec = RunRecord(instance, name, lay.rows_per_array, lay.num_arrays, seed)
                t0 = time.perf_counter()
                try:
                    res = run_scheduler(name, net, lay, seed, restarts, improve, threads, start)
                except CapacityError as exc:
                    rec.error = f"capacity: {exc}"
                    records.append(rec)
                    continue
                rec.runtime_ms = round((time.perf_counter() - t0) * 1000, 3)
                rec.copies = res.copies
                rec.computes = res.computes
                rec.arrays_used = res.arrays_used
                rec.energy = params.energy(res.computes, res.copies)
                full = list(prefix) + res.instructions
                rec.valid = validate_is(net, full, lay).ok
                vecs = None
                if vectors is not None:
                    from .validate import make_vectors

                    vecs = make_vectors(net.num_pis, vectors, seed)
                rec.equivalent = equivalence_check(net, full, lay, vecs, seed).ok
                records.append(rec)
    normalize(records)
    return records


_COLUMNS = ("instance", "scheduler", "rows_per_array", "num_arrays", "seed", "copies", "computes",
            "arrays_used", "energy", "normalized_energy", "runtime_ms", "valid", "equivalent", "error")


def _cell(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4f}".rstrip("0").rstrip(".")
    return str(v)


def format_table(records: Sequence[RunRecord], timing: bool = True) -> str:
    cols = [c for c in _COLUMNS if timing or c != "runtime_ms"]
    rows = [[_cell(getattr(r, c)) for c in cols] for r in records]
    widths = [max(len(c), *(len(row[i]) for row in rows)) if rows else len(c) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in rows]
    lines.append(f"# {FOOTNOTE}")
    return "\n".join(line.rstrip() for line in lines) + "\n"


def to_csv(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(_COLUMNS), lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow(asdict(rec))
    return buf.getvalue()
