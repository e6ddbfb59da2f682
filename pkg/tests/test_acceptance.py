"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Hard requirements are asserted; soft targets are reported as
``SOFT-MISS`` without failing the run.
"""

import json
import random
import statistics
import time

import pytest

import conftest
from helpers import ScriptedRng, load, two_level_state
from imcsched.baselines import greedy_ig, naive_ig, reference_es
from imcsched.cli import main
from imcsched.corpus import desk_corpus, single_array_rows, tiny_corpus
from imcsched.energy import energy_of
from imcsched.improve import improve, perturb_es
from imcsched.memory import Compute, Copy, InsufficientCapacity, MemLayout
from imcsched.oracle import min_copies
from imcsched.priority import Score, calc_priority, check_delta
from imcsched.report import RunRecord, normalize
from imcsched.scheduler import SchedulerConfig, schedule, schedule_once
from imcsched.validate import equivalence_check, validate_is
from imcsched.xmg import random_netlist, write_netlist

CORPUS_RESTARTS = 8  # per-instance MASIM budget for the 100-instance corpus runs


def report(capsys, number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    with capsys.disabled():
        print("\n" + line)


@pytest.fixture(scope="module")
def corpus():
    return desk_corpus()


@pytest.fixture(scope="module")
def corpus_runs(corpus):
    """Every scheduler on every corpus instance; failures kept as exceptions."""
    t0 = time.perf_counter()
    runs = []
    for inst in corpus:
        es = reference_es(inst.net, 0)
        row = {}
        for name, run in (
            ("masim", lambda: schedule(inst.net, SchedulerConfig(inst.layout, restarts=CORPUS_RESTARTS))),
            ("naive", lambda: naive_ig(inst.net, es, inst.layout)),
            ("greedy", lambda: greedy_ig(inst.net, es, inst.layout)),
        ):
            try:
                row[name] = run()
            except InsufficientCapacity as exc:
                row[name] = exc
        runs.append(row)
    return runs, time.perf_counter() - t0


def test_c01_two_level_worked_example(capsys):
    t0 = time.perf_counter()
    net = load("two_level.xmg")
    st, _ = two_level_state(net)
    e, g = net.node_by_name("e"), net.node_by_name("g")
    rng = random.Random(0)
    first = {(n, a): calc_priority(st, n, a, rng)[0].copies for n in (e, g) for a in (0, 1)}
    after_e, _ = two_level_state(net, with_e=True)
    second = [calc_priority(after_e, g, a, rng)[0] for a in (0, 1)]
    res = schedule_once(net, SchedulerConfig(st.layout, restarts=1, improve=False), 1, start=st)
    g_at = next(i for i, x in enumerate(res.instructions) if isinstance(x, Compute) and x.node == g)
    between = res.instructions[1:g_at]
    elapsed = time.perf_counter() - t0
    ok = (
        first[(e, 0)] == 0
        and first[(g, 0)] == first[(g, 1)] == 1
        and second == [Score(1, 1), Score(1, 2)]
        and res.es[:2] == (e, g)
        and st.layout.array_of(res.instructions[0].dst) == 0
        and len(between) == 1 and isinstance(between[0], Copy) and between[0].src == 5
        and st.layout.array_of(between[0].dst) == 1
        and st.layout.array_of(res.instructions[g_at].dst) == 1
        and elapsed < 1.0
    )
    report(capsys, 1, ok, f"first={first} g-scores={second} copies-before-g={len(between)} ({elapsed:.3f}s)")
    assert ok


def test_c02_scripted_perturbation(capsys):
    net = load("six_node.xmg")
    es = tuple(net.node_by_name(n) for n in "dabfce")
    got = perturb_es(es, net, ScriptedRng(randranges=[1], choices=[net.node_by_name("c")]))
    names = "".join(net.value_name(net.node_value(k)) for k in got)
    ok = names == "dcabfe"
    report(capsys, 2, ok, f"perturbed order {','.join(names)}")
    assert ok


def test_c03_functional_correctness(capsys, corpus, corpus_runs):
    runs, sched_time = corpus_runs
    t0 = time.perf_counter()
    failures = []
    for inst, row in zip(corpus, runs):
        for name, res in row.items():
            if isinstance(res, Exception):
                failures.append((inst.name, name, f"no output: {res}"))
                continue
            rep = validate_is(inst.net, res.instructions, inst.layout)
            eq = equivalence_check(inst.net, res.instructions, inst.layout)
            if not rep.ok or not eq.ok:
                failures.append((inst.name, name, rep.violations[:2] or eq.witness))
    total = sched_time + time.perf_counter() - t0
    ok = not failures and total < 120
    report(capsys, 3, ok, f"{len(corpus)} netlists x 3 schedulers, {len(failures)} failures, {total:.1f}s")
    assert not failures, failures[:5]
    assert total < 120


def test_c04_oracle_gap(capsys):
    t0 = time.perf_counter()
    below, equal, failed = [], 0, []
    gaps = []
    for inst in tiny_corpus():
        opt = min_copies(inst.net, inst.layout).optimum
        try:
            got = schedule(inst.net, SchedulerConfig(inst.layout, restarts=64)).copies
        except InsufficientCapacity:
            failed.append(inst.name)
            continue
        gaps.append(got - opt)
        if got < opt:
            below.append(inst.name)
        equal += got == opt
    elapsed = time.perf_counter() - t0
    n = len(gaps) + len(failed)
    dist = {d: gaps.count(d) for d in sorted(set(gaps))}
    share = equal / n
    soft = "" if share >= 0.6 else " SOFT-MISS(<60% optimal)"
    ok = not below and elapsed < 300
    report(capsys, 4, ok, f"optimal on {equal}/{n} ({share:.0%}), gap distribution {dist}, "
                          f"no schedule found on {len(failed)} {failed}, {elapsed:.1f}s{soft}")
    assert not below
    assert elapsed < 300


def test_c05_baseline_dominance(capsys, corpus_runs):
    runs, _ = corpus_runs
    m = [r["masim"].copies for r in runs]
    g = [r["greedy"].copies for r in runs]
    n = [r["naive"].copies for r in runs]
    m_le_g = sum(a <= b for a, b in zip(m, g))
    g_gt_n = [i for i, (b, c) in enumerate(zip(g, n)) if b > c]
    means = (statistics.mean(m), statistics.mean(g), statistics.mean(n))
    ok = m_le_g >= 0.9 * len(runs) and means[0] < means[1] and not g_gt_n
    report(capsys, 5, ok, f"mean copies masim/greedy/naive = {means[0]:.2f}/{means[1]:.2f}/{means[2]:.2f}, "
                          f"masim<=greedy on {m_le_g}/{len(runs)}, greedy>naive on {len(g_gt_n)}")
    assert m_le_g >= 0.9 * len(runs)
    assert means[0] < means[1]
    assert not g_gt_n


def test_c06_improvement_monotone(capsys, corpus):
    helped = regressions = bad_steps = 0
    counted = 0
    for inst in corpus:
        cfg = SchedulerConfig(inst.layout, restarts=64, improve=False)
        try:
            base = schedule(inst.net, cfg)
        except InsufficientCapacity:
            continue
        counted += 1
        out, trace = improve(inst.net, base, cfg)
        regressions += out.copies > base.copies
        helped += out.copies < base.copies
        for it in trace.iterations:
            if it.accepted and not it.copies_after < it.copies_before:
                bad_steps += 1
    share = helped / counted
    soft = "" if share >= 0.3 else " SOFT-MISS(<30% helped)"
    ok = regressions == 0 and bad_steps == 0
    report(capsys, 6, ok, f"improve helped on {helped}/{counted} ({share:.0%}), "
                          f"regressions {regressions}, non-decreasing accepted steps {bad_steps}{soft}")
    assert regressions == 0
    assert bad_steps == 0


def test_c07_energy(capsys):
    seq = [Compute(0, 1, (0, 0, 0))] * 10 + [Copy(1, 2)] * 4
    energy = energy_of(seq)
    recs = [RunRecord("x", s, 8, 2, 0, energy=e) for s, e in (("masim", 17.48), ("greedy", 21.22), ("naive", 24.96))]
    normalize(recs)
    norm = [r.normalized_energy for r in recs]
    ok = energy == 17.48 and max(norm) == 1.0 and norm == [17.48 / 24.96, 21.22 / 24.96, 1.0]
    report(capsys, 7, ok, f"energy(10 computes, 4 copies) = {energy}, normalized {[round(x, 4) for x in norm]}")
    assert ok


def test_c08_array_size_trend(capsys):
    t0 = time.perf_counter()
    net = random_netlist(8, 60, 6, 11)
    need = single_array_rows(net, reference_es(net, 0))
    sizes = [need * 4 // 10, need * 5 // 10, need * 7 // 10]
    means = []
    for r in sizes:
        copies = [schedule(net, SchedulerConfig(MemLayout(r, 3), restarts=16, master_seed=s)).copies
                  for s in range(20)]
        means.append(statistics.mean(copies))
    elapsed = time.perf_counter() - t0
    rises = [(a, b) for a, b in zip(means, means[1:]) if b > a]
    ok = (not rises or (len(rises) == 1 and rises[0][1] <= 1.02 * rises[0][0])) and elapsed < 300
    report(capsys, 8, ok, f"rows {sizes} -> mean copies {[round(m, 2) for m in means]}, {elapsed:.1f}s")
    assert ok


def test_c09_determinism(capsys, tmp_path):
    net_path = tmp_path / "net.xmg"
    net_path.write_text(write_netlist(random_netlist(7, 40, 4, 3)))
    outputs = []
    for threads in (1, 2, 3):
        for ext in ("txt", "json"):
            out = tmp_path / f"t{threads}.{ext}"
            stats = tmp_path / f"t{threads}.{ext}.stats"
            code = main(["schedule", "--netlist", str(net_path), "--rows", "12", "--arrays", "3",
                         "--restarts", "8", "--seed", "42", "--threads", str(threads),
                         "--out", str(out), "--stats", str(stats), "--no-timing"])
            assert code == 0
            outputs.append((ext, out.read_bytes(), stats.read_bytes()))
    by_ext = {}
    for ext, is_bytes, stats_bytes in outputs:
        by_ext.setdefault(ext, set()).add((is_bytes, stats_bytes))
    ok = all(len(v) == 1 for v in by_ext.values())
    copies = json.loads(outputs[0][2])["copies"]
    report(capsys, 9, ok, f"threads 1/2/3 give identical IS and stats files ({copies} copies)")
    assert ok


def test_c10_delta_cpp_consistency(capsys, corpus):
    checked = mismatched = 0

    def trace(score, before, after):
        nonlocal checked, mismatched
        checked += 1
        mismatched += not check_delta(score, before, after)

    for i, inst in enumerate(corpus):
        try:
            schedule_once(inst.net, SchedulerConfig(inst.layout), i, trace=trace)
        except InsufficientCapacity:
            pass
    ok = checked > 0 and mismatched == 0
    report(capsys, 10, ok, f"{checked} priority evaluations recounted, {mismatched} mismatches")
    assert ok
