import csv
import io
import json

import pytest

from helpers import load, two_level_state
from imcsched.energy import (
    COPY_TO_COMPUTE_RATIO,
    EnergyParams,
    count_instructions,
    energy_of,
    load_energy_table,
    params_for,
)
from imcsched.memory import Compute, Copy, MemLayout
from imcsched.report import RunRecord, compare, format_table, normalize, to_csv


def _seq(computes, copies):
    return [Compute(0, 1, (0, 0, 0))] * computes + [Copy(1, 2)] * copies


def test_default_energy():
    assert energy_of(_seq(10, 4)) == 17.48
    assert EnergyParams().energy(10, 4) == 17.48
    assert COPY_TO_COMPUTE_RATIO == 1.87


def test_energy_is_linear():
    assert energy_of(_seq(7, 0)) == 7.0
    gap = energy_of(_seq(300, 512)) - energy_of(_seq(300, 256))
    assert gap == pytest.approx(256 * 1.87)
    assert count_instructions(_seq(3, 2)) == (3, 2)


def test_energy_params_must_be_positive():
    with pytest.raises(ValueError):
        EnergyParams(0.0, 1.0)
    with pytest.raises(ValueError):
        EnergyParams(1.0, -2.0)


def test_energy_table(tmp_path):
    path = tmp_path / "table.json"
    path.write_text(json.dumps({"8": {"e_compute": 2.0, "e_copy": 3.0}}))
    table = load_energy_table(path)
    assert params_for(table, 8) == EnergyParams(2.0, 3.0)
    assert params_for(table, 16) == EnergyParams()
    assert params_for(None, 8) == EnergyParams()


def test_normalisation_uses_group_maximum():
    recs = [
        RunRecord("x", "masim", 8, 2, 0, energy=10.0),
        RunRecord("x", "naive", 8, 2, 0, energy=20.0),
        RunRecord("x", "greedy", 8, 2, 0, energy=15.0),
        RunRecord("x", "masim", 16, 2, 0, energy=4.0),
        RunRecord("x", "naive", 16, 2, 0),
    ]
    normalize(recs)
    assert [r.normalized_energy for r in recs] == [0.5, 1.0, 0.75, 1.0, None]


def test_compare_on_gate_pair():
    net = load("two_level_pair.xmg")
    st, prefix = two_level_state(net)
    recs = compare(net, st.layout, ["masim"], restarts=4, start=st, prefix=prefix)
    (rec,) = recs
    assert rec.copies == 1
    assert rec.valid and rec.equivalent
    assert rec.normalized_energy == 1.0


def test_compare_chain_needs_no_copies():
    net = load("chain.xmg")
    recs = compare(net, MemLayout(8, 2), restarts=4, instance="chain")
    assert [r.copies for r in recs] == [0, 0, 0]
    assert len({r.energy for r in recs}) == 1
    assert all(r.normalized_energy == 1.0 for r in recs)


def test_compare_records_capacity_failures():
    net = load("overfull.xmg")
    recs = compare(net, MemLayout(2, 1), restarts=2)
    assert all(r.error.startswith("capacity") for r in recs)
    assert all(r.copies is None for r in recs)


def test_sweep_and_outputs():
    net = load("five_gate.xmg")
    recs = compare(net, MemLayout(8, 2), restarts=2, improve=False, sweep_rows=[9, 12])
    assert [r.rows_per_array for r in recs] == [9] * 3 + [12] * 3
    assert all(r.valid and r.equivalent for r in recs)
    text = format_table(recs, timing=False)
    assert "runtime_ms" not in text
    assert text.splitlines()[0].split()[:3] == ["instance", "scheduler", "rows_per_array"]
    rows = list(csv.DictReader(io.StringIO(to_csv(recs))))
    assert len(rows) == 6 and rows[0]["scheduler"] == "masim"


def test_compare_rejects_unknown_scheduler():
    net = load("chain.xmg")
    with pytest.raises(ValueError):
        compare(net, MemLayout(8, 2), ["fastest"])
