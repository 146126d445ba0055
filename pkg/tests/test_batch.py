import csv

import numpy as np
import pytest

from ftdp.batch import SUMMARY_FIELDS, aggregate, batch, expand, format_table, load_sweep, write_summary
from ftdp.scenario import Scenario, ScenarioError


def test_expand_product_and_pairs():
    cases = expand({"thruster": [1, [1, 3]], "delta_w": [0.2, [0.2, 0.3]], "seeds": [0, 1]})
    labels = [(c.thrusters, c.delta_w, c.seed) for c in cases]
    assert ((1,), (0.2,), 0) in labels
    assert ((1, 3), (0.2, 0.2), 1) in labels
    assert ((1, 3), (0.2, 0.3), 0) in labels
    assert ((1,), (0.2, 0.3), 0) not in labels
    assert len(cases) == 2 + 2 + 2


def test_expand_validation():
    with pytest.raises(ScenarioError):
        expand({"thruster": [5], "delta_w": [0.1]})
    with pytest.raises(ScenarioError):
        expand({"thruster": [1], "delta_w": [1.5]})
    with pytest.raises(ScenarioError):
        expand({"thrusters": [1]})


def test_empty_sweep_gives_header_only(tmp_path):
    rows, agg = batch(Scenario(), {})
    assert rows == [] and agg == []
    p = write_summary(rows, tmp_path / "s.csv")
    assert p.read_text().strip() == ",".join(SUMMARY_FIELDS)
    assert format_table(rows).split() == list(SUMMARY_FIELDS)


def test_small_batch(tmp_path):
    sweep = {"thruster": [2], "delta_w": [0.3], "seeds": [0, 1], "fault_time_s": [200.0]}
    rows, agg = batch(Scenario(), sweep)
    assert [r["correct"] for r in rows] == [True, True]
    assert agg[0]["detection_rate"] == 1.0 and agg[0]["identification_rate"] == 1.0
    p = write_summary(rows, tmp_path / "s.csv")
    with open(p) as fh:
        assert len(list(csv.DictReader(fh))) == 2


def test_parallel_matches_serial():
    sweep = {"thruster": [1], "delta_w": [0.3], "seeds": [3, 4]}
    serial, _ = batch(Scenario(), sweep, jobs=1)
    parallel, _ = batch(Scenario(), sweep, jobs=2)
    assert serial == parallel


def test_error_rows_do_not_abort():
    wild = Scenario(nu0=np.array([1e200, 0.0, 0.0]))
    sweep = {"thruster": [1], "delta_w": [0.3], "seeds": [0, 1]}
    rows, agg = batch(wild, sweep)
    assert all(r["status"].startswith("error: run diverged") for r in rows)
    assert agg[0]["runs"] == 2 and agg[0]["errors"] == 2


def test_aggregate_rates():
    rows = [
        {"thrusters": "1", "delta_w": "0.2", "psi_deg": "", "status": "ok", "detected": True, "correct": True},
        {"thrusters": "1", "delta_w": "0.2", "psi_deg": "", "status": "ok", "detected": True, "correct": False},
        {"thrusters": "1", "delta_w": "0.2", "psi_deg": "", "status": "error: x", "detected": False, "correct": False},
    ]
    (a,) = aggregate(rows)
    assert a["runs"] == 3 and a["errors"] == 1
    assert a["detection_rate"] == 1.0 and a["identification_rate"] == 0.5


def test_load_sweep_inline_and_base(tmp_path):
    (tmp_path / "base.toml").write_text('name = "b"\n[reference]\npsi_deg = 90\n')
    (tmp_path / "s1.toml").write_text('base = "base.toml"\n[sweep]\nthruster = [3]\ndelta_w = [0.1]\n')
    base, sweep = load_sweep(tmp_path / "s1.toml")
    assert base.name == "b" and sweep["thruster"] == [3]
    (tmp_path / "s2.toml").write_text('[scenario.run]\nduration_s = 50\n[sweep]\nseed_count = 2\n')
    base, sweep = load_sweep(tmp_path / "s2.toml")
    assert base.duration == 50
    (tmp_path / "s3.toml").write_text('bogus = 1\n')
    with pytest.raises(ScenarioError):
        load_sweep(tmp_path / "s3.toml")
