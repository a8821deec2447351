"""Tests for benchmark aggregation, sweep drivers, and the audit path."""

import csv
import json
import os

import numpy as np
import pytest

from braidc.baselines import BfsHeuristic, BfsTable
from braidc.bench import (CSV_FIELDS, FULL_SCALE_REFERENCE, BenchmarkRow,
                          aggregate, reaggregate_bucket, record_from_report,
                          run_compare, run_grid, run_scaling, typical_average)


@pytest.fixture(scope="module")
def oracle():
    return BfsHeuristic(BfsTable.build(8))


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ---- aggregation arithmetic


def test_typical_average_hand_values():
    assert abs(typical_average([1e-2, 1e-4]) - 1e-3) < 1e-18
    assert abs(typical_average([0.5]) - 0.5) < 1e-16


def test_typical_average_clamps_at_floor():
    assert typical_average([0.0, 0.0]) == pytest.approx(1e-15)
    assert typical_average([0.0, 1e-15]) == pytest.approx(1e-15)


def test_aggregate_fields():
    records = [
        {"distance": 1e-2, "length": 10, "depth": 3, "time": 0.5},
        {"distance": 1e-4, "length": 20, "depth": 5, "time": 1.5},
        {"distance": 2e-1, "length": 30, "depth": 7, "time": 2.5},
        {"distance": 1e-3, "length": 40, "depth": 9, "time": 3.5},
    ]
    row = aggregate(1e-1, records)
    assert row.epsilon_T == 1e-1
    dists = [1e-2, 1e-4, 2e-1, 1e-3]
    assert row.mean_log_accuracy == pytest.approx(
        np.exp(np.mean(np.log(dists))))
    assert row.mean_length == 25.0
    assert row.mean_depth == 6.0
    assert row.mean_time == 2.0
    assert row.ratio_depth_capped == 0.25      # only the 2e-1 sample missed
    assert row.percentile25_length == pytest.approx(
        np.percentile([10, 20, 30, 40], 25))
    assert row.percentile75_length == pytest.approx(
        np.percentile([10, 20, 30, 40], 75))
    assert row.n_samples == 4


def test_aggregate_empty_rejected():
    with pytest.raises(ValueError):
        aggregate(1e-2, [])


def test_csv_fields_order():
    row = BenchmarkRow(epsilon_T=0.1, mean_log_accuracy=0.01, mean_length=5.0,
                       mean_depth=2.0, mean_time=0.1, ratio_depth_capped=0.0,
                       percentile25_length=4.0, percentile75_length=6.0,
                       n_samples=3)
    fields = row.csv_fields()
    assert len(fields) == len(CSV_FIELDS)
    assert fields[0] == "0.1"
    assert fields[-1] == "3"


# ---- scaling sweep


def test_scaling_csv_schema_and_monotonicity(oracle, tmp_path):
    csv_path, rows = run_scaling(oracle, str(tmp_path), [0.5, 0.05], n=8,
                                 seed=11, d_max=16)
    table = _read_csv(csv_path)
    assert table[0] == list(CSV_FIELDS)
    assert len(table) == 3
    # tighter accuracy target must not worsen the typical accuracy
    assert rows[1].mean_log_accuracy <= rows[0].mean_log_accuracy + 1e-12
    assert rows[0].n_samples == 8


def test_sweep_writes_reference_sidecar(oracle, tmp_path):
    run_scaling(oracle, str(tmp_path), [0.3], n=2, seed=1, d_max=6)
    with open(tmp_path / "reference.json") as fh:
        doc = json.load(fh)
    assert doc == FULL_SCALE_REFERENCE
    assert doc["eps_bar"] == pytest.approx(3.1e-3)
    assert doc["L_bar"] == pytest.approx(24.79)


def test_scaling_audit_reaggregates(oracle, tmp_path):
    csv_path, rows = run_scaling(oracle, str(tmp_path), [0.3], n=6, seed=3,
                                 d_max=10)
    bucket = os.path.join(str(tmp_path), "scaling", "eps_0.3")
    again = reaggregate_bucket(bucket, 0.3)
    assert again == rows[0]


def test_scaling_deterministic(oracle, tmp_path):
    _, rows1 = run_scaling(oracle, str(tmp_path / "a"), [0.3], n=5, seed=7,
                           d_max=8)
    _, rows2 = run_scaling(oracle, str(tmp_path / "b"), [0.3], n=5, seed=7,
                           d_max=8)
    r1, r2 = rows1[0], rows2[0]
    assert r1.mean_log_accuracy == r2.mean_log_accuracy
    assert r1.mean_length == r2.mean_length
    assert r1.mean_depth == r2.mean_depth
    assert r1.ratio_depth_capped == r2.ratio_depth_capped


def test_scaling_different_seed_differs(oracle, tmp_path):
    _, rows1 = run_scaling(oracle, str(tmp_path / "a"), [0.3], n=5, seed=7,
                           d_max=8)
    _, rows2 = run_scaling(oracle, str(tmp_path / "b"), [0.3], n=5, seed=8,
                           d_max=8)
    assert rows1[0].mean_log_accuracy != rows2[0].mean_log_accuracy


# ---- compare sweep


def test_compare_rows_per_bucket(oracle, tmp_path):
    csv_path, rows = run_compare(oracle, str(tmp_path), [0.3, 0.1], n=4,
                                 seed=5, d_max=10, bf_depth=6,
                                 sk_level_cap=1, sk_base_depth=6)
    table = _read_csv(csv_path)
    assert table[0] == ["algorithm"] + list(CSV_FIELDS)
    assert len(table) == 1 + 2 * 3
    algos = [r[0] for r in table[1:]]
    assert algos == ["rl", "bruteforce", "solovay_kitaev"] * 2
    for (algo, row), line in zip(rows, table[1:]):
        assert line[0] == algo
        assert float(line[1]) == row.epsilon_T


def test_compare_audit_reaggregates(oracle, tmp_path):
    _, rows = run_compare(oracle, str(tmp_path), [0.3], n=3, seed=5,
                          d_max=8, bf_depth=5, sk_level_cap=1,
                          sk_base_depth=6)
    for algo, row in rows:
        bucket = os.path.join(str(tmp_path), "compare", f"{algo}_eps_0.3")
        assert reaggregate_bucket(bucket, 0.3) == row


def test_compare_shared_targets_give_comparable_rows(oracle, tmp_path):
    # brute force at generous accuracy on a shared set should match or beat
    # the search length cap; sanity-check relative magnitudes are plausible
    _, rows = run_compare(oracle, str(tmp_path), [0.4], n=5, seed=9,
                          d_max=10, bf_depth=8, sk_level_cap=1,
                          sk_base_depth=8)
    by_algo = {algo: row for algo, row in rows}
    assert by_algo["bruteforce"].ratio_depth_capped <= 0.2
    assert by_algo["rl"].mean_length > 0


# ---- grid sweep


def test_grid_csv_schema(oracle, tmp_path):
    csv_path, rows = run_grid(oracle, str(tmp_path), [0.5, 1.0], [0.0, 400.0],
                              [4, 8], 0.2, n=3, seed=2)
    table = _read_csv(csv_path)
    assert table[0] == ["lambda", "gamma", "D_max"] + list(CSV_FIELDS)
    assert len(table) == 1 + 2 * 2 * 2
    combos = [(float(r[0]), float(r[1]), int(r[2])) for r in table[1:]]
    assert combos == [(l, g, d) for l in (0.5, 1.0) for g in (0.0, 400.0)
                      for d in (4, 8)]


def test_grid_gamma_zero_and_large_both_complete(oracle, tmp_path):
    _, rows = run_grid(oracle, str(tmp_path), [1.0], [0.0, 400.0], [8], 0.1,
                       n=4, seed=6)
    assert len(rows) == 2
    for (_, gamma, _), row in rows:
        assert row.n_samples == 4
        assert np.isfinite(row.mean_log_accuracy)
        assert row.mean_length >= 0


def test_grid_audit_reaggregates(oracle, tmp_path):
    _, rows = run_grid(oracle, str(tmp_path), [1.0], [400.0], [6], 0.2, n=3,
                       seed=4)
    bucket = os.path.join(str(tmp_path), "grid", "lam_1_gam_400_dmax_6")
    assert reaggregate_bucket(bucket, 0.2) == rows[0][1]


def test_sample_files_are_full_reports(oracle, tmp_path):
    run_scaling(oracle, str(tmp_path), [0.3], n=2, seed=1, d_max=6)
    bucket = os.path.join(str(tmp_path), "scaling", "eps_0.3")
    names = sorted(os.listdir(bucket))
    assert names == ["sample_0000.json", "sample_0001.json"]
    with open(os.path.join(bucket, names[0])) as fh:
        doc = json.load(fh)
    assert {"word", "distance", "length", "depth_reached",
            "wall_time_s", "terminated_by"} <= set(doc)
