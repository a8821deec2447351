"""Benchmark sweeps over the compiler and baselines, emitting CSV plus JSON.

Three sweep modes mirror the headline statistics: a target-accuracy scaling
sweep, a three-way algorithm comparison on a shared target set, and a
hyperparameter grid over (lambda, gamma, D_max). Every CSV row aggregates
per-sample JSON reports written alongside it, so any row can be audited by
re-aggregating its sample directory.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .baselines import SkBase, bruteforce_compile, sk_build_base, sk_compile
from .gateset import GateSet, default_gateset
from .search import SearchConfig, complexity_config, search
from .su2 import random_su2

EPS_FLOOR = 1e-15
CSV_FIELDS = ("epsilon_T", "eps_bar", "L_bar", "D_bar", "t_bar", "R",
              "L_p25", "L_p75", "n")
COMPARE_ALGORITHMS = ("rl", "bruteforce", "solovay_kitaev")

# Headline numbers from the full-scale reference run (two-day training,
# 1000-target samples). Desk-scale sweeps reproduce the trends, not these
# values; they ride along in each output directory for context.
FULL_SCALE_REFERENCE = {
    "eps_bar": 3.1e-3,
    "L_bar": 24.79,
    "n_samples": 1000,
    "t_bar_seconds_per_log_inv_eps": 0.274,
    "depth_slope_per_log_inv_eps": 6.56,
    "sk_length_factor": 10.0,
    "note": "full-scale reference run; not reproducible at desk scale",
}


@dataclass(frozen=True)
class BenchmarkRow:
    """Aggregate statistics for one benchmark bucket."""

    epsilon_T: float
    mean_log_accuracy: float     # eps_bar = exp(mean log eps_i)
    mean_length: float
    mean_depth: float
    mean_time: float
    ratio_depth_capped: float
    percentile25_length: float
    percentile75_length: float
    n_samples: int

    def csv_fields(self) -> list:
        return [repr(float(self.epsilon_T)),
                repr(float(self.mean_log_accuracy)),
                repr(float(self.mean_length)), repr(float(self.mean_depth)),
                repr(float(self.mean_time)),
                repr(float(self.ratio_depth_capped)),
                repr(float(self.percentile25_length)),
                repr(float(self.percentile75_length)),
                str(int(self.n_samples))]


def typical_average(values) -> float:
    """exp(mean(log v)) with v clamped below at EPS_FLOOR."""
    v = np.clip(np.asarray(values, dtype=float), EPS_FLOOR, None)
    return float(np.exp(np.mean(np.log(v))))


def record_from_report(report) -> dict:
    """Project the fields the aggregator needs out of a CompileReport."""
    return {"distance": report.distance, "length": report.length,
            "depth": report.depth_reached, "time": report.wall_time}


def record_from_json(doc: dict) -> dict:
    return {"distance": doc["distance"], "length": doc["length"],
            "depth": doc["depth_reached"], "time": doc["wall_time_s"]}


def aggregate(epsilon_t: float, records) -> BenchmarkRow:
    """Collapse per-sample records into one BenchmarkRow.

    A sample counts as depth-capped when it failed to reach the bucket's
    accuracy target, the same condition that ends the search early.
    """
    records = list(records)
    if not records:
        raise ValueError("cannot aggregate an empty sample set")
    dist = np.array([r["distance"] for r in records], dtype=float)
    length = np.array([r["length"] for r in records], dtype=float)
    depth = np.array([r["depth"] for r in records], dtype=float)
    times = np.array([r["time"] for r in records], dtype=float)
    return BenchmarkRow(
        epsilon_T=epsilon_t,
        mean_log_accuracy=typical_average(dist),
        mean_length=float(np.mean(length)),
        mean_depth=float(np.mean(depth)),
        mean_time=float(np.mean(times)),
        ratio_depth_capped=float(np.mean(dist >= epsilon_t)),
        percentile25_length=float(np.percentile(length, 25)),
        percentile75_length=float(np.percentile(length, 75)),
        n_samples=len(records))


def reaggregate_bucket(bucket_dir: str, epsilon_t: float) -> BenchmarkRow:
    """Rebuild a CSV row from its per-sample JSON directory (audit path)."""
    names = sorted(n for n in os.listdir(bucket_dir) if n.endswith(".json"))
    records = []
    for name in names:
        with open(os.path.join(bucket_dir, name)) as fh:
            records.append(record_from_json(json.load(fh)))
    return aggregate(epsilon_t, records)


def _write_samples(bucket_dir: str, reports):
    os.makedirs(bucket_dir, exist_ok=True)
    for i, rep in enumerate(reports):
        with open(os.path.join(bucket_dir, f"sample_{i:04d}.json"), "w") as fh:
            json.dump(rep.to_json(), fh)


def _write_csv(path: str, header, rows):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _write_reference(out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "reference.json"), "w") as fh:
        json.dump(FULL_SCALE_REFERENCE, fh, indent=1)


def _sample_targets(n: int, seed: int):
    rng = np.random.default_rng(seed)
    return [random_su2(rng) for _ in range(n)]


def run_scaling(net, out_dir: str, eps_list, n: int = 100, seed: int = 0,
                lam: float = 1.0, gamma: float = 400.0, d_bf: int = 5,
                d_max: int = 1000, gates: Optional[GateSet] = None):
    """Accuracy sweep: one bucket per target accuracy, deep depth budget."""
    gates = gates or default_gateset()
    targets = _sample_targets(n, seed)
    rows = []
    csv_rows = []
    for eps in eps_list:
        cfg = complexity_config(eps, lam=lam, gamma=gamma, D_bf=d_bf,
                                D_max=d_max)
        reports = [search(t, net, gates, cfg) for t in targets]
        _write_samples(os.path.join(out_dir, "scaling", f"eps_{eps:g}"),
                       reports)
        row = aggregate(eps, [record_from_report(r) for r in reports])
        rows.append(row)
        csv_rows.append(row.csv_fields())
    _write_reference(out_dir)
    csv_path = os.path.join(out_dir, "scaling.csv")
    _write_csv(csv_path, CSV_FIELDS, csv_rows)
    return csv_path, rows


def _sk_best_level(target, eps: float, base: SkBase, level_cap: int):
    """First recursion level reaching eps, else the deepest one tried."""
    rep = None
    for level in range(level_cap + 1):
        rep = sk_compile(target, level, base)
        if rep.distance < eps:
            break
    return rep


def run_compare(net, out_dir: str, eps_list, n: int = 100, seed: int = 0,
                d_max: int = 100, bf_depth: int = 8, sk_level_cap: int = 2,
                sk_base_depth: int = 8, lam: float = 1.0,
                gamma: float = 400.0, d_bf: int = 5,
                gates: Optional[GateSet] = None):
    """Three algorithms on one seeded target set, one row per (eps, algo)."""
    gates = gates or default_gateset()
    targets = _sample_targets(n, seed)
    base = sk_build_base(sk_base_depth, gates)
    rows = []
    csv_rows = []
    for eps in eps_list:
        cfg = SearchConfig(lam=lam, gamma=gamma, D_max=d_max, D_bf=d_bf,
                           epsilon_T=eps)
        by_algo = {
            "rl": [search(t, net, gates, cfg) for t in targets],
            "bruteforce": [bruteforce_compile(t, bf_depth, gates,
                                              accuracy_goal=eps)
                           for t in targets],
            "solovay_kitaev": [_sk_best_level(t, eps, base, sk_level_cap)
                               for t in targets],
        }
        for algo in COMPARE_ALGORITHMS:
            reports = by_algo[algo]
            _write_samples(
                os.path.join(out_dir, "compare", f"{algo}_eps_{eps:g}"),
                reports)
            row = aggregate(eps, [record_from_report(r) for r in reports])
            rows.append((algo, row))
            csv_rows.append([algo] + row.csv_fields())
    _write_reference(out_dir)
    csv_path = os.path.join(out_dir, "compare.csv")
    _write_csv(csv_path, ("algorithm",) + CSV_FIELDS, csv_rows)
    return csv_path, rows


def run_grid(net, out_dir: str, lambdas, gammas, d_maxes, eps_t: float,
             n: int = 100, seed: int = 0, d_bf: int = 5,
             gates: Optional[GateSet] = None):
    """Hyperparameter cross product at a fixed target accuracy."""
    gates = gates or default_gateset()
    targets = _sample_targets(n, seed)
    rows = []
    csv_rows = []
    for lam in lambdas:
        for gamma in gammas:
            for dm in d_maxes:
                cfg = SearchConfig(lam=lam, gamma=gamma, D_max=dm, D_bf=d_bf,
                                   epsilon_T=eps_t)
                reports = [search(t, net, gates, cfg) for t in targets]
                bucket = f"lam_{lam:g}_gam_{gamma:g}_dmax_{dm:d}"
                _write_samples(os.path.join(out_dir, "grid", bucket), reports)
                row = aggregate(eps_t,
                                [record_from_report(r) for r in reports])
                rows.append(((lam, gamma, dm), row))
                csv_rows.append([repr(float(lam)), repr(float(gamma)),
                                 str(int(dm))] + row.csv_fields())
    _write_reference(out_dir)
    csv_path = os.path.join(out_dir, "grid.csv")
    _write_csv(csv_path, ("lambda", "gamma", "D_max") + CSV_FIELDS, csv_rows)
    return csv_path, rows
