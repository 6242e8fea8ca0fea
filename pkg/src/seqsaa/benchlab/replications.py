"""Seeded replication studies and coverage tables."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import SeqSAAError
from ..sequential import RunReport, SeqConfig, run_with_stopping
from .truth import GroundTruth

COVER_TOL = 1e-9


def covers(gap: float, ci_upper: float, z_star: float) -> bool:
    """``0 <= mu <= ci_upper``, with ``mu`` clipped at 0 and a tiny float allowance."""
    return max(gap, 0.0) <= ci_upper + COVER_TOL * (1.0 + abs(z_star))


@dataclass
class ReplicationTable:
    label: str
    R: int
    completed: int
    failures: int
    mean_M: float
    mean_L: float
    mean_n_L: float
    mean_W: float
    mean_val_lp: float
    mean_ci_upper: float
    ci_rel: float
    coverage: float
    mean_time: float = math.nan
    timed_out: int = 0

    CSV_FIELDS = (
        "label", "R", "completed", "failures", "timed_out", "mean_M", "mean_L", "mean_n_L",
        "mean_W", "mean_val_lp", "mean_ci_upper", "ci_rel", "coverage",
    )


@dataclass
class Study:
    table: ReplicationTable
    reports: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)


def _one(cfg: SeqConfig, seed: int, truth: GroundTruth | None):
    run_cfg = replace(cfg, seed=seed, schedule=replace(cfg.schedule))
    rep = run_with_stopping(run_cfg)
    if truth is not None:
        rep.true_gap = truth.gap(cfg.instance, rep.x)
        cache = {}
        for st in rep.trajectory:
            key = st.x.tobytes()
            if key not in cache:
                cache[key] = truth.gap(cfg.instance, st.x)
            st.true_gap = cache[key]
    return rep


def run_replications(
    cfg: SeqConfig, R: int, truth: GroundTruth | None = None, label: str | None = None, seeds=None, workers: int = 1
) -> Study:
    """``R`` seeded runs of the stopping procedure, aggregated.

    Seeds default to ``cfg.seed + i``.  Failed runs are counted and left out
    of the aggregates; the table is built in seed order.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    seeds = list(seeds) if seeds is not None else [cfg.seed + i for i in range(R)]
    label = label or cfg.schedule.label()

    def job(seed):
        try:
            return seed, _one(cfg, seed, truth), None
        except SeqSAAError as exc:
            return seed, None, exc

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(job, seeds))
    else:
        results = [job(s) for s in seeds]
    reports = [r for _, r, e in results if e is None]
    errors = {s: e for s, _, e in results if e is not None}
    return Study(tabulate(label, reports, len(seeds), len(errors), truth), reports, errors)


def tabulate(label: str, reports: list[RunReport], R: int, failures: int, truth: GroundTruth | None) -> ReplicationTable:
    nan = math.nan
    if not reports:
        return ReplicationTable(label, R, 0, failures, nan, nan, nan, nan, nan, nan, nan, nan)

    def mean(vals):
        return math.fsum(vals) / len(vals)

    z = truth.z_star if truth is not None else nan
    cov = nan
    if truth is not None:
        cov = sum(covers(r.true_gap, r.ci_upper, z) for r in reports) / len(reports)
    ci = mean([r.ci_upper for r in reports])
    return ReplicationTable(
        label,
        R,
        len(reports),
        failures,
        mean([r.M for r in reports]),
        mean([r.L for r in reports]),
        mean([r.n_L for r in reports]),
        mean([r.W for r in reports]),
        mean([r.val_lp for r in reports]),
        ci,
        ci / abs(z) if truth is not None and z else nan,
        cov,
        mean([r.trajectory[-1].elapsed for r in reports]),
        sum(r.timed_out for r in reports),
    )


def coverage_count(reports, truth: GroundTruth) -> int:
    return int(np.sum([covers(r.true_gap, r.ci_upper, truth.z_star) for r in reports]))
