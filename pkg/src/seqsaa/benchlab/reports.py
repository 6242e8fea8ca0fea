"""CSV and JSON emitters.  Numbers are written with ``repr`` so files are byte-stable."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict

from .replications import ReplicationTable

TRAJECTORY_FIELDS = ("run_id", "ell", "m", "n", "inner_iters", "lp_count", "G", "eps", "ci_upper", "true_gap")


def _fmt(v):
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def trajectory_rows(run_id, trajectory):
    for st in trajectory:
        yield (run_id, st.ell, st.m, st.n, st.inner_iters, st.lp_count, float(st.gap), float(st.eps),
               float(st.ci_upper), float(st.true_gap))


def trajectory_csv(runs) -> str:
    """``runs`` is an iterable of ``(run_id, trajectory)`` pairs."""
    rows = [row for run_id, traj in runs for row in trajectory_rows(run_id, traj)]
    return _csv(TRAJECTORY_FIELDS, rows)


def summary_csv(tables: list[ReplicationTable]) -> str:
    fields = ReplicationTable.CSV_FIELDS
    rows = []
    for t in tables:
        d = asdict(t)
        rows.append([d[f] for f in fields])
    return _csv(fields, rows)


def rates_csv(fits) -> str:
    rows = [(f.label, f.slope, f.se, f.intercept, f.n_points) for f in fits]
    return _csv(("label", "slope", "se", "intercept", "n_points"), rows)


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"
