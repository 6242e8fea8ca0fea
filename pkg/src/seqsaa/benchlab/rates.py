"""Empirical work-complexity rates: log(true gap) against log(cumulative LP work)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InsufficientData
from ..sequential import SeqConfig, run_nonterminating
from .truth import GroundTruth

GAP_TOL = 1e-7  # tolerance of the ground-truth gap evaluation
FLOOR_FACTOR = 10.0


@dataclass
class RateFit:
    label: str
    slope: float
    se: float
    intercept: float
    n_points: int
    log_work: np.ndarray = field(repr=False, default=None)
    log_gap: np.ndarray = field(repr=False, default=None)


@dataclass
class Trajectories:
    """Per-seed ``(W_l, gap_l)`` sequences of one schedule."""

    label: str
    work: list
    gaps: list

    def mean_curve(self):
        L = min(len(w) for w in self.work)
        W = np.array([w[:L] for w in self.work], dtype=float)
        G = np.array([g[:L] for g in self.gaps], dtype=float)
        return W.mean(axis=0), np.maximum(G, 0.0).mean(axis=0)

    def gap_at(self, k: int, budget: float) -> float:
        """Gap of seed ``k`` at the last iteration whose cumulative work is within ``budget``."""
        w, g = self.work[k], self.gaps[k]
        idx = [i for i, wi in enumerate(w) if wi <= budget]
        return max(g[idx[-1]], 0.0) if idx else math.inf


def fit_loglog(label: str, work, gaps, floor: float) -> RateFit:
    """OLS of ``log gap`` on ``log work`` over points with gap above ``floor``."""
    work = np.asarray(work, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    keep = (gaps > floor) & (work > 0)
    if keep.sum() < 4:
        raise InsufficientData(f"{label}: only {int(keep.sum())} usable points, need 4")
    x, y = np.log(work[keep]), np.log(gaps[keep])
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = len(x) - 2
    s2 = float(resid @ resid) / dof if dof > 0 else math.nan
    cov = s2 * np.linalg.inv(X.T @ X)
    return RateFit(label, float(coef[1]), math.sqrt(cov[1, 1]), float(coef[0]), int(keep.sum()), x, y)


def collect(cfg: SeqConfig, seeds, truth: GroundTruth, label=None, max_outer=None, max_work=None) -> Trajectories:
    """Run Algorithm-1 trajectories per seed and record ``(W_l, true gap)``.

    ``max_work`` may be a number or a per-seed sequence.
    """
    work, gaps = [], []
    for k, seed in enumerate(seeds):
        budget = max_work[k] if isinstance(max_work, (list, tuple, np.ndarray)) else max_work
        run_cfg = replace(cfg, seed=seed, schedule=replace(cfg.schedule))
        traj = run_nonterminating(run_cfg, max_outer=max_outer, max_work=budget)
        cache = {}
        g = []
        for st in traj:
            key = st.x.tobytes()
            if key not in cache:
                cache[key] = truth.gap(cfg.instance, st.x)
            g.append(cache[key])
        work.append([st.W for st in traj])
        gaps.append(g)
    return Trajectories(label or cfg.schedule.label(), work, gaps)


def rate_experiment(configs: dict, seeds, truth: GroundTruth, max_outer=None, max_work=None, floor=None):
    """Fit a rate per schedule; returns ``({label: RateFit}, {label: Trajectories})``.

    ``configs`` maps labels to :class:`SeqConfig`.  The regression uses the
    per-iteration means over seeds, dropping iterations whose mean gap is
    below ``floor`` (default: 10x the ground-truth tolerance).
    """
    if floor is None:
        floor = FLOOR_FACTOR * GAP_TOL * (1.0 + abs(truth.z_star))
    fits, trajs = {}, {}
    for label, cfg in configs.items():
        tr = collect(cfg, seeds, truth, label, max_outer, max_work)
        trajs[label] = tr
        W, G = tr.mean_curve()
        fits[label] = fit_loglog(label, W, G, floor)
    return fits, trajs
