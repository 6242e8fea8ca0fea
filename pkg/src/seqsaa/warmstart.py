"""Dual-pool warm start for a fresh sample-path problem.

With fixed recourse every optimal second-stage dual lies in the same
polyhedron ``{lam >= 0 : W'lam <= d}``, so duals collected on earlier
samples give valid minorants of the recourse function for any new sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bundle import Cut, WarmStart, _blocks
from .errors import DualInfeasible, NumericalFailure
from .lp_kernel import LinearProgram, solve_lp
from .model import TwoStageInstance
from .sampling import ScenarioSet

DEDUP_REL = 1e-6
POOL_CAP = 5000
MASTER_LOOP_CAP = 500
_CHUNK = 4096


@dataclass
class DualPool:
    W: np.ndarray
    d: np.ndarray
    dedup_rel: float = DEDUP_REL
    cap: int = POOL_CAP
    feas_tol: float = 1e-8
    duals: np.ndarray = field(default=None)
    last_used: np.ndarray = field(default=None)
    clock: int = 0

    def __post_init__(self):
        r2 = self.W.shape[0]
        if self.duals is None:
            self.duals = np.zeros((0, r2))
        self.last_used = np.zeros(len(self.duals), dtype=np.int64) if self.last_used is None else self.last_used
        self._tol = self.feas_tol * max(1.0, float(np.abs(self.d).max(initial=0.0)))

    @classmethod
    def for_instance(cls, instance: TwoStageInstance, **kw) -> "DualPool":
        return cls(instance.W, instance.d, **kw)

    def __len__(self):
        return len(self.duals)

    def threshold(self, lam) -> float:
        return self.dedup_rel * (1.0 + float(np.linalg.norm(lam)))

    def feasible(self, lam) -> bool:
        return bool(np.all(lam >= -self._tol) and np.all(self.W.T @ lam <= self.d + self._tol))

    def touch(self, idx):
        self.clock += 1
        self.last_used[np.asarray(idx, dtype=int)] = self.clock

    def dump(self) -> str:
        """Plain-text snapshot, one dual per line."""
        return "\n".join(" ".join(repr(float(v)) for v in row) for row in self.duals) + "\n"


def pool_add(pool: DualPool, lam) -> str:
    """Insert ``lam``; returns ``"inserted"`` or ``"duplicate"``."""
    lam = np.asarray(lam, dtype=float)
    if not pool.feasible(lam):
        raise DualInfeasible("dual vector violates W'lam <= d, lam >= 0")
    if len(pool.duals):
        dist = np.linalg.norm(pool.duals - lam, axis=1)
        if dist.min() < pool.threshold(lam):
            return "duplicate"
    if len(pool.duals) >= pool.cap:
        # least recently selected goes first; among ties the oldest entry
        victim = int(np.argmin(pool.last_used))
        pool.duals = np.delete(pool.duals, victim, axis=0)
        pool.last_used = np.delete(pool.last_used, victim)
    pool.duals = np.vstack([pool.duals, lam[None, :]])
    pool.clock += 1
    pool.last_used = np.append(pool.last_used, pool.clock)
    return "inserted"


def harvest(pool: DualPool, dual_batches) -> int:
    """Add every distinct dual from ``dual_batches``; returns the number inserted."""
    if not dual_batches:
        return 0
    cand = np.unique(np.vstack(dual_batches), axis=0)
    return sum(pool_add(pool, lam) == "inserted" for lam in cand)


def _select(pool: DualPool, R: np.ndarray):
    """Per-row argmax over the pool of ``lam'r`` and the attained values."""
    P = pool.duals
    idx = np.empty(R.shape[0], dtype=int)
    val = np.empty(R.shape[0])
    for s in range(0, R.shape[0], _CHUNK):
        S = R[s : s + _CHUNK] @ P.T
        idx[s : s + _CHUNK] = np.argmax(S, axis=1)
        val[s : s + _CHUNK] = S[np.arange(S.shape[0]), idx[s : s + _CHUNK]]
    return idx, val


def _cut_from_selection(scenarios: ScenarioSet, L: np.ndarray, sel, m):
    w = np.full(len(sel), 1.0 / m)
    sub = scenarios.take(sel) if len(sel) != m else scenarios
    g = -sub.weighted_TtL(L, w)
    beta = float(np.einsum("i,ij,ij->", w, L, sub.H))
    return g, beta


def warmstart_master(
    instance: TwoStageInstance,
    scenarios: ScenarioSet,
    pool: DualPool,
    start,
    blocks: int = 1,
    loop_cap: int = MASTER_LOOP_CAP,
):
    """Cutting-plane initialization from the dual pool.

    Returns ``(x0, z0, cuts)``: the relaxed master minimizer, its value (a
    lower bound on the sample-path optimum), and the cuts generated.  With an
    empty pool returns ``(start, -inf, [])``.  No second-stage LP is solved.
    """
    start = np.asarray(start, dtype=float)
    if len(pool) == 0:
        return start.copy(), -math.inf, []
    m = len(scenarios)
    n1 = instance.n1
    if scenarios.support_index is not None:
        _, first, inverse = np.unique(scenarios.support_index, return_index=True, return_inverse=True)
        reps = scenarios.take(first)
    else:
        first, inverse, reps = None, None, scenarios
    parts = _blocks(m, blocks)

    def constraint(x):
        idx, val = _select(pool, reps.rhs(x))
        if inverse is not None:
            idx, val = idx[inverse], val[inverse]
        pool.touch(np.unique(idx))
        L = pool.duals[idx]
        pieces = [_cut_from_selection(scenarios, L[p], p, m) for p in parts]
        return math.fsum(val) / m, pieces

    rows, rhs = [], []
    cuts: list[Cut] = []
    x = start.copy()
    theta = -math.inf
    z0 = -math.inf
    B = len(parts)
    for it in range(loop_cap + 1):
        value, pieces = constraint(x)
        if value <= theta + 1e-9 * (1.0 + abs(value)):
            break
        if it == loop_cap:
            break
        for b, (g, beta) in enumerate(pieces):
            cuts.append(Cut(g, beta, "warmstart", b, 0))
        g_tot = sum(p[0] for p in pieces)
        beta_tot = sum(p[1] for p in pieces)
        rows.append(np.concatenate([g_tot, [-1.0]]))
        rhs.append(-beta_tot)
        A = np.vstack([np.hstack([instance.A, np.zeros((instance.r1, 1))]), np.array(rows)])
        lp = LinearProgram(
            np.concatenate([instance.c, [1.0]]),
            A,
            ["E"] * instance.r1 + ["L"] * len(rows),
            np.concatenate([instance.b, rhs]),
            np.concatenate([instance.x_lower, [-np.inf]]),
            np.concatenate([instance.x_upper, [np.inf]]),
        )
        sol = solve_lp(lp)
        if sol.status != "optimal":
            raise NumericalFailure(f"warm-start master LP ended with status {sol.status}")
        x = np.clip(sol.primal[:n1], instance.x_lower, instance.x_upper)
        theta = float(sol.primal[n1])
        z0 = sol.objective
    return x, z0, cuts


def warm_start(instance, scenarios, pool, start, blocks: int = 1) -> WarmStart:
    x0, z0, cuts = warmstart_master(instance, scenarios, pool, start, blocks)
    return WarmStart(cuts, z0, x0)
