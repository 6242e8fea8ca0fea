"""Level bundle method for sample-path problems.

Each inner iteration evaluates every sampled subproblem at the trial point,
adds a cut, updates the bounds ``z_up``/``z_low``, and projects the
stability center onto the level set of the cutting-plane model.  The loop
stops as soon as ``z_up - z_low`` falls below the adaptive tolerance
``nu * sigma_clamped / sqrt(m)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LevelSetEmpty, MaxInnerExceeded, NumericalFailure
from .lp_kernel import LinearProgram, Polyhedron, project, solve_level_projection, solve_lp
from .model import TwoStageInstance, aggregate_cut, evaluate_batch, mean_and_variance
from .sampling import ScenarioSet

THETA_WEIGHT = 1e-6  # proximal weight on block epigraph variables inside the projection


@dataclass
class Cut:
    g: np.ndarray
    beta: float
    origin: str = "aggregate"  # "aggregate", "block", or "warmstart"
    block: int = 0
    iterate: int = 0

    def __call__(self, x) -> float:
        return float(self.g @ x + self.beta)


@dataclass
class TraceRecord:
    outer: int
    t: int
    z_up: float
    z_low: float
    gap: float
    eps: float
    sigma: float
    lp_count: int


@dataclass
class WarmStart:
    cuts: list
    z_low: float = -math.inf
    x0: np.ndarray | None = None


@dataclass
class InnerResult:
    x: np.ndarray
    gap: float
    eps: float
    sigma: float
    inner_iters: int
    lp_count: int
    z_up: float
    z_low: float
    cuts: list = field(default_factory=list)
    duals: list = field(default_factory=list)
    converged: bool = True
    trace: list = field(default_factory=list)


@dataclass
class BundleState:
    cuts: list
    center: np.ndarray
    incumbent: np.ndarray
    z_up: float = math.inf
    z_low: float = -math.inf
    alpha_lev: float = 0.5
    t: int = 0
    lp_count: int = 0
    sigma: float = 0.0


def adaptive_tolerance(sigma: float, m: int, nu: float, sigma_min: float, sigma_max: float) -> float:
    if not 0 < sigma_min < sigma_max:
        raise ValueError("need 0 < sigma_min < sigma_max")
    if nu <= 0 or m < 1:
        raise ValueError("need nu > 0 and m >= 1")
    return nu * min(max(sigma, sigma_min), sigma_max) / math.sqrt(m)


def inner_gap(state: BundleState) -> float:
    if not math.isfinite(state.z_up):
        raise ValueError("no function evaluation yet")
    return max(state.z_up - state.z_low, 0.0)


def default_start(instance: TwoStageInstance) -> np.ndarray:
    """A minimizer of the first-stage cost over ``X``."""
    sol = solve_lp(instance.first_stage_lp())
    if sol.status != "optimal":
        raise NumericalFailure(f"first-stage LP ended with status {sol.status}")
    return np.clip(sol.primal, instance.x_lower, instance.x_upper)


def _blocks(m: int, n_blocks: int):
    n_blocks = max(1, min(n_blocks, m))
    edges = np.linspace(0, m, n_blocks + 1).astype(int)
    return [np.arange(edges[b], edges[b + 1]) for b in range(n_blocks)]


class _Model:
    """Cutting-plane model ``c'x + sum_b max_j (g_bj'x + beta_bj)``."""

    def __init__(self, instance: TwoStageInstance, n_blocks: int):
        self.inst = instance
        self.B = n_blocks
        self.cuts: list[Cut] = []

    def add(self, cut: Cut):
        self.cuts.append(cut)

    def value(self, x) -> float:
        per = np.full(self.B, -np.inf)
        for cut in self.cuts:
            per[cut.block] = max(per[cut.block], cut(x))
        return float(self.inst.c @ x + per.sum())

    def _rows(self):
        n1 = self.inst.n1
        G = np.zeros((len(self.cuts), n1 + self.B))
        beta = np.empty(len(self.cuts))
        for k, cut in enumerate(self.cuts):
            G[k, :n1] = cut.g
            G[k, n1 + cut.block] = -1.0
            beta[k] = cut.beta
        return G, beta

    def minimum(self) -> float:
        inst = self.inst
        n1 = inst.n1
        G, beta = self._rows()
        A = np.vstack([np.hstack([inst.A, np.zeros((inst.r1, self.B))]), G])
        senses = ["E"] * inst.r1 + ["L"] * len(self.cuts)
        rhs = np.concatenate([inst.b, -beta])
        lb = np.concatenate([inst.x_lower, np.full(self.B, -np.inf)])
        ub = np.concatenate([inst.x_upper, np.full(self.B, np.inf)])
        c = np.concatenate([inst.c, np.ones(self.B)])
        sol = solve_lp(LinearProgram(c, A, senses, rhs, lb, ub))
        if sol.status != "optimal":
            raise NumericalFailure(f"bundle master LP ended with status {sol.status}")
        return sol.objective

    def project(self, center, level: float, region: Polyhedron) -> np.ndarray:
        inst = self.inst
        n1 = inst.n1
        if self.B == 1:
            G = np.array([inst.c + cut.g for cut in self.cuts])
            beta = np.array([cut.beta for cut in self.cuts])
            return solve_level_projection(center, (G, beta), level, region)
        G, beta = self._rows()
        # epigraph form in (x, theta); theta is centered at the model pieces at the center
        theta0 = np.full(self.B, -np.inf)
        for cut in self.cuts:
            theta0[cut.block] = max(theta0[cut.block], cut(center))
        A_in = np.vstack([G, np.concatenate([inst.c, np.ones(self.B)])[None, :]])
        b_in = np.concatenate([-beta, [level]])
        sub = Polyhedron(
            np.hstack([inst.A, np.zeros((inst.r1, self.B))]),
            inst.b,
            np.concatenate([inst.x_lower, np.full(self.B, -np.inf)]),
            np.concatenate([inst.x_upper, np.full(self.B, np.inf)]),
            A_in,
            b_in,
        )
        w = np.concatenate([np.ones(n1), np.full(self.B, THETA_WEIGHT)])
        z = project(np.concatenate([center, theta0]), sub, w)
        return z[:n1]


def solve_sample_path(
    instance: TwoStageInstance,
    scenarios: ScenarioSet,
    start=None,
    warm: WarmStart | None = None,
    nu: float = 1.0,
    sigma_min: float = 1e-5,
    sigma_max: float | None = None,
    max_inner: int = 500,
    alpha_lev: float = 0.5,
    blocks: int = 1,
    eps_fixed: float | None = None,
    rel_gap: float | None = None,
    threads: int = 1,
    outer: int = 0,
    trace: bool = False,
    collect_duals: bool = True,
    raise_on_cap: bool = True,
) -> InnerResult:
    """Solve ``min c'x + (1/m) sum_i Q(x, xi_i)`` to the adaptive tolerance.

    ``eps_fixed`` (a constant) and ``rel_gap`` (``rel_gap * max(|z_up|, 1)``)
    replace the adaptive tolerance; given both, the smaller one applies.
    Oracles and validation solves use these.  Evaluating ``start`` is inner iteration 1.
    """
    m = len(scenarios)
    if m < 1:
        raise ValueError("sample-path problem needs at least one scenario")
    if sigma_max is None:
        sigma_max = 1e7 * instance.cost_scale
    if not 0 < alpha_lev < 1:
        raise ValueError("alpha_lev must lie in (0, 1)")
    x = default_start(instance) if start is None else np.asarray(start, dtype=float).copy()
    region = instance.region()
    x = project(x, region)
    parts = _blocks(m, blocks)
    model = _Model(instance, len(parts))
    if warm is not None:
        for cut in warm.cuts:
            model.add(cut)
    state = BundleState(model.cuts, x.copy(), x.copy(), alpha_lev=alpha_lev)
    if warm is not None and math.isfinite(warm.z_low):
        state.z_low = warm.z_low
    weights = np.full(m, 1.0 / m)
    harvested: list = []
    records: list = []

    def tolerance():
        if eps_fixed is None and rel_gap is None:
            return adaptive_tolerance(state.sigma, m, nu, sigma_min, sigma_max)
        tol = math.inf
        if rel_gap is not None:
            tol = rel_gap * max(abs(state.z_up), 1.0)
        if eps_fixed is not None:
            tol = min(tol, eps_fixed)
        return tol

    def result(converged):
        return InnerResult(
            state.incumbent.copy(),
            inner_gap(state),
            tolerance(),
            state.sigma,
            state.t,
            state.lp_count,
            state.z_up,
            state.z_low,
            list(model.cuts),
            harvested,
            converged,
            records,
        )

    def record():
        if trace:
            records.append(
                TraceRecord(outer, state.t, state.z_up, state.z_low, inner_gap(state), tolerance(), state.sigma, state.lp_count)
            )

    while True:
        state.t += 1
        values, duals = evaluate_batch(instance, x, scenarios, threads)
        state.lp_count += m
        if collect_duals:
            harvested.append(np.unique(duals, axis=0))
        mean, var = mean_and_variance(values)
        f = float(instance.c @ x) + mean
        for b, idx in enumerate(parts):
            sub = scenarios.take(idx) if len(parts) > 1 else scenarios
            g, beta = aggregate_cut(sub, duals[idx], weights[idx])
            model.add(Cut(g, beta, "aggregate" if len(parts) == 1 else "block", b, state.t))
        if f < state.z_up:
            state.z_up = f
            state.incumbent = x.copy()
            state.center = x.copy()
            state.sigma = math.sqrt(var)
        state.z_low = min(max(state.z_low, model.minimum()), state.z_up)
        record()
        if inner_gap(state) <= tolerance():
            return result(True)
        if state.t >= max_inner:
            res = result(False)
            if raise_on_cap:
                raise MaxInnerExceeded(f"inner loop hit {max_inner} iterations with gap {res.gap:.3g}", res)
            return res
        while True:
            level = state.z_up - (1.0 - alpha_lev) * (state.z_up - state.z_low)
            try:
                x = model.project(state.center, level, region)
                break
            except LevelSetEmpty:
                state.z_low = level
                if inner_gap(state) <= tolerance():
                    record()
                    return result(True)
