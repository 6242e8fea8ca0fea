"""Outer sequential-SAA drivers: schedules, candidate validation, stopping."""

from __future__ import annotations

import math
from fractions import Fraction
import time
from dataclasses import asdict, dataclass, field, replace
from statistics import NormalDist

import numpy as np

from .bundle import InnerResult, default_start, solve_sample_path
from .errors import MaxInnerExceeded
from .model import TwoStageInstance, scaled_ints, evaluate_batch, solve_extensive_form
from .sampling import StreamKey, ValidationStream, draw
from .warmstart import DualPool, harvest, warm_start

SCHEDULE_KINDS = ("linear", "geometric", "dynamic", "polynomial")


@dataclass
class Schedule:
    kind: str = "geometric"
    delta: int = 100
    c1: float = 1.5
    c0: float = 1.05
    c_h: float = 3.0
    C1: float = 1.5
    p: float = 1.0
    poly_c0: float = 100.0

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule {self.kind!r}")
        if self.kind == "linear" and self.delta < 1:
            raise ValueError("linear schedule needs delta >= 1")
        if self.kind == "geometric" and self.c1 <= 1:
            raise ValueError("geometric schedule needs c1 > 1")
        if self.kind == "dynamic" and not (1 < self.c0 <= self.C1 <= self.c_h < math.inf):
            raise ValueError("dynamic schedule needs 1 < c0 <= C1 <= c_h < inf")
        if self.kind == "polynomial" and (self.poly_c0 <= 0 or self.p <= 0):
            raise ValueError("polynomial schedule needs c0 > 0 and p > 0")

    @classmethod
    def linear(cls, delta=100):
        return cls("linear", delta=delta)

    @classmethod
    def geometric(cls, c1=1.5):
        return cls("geometric", c1=c1)

    @classmethod
    def dynamic(cls, c0=1.05, c_h=3.0, C1=1.5):
        return cls("dynamic", c0=c0, c_h=c_h, C1=C1)

    @classmethod
    def polynomial(cls, c0=100.0, p=1.0):
        return cls("polynomial", poly_c0=c0, p=p)

    def label(self) -> str:
        return {
            "linear": f"linear({self.delta})",
            "geometric": f"geometric({self.c1:g})",
            "dynamic": f"dynamic({self.c0:g},{self.c_h:g})",
            "polynomial": f"polynomial({self.poly_c0:g},{self.p:g})",
        }[self.kind]


def next_sample_size(schedule: Schedule, m: int, inner_iters_used: int, ell: int | None = None) -> int:
    """Sample size for the next outer iteration; updates ``schedule.C1`` in dynamic mode.

    ``ell`` is the index of the iteration that just finished (needed by the
    polynomial schedule only).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    kind = schedule.kind
    if kind == "linear":
        return m + schedule.delta
    if kind == "geometric":
        return math.ceil(schedule.c1 * m)
    if kind == "dynamic":
        if inner_iters_used == 1:
            schedule.C1 = min(2 * schedule.C1 - 1, schedule.c_h)
        elif inner_iters_used > 4:
            schedule.C1 = max(schedule.c0, 0.5 * schedule.C1 + 0.5)
        assert schedule.c0 <= schedule.C1 <= schedule.c_h
        return math.ceil(schedule.C1 * m)
    if ell is None:
        raise ValueError("polynomial schedule needs the outer index")
    return max(m + 1, math.ceil(schedule.poly_c0 * (ell + 1) ** schedule.p))


def z_alpha(alpha: float) -> float:
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return NormalDist().inv_cdf(1.0 - alpha)


@dataclass
class SeqConfig:
    instance: TwoStageInstance
    sampler: str = "iid"
    schedule: Schedule = field(default_factory=Schedule)
    nu: float = 1.0
    sigma_min: float = 1e-5
    sigma_max: float | None = None
    ci_floor: float = 1e-5
    alpha: float = 0.1
    eps: float | None = None
    eps_rel: float | None = 1e-3
    m1: int = 100
    n1: int | None = None
    seed: int = 0
    time_limit_s: float = 7200.0
    max_inner: int = 500
    val_max_inner: int = 500
    val_rel_gap: float = 1e-4
    val_eps_frac: float | None = 1e-3
    warmstart: bool = True
    blocks: int = 1
    alpha_lev: float = 0.5
    threads: int = 1
    reuse_prefix: bool = False
    couple: bool = True
    max_outer: int | None = None

    def __post_init__(self):
        if self.sigma_max is None:
            self.sigma_max = 1e7 * self.instance.cost_scale
        if self.n1 is None:
            self.n1 = max(1, math.ceil(self.m1 / 2))
        if self.couple and self.m1 != 2 * self.n1:
            raise ValueError("coupled sampling needs m1 == 2 * n1")

    def resolved(self) -> dict:
        """JSON-friendly view with every default filled in."""
        out = {k: v for k, v in asdict(self).items() if k not in ("instance", "schedule")}
        out["instance"] = self.instance.name
        out["schedule"] = asdict(self.schedule)
        return out


@dataclass
class ValidationResult:
    G: float
    s2: float
    x_tilde: np.ndarray
    ci_upper: float
    n: int
    lp_count: int
    converged: bool = True


@dataclass
class OuterState:
    ell: int
    m: int
    n: int
    x: np.ndarray
    eps: float
    sigma: float
    gap: float
    z_up: float
    inner_iters: int
    M: int
    W: int
    lp_count: int
    inner_converged: bool
    ci_upper: float = math.nan
    G_val: float = math.nan
    s2_val: float = math.nan
    val_lp: int = 0
    elapsed: float = 0.0
    true_gap: float = math.nan


@dataclass
class RunReport:
    x: np.ndarray
    L: int
    M: int
    n_L: int
    m_L: int
    ci_upper: float
    eps: float
    W: int
    val_lp: int
    status: str  # "stopped", "timed_out", "max_outer"
    trajectory: list
    seed: int
    true_gap: float = math.nan

    @property
    def timed_out(self) -> bool:
        return self.status == "timed_out"

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "seed": self.seed,
            "L": self.L,
            "M": self.M,
            "n_L": self.n_L,
            "m_L": self.m_L,
            "ci_upper": self.ci_upper,
            "eps": self.eps,
            "W": self.W,
            "val_lp": self.val_lp,
            "true_gap": None if math.isnan(self.true_gap) else self.true_gap,
            "x": [float(v) for v in self.x],
        }


def _couple(m: int, cfg: SeqConfig) -> tuple[int, int]:
    if cfg.couple:
        n = math.ceil(m / 2)
        return 2 * n, n
    return m, cfg.n1


def gap_estimate(c, x_hat, x_tilde, q_hat, q_tilde) -> tuple[float, float]:
    """``(G, s2)``: ``c'(x_hat - x_tilde) + mean(D)`` and the divisor-``n`` variance of ``D = q_hat - q_tilde``.

    ``D`` and the cost offset are formed exactly; each output is rounded once.
    """
    q_hat = [float(v) for v in q_hat]
    q_tilde = [float(v) for v in q_tilde]
    if len(q_hat) != len(q_tilde):
        raise ValueError("paired samples differ in length")
    offset = sum((Fraction(float(cj)) * (Fraction(float(a)) - Fraction(float(b)))
                  for cj, a, b in zip(c, x_hat, x_tilde)), Fraction(0))
    if not all(map(math.isfinite, q_hat + q_tilde)):
        D = np.subtract(q_hat, q_tilde)
        return float(offset) + float(np.mean(D)), math.nan
    N, E = scaled_ints(q_hat + q_tilde)
    n = len(q_hat)
    D = [a - b for a, b in zip(N[:n], N[n:])]
    s1 = sum(D)
    s2 = sum(k * k for k in D)
    G = offset + Fraction(s1, n << E)
    var = Fraction(n * s2 - s1 * s1, (n * n) << (2 * E))
    return float(G), float(var)


def ci_upper_bound(G: float, s2: float, n: int, alpha: float, floor: float) -> float:
    return G + z_alpha(alpha) * max(math.sqrt(s2), floor) / math.sqrt(n)


def validate_candidate(
    instance: TwoStageInstance,
    x_hat,
    n: int,
    master_seed: int,
    alpha: float = 0.1,
    floor: float = 1e-5,
    pool: DualPool | None = None,
    stream: ValidationStream | None = None,
    rel_gap: float = 1e-4,
    max_inner: int = 500,
    threads: int = 1,
    x_tilde=None,
    abs_gap: float | None = None,
) -> ValidationResult:
    """Gap estimate and one-sided CI bound for ``x_hat`` on the validation stream.

    The validation problem is solved to relative gap ``rel_gap`` and, when
    given, absolute gap ``abs_gap``.  ``x_tilde`` may be supplied to skip the
    validation solve.
    """
    stream = stream or ValidationStream(instance.model, master_seed)
    V = stream(n)
    x_hat = np.asarray(x_hat, dtype=float)
    lp = 0
    converged = True
    if x_tilde is None:
        warm = warm_start(instance, V, pool, x_hat) if pool is not None and len(pool) else None
        res = solve_sample_path(
            instance, V, x_hat, warm, eps_fixed=abs_gap, rel_gap=rel_gap, max_inner=max_inner, threads=threads,
            collect_duals=False, raise_on_cap=False,
        )
        x_tilde, converged, lp = res.x, res.converged, res.lp_count
    x_tilde = np.asarray(x_tilde, dtype=float)
    q_hat, _ = evaluate_batch(instance, x_hat, V, threads)
    q_tilde, _ = evaluate_batch(instance, x_tilde, V, threads)
    lp += 2 * n
    G, s2 = gap_estimate(instance.c, x_hat, x_tilde, q_hat, q_tilde)
    ci = ci_upper_bound(G, s2, n, alpha, floor) if converged else math.inf
    return ValidationResult(G, s2, x_tilde, ci, n, lp, converged)


class _Driver:
    """Shared state of one sequential run."""

    def __init__(self, cfg: SeqConfig):
        self.cfg = cfg
        self.schedule = replace(cfg.schedule)  # dynamic mode mutates C1
        self.inst = cfg.instance
        self.pool = DualPool.for_instance(self.inst)
        self.x = default_start(self.inst)
        self.m, self.n = _couple(cfg.m1, cfg)
        self.ell = 0
        self.M = 0
        self.W = 0
        self.val_lp = 0
        self.t0 = time.monotonic()
        self.val_stream = ValidationStream(self.inst.model, cfg.seed)

    def elapsed(self):
        return time.monotonic() - self.t0

    def step(self) -> OuterState:
        cfg = self.cfg
        self.ell += 1
        key = StreamKey(cfg.seed, "solve", 0 if cfg.reuse_prefix else self.ell)
        S = draw(cfg.sampler, self.inst.model, key, self.m)
        warm = warm_start(self.inst, S, self.pool, self.x, cfg.blocks) if cfg.warmstart else None
        try:
            res: InnerResult = solve_sample_path(
                self.inst, S, self.x, warm, cfg.nu, cfg.sigma_min, cfg.sigma_max, cfg.max_inner,
                cfg.alpha_lev, cfg.blocks, threads=cfg.threads, outer=self.ell,
                collect_duals=cfg.warmstart,
            )
        except MaxInnerExceeded as exc:
            res = exc.result
        if cfg.warmstart:
            harvest(self.pool, res.duals)
        self.x = res.x
        self.M += res.inner_iters
        self.W += res.lp_count
        return OuterState(
            self.ell, self.m, self.n, res.x.copy(), res.eps, res.sigma, res.gap, res.z_up,
            res.inner_iters, self.M, self.W, res.lp_count, res.converged,
        )

    def validate(self, state: OuterState, eps: float | None = None):
        cfg = self.cfg
        abs_gap = cfg.val_eps_frac * eps if eps is not None and cfg.val_eps_frac else None
        v = validate_candidate(
            self.inst, state.x, state.n, cfg.seed, cfg.alpha, cfg.ci_floor,
            self.pool if cfg.warmstart else None, self.val_stream, cfg.val_rel_gap,
            cfg.val_max_inner, cfg.threads, abs_gap=abs_gap,
        )
        self.val_lp += v.lp_count
        state.ci_upper, state.G_val, state.s2_val, state.val_lp = v.ci_upper, v.G, v.s2, v.lp_count
        return v

    def advance(self, state: OuterState):
        m_next = next_sample_size(self.schedule, self.m, state.inner_iters, self.ell)
        self.m, self.n = _couple(m_next, self.cfg)


def run_nonterminating(
    cfg: SeqConfig,
    max_outer: int | None = None,
    max_work: int | None = None,
    max_time: float | None = None,
    validate: bool = False,
    callback=None,
) -> list[OuterState]:
    """Outer loop without a stopping test; ends on the first exhausted budget."""
    if max_outer is None and max_work is None and max_time is None:
        raise ValueError("give at least one budget")
    drv = _Driver(cfg)
    traj: list[OuterState] = []
    while True:
        state = drv.step()
        if validate:
            drv.validate(state)
        state.elapsed = drv.elapsed()
        traj.append(state)
        if callback is not None:
            callback(state)
        if max_outer is not None and drv.ell >= max_outer:
            break
        if max_work is not None and drv.W >= max_work:
            break
        if max_time is not None and state.elapsed >= max_time:
            break
        drv.advance(state)
    return traj


def run_with_stopping(cfg: SeqConfig, callback=None) -> RunReport:
    """Outer loop that stops once the CI upper bound drops to ``eps``.

    Under ``eps_rel`` mode ``eps`` is fixed after the first iteration as
    ``eps_rel * |c'x1 + Q_m1(x1)|``.  On time-out the report carries the
    iteration with the smallest CI bound and status ``"timed_out"``.
    """
    if cfg.eps is None and cfg.eps_rel is None:
        raise ValueError("need eps or eps_rel")
    drv = _Driver(cfg)
    traj: list[OuterState] = []
    eps = cfg.eps
    best: OuterState | None = None
    status = "stopped"
    while True:
        state = drv.step()
        if eps is None:
            eps = cfg.eps_rel * abs(state.z_up)
        drv.validate(state, eps)
        state.elapsed = drv.elapsed()
        traj.append(state)
        if callback is not None:
            callback(state)
        if best is None or state.ci_upper < best.ci_upper:
            best = state
        if state.ci_upper <= eps:
            final = state
            break
        if state.elapsed >= cfg.time_limit_s:
            status, final = "timed_out", best
            break
        if cfg.max_outer is not None and drv.ell >= cfg.max_outer:
            status, final = "max_outer", best
            break
        drv.advance(state)
    if status == "stopped":
        assert final.ci_upper <= eps
    return RunReport(
        final.x, final.ell, final.M, final.n, final.m, final.ci_upper, eps, drv.W, drv.val_lp,
        status, traj, cfg.seed,
    )


def expected_recourse(instance: TwoStageInstance, x, support=None) -> float:
    """``c'x + E[Q(x, xi)]`` over the full finite support."""
    S, p = support if support is not None else instance.model.enumerate_support()
    vals, _ = evaluate_batch(instance, x, S)
    return float(instance.c @ np.asarray(x)) + math.fsum(p * vals)


def true_gap(x, instance: TwoStageInstance, z_star: float | None = None, support=None) -> float:
    """``c'x + q(x) - z*`` with ``q`` over the full support."""
    support = support if support is not None else instance.model.enumerate_support()
    if z_star is None:
        z_star = solve_extensive_form(instance, *support)[0]
    return expected_recourse(instance, x, support) - z_star
