"""Two-stage stochastic LP data model.

An instance is ``min c'x + E[Q(x, xi)]`` over ``X = {Ax = b, lo <= x <= up}``
with ``Q(x, xi) = min{d'y : W y >= h(xi) - T(xi) x, y >= 0}``.  ``W`` and
``d`` are fixed; a :class:`~seqsaa.sampling.ScenarioModel` randomizes
``(h, T)``.
"""

from __future__ import annotations

import hashlib
import json
import math
from fractions import Fraction
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import Infeasible, InvalidSpec, TooLarge, Unbounded
from .lp_kernel import (
    STATUS_INFEASIBLE,
    LinearProgram,
    Polyhedron,
    solve_lp,
    solve_recourse_batch,
)
from .sampling import (
    FACTOR_KINDS,
    DiscreteFactor,
    Scenario,
    ScenarioModel,
    ScenarioSet,
    TableFactor,
)

EXTENSIVE_NNZ_CAP = 10**6
DEFAULT_UPPER = 1e6


@dataclass
class TwoStageInstance:
    name: str
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    x_lower: np.ndarray
    x_upper: np.ndarray
    W: np.ndarray
    d: np.ndarray
    model: ScenarioModel
    notes: list = field(default_factory=list)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n1 = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n1)
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.x_lower = np.zeros(n1) if self.x_lower is None else np.asarray(self.x_lower, dtype=float)
        if self.x_upper is None:
            self.x_upper = np.full(n1, DEFAULT_UPPER)
            self.notes.append(f"no upper bounds given; imposed {DEFAULT_UPPER:g}")
        self.x_upper = np.asarray(self.x_upper, dtype=float)
        self.W = np.atleast_2d(np.asarray(self.W, dtype=float))
        self.d = np.asarray(self.d, dtype=float).ravel()
        if self.A.shape[0] != self.b.size:
            raise InvalidSpec("A and b disagree on r1")
        if self.x_lower.shape != (n1,) or self.x_upper.shape != (n1,):
            raise InvalidSpec("bounds must have length n1")
        if not np.all(np.isfinite(self.x_upper)):
            raise InvalidSpec("finite upper bounds are required")
        if self.W.shape[1] != self.d.size:
            raise InvalidSpec("W and d disagree on n2")
        if self.model.T0.shape != (self.r2, n1):
            raise InvalidSpec(f"scenario model T has shape {self.model.T0.shape}, expected {(self.r2, n1)}")

    n1 = property(lambda self: self.c.size)
    r1 = property(lambda self: self.A.shape[0])
    n2 = property(lambda self: self.d.size)
    r2 = property(lambda self: self.W.shape[0])

    @property
    def cost_scale(self) -> float:
        return max(1.0, float(np.abs(self.c).max(initial=0.0)), float(np.abs(self.d).max(initial=0.0)))

    def region(self) -> Polyhedron:
        return Polyhedron(self.A, self.b, self.x_lower, self.x_upper)

    def first_stage_lp(self, objective=None) -> LinearProgram:
        c = self.c if objective is None else np.asarray(objective, dtype=float)
        return LinearProgram(c, self.A, ["E"] * self.r1, self.b, self.x_lower, self.x_upper)

    def contains(self, x, tol=1e-7) -> bool:
        x = np.asarray(x, dtype=float)
        scale = 1.0 + np.abs(self.b).max(initial=0.0)
        return bool(
            np.all(x >= self.x_lower - tol)
            and np.all(x <= self.x_upper + tol)
            and np.all(np.abs(self.A @ x - self.b) <= tol * scale)
        )

    def check(self):
        """Load-time checks: ``X`` is nonempty and ``sum(x)`` is bounded on it."""
        feas = solve_lp(self.first_stage_lp(np.zeros(self.n1)))
        if feas.status != "optimal":
            raise InvalidSpec(f"{self.name}: first-stage region is empty")
        top = solve_lp(self.first_stage_lp(-np.ones(self.n1)))
        if top.status != "optimal":
            raise InvalidSpec(f"{self.name}: first-stage region is unbounded")
        return self

    def fingerprint(self) -> str:
        blob = json.dumps(instance_to_dict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class SecondStageResult:
    value: float
    dual: np.ndarray
    status: str
    y: np.ndarray | None = None


# ---------------------------------------------------------------------------
# second-stage evaluation


def evaluate_second_stage(instance: TwoStageInstance, x, scenario: Scenario) -> SecondStageResult:
    """Value and optimal dual of ``min{d'y : W y >= h - T x, y >= 0}``."""
    x = np.asarray(x, dtype=float)
    r = scenario.h - scenario.T @ x
    if np.all(instance.d >= 0):
        batch = solve_recourse_batch(instance.W, instance.d, r[None, :])
        if batch.status[0] == STATUS_INFEASIBLE:
            raise Infeasible("second-stage problem is infeasible", x=x, scenario=scenario)
        return SecondStageResult(float(batch.values[0]), batch.duals[0], "optimal", batch.y[0])
    lp = LinearProgram(instance.d, instance.W, ["G"] * instance.r2, r, None, None)
    sol = solve_lp(lp)
    if sol.status == "infeasible":
        raise Infeasible("second-stage problem is infeasible", x=x, scenario=scenario)
    if sol.status == "unbounded":
        raise Unbounded("second-stage problem is unbounded", x=x, scenario=scenario)
    return SecondStageResult(sol.objective, np.maximum(sol.dual, 0.0), "optimal", sol.primal)


def _solve_rows(instance, R):
    if np.all(instance.d >= 0):
        return solve_recourse_batch(instance.W, instance.d, R)
    values = np.empty(R.shape[0])
    duals = np.empty(R.shape)
    status = np.zeros(R.shape[0], dtype=int)
    for i, r in enumerate(R):
        sol = solve_lp(LinearProgram(instance.d, instance.W, ["G"] * instance.r2, r, None, None))
        if sol.status == "unbounded":
            raise Unbounded("second-stage problem is unbounded", scenario=i)
        if sol.status == "infeasible":
            status[i] = STATUS_INFEASIBLE
            values[i], duals[i] = np.nan, 0.0
        else:
            values[i], duals[i] = sol.objective, np.maximum(sol.dual, 0.0)
    return _Rows(values, duals, status)


@dataclass
class _Rows:
    values: np.ndarray
    duals: np.ndarray
    status: np.ndarray


def evaluate_batch(instance: TwoStageInstance, x, scenarios: ScenarioSet, threads: int = 1):
    """``(values, duals)`` for every scenario at ``x``, in scenario order.

    Scenarios sharing a support index are solved once.  With ``threads > 1``
    the distinct subproblems are split into contiguous chunks; each subproblem
    is solved independently, so results do not depend on the chunking.
    """
    x = np.asarray(x, dtype=float)
    if scenarios.support_index is not None:
        keys, first, inverse = np.unique(scenarios.support_index, return_index=True, return_inverse=True)
        R = scenarios.take(first).rhs(x)
    else:
        inverse = None
        R = scenarios.rhs(x)
    chunks = _chunks(R.shape[0], threads)
    if len(chunks) == 1:
        parts = [_solve_rows(instance, R)]
    else:
        with ThreadPoolExecutor(len(chunks)) as pool:
            parts = list(pool.map(lambda s: _solve_rows(instance, R[s]), chunks))
    values = np.concatenate([p.values for p in parts])
    duals = np.vstack([p.duals for p in parts])
    status = np.concatenate([p.status for p in parts])
    bad = np.flatnonzero(status == STATUS_INFEASIBLE)
    if bad.size:
        i = int(bad[0]) if inverse is None else int(np.flatnonzero(inverse == bad[0])[0])
        raise Infeasible(
            f"second-stage problem infeasible for scenario {i}: relatively complete recourse fails",
            x=x,
            scenario=scenarios[i],
        )
    if inverse is not None:
        values, duals = values[inverse], duals[inverse]
    return values, duals


def _chunks(k, threads):
    threads = max(1, min(int(threads), k))
    bounds = np.linspace(0, k, threads + 1).astype(int)
    return [slice(bounds[j], bounds[j + 1]) for j in range(threads)]


def scaled_ints(values):
    """Integers ``N`` and exponent ``E`` with ``values[i] == N[i] / 2**E`` exactly."""
    ratios = [float(v).as_integer_ratio() for v in values]
    E = max(d.bit_length() - 1 for _, d in ratios)
    return [n << (E - (d.bit_length() - 1)) for n, d in ratios], E


def exact_moments(values, shift=Fraction(0)) -> tuple[float, float]:
    """``(shift + mean, variance)`` of ``values``, divisor ``m``.

    Both are computed in exact integer arithmetic and rounded once, so the
    result is independent of ordering, batching and thread count.
    """
    values = [float(v) for v in values]
    m = len(values)
    if m == 0:
        raise ValueError("need at least one value")
    if not all(math.isfinite(v) for v in values):
        mean = math.fsum(values) / m
        return float(shift) + mean, math.nan
    N, E = scaled_ints(values)
    s1 = sum(N)
    s2 = sum(k * k for k in N)
    mean = Fraction(s1, m << E)
    var = Fraction(m * s2 - s1 * s1, (m * m) << (2 * E))
    return float(shift + mean), float(var)


def mean_and_variance(values) -> tuple[float, float]:
    """Sample mean and divisor-``m`` variance, each correctly rounded."""
    return exact_moments(values)


def sample_average(instance, x, scenarios, threads: int = 1) -> tuple[float, float]:
    if not isinstance(scenarios, ScenarioSet):
        scenarios = ScenarioSet.from_scenarios(scenarios)
    if len(scenarios) == 0:
        raise ValueError("scenario list is empty")
    values, _ = evaluate_batch(instance, x, scenarios, threads)
    return mean_and_variance(values)


def aggregate_cut(scenarios: ScenarioSet, duals, weights=None):
    """Affine minorant ``(g, beta)`` of the sampled recourse from per-scenario duals.

    ``sum_i w_i lambda_i'(h_i - T_i x) = g'x + beta``.
    """
    m = len(scenarios)
    w = np.full(m, 1.0 / m) if weights is None else np.asarray(weights, dtype=float)
    g = -scenarios.weighted_TtL(duals, w)
    beta = float(np.einsum("i,ij,ij->", w, duals, scenarios.H))
    return g, beta


# ---------------------------------------------------------------------------
# extensive form


def build_extensive_form(instance, scenarios, weights=None, nnz_cap: int = EXTENSIVE_NNZ_CAP) -> LinearProgram:
    """Deterministic equivalent over ``scenarios``; variables are ``[x, y_1, ..., y_m]``."""
    if not isinstance(scenarios, ScenarioSet):
        scenarios = ScenarioSet.from_scenarios(scenarios)
    m = len(scenarios)
    if m < 1:
        raise ValueError("need at least one scenario")
    w = np.full(m, 1.0 / m) if weights is None else np.asarray(weights, dtype=float)
    n1, r1, n2, r2 = instance.n1, instance.r1, instance.n2, instance.r2
    Wc = sp.coo_matrix(instance.W)
    if scenarios.shared_T:
        Tc = sp.coo_matrix(scenarios.T)
        t_nnz = Tc.nnz * m
    else:
        t_nnz = int(np.count_nonzero(scenarios.T))
    nnz = np.count_nonzero(instance.A) + m * Wc.nnz + t_nnz
    if nnz > nnz_cap:
        raise TooLarge(f"extensive form has {nnz} nonzeros, cap is {nnz_cap}")

    Ac = sp.coo_matrix(instance.A)
    rows, cols, vals = [Ac.row], [Ac.col], [Ac.data]
    offs = r1 + r2 * np.arange(m)
    ycol = n1 + n2 * np.arange(m)
    rows.append((offs[:, None] + Wc.row[None, :]).ravel())
    cols.append((ycol[:, None] + Wc.col[None, :]).ravel())
    vals.append(np.tile(Wc.data, m))
    if scenarios.shared_T:
        rows.append((offs[:, None] + Tc.row[None, :]).ravel())
        cols.append(np.tile(Tc.col, m))
        vals.append(np.tile(Tc.data, m))
    else:
        i, j, k = np.nonzero(scenarios.T)
        rows.append(offs[i] + j)
        cols.append(k)
        vals.append(scenarios.T[i, j, k])
    c = np.concatenate([instance.c, (w[:, None] * instance.d[None, :]).ravel()])
    senses = ["E"] * r1 + ["G"] * (m * r2)
    rhs = np.concatenate([instance.b, scenarios.H.ravel()])
    lb = np.concatenate([instance.x_lower, np.zeros(m * n2)])
    ub = np.concatenate([instance.x_upper, np.full(m * n2, np.inf)])
    return LinearProgram.from_triplets(
        c, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), r1 + m * r2, senses, rhs, lb, ub
    )


def solve_extensive_form(instance, scenarios, weights=None, nnz_cap: int = EXTENSIVE_NNZ_CAP):
    """``(z, x)`` of the deterministic equivalent; checks primal/dual agreement."""
    lp = build_extensive_form(instance, scenarios, weights, nnz_cap)
    sol = solve_lp(lp)
    if sol.status == "infeasible":
        raise Infeasible("extensive form is infeasible")
    if sol.status == "unbounded":
        raise Unbounded("extensive form is unbounded")
    return sol.objective, sol.primal[: instance.n1], sol, lp


# ---------------------------------------------------------------------------
# JSON


def _triplets(M) -> list:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    i, j = np.nonzero(M)
    return [[int(a), int(b), float(M[a, b])] for a, b in zip(i, j)]


def _dense(trip, shape, what):
    M = np.zeros(shape)
    try:
        for i, j, v in trip:
            M[int(i), int(j)] = float(v)
    except (TypeError, ValueError, IndexError) as exc:
        raise InvalidSpec(f"{what}: bad triplet list ({exc})") from exc
    return M


def _factor_to_dict(f) -> dict:
    out = {"kind": f.kind}
    if isinstance(f, TableFactor):
        out["h_rows"] = f.h_rows.tolist()
        out["probs"] = f.probs.tolist()
        if f.T_rows is not None:
            out["T_rows"] = [_triplets(t) for t in f.T_rows]
        return out
    if isinstance(f, DiscreteFactor):
        out.update(values=f.values.tolist(), probs=f.probs.tolist())
    elif f.kind == "uniform":
        out.update(low=f.low, high=f.high)
    else:
        out.update(mean=f.mean, sd=f.sd, low=f.low, high=f.high)
    out["h_load"] = f.h_load.tolist()
    if f.T_load is not None:
        out["T_load"] = _triplets(f.T_load)
    return out


def _factor_from_dict(spec, r2, n1):
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in FACTOR_KINDS:
        raise InvalidSpec(f"unknown factor kind {kind!r}")
    try:
        if kind == "table":
            T_rows = spec.pop("T_rows", None)
            if T_rows is not None:
                spec["T_rows"] = np.array([_dense(t, (r2, n1), "T_rows") for t in T_rows])
            return TableFactor(**spec)
        if "T_load" in spec:
            spec["T_load"] = _dense(spec["T_load"], (r2, n1), "T_load")
        return FACTOR_KINDS[kind](**spec)
    except TypeError as exc:
        raise InvalidSpec(f"factor {kind!r}: {exc}") from exc
    except ValueError as exc:
        raise InvalidSpec(f"factor {kind!r}: {exc}") from exc


def instance_to_dict(inst: TwoStageInstance) -> dict:
    return {
        "name": inst.name,
        "n1": inst.n1,
        "r1": inst.r1,
        "A": _triplets(inst.A) if inst.r1 else [],
        "b": inst.b.tolist(),
        "c": inst.c.tolist(),
        "x_lower": inst.x_lower.tolist(),
        "x_upper": inst.x_upper.tolist(),
        "n2": inst.n2,
        "r2": inst.r2,
        "W": _triplets(inst.W),
        "d": inst.d.tolist(),
        "model": {
            "h0": inst.model.h0.tolist(),
            "T0": _triplets(inst.model.T0),
            "factors": [_factor_to_dict(f) for f in inst.model.factors],
        },
    }


_REQUIRED = ("n1", "r1", "A", "b", "c", "x_upper", "n2", "r2", "W", "d", "model")
_ALLOWED = set(_REQUIRED) | {"name", "x_lower"}


def instance_from_dict(data: dict) -> TwoStageInstance:
    if not isinstance(data, dict):
        raise InvalidSpec("instance must be a JSON object")
    missing = [k for k in _REQUIRED if k not in data]
    if missing:
        raise InvalidSpec(f"instance is missing keys {missing}")
    unknown = sorted(set(data) - _ALLOWED)
    if unknown:
        raise InvalidSpec(f"unknown instance keys {unknown}")
    n1, r1, n2, r2 = (int(data[k]) for k in ("n1", "r1", "n2", "r2"))
    mdl = data["model"]
    if not isinstance(mdl, dict) or "h0" not in mdl:
        raise InvalidSpec("model must be an object with at least 'h0'")
    factors = [_factor_from_dict(f, r2, n1) for f in mdl.get("factors", [])]
    try:
        model = ScenarioModel(mdl["h0"], _dense(mdl.get("T0", []), (r2, n1), "T0"), factors)
    except ValueError as exc:
        raise InvalidSpec(f"model: {exc}") from exc
    inst = TwoStageInstance(
        name=str(data.get("name", "instance")),
        A=_dense(data["A"], (r1, n1), "A"),
        b=data["b"],
        c=data["c"],
        x_lower=data.get("x_lower"),
        x_upper=data["x_upper"],
        W=_dense(data["W"], (r2, n2), "W"),
        d=data["d"],
        model=model,
    )
    if inst.b.size != r1 or inst.c.size != n1 or inst.d.size != n2:
        raise InvalidSpec("vector lengths disagree with declared dimensions")
    return inst


def dumps_instance(inst: TwoStageInstance) -> str:
    return json.dumps(instance_to_dict(inst), indent=1, sort_keys=True) + "\n"


def loads_instance(text: str, check: bool = True) -> TwoStageInstance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    inst = instance_from_dict(data)
    return inst.check() if check else inst


def load_instance(path, check: bool = True) -> TwoStageInstance:
    with open(path, encoding="utf-8") as fh:
        return loads_instance(fh.read(), check)


def save_instance(inst: TwoStageInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_instance(inst))
