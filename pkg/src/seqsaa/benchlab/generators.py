"""Random DEAK-like test instances.

Only the dimensions and a variance knob follow the published family; the
recipe itself is ours:

* first stage: sparse nonnegative ``A``, ``b = A x0`` for an interior
  ``x0``, costs in ``[1, 10]``, finite upper bounds;
* second stage: ``W = [R | I]`` with nonnegative sparse ``R`` and identity
  "shortage" columns at a high price, so recourse is complete and ``d >= 0``;
  recourse is dearer per unit than first-stage capacity, so the cheapest
  feasible first stage is far from optimal;
* ``h`` drawn from a table of equally likely support points around a base
  level tied to ``T x0``; ``variance="high"`` triples the spread.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import InvalidSpec
from ..model import TwoStageInstance
from ..sampling import ScenarioModel, TableFactor


@dataclass(frozen=True)
class GeneratorSpec:
    n1: int = 40
    r1: int = 20
    n2: int = 30
    r2: int = 20
    support: int = 1000
    variance: str = "normal"
    seed: int = 0
    random_T: bool = False

    def __post_init__(self):
        for k in ("n1", "n2", "r2", "support"):
            if getattr(self, k) < 1:
                raise InvalidSpec(f"{k} must be positive")
        if not 0 <= self.r1 < self.n1:
            raise InvalidSpec("need 0 <= r1 < n1")
        if self.n2 <= self.r2:
            raise InvalidSpec("need n2 > r2 (shortage columns take r2 of them)")
        if self.variance not in ("normal", "high"):
            raise InvalidSpec("variance must be 'normal' or 'high'")

    @property
    def name(self) -> str:
        tag = "H" if self.variance == "high" else ""
        return f"deak{self.n1}x{self.r2}{tag}-s{self.seed}"

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorSpec":
        allowed = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise InvalidSpec(f"unknown generator keys {unknown}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise InvalidSpec(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)


def _sparse(rng, shape, density, low, high):
    M = rng.uniform(low, high, shape) * (rng.random(shape) < density)
    # no empty rows
    for i in np.flatnonzero(~M.any(axis=1)):
        M[i, rng.integers(shape[1])] = rng.uniform(low, high)
    return M


def generate_deak_like(spec: GeneratorSpec) -> TwoStageInstance:
    rng = np.random.default_rng([spec.seed, spec.n1, spec.r1, spec.n2, spec.r2, spec.support])
    n1, r1, n2, r2, K = spec.n1, spec.r1, spec.n2, spec.r2, spec.support

    upper = rng.uniform(5.0, 15.0, n1)
    x0 = upper * rng.uniform(0.2, 0.6, n1)
    A = _sparse(rng, (r1, n1), 0.3, 1.0, 5.0)
    b = A @ x0
    c = rng.uniform(1.0, 10.0, n1)

    k = n2 - r2
    R = _sparse(rng, (r2, k), 0.5, 0.2, 1.0)
    W = np.hstack([R, np.eye(r2)])
    d = np.concatenate([rng.uniform(10.0, 20.0, k), rng.uniform(40.0, 80.0, r2)])
    T = _sparse(rng, (r2, n1), 0.2, 0.1, 1.0)

    base = (T @ x0) * rng.uniform(0.8, 1.6, r2) + rng.uniform(1.0, 5.0, r2)
    spread = 0.25 * base * (3.0 if spec.variance == "high" else 1.0)
    h_rows = spread[None, :] * rng.standard_normal((K, r2))
    T_rows = None
    if spec.random_T:
        cols = rng.choice(n1, size=min(2, n1), replace=False)
        T_rows = np.zeros((K, r2, n1))
        T_rows[:, :, cols] = T[None, :, cols] * 0.3 * rng.standard_normal((K, 1, cols.size))
    model = ScenarioModel(base, T, [TableFactor(h_rows, None, T_rows)])
    return TwoStageInstance(spec.name, A, b, c, np.zeros(n1), upper, W, d, model, ["DEAK-like synthetic"])


def probe_recourse(instance: TwoStageInstance, n_points: int = 50, seed: int = 0) -> int:
    """Evaluate the recourse at random ``(x, xi)`` pairs; returns the count probed.

    Raises :class:`~seqsaa.errors.Infeasible` on the first failure.
    """
    from ..bundle import default_start
    from ..lp_kernel import project
    from ..model import evaluate_second_stage
    from ..sampling import StreamKey, draw_iid

    rng = np.random.default_rng(seed)
    region = instance.region()
    x_base = default_start(instance)
    scen = draw_iid(instance.model, StreamKey(seed, "solve", 10**6), n_points)
    for i in range(n_points):
        guess = rng.uniform(instance.x_lower, instance.x_upper)
        x = project(0.5 * (guess + x_base), region)
        evaluate_second_stage(instance, x, scen[i])
    return n_points
