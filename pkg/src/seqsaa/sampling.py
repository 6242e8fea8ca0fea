"""Reproducible scenario generation.

Uniform drivers come from a counter-based generator (Philox) keyed by
``(master_seed, purpose, outer_index)``; draw ``i`` always reads the same
block of the keyed stream, so scenario ``i`` depends only on its key.  The
drivers are pushed through a :class:`ScenarioModel` to realize ``(h, T)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import NonMonotoneRequest, OddSampleSize

PURPOSES = {"solve": 0, "validate": 1, "lhs-perm": 2}
_ONE_MINUS = np.nextafter(1.0, 0.0)


# ---------------------------------------------------------------------------
# random factors


def _as_load(load, shape):
    if load is None:
        return None
    arr = np.asarray(load, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"load has shape {arr.shape}, expected {shape}")
    return arr


@dataclass
class DiscreteFactor:
    """Scalar factor with a finite table; adds ``v * h_load`` to h (and ``v * T_load`` to T)."""

    values: np.ndarray
    probs: np.ndarray
    h_load: np.ndarray
    T_load: np.ndarray | None = None
    kind = "discrete"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.probs = np.asarray(self.probs, dtype=float)
        if self.values.shape != self.probs.shape or self.values.ndim != 1:
            raise ValueError("values and probs must be 1-D of equal length")
        if abs(self.probs.sum() - 1.0) > 1e-12 or np.any(self.probs < 0):
            raise ValueError("discrete probabilities must be nonnegative and sum to 1")
        self.h_load = np.asarray(self.h_load, dtype=float)
        if self.T_load is not None:
            self.T_load = np.asarray(self.T_load, dtype=float)
        self._cum = np.cumsum(self.probs)
        self._cum[-1] = 1.0

    @property
    def support_size(self):
        return self.values.size

    def index(self, u):
        return np.minimum(np.searchsorted(self._cum, u, side="right"), self.values.size - 1)

    def inverse(self, u):
        return self.values[self.index(u)]


@dataclass
class UniformFactor:
    low: float
    high: float
    h_load: np.ndarray
    T_load: np.ndarray | None = None
    kind = "uniform"
    support_size = None

    def __post_init__(self):
        self.h_load = np.asarray(self.h_load, dtype=float)
        if self.T_load is not None:
            self.T_load = np.asarray(self.T_load, dtype=float)

    def inverse(self, u):
        return self.low + (self.high - self.low) * u


@dataclass
class TruncNormalFactor:
    mean: float
    sd: float
    low: float
    high: float
    h_load: np.ndarray
    T_load: np.ndarray | None = None
    kind = "truncnormal"
    support_size = None

    def __post_init__(self):
        self.h_load = np.asarray(self.h_load, dtype=float)
        if self.T_load is not None:
            self.T_load = np.asarray(self.T_load, dtype=float)

    def inverse(self, u):
        a = ndtr((self.low - self.mean) / self.sd)
        b = ndtr((self.high - self.mean) / self.sd)
        p = np.clip(a + u * (b - a), 1e-300, _ONE_MINUS)
        return np.clip(self.mean + self.sd * ndtri(p), self.low, self.high)


@dataclass
class TableFactor:
    """Picks one row of a table of additive ``h`` (and optionally ``T``) offsets."""

    h_rows: np.ndarray
    probs: np.ndarray | None = None
    T_rows: np.ndarray | None = None
    kind = "table"

    def __post_init__(self):
        self.h_rows = np.atleast_2d(np.asarray(self.h_rows, dtype=float))
        K = self.h_rows.shape[0]
        self.probs = np.full(K, 1.0 / K) if self.probs is None else np.asarray(self.probs, dtype=float)
        if abs(self.probs.sum() - 1.0) > 1e-12 or np.any(self.probs < 0):
            raise ValueError("table probabilities must be nonnegative and sum to 1")
        if self.T_rows is not None:
            self.T_rows = np.asarray(self.T_rows, dtype=float)
        self._cum = np.cumsum(self.probs)
        self._cum[-1] = 1.0

    @property
    def support_size(self):
        return self.h_rows.shape[0]

    def index(self, u):
        return np.minimum(np.searchsorted(self._cum, u, side="right"), self.support_size - 1)


FACTOR_KINDS = {
    "discrete": DiscreteFactor,
    "uniform": UniformFactor,
    "truncnormal": TruncNormalFactor,
    "table": TableFactor,
}


# ---------------------------------------------------------------------------
# scenarios


@dataclass(frozen=True)
class Scenario:
    h: np.ndarray
    T: np.ndarray
    id: tuple = ()


@dataclass
class ScenarioSet:
    """An ordered batch of scenarios stored as arrays.

    ``T`` is either a single ``(r2, n1)`` matrix shared by all scenarios or a
    stack ``(m, r2, n1)``.  ``support_index`` identifies the support point of
    each scenario when the model has finite support (used to avoid solving
    bitwise-identical subproblems twice).
    """

    H: np.ndarray
    T: np.ndarray
    support_index: np.ndarray | None = None
    ids: list = field(default_factory=list)

    def __len__(self):
        return self.H.shape[0]

    @property
    def shared_T(self) -> bool:
        return self.T.ndim == 2

    def __getitem__(self, i):
        if isinstance(i, slice):
            sel = np.arange(len(self))[i]
            return self.take(sel)
        T = self.T if self.shared_T else self.T[i]
        return Scenario(self.H[i], T, self.ids[i] if self.ids else ())

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def take(self, sel) -> "ScenarioSet":
        sel = np.asarray(sel, dtype=int)
        return ScenarioSet(
            self.H[sel],
            self.T if self.shared_T else self.T[sel],
            None if self.support_index is None else self.support_index[sel],
            [self.ids[i] for i in sel] if self.ids else [],
        )

    def rhs(self, x) -> np.ndarray:
        """``h_i - T_i x`` for every scenario, shape ``(m, r2)``."""
        x = np.asarray(x, dtype=float)
        if self.shared_T:
            return self.H - self.T @ x
        return self.H - np.einsum("ijk,k->ij", self.T, x)

    def weighted_TtL(self, L, weights) -> np.ndarray:
        """``sum_i w_i T_i' lambda_i``."""
        if self.shared_T:
            return self.T.T @ (weights @ L)
        return np.einsum("i,ijk,ij->k", weights, self.T, L)

    @classmethod
    def from_scenarios(cls, scenarios) -> "ScenarioSet":
        scenarios = list(scenarios)
        H = np.array([s.h for s in scenarios], dtype=float)
        T = np.array([s.T for s in scenarios], dtype=float)
        return cls(H, T, None, [s.id for s in scenarios])


class ScenarioModel:
    """Map from drivers ``u in [0,1)^dim`` to realizations ``(h, T)``.

    ``h = h0 + sum_k contribution_k(u_k)`` and likewise for ``T``; each factor
    reads one driver coordinate.
    """

    def __init__(self, h0, T0, factors=()):
        self.h0 = np.asarray(h0, dtype=float)
        self.T0 = np.atleast_2d(np.asarray(T0, dtype=float))
        self.factors = list(factors)
        r2, n1 = self.T0.shape
        if self.h0.shape != (r2,):
            raise ValueError("h0 and T0 dimensions disagree")
        for f in self.factors:
            if isinstance(f, TableFactor):
                if f.h_rows.shape[1] != r2:
                    raise ValueError("table rows must have r2 columns")
                if f.T_rows is not None and f.T_rows.shape[1:] != (r2, n1):
                    raise ValueError("table T rows have the wrong shape")
            else:
                _as_load(f.h_load, (r2,))
                _as_load(f.T_load, (r2, n1))

    @property
    def dim(self) -> int:
        return len(self.factors)

    @property
    def random_T(self) -> bool:
        return any(getattr(f, "T_load", None) is not None or getattr(f, "T_rows", None) is not None for f in self.factors)

    @property
    def finite(self) -> bool:
        return all(isinstance(f, (DiscreteFactor, TableFactor)) for f in self.factors)

    @property
    def support_size(self) -> int | None:
        if not self.finite:
            return None
        return int(np.prod([f.support_size for f in self.factors], dtype=np.int64)) if self.factors else 1

    def _radix(self):
        sizes = [f.support_size for f in self.factors]
        strides = np.ones(len(sizes), dtype=np.int64)
        for k in range(len(sizes) - 2, -1, -1):
            strides[k] = strides[k + 1] * sizes[k + 1]
        return strides

    def realize(self, U) -> ScenarioSet:
        """Realize scenarios for drivers ``U`` of shape ``(n, dim)``."""
        U = np.asarray(U, dtype=float).reshape(-1, self.dim) if self.dim else np.zeros((np.shape(U)[0], 0))
        n = U.shape[0]
        H = np.tile(self.h0, (n, 1))
        T = np.tile(self.T0, (n, 1, 1)) if self.random_T else self.T0
        support = np.zeros(n, dtype=np.int64) if self.finite else None
        strides = self._radix() if self.finite else None
        for k, f in enumerate(self.factors):
            u = U[:, k]
            if isinstance(f, TableFactor):
                idx = f.index(u)
                H += f.h_rows[idx]
                if f.T_rows is not None:
                    T += f.T_rows[idx]
            else:
                if isinstance(f, DiscreteFactor):
                    idx = f.index(u)
                    v = f.values[idx]
                else:
                    idx = None
                    v = f.inverse(u)
                H += v[:, None] * f.h_load[None, :]
                if f.T_load is not None:
                    T += v[:, None, None] * f.T_load[None, :, :]
            if support is not None:
                support += idx.astype(np.int64) * strides[k]
        return ScenarioSet(H, T, support, [])

    def enumerate_support(self, cap: int = 10**6):
        """All support points with probabilities, in support-index order."""
        size = self.support_size
        if size is None:
            raise ValueError("model does not have finite support")
        if size > cap:
            raise ValueError(f"support has {size} points, above cap {cap}")
        choices = [range(f.support_size) for f in self.factors]
        combos = np.array(list(itertools.product(*choices)), dtype=np.int64).reshape(size, self.dim)
        # drivers at the stratum midpoint of each chosen table entry
        U = np.empty((size, self.dim))
        probs = np.ones(size)
        for k, f in enumerate(self.factors):
            cum = f._cum
            lo = np.concatenate([[0.0], cum[:-1]])
            U[:, k] = 0.5 * (lo[combos[:, k]] + cum[combos[:, k]])
            probs *= f.probs[combos[:, k]]
        sset = self.realize(U)
        sset.ids = [("support", 0, int(i)) for i in range(size)]
        return sset, probs


def constant_model(h, T) -> ScenarioModel:
    return ScenarioModel(h, T, [])


# ---------------------------------------------------------------------------
# streams


@dataclass(frozen=True)
class StreamKey:
    master_seed: int
    purpose: str = "solve"
    outer_index: int = 0
    draw_index: int = 0

    def __post_init__(self):
        if self.purpose not in PURPOSES:
            raise ValueError(f"unknown purpose {self.purpose!r}")


def _generator(master_seed: int, purpose: str, outer_index: int) -> np.random.Generator:
    words = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, PURPOSES[purpose], int(outer_index)])
    key = words.generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def uniforms(key: StreamKey, n: int, dim: int) -> np.ndarray:
    """Drivers for draws ``key.draw_index .. key.draw_index + n - 1``, shape ``(n, dim)``."""
    if dim == 0:
        return np.zeros((n, 0))
    gen = _generator(key.master_seed, key.purpose, key.outer_index)
    total = (key.draw_index + n) * dim
    U = gen.random(total)[key.draw_index * dim :]
    return U.reshape(n, dim)


def _stamp(sset: ScenarioSet, sampler: str, key: StreamKey) -> ScenarioSet:
    stream = (key.purpose, key.outer_index)
    sset.ids = [(sampler, stream, key.draw_index + i) for i in range(len(sset))]
    return sset


def draw_iid(model: ScenarioModel, key_base: StreamKey, n: int) -> ScenarioSet:
    if n < 1:
        raise ValueError("n must be >= 1")
    return _stamp(model.realize(uniforms(key_base, n, model.dim)), "iid", key_base)


def antithetic_drivers(key_base: StreamKey, n: int, dim: int) -> np.ndarray:
    if n % 2:
        raise OddSampleSize(f"antithetic sampling needs an even sample size, got {n}")
    half = uniforms(replace(key_base, draw_index=key_base.draw_index // 2), n // 2, dim)
    U = np.empty((n, dim))
    U[0::2] = half
    U[1::2] = np.minimum(1.0 - half, _ONE_MINUS)
    return U


def draw_antithetic(model: ScenarioModel, key_base: StreamKey, n: int) -> ScenarioSet:
    if n < 1:
        raise ValueError("n must be >= 1")
    U = antithetic_drivers(key_base, n, model.dim)
    return _stamp(model.realize(U), "antithetic", key_base)


def lhs_drivers(key_base: StreamKey, n: int, dim: int) -> np.ndarray:
    U = uniforms(key_base, n, dim)
    perm_gen = _generator(key_base.master_seed, "lhs-perm", key_base.outer_index)
    out = np.empty((n, dim))
    for k in range(dim):
        pi = perm_gen.permutation(n)
        out[:, k] = _in_stratum(np.minimum((pi + U[:, k]) / n, _ONE_MINUS), pi, n)
    return out


def _in_stratum(u, pi, n):
    # nudge rounding casualties back so that floor(u * n) == pi holds in floating point
    for _ in range(8):
        s = np.floor(u * n)
        hi, lo = s > pi, s < pi
        if not (hi.any() or lo.any()):
            break
        u = np.where(hi, np.nextafter(u, 0.0), np.where(lo, np.nextafter(u, 1.0), u))
    return u


def draw_lhs(model: ScenarioModel, key_base: StreamKey, n: int) -> ScenarioSet:
    if n < 1:
        raise ValueError("n must be >= 1")
    return _stamp(model.realize(lhs_drivers(key_base, n, model.dim)), "lhs", key_base)


SAMPLERS = {"iid": draw_iid, "antithetic": draw_antithetic, "lhs": draw_lhs}


def draw(sampler: str, model: ScenarioModel, key_base: StreamKey, n: int) -> ScenarioSet:
    try:
        fn = SAMPLERS[sampler]
    except KeyError:
        raise ValueError(f"unknown sampler {sampler!r}; expected one of {sorted(SAMPLERS)}") from None
    return fn(model, key_base, n)


def validation_stream(model: ScenarioModel, master_seed: int, n: int) -> ScenarioSet:
    """First ``n`` elements of the run's fixed iid validation stream."""
    if n < 1:
        raise ValueError("validation sample size must be >= 1")
    return _stamp(model.realize(uniforms(StreamKey(master_seed, "validate", 0), n, model.dim)), "iid", StreamKey(master_seed, "validate", 0))


class ValidationStream:
    """Stateful wrapper enforcing nondecreasing validation sample sizes."""

    def __init__(self, model: ScenarioModel, master_seed: int):
        self.model = model
        self.master_seed = master_seed
        self.last = 0

    def __call__(self, n: int) -> ScenarioSet:
        if n < self.last:
            raise NonMonotoneRequest(f"validation size decreased from {self.last} to {n}")
        out = validation_stream(self.model, self.master_seed, n)
        self.last = n
        return out
