"""Deterministic check of the perturbed-minimization tail bounds.

Given convex ``f`` on ``[-1, 1]`` we build ``f_k(x) = f(x) + t_k x`` with
``t_k = sum_{j>k} (-1)^j delta_j``.  Then ``sup |f_k - f_{k+1}| = delta_{k+1}``
and ``f_k -> f``.  ``x_k`` is taken on the boundary of the
``eps_k``-sublevel set of ``f_k`` (the worst admissible choice), on both
sides of the minimizer.  The harness asserts

    f(x_k) - v*            <= 2 D_k + 2 E_k
    dist(x_k, S*)          <= (2 (D_k + E_k) / tau) ** (1 / gamma)

where ``D_k = sum_{j>=k} delta_j`` and ``E_k = sum_{j>=k} eps_j`` are exact
tail sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

TOL = 1e-12


@dataclass(frozen=True)
class Geometric:
    """``a * r**j`` for ``j >= 1``."""

    a: float
    r: float

    def term(self, j: int) -> float:
        return self.a * self.r**j

    def tail(self, k: int) -> float:
        """``sum_{j>=k}``."""
        return self.a * self.r**k / (1.0 - self.r) if self.a else 0.0

    def alt_tail(self, k: int) -> float:
        """``sum_{j>k} (-1)^j term(j)``."""
        return self.a * (-self.r) ** (k + 1) / (1.0 + self.r) if self.a else 0.0


ZERO = Geometric(0.0, 0.5)


@dataclass(frozen=True)
class Family:
    name: str
    f: Callable[[float], float]
    tilt_min: Callable[[float], tuple]  # t -> (argmin, min) of f(x) + t x on [-1, 1]
    v_star: float
    s_lo: float
    s_hi: float
    gamma: float | None = None
    tau: float | None = None

    def dist(self, x: float) -> float:
        return max(self.s_lo - x, 0.0, x - self.s_hi)


def _abs_tilt(t):
    if abs(t) <= 1:
        return 0.0, 0.0
    return (-1.0, 1.0 - t) if t > 1 else (1.0, 1.0 + t)


def _sq_tilt(t):
    x = min(max(-t / 2.0, -1.0), 1.0)
    return x, x * x + t * x


def _plateau_tilt(t):
    if t == 0:
        return 0.0, 0.0
    if abs(t) <= 1:
        return (-0.5, -0.5 * t) if t > 0 else (0.5, 0.5 * t)
    return (-1.0, 0.5 - t) if t > 1 else (1.0, 0.5 + t)


FAMILIES = {
    "abs": Family("abs", abs, _abs_tilt, 0.0, 0.0, 0.0, 1.0, 1.0),
    "square": Family("square", lambda x: x * x, _sq_tilt, 0.0, 0.0, 0.0, 2.0, 1.0),
    "plateau": Family("plateau", lambda x: max(0.0, abs(x) - 0.5), _plateau_tilt, 0.0, -0.5, 0.5, 1.0, 1.0),
}


def _level_point(g, x_min, v_min, eps, side):
    """Point on ``[x_min, side]`` where the convex ``g`` first reaches ``v_min + eps``."""
    target = v_min + eps
    end = float(side)
    if eps <= 0:
        return x_min
    if g(end) <= target:
        return end
    lo, hi = x_min, end
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if g(mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo  # inside the sublevel set by construction


@dataclass
class LemmaRecord:
    family: str
    rows: list = field(default_factory=list)
    ok: bool = True

    def row_dicts(self):
        keys = ("k", "side", "x", "value_gap", "bound_b", "dist", "bound_c", "ok")
        return [dict(zip(keys, r)) for r in self.rows]


def lemma_prox_harness(delta: Geometric, eps: Geometric, family: Family | str, K: int = 20, strict: bool = True) -> LemmaRecord:
    """Check both bounds for ``k = 1..K``; raises ``AssertionError`` on failure when ``strict``."""
    fam = FAMILIES[family] if isinstance(family, str) else family
    rec = LemmaRecord(fam.name)
    for k in range(1, K + 1):
        t = delta.alt_tail(k)
        assert abs(t) <= delta.tail(k + 1) + TOL
        g = lambda x, t=t: fam.f(x) + t * x
        x_min, v_min = fam.tilt_min(t)
        D, E = delta.tail(k), eps.tail(k)
        bound_b = 2.0 * D + 2.0 * E
        bound_c = (2.0 * (D + E) / fam.tau) ** (1.0 / fam.gamma) if fam.gamma else math.inf
        for side in (-1, 1):
            x = _level_point(g, x_min, v_min, eps.term(k), side)
            vgap = fam.f(x) - fam.v_star
            dist = fam.dist(x)
            ok = vgap <= bound_b + TOL and dist <= bound_c + TOL
            rec.rows.append((k, side, x, vgap, bound_b, dist, bound_c, ok))
            rec.ok &= ok
            if strict:
                assert vgap <= bound_b + TOL, f"{fam.name} k={k}: value gap {vgap} > {bound_b}"
                assert dist <= bound_c + TOL, f"{fam.name} k={k}: distance {dist} > {bound_c}"
    return rec
