"""Built-in named test instances.

First-stage inequalities are written as equalities with explicit slack
variables, so ``n1`` here counts those slacks.  Every variable carries a
finite upper bound implied by the constraints.
"""

from __future__ import annotations

import numpy as np

from .model import TwoStageInstance
from .sampling import DiscreteFactor, ScenarioModel


def _unit(r, i):
    e = np.zeros(r)
    e[i] = 1.0
    return e


def lands() -> TwoStageInstance:
    """Electricity capacity planning: 4 technologies, 3 demand modes.

    Only the first demand mode is random (3 points), giving 3 scenarios.
    """
    c = np.array([10.0, 7.0, 16.0, 6.0, 0.0, 0.0])
    A = np.array([[1, 1, 1, 1, -1, 0], [10, 7, 16, 6, 0, 1]], dtype=float)
    b = np.array([12.0, 120.0])
    ub = np.array([12.0, 120 / 7, 7.5, 20.0, 8.0, 48.0])
    op_cost = np.array([[40, 24, 4], [45, 27, 4.5], [32, 19.2, 3.2], [55, 33, 5.5]])
    # y[i, j] = output of technology i in mode j, flattened row-major
    W = np.zeros((7, 12))
    T = np.zeros((7, 6))
    for i in range(4):
        W[i, 3 * i : 3 * i + 3] = -1.0
        T[i, i] = 1.0
    for j in range(3):
        W[4 + j, j::3] = 1.0
    h0 = np.array([0, 0, 0, 0, 0, 3.0, 2.0])
    model = ScenarioModel(h0, T, [DiscreteFactor([3.0, 5.0, 7.0], [0.3, 0.4, 0.3], _unit(7, 4))])
    return TwoStageInstance("lands", A, b, c, np.zeros(6), ub, W, op_cost.ravel(), model)


def gbd() -> TwoStageInstance:
    """Aircraft allocation: 4 aircraft types on 5 routes with random demand (750 scenarios)."""
    avail = np.array([10.0, 19.0, 25.0, 15.0])
    nan = np.nan
    cap = np.array(
        [[16, 15, 28, 23, 81], [nan, 10, 14, 15, 57], [nan, 5, nan, 7, 29], [9, 11, 22, 17, 55]], dtype=float
    )
    cost = np.array(
        [[18, 21, 18, 16, 10], [nan, 15, 16, 14, 9], [nan, 10, nan, 9, 6], [17, 16, 17, 15, 10]], dtype=float
    )
    bump = np.array([13.0, 13.0, 7.0, 7.0, 1.0])
    pairs = [(i, j) for i in range(4) for j in range(5) if not np.isnan(cap[i, j])]
    nx = len(pairs)
    n1 = nx + 4
    A = np.zeros((4, n1))
    T = np.zeros((5, n1))
    c = np.zeros(n1)
    ub = np.zeros(n1)
    for k, (i, j) in enumerate(pairs):
        A[i, k] = 1.0
        T[j, k] = cap[i, j]
        c[k] = cost[i, j]
        ub[k] = avail[i]
    A[:, nx:] = np.eye(4)
    ub[nx:] = avail
    # passengers bumped (y+) and empty seats (y-) per route
    W = np.hstack([np.eye(5), -np.eye(5)])
    d = np.concatenate([bump, np.zeros(5)])
    demand = [
        ([200, 220, 250, 270, 300], [0.2, 0.05, 0.35, 0.2, 0.2]),
        ([50, 150], [0.3, 0.7]),
        ([140, 160, 180, 200, 220], [0.1, 0.2, 0.4, 0.2, 0.1]),
        ([10, 50, 80, 100, 340], [0.2, 0.2, 0.3, 0.2, 0.1]),
        ([580, 600, 620], [0.1, 0.8, 0.1]),
    ]
    factors = [DiscreteFactor(v, p, _unit(5, j)) for j, (v, p) in enumerate(demand)]
    model = ScenarioModel(np.zeros(5), T, factors)
    return TwoStageInstance("gbd", A, avail, c, np.zeros(n1), ub, W, d, model)


def pgp2_like() -> TwoStageInstance:
    """Power generation planning with the pgp2 dimensions (first stage 4 x 2 before slacks).

    Built to the published sizes only; data are synthetic.
    """
    invest = np.array([10.0, 7.0, 16.0, 6.0])
    budget = 220.0
    min_cap = 12.0
    A = np.zeros((2, 6))
    A[0, :4] = 1.0
    A[0, 4] = -1.0
    A[1, :4] = invest
    A[1, 5] = 1.0
    b = np.array([min_cap, budget])
    cap_ub = budget / invest
    ub = np.concatenate([cap_ub, [cap_ub.sum() - min_cap, budget]])
    c = np.concatenate([invest, [0.0, 0.0]])
    run_cost = np.array([[4.0, 2.4, 0.4], [4.5, 2.7, 0.45], [3.2, 1.9, 0.32], [5.5, 3.3, 0.55]]) * 10
    # y: 12 generation vars, 3 unserved-demand vars, 1 block-flexible import
    W = np.zeros((7, 16))
    T = np.zeros((7, 6))
    for i in range(4):
        W[i, 3 * i : 3 * i + 3] = -1.0
        T[i, i] = 1.0
    for j in range(3):
        W[4 + j, j:12:3] = 1.0
        W[4 + j, 12 + j] = 1.0
        W[4 + j, 15] = 1.0
    d = np.concatenate([run_cost.ravel(), [100.0, 60.0, 20.0], [90.0]])
    h0 = np.zeros(7)
    factors = [
        DiscreteFactor([3.0, 5.0, 7.0, 9.0], [0.2, 0.3, 0.3, 0.2], _unit(7, 4)),
        DiscreteFactor([2.0, 3.0, 4.0, 6.0], [0.25, 0.25, 0.25, 0.25], _unit(7, 5)),
        DiscreteFactor([1.0, 2.0, 3.0, 5.0], [0.1, 0.4, 0.4, 0.1], _unit(7, 6)),
    ]
    model = ScenarioModel(h0, T, factors)
    return TwoStageInstance("pgp2", A, b, c, np.zeros(6), ub, W, d, model, ["synthetic data at published dimensions"])


def cep_like() -> TwoStageInstance:
    """Capacity expansion with the cep dimensions (first stage 8 x 5, second 15 x 7).

    Synthetic data: 4 machines, 3 parts.
    """
    existing = np.array([500.0, 500.0, 500.0, 500.0])
    expand_cost = np.array([2.5, 3.75, 5.0, 3.0])
    budget = 3000.0
    # x = (expansion e_i, total capacity z_i); z_i - e_i = existing_i; budget row with slack folded into <=
    n1 = 8
    A = np.zeros((5, n1 + 1))
    for i in range(4):
        A[i, i] = -1.0
        A[i, 4 + i] = 1.0
    A[4, :4] = expand_cost
    A[4, n1] = 1.0
    b = np.concatenate([existing, [budget]])
    e_ub = budget / expand_cost
    ub = np.concatenate([e_ub, existing + e_ub, [budget]])
    c = np.concatenate([expand_cost * 0.2, np.zeros(4), [0.0]])
    hours = np.array([[0.4, 0.6, 0.3], [0.5, 0.4, 0.6], [0.6, 0.5, 0.4], [0.3, 0.7, 0.5]])
    prod_cost = np.array([[2.6, 3.4, 3.4], [1.5, 2.4, 2.2], [2.1, 2.8, 3.0], [2.2, 2.0, 2.5]])
    # y: 12 production vars (machine i, part p), 3 unmet-demand vars
    W = np.zeros((7, 15))
    T = np.zeros((7, n1 + 1))
    for i in range(4):
        W[i, 3 * i : 3 * i + 3] = -hours[i]
        T[i, 4 + i] = 1.0
    for p in range(3):
        W[4 + p, p:12:3] = 1.0
        W[4 + p, 12 + p] = 1.0
    d = np.concatenate([prod_cost.ravel(), [30.0, 30.0, 30.0]])
    factors = [
        DiscreteFactor([800.0, 1000.0, 1500.0], [0.3, 0.4, 0.3], _unit(7, 4)),
        DiscreteFactor([600.0, 1000.0, 1200.0], [0.3, 0.4, 0.3], _unit(7, 5)),
        DiscreteFactor([400.0, 800.0, 1200.0], [0.2, 0.5, 0.3], _unit(7, 6)),
    ]
    model = ScenarioModel(np.zeros(7), T, factors)
    return TwoStageInstance(
        "cep", A, b, c, np.zeros(n1 + 1), ub, W, d, model, ["synthetic data at published dimensions"]
    )


BUILTIN = {"lands": lands, "gbd": gbd, "pgp2": pgp2_like, "cep": cep_like}


def builtin(name: str) -> TwoStageInstance:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise KeyError(f"unknown built-in instance {name!r}; choose from {sorted(BUILTIN)}") from None
