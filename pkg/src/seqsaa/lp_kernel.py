"""LP and QP kernels.

Three solvers live here:

* :func:`solve_lp` -- a dense two-phase tableau simplex (Dantzig pricing with a
  Bland fallback after a run of degenerate pivots) returning primal values,
  row duals and reduced costs.  Large LPs (extensive forms) can be routed to
  HiGHS through ``method="highs"``.
* :func:`solve_recourse_batch` -- a vectorized dual simplex that solves many
  problems ``min d'y  s.t.  W y >= r,  y >= 0`` sharing ``W`` and ``d >= 0``.
  Each problem starts from the surplus basis, which is dual feasible because
  ``d >= 0``; problems never share basis information.
* :func:`solve_level_projection` -- Euclidean projection of a stability center
  onto the level set of a cutting-plane model, via a dual active-set QP.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import quadprog
import scipy.sparse as sp

from .errors import Infeasible, LevelSetEmpty, NumericalFailure, Unbounded

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-11
DEGENERATE_LIMIT = 25
REFACTOR_EVERY = 64
DENSE_SIZE_LIMIT = 700  # rows + columns above which "auto" picks HiGHS

SENSES = ("L", "G", "E")


@dataclass
class LinearProgram:
    """``min c'x  s.t.  A x (sense) rhs,  lb <= x <= ub``.

    ``senses`` holds one of ``"L"`` (<=), ``"G"`` (>=), ``"E"`` (=) per row.
    """

    c: np.ndarray
    A: sp.csr_matrix
    senses: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        if sp.issparse(self.A):
            self.A = sp.csr_matrix(self.A, dtype=float)
        else:
            self.A = sp.csr_matrix(np.atleast_2d(np.asarray(self.A, dtype=float)).reshape(-1, n))
        m = self.A.shape[0]
        self.senses = np.asarray(self.senses, dtype="<U1").ravel()
        self.rhs = np.asarray(self.rhs, dtype=float).ravel()
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).ravel()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).ravel()
        if self.A.shape[1] != n or self.rhs.size != m or self.senses.size != m:
            raise ValueError("inconsistent LP dimensions")
        if self.lb.size != n or self.ub.size != n:
            raise ValueError("bound vectors must match the number of variables")
        if not set(self.senses.tolist()) <= set(SENSES):
            raise ValueError(f"row senses must be among {SENSES}")
        if np.any(self.lb > self.ub):
            raise ValueError("lower bound exceeds upper bound")

    @classmethod
    def from_triplets(cls, c, rows, cols, vals, n_rows, senses, rhs, lb=None, ub=None):
        c = np.asarray(c, dtype=float)
        A = sp.coo_matrix((vals, (rows, cols)), shape=(n_rows, c.size)).tocsr()
        return cls(c, A, senses, rhs, lb, ub)

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def to_text(self) -> str:
        """Plain-text dump used when a solve fails."""
        lines = [f"LP {self.n_rows} rows x {self.n_vars} cols", "c " + " ".join(map(repr, self.c))]
        coo = self.A.tocoo()
        for i, j, v in zip(coo.row, coo.col, coo.data):
            lines.append(f"a {i} {j} {v!r}")
        for i in range(self.n_rows):
            lines.append(f"row {i} {self.senses[i]} {self.rhs[i]!r}")
        for j in range(self.n_vars):
            lines.append(f"bound {j} {self.lb[j]!r} {self.ub[j]!r}")
        return "\n".join(lines)


@dataclass
class LpSolution:
    status: str
    primal: np.ndarray | None = None
    dual: np.ndarray | None = None
    objective: float = float("nan")
    reduced_costs: np.ndarray | None = None
    basis: np.ndarray | None = None
    iterations: int = 0
    # set for status == "unbounded": a recession direction of the primal
    ray: np.ndarray | None = field(default=None, repr=False)

    def dual_objective(self, lp: LinearProgram) -> float:
        """Lagrangian dual value ``rhs'y + sum of active bound terms``."""
        val = float(lp.rhs @ self.dual)
        rc = self.reduced_costs
        for j in range(lp.n_vars):
            r = rc[j]
            if abs(r) <= OPT_TOL:
                continue
            bound = lp.lb[j] if r > 0 else lp.ub[j]
            if np.isfinite(bound):
                val += r * bound
        return val


# ---------------------------------------------------------------------------
# dense tableau simplex


class _Standard:
    """``lp`` rewritten as ``Az z = bz, z >= 0`` plus the maps back."""

    def __init__(self, lp: LinearProgram):
        n = lp.n_vars
        A = lp.A.toarray()
        offset = np.zeros(n)
        owners, signs, ub_rows = [], [], []
        for j in range(n):
            lo, hi = lp.lb[j], lp.ub[j]
            if np.isfinite(lo):
                offset[j] = lo
                owners.append(j)
                signs.append(1.0)
                if np.isfinite(hi):
                    ub_rows.append((len(owners) - 1, hi - lo))
            elif np.isfinite(hi):
                offset[j] = hi
                owners.append(j)
                signs.append(-1.0)
            else:
                owners += [j, j]
                signs += [1.0, -1.0]
        nz = len(owners)
        M = np.zeros((n, nz))
        M[owners, np.arange(nz)] = signs
        self.M, self.offset, self.nz = M, offset, nz

        m0 = lp.n_rows
        m = m0 + len(ub_rows)
        rows = np.zeros((m, nz))
        rows[:m0] = A @ M
        b = np.empty(m)
        b[:m0] = lp.rhs - A @ offset
        senses = list(lp.senses)
        for k, (col, bound) in enumerate(ub_rows):
            rows[m0 + k, col] = 1.0
            b[m0 + k] = bound
            senses.append("L")
        n_slack = sum(s != "E" for s in senses)
        Az = np.zeros((m, nz + n_slack))
        Az[:, :nz] = rows
        slack_of_row = np.full(m, -1)
        k = nz
        for i, s in enumerate(senses):
            if s == "L":
                Az[i, k] = 1.0
            elif s == "G":
                Az[i, k] = -1.0
            else:
                continue
            slack_of_row[i] = k
            k += 1
        flip = np.where(b < 0, -1.0, 1.0)
        Az *= flip[:, None]
        b = b * flip
        self.Az, self.bz, self.flip = Az, b, flip
        self.slack_of_row = slack_of_row
        self.m, self.m0 = m, m0
        self.n_struct = Az.shape[1]
        self.cz = np.zeros(self.n_struct)
        self.cz[:nz] = lp.c @ M
        self.obj_offset = float(lp.c @ offset)

    def unmap(self, z: np.ndarray) -> np.ndarray:
        return self.offset + self.M @ z[: self.nz]


def _rebuild(Afull, b, cost, basis):
    B = Afull[:, basis]
    try:
        X = np.linalg.solve(B, np.column_stack([Afull, b]))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("singular basis during refactorization") from exc
    m, N = Afull.shape
    T = np.empty((m + 1, N + 1))
    T[:m] = X
    cb = cost[basis]
    T[m, :N] = cost - cb @ X[:, :N]
    T[m, N] = -cb @ X[:, N]
    return T


def _pivot(T, r, e):
    prow = T[r] / T[r, e]
    col = T[:, e].copy()
    T -= np.outer(col, prow)
    T[r] = prow


def _primal_simplex(T, basis, allowed, Afull, b, cost, max_iter):
    """Run primal simplex on tableau ``T`` in place; returns (status, iters, entering)."""
    m = T.shape[0] - 1
    degenerate_run = 0
    bland = False
    since_refactor = 0
    for it in range(max_iter):
        rc = T[m, :-1]
        cand = np.flatnonzero((rc < -OPT_TOL) & allowed)
        if cand.size == 0:
            return "optimal", it, -1
        e = cand[0] if bland else cand[np.argmin(rc[cand])]
        col = T[:m, e]
        pos = col > PIVOT_TOL
        if not pos.any():
            return "unbounded", it, e
        rhs = np.maximum(T[:m, -1], 0.0)
        ratios = np.full(m, np.inf)
        ratios[pos] = rhs[pos] / col[pos]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + 1e-12 * (1.0 + rmin))
        if bland:
            r = ties[np.argmin(basis[ties])]
        else:
            r = ties[np.argmax(col[ties])]
        if rmin <= FEAS_TOL:
            degenerate_run += 1
            if degenerate_run > DEGENERATE_LIMIT:
                bland = True
        else:
            degenerate_run = 0
        _pivot(T, r, e)
        basis[r] = e
        since_refactor += 1
        if since_refactor >= REFACTOR_EVERY:
            T[:] = _rebuild(Afull, b, cost, basis)
            since_refactor = 0
    return "maxiter", max_iter, -1


def _solve_dense(lp: LinearProgram, warm_basis=None) -> LpSolution:
    st = _Standard(lp)
    m, ns = st.m, st.n_struct
    Az, bz = st.Az, st.bz
    max_iter = 50 * (m + ns) + 100
    iters = 0

    basis = None
    if warm_basis is not None:
        wb = np.asarray(warm_basis, dtype=int)
        if wb.size == m and np.all((wb >= 0) & (wb < ns)):
            try:
                T = _rebuild(Az, bz, st.cz, wb.copy())
                if np.all(T[:m, -1] >= -FEAS_TOL * (1.0 + np.abs(bz).max(initial=0.0))):
                    basis = wb.copy()
            except NumericalFailure:
                basis = None

    active_rows = np.arange(m)
    Afull = Az
    b = bz
    if basis is None:
        # phase 1 with artificials where no +1 slack is available
        basis = np.empty(m, dtype=int)
        art_rows = []
        for i in range(m):
            s = st.slack_of_row[i]
            if s >= 0 and Az[i, s] > 0:
                basis[i] = s
            else:
                art_rows.append(i)
        n_art = len(art_rows)
        Afull = np.zeros((m, ns + n_art))
        Afull[:, :ns] = Az
        for k, i in enumerate(art_rows):
            Afull[i, ns + k] = 1.0
            basis[i] = ns + k
        if n_art:
            cost1 = np.zeros(ns + n_art)
            cost1[ns:] = 1.0
            T = _rebuild(Afull, b, cost1, basis)
            allowed = np.ones(ns + n_art, dtype=bool)
            status, it, _ = _primal_simplex(T, basis, allowed, Afull, b, cost1, max_iter)
            iters += it
            if status == "maxiter":
                raise NumericalFailure("phase 1 iteration limit")
            T = _rebuild(Afull, b, cost1, basis)
            infeas = -T[m, -1]
            if infeas > FEAS_TOL * (1.0 + np.abs(b).max(initial=0.0)):
                return LpSolution("infeasible", iterations=iters)
            # drive artificials out of the basis; drop redundant rows
            keep = np.ones(m, dtype=bool)  # original rows
            keep_pos = np.ones(m, dtype=bool)  # basis positions
            for r in range(m):
                if basis[r] < ns:
                    continue
                row = T[r, :ns]
                nonbasic = np.ones(ns, dtype=bool)
                nonbasic[basis[basis < ns]] = False
                cand = np.flatnonzero(nonbasic & (np.abs(row) > 1e-7 * (1.0 + np.abs(Az[r]).max())))
                if cand.size:
                    e = cand[np.argmax(np.abs(row[cand]))]
                    _pivot(T, r, e)
                    basis[r] = e
                else:
                    # the artificial's own row is a combination of the others
                    keep[art_rows[basis[r] - ns]] = False
                    keep_pos[r] = False
            active_rows = np.flatnonzero(keep)
            basis = basis[keep_pos]
            Afull = Az[keep]
            b = bz[keep]
        else:
            Afull = Az
        T = _rebuild(Afull, b, st.cz, basis)
    else:
        T = _rebuild(Afull, b, st.cz, basis)

    allowed = np.ones(ns, dtype=bool)
    for attempt in range(3):
        status, it, entering = _primal_simplex(T, basis, allowed, Afull, b, st.cz, max_iter)
        iters += it
        if status == "maxiter":
            raise NumericalFailure("phase 2 iteration limit")
        if status == "unbounded":
            ray = np.zeros(ns)
            ray[entering] = 1.0
            ray[basis] = -T[:-1, entering]
            return LpSolution("unbounded", iterations=iters, ray=st.M @ ray[: st.nz])
        T = _rebuild(Afull, b, st.cz, basis)
        scale = 1.0 + np.abs(b).max(initial=0.0)
        if np.all(T[:-1, -1] >= -FEAS_TOL * scale) and np.all(T[-1, :ns] >= -OPT_TOL * (1.0 + np.abs(st.cz).max(initial=0.0))):
            break
        if np.any(T[:-1, -1] < -FEAS_TOL * scale):
            # lost primal feasibility after refactorization: restart cleanly
            return _retry_cold(lp, warm_basis, iters)
    else:
        raise NumericalFailure("could not reach a clean optimal basis")

    z = np.zeros(ns)
    z[basis] = np.maximum(T[:-1, -1], 0.0)
    x = st.unmap(z)
    x = np.clip(x, lp.lb, lp.ub)
    try:
        pi = np.linalg.solve(Afull[:, basis].T, st.cz[basis])
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("singular final basis") from exc
    pi_full = np.zeros(m)
    pi_full[active_rows] = pi
    y_std = pi_full * st.flip
    y = y_std[: st.m0]
    rc = lp.c - lp.A.T @ y
    obj = float(lp.c @ x)
    return LpSolution("optimal", x, y, obj, rc, basis.copy(), iters)


def _retry_cold(lp, warm_basis, iters):
    if warm_basis is not None:
        sol = _solve_dense(lp, None)
        sol.iterations += iters
        return sol
    raise NumericalFailure("primal feasibility lost after refactorization")


def _solve_highs(lp: LinearProgram) -> LpSolution:
    from scipy.optimize import linprog

    A = lp.A
    le = lp.senses == "L"
    ge = lp.senses == "G"
    eq = lp.senses == "E"
    ub_rows = sp.vstack([A[le], -A[ge]]).tocsr() if (le.any() or ge.any()) else None
    ub_rhs = np.concatenate([lp.rhs[le], -lp.rhs[ge]]) if ub_rows is not None else None
    bounds = np.column_stack([lp.lb, lp.ub])
    bounds = [(None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi) for lo, hi in bounds]
    res = linprog(
        lp.c,
        A_ub=ub_rows,
        b_ub=ub_rhs,
        A_eq=A[eq] if eq.any() else None,
        b_eq=lp.rhs[eq] if eq.any() else None,
        bounds=bounds,
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 2:
        return LpSolution("infeasible", iterations=int(res.nit))
    if res.status == 3:
        return LpSolution("unbounded", iterations=int(res.nit))
    if res.status != 0:
        raise NumericalFailure(f"HiGHS failed: {res.message}")
    y = np.zeros(lp.n_rows)
    if ub_rows is not None:
        marg = res.ineqlin.marginals
        n_le = int(le.sum())
        y[np.flatnonzero(le)] = marg[:n_le]
        y[np.flatnonzero(ge)] = -marg[n_le:]
    if eq.any():
        y[np.flatnonzero(eq)] = res.eqlin.marginals
    rc = lp.c - lp.A.T @ y
    return LpSolution("optimal", np.asarray(res.x), y, float(lp.c @ res.x), rc, None, int(res.nit))


def solve_lp(lp: LinearProgram, warm_basis=None, method: str = "auto") -> LpSolution:
    """Solve ``lp``; returns an :class:`LpSolution` with status
    ``"optimal"``, ``"infeasible"`` or ``"unbounded"``.

    ``method`` is ``"dense"`` (own simplex), ``"highs"`` or ``"auto"``, which
    uses the dense simplex unless the LP is large.  ``warm_basis`` is the
    ``basis`` attribute of a previous dense solution of an LP with the same
    structure; it is ignored if it is not primal feasible.
    """
    if method == "auto":
        n_ub = int(np.isfinite(lp.ub).sum())
        size = lp.n_rows + n_ub + lp.n_vars
        method = "dense" if size <= DENSE_SIZE_LIMIT else "highs"
    if method == "dense":
        try:
            return _solve_dense(lp, warm_basis)
        except NumericalFailure:
            if warm_basis is None:
                raise
            return _solve_dense(lp, None)
    if method == "highs":
        return _solve_highs(lp)
    raise ValueError(f"unknown LP method {method!r}")


# ---------------------------------------------------------------------------
# batched dual simplex for recourse problems

STATUS_OPTIMAL = 0
STATUS_INFEASIBLE = 1


@dataclass
class RecourseBatch:
    values: np.ndarray  # (k,)
    duals: np.ndarray  # (k, r2)
    y: np.ndarray  # (k, n2)
    status: np.ndarray  # (k,) int
    pivots: np.ndarray  # (k,) int


def solve_recourse_batch(W: np.ndarray, d: np.ndarray, R: np.ndarray) -> RecourseBatch:
    """Solve ``min d'y s.t. W y >= R[i], y >= 0`` for every row of ``R``.

    Requires ``d >= 0``.  Every problem is solved independently from the
    surplus basis, so results do not depend on how rows are batched.
    """
    W = np.asarray(W, dtype=float)
    d = np.asarray(d, dtype=float)
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if np.any(d < 0):
        raise ValueError("batched dual simplex needs d >= 0")
    k, r2 = R.shape
    n2 = W.shape[1]
    N = n2 + r2
    Afull = np.hstack([-W, np.eye(r2)])
    cfull = np.concatenate([d, np.zeros(r2)])

    tab = np.zeros((k, r2 + 1, N + 1))
    tab[:, :r2, :N] = Afull
    tab[:, :r2, N] = -R
    tab[:, r2, :N] = cfull
    basis = np.tile(np.arange(n2, N), (k, 1))

    status = np.zeros(k, dtype=int)
    pivots = np.zeros(k, dtype=int)
    final_basis = np.zeros((k, r2), dtype=int)
    row_scale = FEAS_TOL * (1.0 + np.abs(R).max(axis=1))

    idx = np.arange(k)
    degen = np.zeros(k, dtype=int)
    bland = np.zeros(k, dtype=bool)
    max_iter = 50 * N + 100
    for _ in range(max_iter):
        if idx.size == 0:
            break
        bvals = tab[:, :r2, N]
        neg = bvals < -row_scale[:, None]
        done = ~neg.any(axis=1)
        # leaving row: most negative value, or smallest basic index under Bland
        r_dantzig = np.argmin(bvals, axis=1)
        r_bland = np.argmin(np.where(neg, basis, N + 1), axis=1)
        r = np.where(bland, r_bland, r_dantzig)
        ar = np.arange(idx.size)
        rowvec = tab[ar, r, :N]
        cand = rowvec < -PIVOT_TOL
        infeas = ~done & ~cand.any(axis=1)
        finished = done | infeas
        if finished.any():
            fin = np.flatnonzero(finished)
            status[idx[fin]] = np.where(infeas[fin], STATUS_INFEASIBLE, STATUS_OPTIMAL)
            final_basis[idx[fin]] = basis[fin]
            keep = ~finished
            idx, tab, basis = idx[keep], tab[keep], basis[keep]
            degen, bland, row_scale = degen[keep], bland[keep], row_scale[keep]
            r, rowvec, cand = r[keep], rowvec[keep], cand[keep]
            if idx.size == 0:
                break
            ar = np.arange(idx.size)
        rc = tab[:, r2, :N]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(cand, np.maximum(rc, 0.0) / -rowvec, np.inf)
        rmin = ratio.min(axis=1)
        ties = ratio <= (rmin + 1e-12 * (1.0 + rmin))[:, None]
        e_dantzig = np.argmax(np.where(ties, -rowvec, -np.inf), axis=1)
        e_bland = np.argmax(ties, axis=1)
        e = np.where(bland, e_bland, e_dantzig)
        degenerate = rmin <= OPT_TOL
        degen = np.where(degenerate, degen + 1, 0)
        bland |= degen > DEGENERATE_LIMIT
        piv = rowvec[ar, e]
        prow = tab[ar, r, :] / piv[:, None]
        colv = tab[ar, :, e]
        tab -= colv[:, :, None] * prow[:, None, :]
        tab[ar, r, :] = prow
        basis[ar, r] = e
        pivots[idx] += 1
    if idx.size:
        raise NumericalFailure("batched dual simplex iteration limit")

    values = np.zeros(k)
    duals = np.zeros((k, r2))
    y = np.zeros((k, n2))
    ok = np.flatnonzero(status == STATUS_OPTIMAL)
    if ok.size:
        fb = final_basis[ok]
        B = np.transpose(Afull.T[fb], (0, 2, 1))  # (kk, r2, r2), columns = basic columns
        try:
            xb = np.linalg.solve(B, -R[ok][:, :, None])[:, :, 0]
            cb = cfull[fb]
            pi = np.linalg.solve(np.transpose(B, (0, 2, 1)), cb[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular basis in recourse cleanup") from exc
        xb = np.maximum(xb, 0.0)
        full = np.zeros((ok.size, N))
        np.put_along_axis(full, fb, xb, axis=1)
        y[ok] = full[:, :n2]
        duals[ok] = np.maximum(-pi, 0.0)
        values[ok] = (cb * xb).sum(axis=1)
    return RecourseBatch(values, duals, y, status, pivots)


# ---------------------------------------------------------------------------
# projection QP


@dataclass
class Polyhedron:
    """``{x : A_eq x = b_eq, A_in x <= b_in, lb <= x <= ub}``."""

    A_eq: np.ndarray
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    A_in: np.ndarray | None = None
    b_in: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.lb.size


def project(center, region: Polyhedron, weights=None) -> np.ndarray:
    """Weighted Euclidean projection of ``center`` onto ``region``.

    Raises :class:`LevelSetEmpty` when ``region`` is empty.
    """
    center = np.asarray(center, dtype=float)
    n = center.size
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    G = np.diag(w)
    a = w * center
    blocks, rhs = [], []
    meq = 0
    if region.A_eq is not None and region.A_eq.size:
        blocks.append(np.asarray(region.A_eq, dtype=float))
        rhs.append(np.asarray(region.b_eq, dtype=float))
        meq = region.A_eq.shape[0]
    if region.A_in is not None and region.A_in.size:
        blocks.append(-np.asarray(region.A_in, dtype=float))
        rhs.append(-np.asarray(region.b_in, dtype=float))
    fin_lo = np.flatnonzero(np.isfinite(region.lb))
    fin_hi = np.flatnonzero(np.isfinite(region.ub))
    eye = np.eye(n)
    if fin_lo.size:
        blocks.append(eye[fin_lo])
        rhs.append(region.lb[fin_lo])
    if fin_hi.size:
        blocks.append(-eye[fin_hi])
        rhs.append(-region.ub[fin_hi])
    if not blocks:
        return center.copy()
    C = np.vstack(blocks).T
    bvec = np.concatenate(rhs)
    try:
        x = quadprog.solve_qp(G, a, C, bvec, meq)[0]
    except ValueError as exc:
        msg = str(exc)
        if "inconsistent" in msg:
            raise LevelSetEmpty(msg) from exc
        raise NumericalFailure(msg) from exc
    return x


def solve_level_projection(center, cuts, level: float, region: Polyhedron) -> np.ndarray:
    """Project ``center`` onto ``{x in region : G[j] x + beta[j] <= level  for all j}``.

    ``cuts`` is a pair ``(G, beta)``; each row of ``G`` already includes the
    first-stage cost so the constraint reads ``c'x + g_j'x + beta_j <= level``.
    """
    G, beta = cuts
    G = np.atleast_2d(np.asarray(G, dtype=float)) if len(beta) else np.zeros((0, len(center)))
    beta = np.asarray(beta, dtype=float)
    A_in, b_in = G, level - beta
    if region.A_in is not None and region.A_in.size:
        A_in = np.vstack([region.A_in, G])
        b_in = np.concatenate([region.b_in, b_in])
    sub = Polyhedron(region.A_eq, region.b_eq, region.lb, region.ub, A_in, b_in)
    return project(center, sub)
