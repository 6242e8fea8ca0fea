"""Brute-force reference computations, deliberately naive and independent of the package."""

from fractions import Fraction
from itertools import combinations

import numpy as np


def lp_vertices(A, senses, rhs, lb, ub, tol=1e-9):
    """All basic feasible points of ``A x (sense) rhs, lb <= x <= ub`` (finite bounds)."""
    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    rows, vals = [], []
    for i in range(A.shape[0]):
        rows.append(A[i])
        vals.append(rhs[i])
    eye = np.eye(n)
    for j in range(n):
        rows += [eye[j], eye[j]]
        vals += [lb[j], ub[j]]
    rows, vals = np.array(rows), np.array(vals)
    pts = []
    for S in combinations(range(len(rows)), n):
        M = rows[list(S)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, vals[list(S)])
        if np.any(x < lb - tol) or np.any(x > ub + tol):
            continue
        r = A @ x
        ok = True
        for i, s in enumerate(senses):
            if s == "L" and r[i] > rhs[i] + tol or s == "G" and r[i] < rhs[i] - tol or s == "E" and abs(r[i] - rhs[i]) > tol:
                ok = False
                break
        if ok:
            pts.append(x)
    return pts


def lp_brute(c, A, senses, rhs, lb, ub):
    """Optimal value by vertex enumeration, or None when infeasible."""
    pts = lp_vertices(A, senses, rhs, lb, ub)
    if not pts:
        return None
    return min(float(np.dot(c, p)) for p in pts)


def dual_vertices(W, d):
    """Vertices of ``{lam >= 0 : W' lam <= d}``."""
    W = np.asarray(W, dtype=float)
    r2, n2 = W.shape
    return lp_vertices(W.T, ["L"] * n2, np.asarray(d, float), np.zeros(r2), np.full(r2, 1e9))


def recourse_brute(W, d, rhs):
    """``max rhs' lam`` over the dual vertices (the recourse value when bounded)."""
    return max(float(np.dot(rhs, v)) for v in dual_vertices(W, d))


def exact_mean_var(values):
    """Mean and divisor-m variance in exact rational arithmetic, rounded once."""
    q = [Fraction(v) for v in values]
    m = len(q)
    mean = sum(q) / m
    var = sum((v - mean) ** 2 for v in q) / m
    return float(mean), float(var)
