"""Ground truth for tests: exact optimum by enumeration and a generic
quadratic-programming projection built directly from constraint lists.

Nothing here reuses the closed-form projections; the constraint sets are
written out entry by entry so the two routes stay independent.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import QccpError, TooLarge
from .graph import enumerate_cycle_covers
from .instances import QcpInstance


class TooManyConstraints(QccpError):
    """Exhaustive active-set enumeration would be too expensive."""


def brute_opt(inst: QcpInstance, max_n: int = 10):
    """Minimum of ``x^T Q x`` over all cycle covers; ties go to the first
    cover in lexicographic successor order."""
    if inst.n > max_n:
        raise TooLarge(f"brute force limited to n <= {max_n}, got {inst.n}")
    best, arg = None, None
    for cover in enumerate_cycle_covers(inst.graph, limit=10**7):
        c = inst.cover_cost(cover.indicator(inst.m))
        if best is None or c < best:
            best, arg = c, cover
    return best, arg.with_cost(best)


# --- generic weighted least-squares projection ---------------------------------


@dataclass
class QpProblem:
    """``min sum_i w_i (x_i - a_i)^2`` s.t. ``A x = b``, ``G x <= h``."""

    a: np.ndarray
    w: np.ndarray
    A: np.ndarray
    b: np.ndarray
    G: np.ndarray
    h: np.ndarray

    def objective(self, x) -> float:
        return float(np.sum(self.w * (x - self.a) ** 2))

    def violation(self, x) -> float:
        v = 0.0
        if self.A.size:
            v = max(v, float(np.abs(self.A @ x - self.b).max()))
        if self.G.size:
            v = max(v, float(np.max(self.G @ x - self.h, initial=0.0)))
        return v


def _eq_projection(p: QpProblem, rows_A, rows_b):
    """Weighted projection onto an affine set; returns point and multipliers."""
    if rows_A.shape[0] == 0:
        return p.a.copy(), np.zeros(0)
    Winv = 1.0 / p.w
    K = (rows_A * Winv) @ rows_A.T
    rhs = rows_A @ p.a - rows_b
    nu, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    return p.a - Winv * (rows_A.T @ nu), nu


def _solve_enumerate(p: QpProblem, tol: float):
    best = None
    k = p.G.shape[0]
    for r in range(k + 1):
        for act in itertools.combinations(range(k), r):
            act = list(act)
            rows_A = np.vstack([p.A, p.G[act]]) if act else p.A
            rows_b = np.concatenate([p.b, p.h[act]]) if act else p.b
            x, nu = _eq_projection(p, rows_A, rows_b)
            if p.violation(x) > tol:
                continue
            if act and np.min(nu[p.A.shape[0]:]) < -tol:
                continue
            if best is None or p.objective(x) < p.objective(best) - 1e-14:
                best = x
    return best


def _solve_cvxopt(p: QpProblem, tol: float):
    from cvxopt import matrix, solvers

    d = p.a.size
    P = matrix(np.diag(2.0 * p.w))
    q = matrix(-2.0 * p.w * p.a)
    kw = {}
    if p.G.size:
        kw["G"], kw["h"] = matrix(p.G), matrix(p.h)
    if p.A.size:
        kw["A"], kw["b"] = matrix(p.A), matrix(p.b)
    opts = {"show_progress": False, "abstol": 1e-12, "reltol": 1e-12, "feastol": 1e-12, "maxiters": 200}
    sol = solvers.qp(P, q, options=opts, **kw)
    x = np.array(sol["x"]).ravel()
    if d and p.G.size:
        # polish on the detected active set to get an exact KKT point
        slack = p.h - p.G @ x
        for thresh in (1e-9, 1e-7, 1e-5):
            act = np.nonzero(slack < thresh)[0]
            rows_A = np.vstack([p.A, p.G[act]]) if act.size else p.A
            rows_b = np.concatenate([p.b, p.h[act]]) if act.size else p.b
            xp, _ = _eq_projection(p, rows_A, rows_b)
            if p.violation(xp) <= tol and p.objective(xp) <= p.objective(x) + 1e-9:
                return xp
    return x


def solve_qp(p: QpProblem, tol: float = 1e-10, max_enumerate: int = 12) -> np.ndarray:
    if p.G.shape[0] <= max_enumerate:
        x = _solve_enumerate(p, tol)
        if x is None:
            raise TooManyConstraints("no feasible KKT point found by enumeration")
        return x
    return _solve_cvxopt(p, tol)


# --- constraint sets over symmetric matrices -----------------------------------


class SymVars:
    """Upper-triangle variable indexing for a symmetric matrix of order d."""

    def __init__(self, d: int):
        self.d = d
        self.index = {}
        for i in range(d):
            for j in range(i, d):
                self.index[(i, j)] = len(self.index)
        self.size = len(self.index)

    def idx(self, i, j) -> int:
        return self.index[(min(i, j), max(i, j))]

    def weights(self) -> np.ndarray:
        return np.array([1.0 if i == j else 2.0 for (i, j) in self.index])

    def pack(self, M) -> np.ndarray:
        return np.array([M[i, j] for (i, j) in self.index], dtype=float)

    def unpack(self, x) -> np.ndarray:
        M = np.zeros((self.d, self.d))
        for (i, j), k in self.index.items():
            M[i, j] = M[j, i] = x[k]
        return M

    def row(self, coeffs: dict) -> np.ndarray:
        r = np.zeros(self.size)
        for (i, j), c in coeffs.items():
            r[self.idx(i, j)] += c
        return r


def y_set_constraints(sv: SymVars, n: int, zero_pairs, boxed: bool = True, cuts=(),
                      arrow_only_for_cuts: bool = False):
    """Equalities and inequalities describing ``Y`` (and optional cuts).

    Matrix indices: 0 for the extended coordinate, ``a + 1`` for arc ``a``.
    ``zero_pairs`` are 0-based arc pairs. With ``arrow_only_for_cuts`` only
    the cut constraints are produced, together with the arrow equality of
    each cut's first arc.
    """
    m = sv.d - 1
    eq, rhs, ineq, hv = [], [], [], []
    if not arrow_only_for_cuts:
        eq.append(sv.row({(0, 0): 1.0}))
        rhs.append(1.0)
        for e in range(1, m + 1):
            eq.append(sv.row({(0, e): 1.0, (e, e): -1.0}))
            rhs.append(0.0)
        eq.append(sv.row({(e, e): 1.0 for e in range(1, m + 1)}))
        rhs.append(float(n))
        if boxed:
            zero = {(min(e, f) + 1, max(e, f) + 1) for e, f in zero_pairs}
            for (e, f) in sorted(zero):
                eq.append(sv.row({(e, f): 1.0}))
                rhs.append(0.0)
            for e in range(1, m + 1):
                ineq.append(sv.row({(e, e): -1.0}))
                hv.append(0.0)
            for e in range(1, m + 1):
                for f in range(e + 1, m + 1):
                    if (e, f) in zero:
                        continue
                    ineq.append(sv.row({(e, f): -1.0}))
                    hv.append(0.0)
                    ineq.append(sv.row({(e, f): 1.0}))
                    hv.append(1.0)
    else:
        for e in sorted({c[0] for c in cuts}):
            eq.append(sv.row({(0, e + 1): 1.0, (e + 1, e + 1): -1.0}))
            rhs.append(0.0)
    for (e, f, g) in cuts:
        e, f, g = e + 1, f + 1, g + 1
        ineq.append(sv.row({(e, f): 1.0, (e, g): 1.0, (e, e): -1.0, (f, g): -1.0}))
        hv.append(0.0)
    A = np.array(eq) if eq else np.zeros((0, sv.size))
    G = np.array(ineq) if ineq else np.zeros((0, sv.size))
    return A, np.array(rhs), G, np.array(hv)


def qp_project_oracle(M: np.ndarray, n: int, zero_pairs=(), boxed: bool = True, cuts=(),
                      arrow_only_for_cuts: bool = False, tol: float = 1e-10) -> np.ndarray:
    """Frobenius-norm projection of symmetric ``M`` onto the described set."""
    M = np.asarray(M, dtype=float)
    sv = SymVars(M.shape[0])
    A, b, G, h = y_set_constraints(sv, n, zero_pairs, boxed, cuts, arrow_only_for_cuts)
    p = QpProblem(sv.pack(M), sv.weights(), A, b, G, h)
    return sv.unpack(solve_qp(p, tol))


def cut_oracle(mee, m0e, mfg, mef, meg):
    """Single-cut weighted projection over the five entries by enumeration."""
    a = np.array([mee, m0e, mfg, mef, meg], dtype=float)
    p = QpProblem(
        a=a,
        w=np.array([1.0, 2.0, 2.0, 2.0, 2.0]),
        A=np.array([[1.0, -1.0, 0.0, 0.0, 0.0]]),
        b=np.array([0.0]),
        G=np.array([[-1.0, 0.0, -1.0, 1.0, 1.0]]),
        h=np.array([0.0]),
    )
    return _solve_enumerate(p, 1e-12)
