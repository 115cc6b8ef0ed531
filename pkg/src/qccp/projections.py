"""Projections onto the polyhedral part of the relaxation.

``Y`` collects the linear constraints of the lifted matrix: ``Y_00 = 1``, the
arrow (row 0) equals the diagonal, the arrow lies on the simplex of radius
``n``, the off-diagonal block is in ``[0, 1]`` and vanishes on the zero pattern
(arc pairs that share a tail or a head). Triangle cuts are intersected with
``Y`` by Dykstra's method, cyclic or parallel.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .cuts import CutPool, TriangleCut
from .graph import DiGraph
from .linalg import project_hyperplane_sum, project_simplex


class MaxSweepsReached(UserWarning):
    """Dykstra stopped at its sweep cap; the last iterate is returned."""


@dataclass(frozen=True)
class PolySetY:
    """The set ``Y`` for one instance at a given relaxation level.

    Level ``s1`` drops the box, the arrow nonnegativity and the zero pattern;
    ``s2`` and ``s3`` use the full set (``s3`` only differs by its cuts).
    """

    m: int
    n: int
    zero_mask: np.ndarray  # (m+1, m+1) bool, True on zero-pattern entries
    level: str = "s2"

    @classmethod
    def from_graph(cls, g: DiGraph, level: str = "s2") -> PolySetY:
        if level not in ("s1", "s2", "s3"):
            raise ValueError(f"unknown level {level!r}")
        mask = np.zeros((g.m + 1, g.m + 1), dtype=bool)
        if level != "s1":
            t, h = g.tails, g.heads
            same = (t[:, None] == t[None, :]) | (h[:, None] == h[None, :])
            np.fill_diagonal(same, False)
            mask[1:, 1:] = same
        return cls(g.m, g.n, mask, level)

    @property
    def boxed(self) -> bool:
        return self.level != "s1"

    def zero_pairs(self) -> list[tuple[int, int]]:
        """Zero-pattern pairs ``(e, f)`` with ``e < f`` (0-based arcs)."""
        i, j = np.nonzero(np.triu(self.zero_mask[1:, 1:], k=1))
        return list(zip(i.tolist(), j.tolist()))

    def violation(self, Y: np.ndarray) -> float:
        """Largest violation of the constraints of ``Y`` (0 when feasible)."""
        x = Y[0, 1:]
        d = np.diag(Y)[1:]
        X = Y[1:, 1:]
        off = ~np.eye(self.m, dtype=bool)
        v = [abs(Y[0, 0] - 1.0), np.abs(x - d).max(initial=0.0), np.abs(Y - Y.T).max(),
             abs(d.sum() - self.n)]
        if self.boxed:
            v.append(max(0.0, -x.min(initial=0.0)))
            v.append(max(0.0, -X[off].min(initial=0.0)))
            v.append(max(0.0, X[off].max(initial=0.0) - 1.0))
            v.append(np.abs(Y[self.zero_mask]).max(initial=0.0))
        return float(max(v))


# --- elementary operators ------------------------------------------------------


def t_arrow(M: np.ndarray) -> np.ndarray:
    """Average of the diagonal entry and the two arrow entries per arc."""
    return (np.diag(M)[1:] + M[0, 1:] + M[1:, 0]) / 3.0


def t_arrow_star(x: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`t_arrow`: ``x / 3`` on row 0, column 0 and the diagonal."""
    x = np.asarray(x, dtype=float)
    M = np.zeros((x.size + 1, x.size + 1))
    M[0, 1:] = x / 3.0
    M[1:, 0] = x / 3.0
    idx = np.arange(1, x.size + 1)
    M[idx, idx] = x / 3.0
    return M


def t_inner(M: np.ndarray, zero_mask: np.ndarray | None = None) -> np.ndarray:
    """Zero the arrow, the diagonal and the zero-pattern entries."""
    out = np.array(M, dtype=float)
    out[0, :] = 0.0
    out[:, 0] = 0.0
    np.fill_diagonal(out, 0.0)
    if zero_mask is not None:
        out[zero_mask] = 0.0
    return out


def t_box(M: np.ndarray) -> np.ndarray:
    return np.clip(M, 0.0, 1.0)


def _e00(d: int) -> np.ndarray:
    E = np.zeros((d, d))
    E[0, 0] = 1.0
    return E


def project_Y(M: np.ndarray, ys: PolySetY) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    arrow = t_arrow(M)
    if ys.boxed:
        inner = t_box(t_inner(M, ys.zero_mask))
        arrow = project_simplex(arrow, ys.n)
    else:
        inner = t_inner(M)
        arrow = project_hyperplane_sum(arrow, ys.n)
    return _e00(M.shape[0]) + inner + t_arrow_star(3.0 * arrow)


def project_Y_aff(M: np.ndarray, ys: PolySetY) -> np.ndarray:
    """Projection onto the affine hull constraints of ``Y`` (no bounds)."""
    M = np.asarray(M, dtype=float)
    arrow = project_hyperplane_sum(t_arrow(M), ys.n)
    return _e00(M.shape[0]) + t_inner(M, ys.zero_mask) + t_arrow_star(3.0 * arrow)


# --- single cut ------------------------------------------------------------------


def cut_values(mee, m0e, mfg, mef, meg):
    """Projected entries ``(pi, mu, delta, theta)`` for one cut.

    ``pi`` is the common value of ``(e, e)`` and ``(0, e)``, ``mu`` of ``(f, g)``,
    ``delta`` of ``(e, f)`` and ``theta`` of ``(e, g)``. Works elementwise on arrays.
    In the weighted least-squares problem the cut's multiplier is
    ``lam = 12/11 * (mef + meg - mfg - (mee + 2 m0e) / 3)``; when it is not
    positive only the arrow of ``e`` is averaged (ties included).
    """
    pi1 = (mee + 2.0 * m0e) / 3.0
    lam = np.maximum((mef + meg - mfg - pi1) * (12.0 / 11.0), 0.0)
    return pi1 + lam / 6.0, mfg + lam / 4.0, mef - lam / 4.0, meg - lam / 4.0


def cut_multiplier(mee, m0e, mfg, mef, meg):
    pi1 = (mee + 2.0 * m0e) / 3.0
    return np.maximum((mef + meg - mfg - pi1) * (12.0 / 11.0), 0.0)


def _gather(X, E, F, G):
    return X[E, E], X[0, E], X[F, G], X[E, F], X[E, G]


def _scatter(X, E, F, G, pi, mu, delta, theta):
    X[E, E] = pi
    X[0, E] = pi
    X[E, 0] = pi
    X[F, G] = mu
    X[G, F] = mu
    X[E, F] = delta
    X[F, E] = delta
    X[E, G] = theta
    X[G, E] = theta


def project_cut(M: np.ndarray, cut: TriangleCut) -> np.ndarray:
    """Projection onto ``{X_ef + X_eg <= X_ee + X_fg, X_ee = X_0e}``; only the
    five symmetric entry pairs of the cut change."""
    X = np.array(M, dtype=float)
    E, F, G = (np.array([a + 1]) for a in (cut.e, cut.f, cut.g))
    _scatter(X, E, F, G, *cut_values(*_gather(X, E, F, G)))
    return X


# column order of a cut's normal: (e,e), (0,e), (f,g), (e,f), (e,g)
_STEP = np.array([1.0 / 6.0, 1.0 / 6.0, 0.25, -0.25, -0.25])
# scatter targets per cut: the five entries plus their mirrors
_MIRROR = np.array([0, 1, 1, 2, 2, 3, 3, 4, 4])


class _ClusterPlan:
    """Flat gather/scatter indices for one cluster of disjoint cuts."""

    def __init__(self, d: int, E, F, G, rows):
        Z = np.zeros_like(E)
        self.gather = np.stack([E * d + E, Z * d + E, F * d + G, E * d + F, E * d + G], axis=1)
        self.scatter = np.stack([E * d + E, Z * d + E, E * d + Z, F * d + G, G * d + F,
                                 E * d + F, F * d + E, E * d + G, G * d + E], axis=1)
        self.rows = rows


def _plan_step(Xf, R, plan: _ClusterPlan):
    """Dykstra step for a set of cuts touching pairwise disjoint entries."""
    L = Xf[plan.gather] + R[plan.rows]
    mee, m0e, mfg, mef, meg = L.T
    pi1 = (mee + 2.0 * m0e) / 3.0
    lam = np.maximum((mef + meg - mfg - pi1) * (12.0 / 11.0), 0.0)
    new = L + lam[:, None] * _STEP
    new[:, 0] += pi1 - mee
    new[:, 1] = new[:, 0]
    R[plan.rows] = L - new
    Xf[plan.scatter] = new[:, _MIRROR]


def _cluster_step(X, R, E, F, G, rows):
    """All cuts of a cluster at once; ``X`` must be C-contiguous."""
    _plan_step(X.reshape(-1), R, _ClusterPlan(X.shape[0], E, F, G, rows))


def _cluster_step_sequential(X, R, E, F, G, rows):
    """Same step one cut at a time; reference for the simultaneous version."""
    for k in range(E.size):
        sl = slice(k, k + 1)
        _cluster_step(X, R, E[sl], F[sl], G[sl], rows[sl])


@dataclass
class DykstraResult:
    X: np.ndarray
    sweeps: int
    converged: bool


def _cluster_rows(pool: CutPool):
    arrays = pool.cluster_arrays()
    rows = [np.array(cl, dtype=np.int64) for cl in pool.clusters]
    return list(zip(arrays, rows))


def _require_clusters(pool: CutPool) -> CutPool:
    if pool.cuts and not pool.clusters:
        from .cuts import cluster

        pool = cluster(pool)
    return pool


def dykstra_cyclic(M: np.ndarray, ys: PolySetY, pool: CutPool | None = None, K: int = 5,
                   eps_proj: float = 1e-8, max_sweeps: int = 2000, kernel: str = "compiled",
                   warn: bool = True) -> DykstraResult:
    """Best approximation of ``M`` in ``Y`` intersected with the cut polyhedra.

    Each sweep projects onto ``Y`` once and then runs ``K`` passes over the
    clusters. Normals start at zero on every call.

    ``kernel`` picks how a pass runs: ``"compiled"`` loops over cuts in
    cluster order in machine code, ``"vectorized"`` updates each cluster at
    once with numpy, ``"sequential"`` runs one numpy step per cut. Cuts in a
    cluster touch disjoint entries, so all three give the same iterates.
    """
    if kernel not in ("compiled", "vectorized", "sequential"):
        raise ValueError(f"unknown kernel {kernel!r}")
    M = np.asarray(M, dtype=float)
    if pool is None or len(pool) == 0:
        return DykstraResult(project_Y(M, ys), 1, True)
    pool = _require_clusters(pool)
    d = M.shape[0]
    if kernel == "sequential":
        plans = [_ClusterPlan(d, E[k:k + 1], F[k:k + 1], G[k:k + 1], rows[k:k + 1])
                 for (E, F, G), rows in _cluster_rows(pool) for k in range(E.size)]
    else:
        plans = [_ClusterPlan(d, E, F, G, rows) for (E, F, G), rows in _cluster_rows(pool)]
    if kernel == "compiled":
        from ._kernels import cut_passes

        gather = np.ascontiguousarray(np.concatenate([p.gather for p in plans]), dtype=np.int64)
        scatter = np.ascontiguousarray(np.concatenate([p.scatter for p in plans]), dtype=np.int64)
        cut_rows = np.concatenate([p.rows for p in plans]).astype(np.int64)
    X = M.copy()
    RY = np.zeros_like(X)
    R = np.zeros((len(pool), 5))
    for sweep in range(1, max_sweeps + 1):
        prev = X
        T = X + RY
        X = project_Y(T, ys)
        RY = T - X
        Xf = X.reshape(-1)
        if kernel == "compiled":
            cut_passes(Xf, R, gather, scatter, cut_rows, K)
        else:
            for _ in range(K):
                for plan in plans:
                    _plan_step(Xf, R, plan)
        if np.linalg.norm(X - prev) < eps_proj:
            return DykstraResult(X, sweeps=sweep, converged=True)
    if warn:
        warnings.warn(f"cyclic Dykstra stopped after {max_sweeps} sweeps", MaxSweepsReached, stacklevel=2)
    return DykstraResult(X, sweeps=max_sweeps, converged=False)


def dykstra_parallel(M: np.ndarray, ys: PolySetY, pool: CutPool | None = None, theta: float = 0.85,
                     eps_proj: float = 1e-8, max_sweeps: int = 20_000, preprocess: bool = True,
                     warn: bool = True) -> DykstraResult:
    """Simultaneous Dykstra: project onto ``Y`` and every cut from the same
    point and average with weight ``theta`` on ``Y`` and equal cut weights."""
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    M = np.asarray(M, dtype=float)
    if pool is None or len(pool) == 0:
        return DykstraResult(project_Y(M, ys), 1, True)
    cuts = pool.cuts
    E = np.array([c.e for c in cuts]) + 1
    F = np.array([c.f for c in cuts]) + 1
    G = np.array([c.g for c in cuts]) + 1
    t = len(cuts)
    Xbar = project_Y_aff(M, ys) if preprocess else M.copy()
    RY = np.zeros_like(Xbar)
    R = np.zeros((t, 5))
    for sweep in range(1, max_sweeps + 1):
        T = Xbar + RY
        XY = project_Y(T, ys)
        RY = T - XY
        L = np.stack(_gather(Xbar, E, F, G), axis=1) + R
        pi, mu, delta, th = cut_values(*L.T)
        new = np.stack([pi, pi, mu, delta, th], axis=1)
        # each cut's projection equals Xbar except on its five entries
        D = np.zeros_like(Xbar)
        diff = new - (L - R)
        np.add.at(D, (E, E), diff[:, 0])
        np.add.at(D, (0 * E, E), diff[:, 1])
        np.add.at(D, (E, 0 * E), diff[:, 1])
        np.add.at(D, (F, G), diff[:, 2])
        np.add.at(D, (G, F), diff[:, 2])
        np.add.at(D, (E, F), diff[:, 3])
        np.add.at(D, (F, E), diff[:, 3])
        np.add.at(D, (E, G), diff[:, 4])
        np.add.at(D, (G, E), diff[:, 4])
        R = L - new
        nxt = theta * XY + (1.0 - theta) * (Xbar + D / t)
        change = np.linalg.norm(nxt - Xbar)
        Xbar = nxt
        if change < eps_proj:
            return DykstraResult(Xbar, sweeps=sweep, converged=True)
    if warn:
        warnings.warn(f"parallel Dykstra stopped after {max_sweeps} sweeps", MaxSweepsReached, stacklevel=2)
    return DykstraResult(Xbar, sweeps=max_sweeps, converged=False)


def project_Y_T(M: np.ndarray, ys: PolySetY, pool: CutPool | None = None, **kw) -> np.ndarray:
    return dykstra_cyclic(M, ys, pool, **kw).X
