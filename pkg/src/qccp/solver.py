"""Splitting solvers for the facially reduced SDP relaxation and the
cutting-plane outer loop.

The relaxation is ``min <Q_hat, Y>`` subject to ``Y = W Z W^T``, ``Z`` PSD and
``Y`` in the polyhedral set (plus triangle cuts at level s3). The augmented
Lagrangian in ``(Z, Y, S)`` is minimized alternately; PRSM updates the
multiplier twice per iteration, ADMM once. Any multiplier ``S`` yields a valid
lower bound once it is projected onto ``{S : W^T S W NSD}``.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .cuts import CutPool, TriangleCut, cluster, separate
from .facial import Basis, face_basis
from .instances import QcpInstance
from .linalg import psd_project
from .lp import solve_lb_lp
from .projections import MaxSweepsReached, PolySetY, dykstra_cyclic, dykstra_parallel

CHECKPOINT_VERSION = 1


@dataclass
class PrsmParams:
    """Solver settings; ``None`` entries are filled from the instance size."""

    mode: str = "prsm"
    level: str = "s3"
    beta: float | None = None
    gamma: float = 1.6
    gamma1: float = 0.9
    gamma2: float = 1.09
    eps_prsm: float = 1e-6
    eps_prsm_cuts: float = 1e-4
    eps_stag: float = 1e-5
    eps_proj: float = 1e-8
    max_iter: int | None = None
    max_iter_cuts: int = 500
    max_total_iter: int | None = None
    max_stag_iter: int = 50
    num_cuts: int = 50
    K: int = 5
    max_sweeps: int = 2000
    dykstra: str = "cyclic"
    theta: float = 0.85
    seed: int = 0
    family: str = "er"
    # "min": stop when either residual is below eps; "both": require both
    stop_rule: str = "min"

    def __post_init__(self):
        if self.mode not in ("prsm", "admm"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.level not in ("s1", "s2", "s3"):
            raise ValueError(f"unknown level {self.level!r}")
        if self.stop_rule not in ("min", "both"):
            raise ValueError(f"unknown stop rule {self.stop_rule!r}")
        if self.beta is not None and self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.mode == "admm" and not 0 < self.gamma < (1 + math.sqrt(5)) / 2:
            raise ValueError("ADMM step size must lie in (0, golden ratio)")

    def resolved(self, n: int, m: int) -> PrsmParams:
        beta = self.beta if self.beta is not None else float(math.ceil(m / n))
        max_iter = self.max_iter
        if max_iter is None:
            max_iter = 1500 if self.family == "manhattan" else 1000
        total = self.max_total_iter
        if total is None:
            base = 3000 if self.family == "manhattan" else 2500
            total = base + (500 if m >= 500 else 0) + (500 if m >= 1000 else 0)
        return replace(self, beta=beta, max_iter=max_iter, max_total_iter=total)


class Stop(str, Enum):
    CONTINUE = "continue"
    CONVERGED = "converged"
    ITER_CAP = "iter_cap"
    STAGNATED = "stagnated"


@dataclass
class SolverState:
    Z: np.ndarray
    Y: np.ndarray
    S: np.ndarray
    k: int = 0
    pool: CutPool = field(default_factory=CutPool)
    # rows of (k, objective, primal residual, dual residual)
    history: list[tuple[int, float, float, float]] = field(default_factory=list)
    stag_iter: int = 0

    @classmethod
    def zeros(cls, m: int, r: int) -> SolverState:
        return cls(np.zeros((r, r)), np.zeros((m + 1, m + 1)), np.zeros((m + 1, m + 1)))

    @property
    def primal_res(self) -> float:
        return self.history[-1][2] if self.history else math.inf

    @property
    def dual_res(self) -> float:
        return self.history[-1][3] if self.history else math.inf

    def save(self, path) -> None:
        cuts = np.array([[c.e, c.f, c.g] for c in self.pool.cuts], dtype=np.int64).reshape(-1, 3)
        hist = np.array(self.history, dtype=float).reshape(-1, 4)
        with open(path, "wb") as fh:
            np.savez(fh, version=CHECKPOINT_VERSION, Z=self.Z, Y=self.Y, S=self.S, k=self.k,
                     stag_iter=self.stag_iter, cuts=cuts, history=hist)

    @classmethod
    def load(cls, path) -> SolverState:
        with np.load(Path(path)) as data:
            if int(data["version"]) != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {int(data['version'])}")
            pool = CutPool([TriangleCut(*map(int, row)) for row in data["cuts"]])
            history = [(int(r[0]), float(r[1]), float(r[2]), float(r[3])) for r in data["history"]]
            return cls(data["Z"].copy(), data["Y"].copy(), data["S"].copy(), int(data["k"]),
                       pool, history, int(data["stag_iter"]))


def _project_y(M, ys, pool, params, counters):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxSweepsReached)
        if params.dykstra == "parallel":
            res = dykstra_parallel(M, ys, pool, theta=params.theta, eps_proj=params.eps_proj,
                                   max_sweeps=params.max_sweeps)
        else:
            res = dykstra_cyclic(M, ys, pool, K=params.K, eps_proj=params.eps_proj,
                                 max_sweeps=params.max_sweeps)
    if not res.converged:
        counters["dykstra_capped"] = counters.get("dykstra_capped", 0) + 1
    return res.X


def _record(state, Q_hat, W, Y_old, beta, WZW):
    primal = float(np.linalg.norm(state.Y - WZW))
    dual = float(beta * np.linalg.norm(W.T @ (state.Y - Y_old) @ W))
    obj = float(np.sum(Q_hat * state.Y))
    state.history.append((state.k, obj, primal, dual))


def prsm_step(state: SolverState, Q_hat, W, ys: PolySetY, params: PrsmParams, counters=None) -> SolverState:
    """One Peaceman-Rachford iteration (two multiplier updates)."""
    counters = {} if counters is None else counters
    beta = params.beta
    Z = psd_project(W.T @ (state.Y + state.S / beta) @ W)
    WZW = W @ Z @ W.T
    S_half = state.S + params.gamma1 * beta * (state.Y - WZW)
    Y = _project_y(WZW - (Q_hat + S_half) / beta, ys, state.pool, params, counters)
    S = S_half + params.gamma2 * beta * (Y - WZW)
    new = SolverState(Z, Y, S, state.k + 1, state.pool, state.history, state.stag_iter)
    _record(new, Q_hat, W, state.Y, beta, WZW)
    return new


def admm_step(state: SolverState, Q_hat, W, ys: PolySetY, params: PrsmParams, counters=None) -> SolverState:
    """One ADMM iteration (single multiplier update with step ``gamma``)."""
    counters = {} if counters is None else counters
    beta = params.beta
    Z = psd_project(W.T @ (state.Y + state.S / beta) @ W)
    WZW = W @ Z @ W.T
    Y = _project_y(WZW - (Q_hat + state.S) / beta, ys, state.pool, params, counters)
    S = state.S + params.gamma * beta * (Y - WZW)
    new = SolverState(Z, Y, S, state.k + 1, state.pool, state.history, state.stag_iter)
    _record(new, Q_hat, W, state.Y, beta, WZW)
    return new


def check_stop(primal: float, dual: float, inner_iter: int, stag_iter: int, eps: float,
               max_iter: int, max_stag_iter: int, rule: str = "min") -> Stop:
    if (min(primal, dual) if rule == "min" else max(primal, dual)) < eps:
        return Stop.CONVERGED
    if inner_iter >= max_iter:
        return Stop.ITER_CAP
    if stag_iter > max_stag_iter:
        return Stop.STAGNATED
    return Stop.CONTINUE


def dual_project(S: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Nearest ``S'`` with ``W^T S' W`` negative semidefinite (``W`` orthonormal)."""
    return S - W @ psd_project(W.T @ S @ W) @ W.T


def lower_bound(S: np.ndarray, pool: CutPool | None, inst: QcpInstance, basis: Basis,
                Q_hat: np.ndarray | None = None) -> float:
    """Valid lower bound on the optimum from an arbitrary multiplier ``S``.

    The polyhedral set always includes the box and zero pattern (every cycle
    cover satisfies them), whatever level produced ``S``.
    """
    if Q_hat is None:
        Q_hat = inst.q_hat()
    C = Q_hat + dual_project(S, basis.W)
    ys = PolySetY.from_graph(inst.graph, "s2")
    cuts = pool.cuts if pool is not None else ()
    return solve_lb_lp(C, cuts, ys.zero_mask, inst.n)


def round_bound(lb: float, slack: float = 1e-6) -> int:
    """Round a lower bound up, tolerating tiny numerical overshoot."""
    return int(math.ceil(lb - slack))


@dataclass
class CpalmResult:
    state: SolverState
    lb: float
    lb_ceil: int
    report: dict
    # rows of (k, objective, primal, dual, lb or nan)
    trace: list[tuple[int, float, float, float, float]]


def solve_cpalm(inst: QcpInstance, basis: Basis | None = None, params: PrsmParams | None = None,
                state: SolverState | None = None, log=None) -> CpalmResult:
    """Cutting-plane loop around PRSM/ADMM, warm-started across cut rounds."""
    params = (params or PrsmParams()).resolved(inst.n, inst.m)
    basis = basis or face_basis(inst.graph)
    W = basis.W
    Q_hat = inst.q_hat()
    ys = PolySetY.from_graph(inst.graph, params.level)
    state = state or SolverState.zeros(inst.m, basis.dim)
    if params.level != "s3":
        state.pool = CutPool()
    step = prsm_step if params.mode == "prsm" else admm_step
    counters: dict = {}
    stops = []
    trace = []
    t0 = time.perf_counter()
    lb_rounds = []
    max_iter, eps = params.max_iter, params.eps_prsm
    if len(state.pool):
        max_iter, eps = params.max_iter_cuts, params.eps_prsm_cuts
        if not state.pool.clusters:
            state.pool = cluster(state.pool, seed=params.seed)
    while True:
        inner = 0
        state.stag_iter = 0
        prev_obj = None
        while True:
            state = step(state, Q_hat, W, ys, params, counters)
            inner += 1
            k, obj, primal, dual = state.history[-1]
            if prev_obj is not None and abs(obj - prev_obj) < params.eps_stag:
                state.stag_iter += 1
            prev_obj = obj
            trace.append((k, obj, primal, dual, math.nan))
            status = check_stop(primal, dual, inner, state.stag_iter, eps, max_iter, params.max_stag_iter,
                                params.stop_rule)
            if state.k >= params.max_total_iter and status is Stop.CONTINUE:
                status = Stop.ITER_CAP
            if status is not Stop.CONTINUE:
                break
        lb = lower_bound(state.S, state.pool, inst, basis, Q_hat)
        lb_rounds.append(lb)
        trace[-1] = trace[-1][:4] + (lb,)
        stops.append(status.value)
        if log:
            log(f"k={state.k} inner={inner} stop={status.value} obj={obj:.6f} "
                f"primal={primal:.2e} dual={dual:.2e} cuts={len(state.pool)} lb={lb:.6f}")
        if params.level != "s3" or state.k >= params.max_total_iter:
            break
        new_cuts = separate(state.Y, params.num_cuts, excluded=state.pool.cuts)
        if not new_cuts:
            break
        pool = state.pool.copy()
        pool.add(new_cuts)
        state.pool = cluster(pool, seed=params.seed)
        max_iter, eps = params.max_iter_cuts, params.eps_prsm_cuts
    lb = lb_rounds[-1]
    report = {
        "iterations": state.k,
        "inner_loops": len(stops),
        "stops": stops,
        "cuts": len(state.pool),
        "clusters": len(state.pool.clusters),
        "objective": state.history[-1][1],
        "primal_res": state.history[-1][2],
        "dual_res": state.history[-1][3],
        "lb": lb,
        "lb_ceil": round_bound(lb),
        "lb_rounds": lb_rounds,
        "dykstra_capped": counters.get("dykstra_capped", 0),
        "time_s": time.perf_counter() - t0,
        "beta": params.beta,
        "mode": params.mode,
        "level": params.level,
    }
    return CpalmResult(state, lb, round_bound(lb), report, trace)
