"""Upper bounds from the relaxation's output.

All heuristics round ``(x_out, Y_out)`` to cycle covers: a deterministic
nearest-cover rounding, randomized undersampling (sample a partial cover and
extend it), randomized oversampling (grow a subgraph until it holds a
2-factor), a multi-agent Q-learning cycle builder, and a set-partitioning
recombination of every cycle produced. Every reported cover is re-validated
and its cost recomputed from ``Q`` before it leaves this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (EmptyPool, Infeasible, InstanceInfeasible, NoFeasibleExtension, RoundBudgetExceeded,
                     ValidationError, W0NearZero)
from .graph import CycleCover, DiGraph, decompose_cycles, find_cycle_cover, is_cycle_cover
from .instances import QcpInstance
from .linalg import perron_pair
from .lp import TransportProblem, solve_spp, solve_transport

US_RETRIES = 20
W0_TOL = 1e-10


# --- results and cycle pools ----------------------------------------------------


def _canonical(g: DiGraph, arcs) -> tuple[int, ...]:
    """Rotate a cycle's arc list to start at its lowest tail node."""
    arcs = list(arcs)
    k = min(range(len(arcs)), key=lambda i: g.arcs[arcs[i]][0])
    return tuple(arcs[k:] + arcs[:k])


@dataclass
class PooledCycle:
    nodes: tuple[int, ...]
    arcs: tuple[int, ...]
    cost: float
    tags: set[str] = field(default_factory=set)


class CyclePool:
    """Deduplicated directed cycles with their quadratic cost and origin tags."""

    def __init__(self, inst: QcpInstance):
        self.inst = inst
        self._cycles: dict[tuple[int, ...], PooledCycle] = {}

    def __len__(self):
        return len(self._cycles)

    def __iter__(self):
        return iter(self._cycles.values())

    def add(self, arcs, tag: str) -> PooledCycle:
        g = self.inst.graph
        key = _canonical(g, arcs)
        if len(key) < 2:
            raise ValidationError("a cycle needs at least two arcs")
        for a, b in zip(key, key[1:] + key[:1]):
            if g.arcs[a][1] != g.arcs[b][0]:
                raise ValidationError(f"arcs {a} and {b} are not consecutive")
        nodes = tuple(g.arcs[a][0] for a in key)
        if len(set(nodes)) != len(nodes):
            raise ValidationError("cycle is not simple")
        entry = self._cycles.get(key)
        if entry is None:
            entry = PooledCycle(nodes, key, self.inst.cycle_cost(key))
            self._cycles[key] = entry
        entry.tags.add(tag)
        return entry

    def add_cover(self, cover: CycleCover, tag: str) -> None:
        for cyc in cover.cycles:
            self.add(cyc, tag)

    def merge(self, other: CyclePool) -> None:
        for c in other:
            for tag in c.tags:
                self.add(c.arcs, tag)

    def best_cover(self) -> CycleCover:
        """Cheapest exact cover of the nodes by pooled cycles."""
        if not self._cycles:
            raise EmptyPool("no cycle was constructed")
        entries = list(self._cycles.values())
        res = solve_spp([c.nodes for c in entries], [c.cost for c in entries], self.inst.n)
        arcs = [a for k in res.columns for a in entries[k].arcs]
        return verified_cover(self.inst, arcs)


@dataclass
class UbResult:
    method: str
    cover: CycleCover
    value: float
    # every cover produced along the way, for recombination
    covers: list[CycleCover] = field(default_factory=list)
    pool: CyclePool | None = None
    info: dict = field(default_factory=dict)


def verified_cover(inst: QcpInstance, arcs) -> CycleCover:
    """Re-check ``Ux = Vx = 1`` and recompute the cost as ``x^T Q x``."""
    g = inst.graph
    arcs = sorted(int(a) for a in arcs)
    x = np.zeros(g.m)
    x[arcs] = 1.0
    if len(arcs) != g.n or not is_cycle_cover(g, x):
        raise ValidationError("rounded arc set is not a cycle cover")
    return CycleCover(tuple(arcs), decompose_cycles(g, arcs), inst.cover_cost(x))


def _result(method, inst, covers, pool=None, **info) -> UbResult:
    best = min(covers, key=lambda c: (c.cost, c.arcs))
    return UbResult(method, best, float(best.cost), covers, pool, info)


def _trial_rngs(seed: int, tag: str, trials: int) -> list[np.random.Generator]:
    root = np.random.SeedSequence([int(seed), sum(map(ord, tag))])
    return [np.random.default_rng(s) for s in root.spawn(trials)]


def x_out_of(Y_out: np.ndarray) -> np.ndarray:
    return np.diag(np.asarray(Y_out, dtype=float))[1:].copy()


# --- best Euclidean approximation -----------------------------------------------


def ub_euclidean(inst: QcpInstance, x_out) -> UbResult:
    """Cover maximizing ``x^T x_out``, i.e. the cover nearest to ``x_out``."""
    sol = solve_transport(TransportProblem.full(inst.graph, np.asarray(x_out, dtype=float)))
    if sol is None:
        raise InstanceInfeasible("graph has no cycle cover")
    z, _ = sol
    cover = verified_cover(inst, np.nonzero(z)[0])
    return _result("eb", inst, [cover])


# --- randomized undersampling ----------------------------------------------------


def _node_distributions(g: DiGraph, x_out, adj) -> list[np.ndarray]:
    """Per node, cumulative distribution over ``adj[i]`` from clipped, renormalized ``x_out``."""
    x = np.maximum(np.asarray(x_out, dtype=float), 0.0)
    out = []
    for arcs in adj:
        w = x[arcs] if arcs else np.zeros(0)
        total = w.sum()
        p = w / total if total > 0 else np.full(len(arcs), 1.0 / max(len(arcs), 1))
        out.append(np.cumsum(p))
    return out


def _draw(cdf: np.ndarray, rng) -> int:
    k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(k, cdf.size - 1)


def _undersample_once(inst: QcpInstance, x_out, out_cdf, in_cdf, rng) -> CycleCover | None:
    g = inst.graph
    y1 = np.zeros(g.m, dtype=bool)
    y2 = np.zeros(g.m, dtype=bool)
    for i in range(g.n):
        y1[g.out_adj[i][_draw(out_cdf[i], rng)]] = True
        y2[g.in_adj[i][_draw(in_cdf[i], rng)]] = True
    y = y1 & y2
    has_out = np.zeros(g.n, dtype=bool)
    has_in = np.zeros(g.n, dtype=bool)
    has_out[g.tails[y]] = True
    has_in[g.heads[y]] = True
    n_plus = frozenset(np.nonzero(~has_out)[0].tolist())
    n_minus = frozenset(np.nonzero(~has_in)[0].tolist())
    allowed = ~has_out[g.tails] & ~has_in[g.heads]
    sol = solve_transport(TransportProblem(g, np.asarray(x_out, dtype=float), n_plus, n_minus, allowed))
    if sol is None:
        return None
    z, _ = sol
    return verified_cover(inst, np.nonzero(y | (z > 0))[0])


def ub_undersample(inst: QcpInstance, x_out, trials: int = 500, seed: int = 0,
                   retries: int = US_RETRIES) -> UbResult:
    """Sample one out-arc and one in-arc per node, keep arcs drawn twice, and
    complete the partial cover by an assignment; best over ``trials``."""
    g = inst.graph
    out_cdf = _node_distributions(g, x_out, g.out_adj)
    in_cdf = _node_distributions(g, x_out, g.in_adj)
    covers = []
    failed = 0
    for rng in _trial_rngs(seed, "us", trials):
        for _ in range(retries + 1):
            cover = _undersample_once(inst, x_out, out_cdf, in_cdf, rng)
            if cover is not None:
                covers.append(cover)
                break
        else:
            failed += 1
    if not covers:
        raise NoFeasibleExtension(f"no trial extended to a cycle cover within {retries} resamples")
    return _result("us", inst, covers, failed_trials=failed)


# --- randomized oversampling -----------------------------------------------------


def perron_ratio(Y_out) -> np.ndarray:
    """``r = w_bar / w_0`` from the Perron vector of ``Y_out``."""
    _, w = perron_pair(np.asarray(Y_out, dtype=float))
    if w[0] < W0_TOL:
        raise W0NearZero(f"leading Perron entry {w[0]:.3e} is below {W0_TOL:g}")
    return w[1:] / w[0]


def round_budget(g: DiGraph, r, q: float = 0.99) -> int:
    """Rounds after which a fixed cover in the support of ``r`` is contained in
    the sampled subgraph with probability at least ``q``.

    The cover is the one maximizing ``sum log r`` over arcs, and ``xi`` is its
    smallest per-node product ``r_in * r_out`` under the per-node normalization
    used for sampling.
    """
    r = np.maximum(np.asarray(r, dtype=float), 0.0)
    in_sum = np.array([r[a].sum() for a in g.in_adj])
    out_sum = np.array([r[a].sum() for a in g.out_adj])
    c = np.log(np.maximum(r, 1e-300))
    sol = solve_transport(TransportProblem.full(g, c))
    if sol is None:
        raise InstanceInfeasible("graph has no cycle cover")
    z, _ = sol
    chosen = np.nonzero(z)[0]
    r_in = np.zeros(g.n)
    r_out = np.zeros(g.n)
    for a in chosen:
        t, h = g.arcs[a]
        r_out[t] = r[a] / out_sum[t] if out_sum[t] > 0 else 0.0
        r_in[h] = r[a] / in_sum[h] if in_sum[h] > 0 else 0.0
    xi = float(np.min(r_in * r_out))
    if xi <= 0:
        raise W0NearZero("sampling distribution gives no cover positive probability")
    if xi >= 1:
        return 1
    return max(1, math.ceil(math.log(1 - q ** (1.0 / g.n)) / math.log(1 - xi)))


def _has_two_factor(g: DiGraph, mask) -> bool:
    try:
        find_cycle_cover(g.subgraph(np.nonzero(mask)[0]))
    except InstanceInfeasible:
        return False
    return True


def oversample_rounds(g: DiGraph, r, rng, budget: int) -> tuple[np.ndarray, int]:
    """Grow ``H`` by one sampled pair of successive arcs per node per round
    until it holds a 2-factor. Returns the arc mask of ``H`` and the rounds used."""
    in_cdf = _node_distributions(g, r, g.in_adj)
    out_cdf = _node_distributions(g, r, g.out_adj)
    H = np.zeros(g.m, dtype=bool)
    for rnd in range(1, budget + 1):
        for i in range(g.n):
            H[g.in_adj[i][_draw(in_cdf[i], rng)]] = True
            H[g.out_adj[i][_draw(out_cdf[i], rng)]] = True
        if _has_two_factor(g, H):
            return H, rnd
    raise RoundBudgetExceeded(f"no 2-factor after {budget} rounds")


def ub_oversample(inst: QcpInstance, Y_out, x_out=None, trials: int = 500, seed: int = 0,
                  q: float = 1 - 1e-9) -> UbResult:
    """Sample subgraphs from the rank-one part of ``Y_out`` until they contain a
    cover, then take the cover in each nearest to ``x_out``; best over ``trials``.

    The per-trial round budget guarantees termination with probability ``q``.
    """
    g = inst.graph
    x_out = x_out_of(Y_out) if x_out is None else np.asarray(x_out, dtype=float)
    r = perron_ratio(Y_out)
    budget = round_budget(g, r, q)
    covers = []
    rounds = []
    failed = 0
    for rng in _trial_rngs(seed, "os", trials):
        try:
            H, used = oversample_rounds(g, r, rng, budget)
        except RoundBudgetExceeded:
            failed += 1
            continue
        sol = solve_transport(TransportProblem.full(g, x_out, allowed=H))
        if sol is None:
            raise AssertionError("subgraph lost its 2-factor")
        covers.append(verified_cover(inst, np.nonzero(sol[0])[0]))
        rounds.append(used)
    if not covers:
        raise RoundBudgetExceeded(f"all {trials} trials exceeded the budget of {budget} rounds")
    return _result("os", inst, covers, budget=budget, failed_trials=failed, max_rounds=max(rounds))


# --- sequential Q-learning -------------------------------------------------------


@dataclass
class SqParams:
    delta: float = 20.0
    beta: float = 1.0
    q0: float = 0.4
    alpha: float = 0.5
    gamma: float = 0.6
    omega: float | None = None
    eps_fit: float = 1e-6
    trials: int = 500

    def __post_init__(self):
        if self.delta <= 0 or self.beta <= 0:
            raise ValueError("fit exponents must be positive")
        for name in ("q0", "alpha", "gamma"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.trials < 1:
            raise ValueError("need at least one trial")

    @classmethod
    def for_family(cls, family: str, **kw) -> SqParams:
        """Fit exponents and trial counts per instance family."""
        if family == "reload":
            kw.setdefault("delta", 5.0)
        if family == "manhattan":
            kw.setdefault("trials", 100)
        return cls(**kw)


class _Agent:
    __slots__ = ("J", "path", "prev_arc", "cur", "cycles", "active")

    def __init__(self, start: int, n: int):
        self.J = np.ones(n, dtype=bool)
        self.path = [start]
        self.prev_arc = -1
        self.cur = start
        self.cycles: list[tuple[int, ...]] = []
        self.active = True


class _SqLearner:
    def __init__(self, inst: QcpInstance, Y_out, params: SqParams, rng):
        g = inst.graph
        self.inst, self.g, self.p, self.rng = inst, g, params, rng
        self.q = inst.q
        self.succ = np.zeros((g.m, g.m), dtype=bool)
        for e in range(g.m):
            self.succ[e, g.successors(e)] = True
        Y = np.asarray(Y_out, dtype=float)[1:, 1:]
        self.SQ = np.where(self.succ, Y, 0.0)
        self.omega = params.omega if params.omega is not None else 3.0 * g.m / g.n

    def _candidates(self, a: _Agent) -> list[int]:
        heads = self.g.heads
        return [f for f in self.g.out_adj[a.cur] if a.J[heads[f]]]

    def _choose(self, a: _Agent, cands: list[int]) -> int:
        g, p = self.g, self.p
        if a.prev_arc >= 0:
            sq = np.array([self.SQ[a.prev_arc, f] for f in cands])
            cost = np.array([1.0 / (max(self.q.get((a.prev_arc, f), 0.0), 0.0) + p.eps_fit) for f in cands])
        else:
            preds = [e for e in g.in_adj[a.cur] if a.J[g.tails[e]]]
            sq = np.array([sum(self.SQ[e, f] for e in preds) for f in cands])
            cost = np.array([sum(1.0 / (max(self.q.get((e, f), 0.0), 0.0) + p.eps_fit) for e in preds)
                             for f in cands])
        with np.errstate(divide="ignore"):
            logfit = p.delta * np.log(np.maximum(sq, 0.0)) + p.beta * np.log(cost)
        # candidates are ordered by head node so argmax ties go to the lowest node
        order = np.argsort(g.heads[cands], kind="stable")
        cands = [cands[k] for k in order]
        logfit = logfit[order]
        if self.rng.random() <= p.q0:
            return cands[int(np.argmax(logfit))]
        if np.all(np.isneginf(logfit)):
            w = np.ones(len(cands))
        else:
            w = np.exp(logfit - logfit.max())
        return cands[_draw(np.cumsum(w), self.rng)]

    def trial(self) -> list[_Agent]:
        g, p = self.g, self.p
        agents = [_Agent(k, g.n) for k in range(g.n)]
        while any(a.active for a in agents):
            moves = {}
            for k, a in enumerate(agents):
                if not a.active:
                    continue
                cands = self._candidates(a)
                if not cands:
                    a.active = False
                    continue
                moves[k] = self._choose(a, cands)
            for k, f in moves.items():
                a = agents[k]
                if a.prev_arc >= 0:
                    s = g.heads[f]
                    nxt = [h for h in g.out_adj[s] if a.J[g.heads[h]]]
                    best = max((self.SQ[f, h] for h in nxt), default=0.0)
                    e = a.prev_arc
                    self.SQ[e, f] = (1 - p.alpha) * self.SQ[e, f] + p.alpha * p.gamma * best
            for k, f in moves.items():
                self._advance(agents[k], f)
        return agents

    def _advance(self, a: _Agent, f: int) -> None:
        g = self.g
        s = int(g.heads[f])
        if s in a.path:
            nodes = a.path[a.path.index(s):]
            arcs = [g.arc_index(nodes[i], nodes[i + 1]) for i in range(len(nodes) - 1)] + [f]
            a.cycles.append(tuple(arcs))
            a.J[nodes] = False
            a.path = []
            a.prev_arc = -1
            free = np.nonzero(a.J)[0]
            if free.size == 0:
                a.active = False
            else:
                a.cur = int(free[int(self.rng.integers(0, free.size))])
                a.path = [a.cur]
        else:
            a.path.append(s)
            a.prev_arc = f
            a.cur = s
            if not self._candidates(a):
                a.active = False

    def reinforce(self, agents: list[_Agent]) -> None:
        scored = []
        for k, a in enumerate(agents):
            if not a.cycles:
                continue
            cost = sum(self.inst.cycle_cost(c) for c in a.cycles)
            size = sum(len(c) for c in a.cycles)
            scored.append((cost / size, k))
        if not scored:
            return
        L_best, k_best = min(scored)
        reward = self.omega / max(L_best, self.p.eps_fit)
        self.SQ[self.succ] *= 1 - self.p.alpha
        for c in agents[k_best].cycles:
            for e, f in zip(c, c[1:] + c[:1]):
                self.SQ[e, f] += self.p.alpha * reward


def sq_learning(inst: QcpInstance, Y_out, params: SqParams | None = None, seed: int = 0,
                pool: CyclePool | None = None) -> UbResult:
    """Agents build node-disjoint cycles guided by learned pair values seeded
    from ``Y_out``; the cheapest exact cover by all cycles ever built is the bound."""
    params = params or SqParams()
    tag = f"sq{params.alpha:g}"
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), sum(map(ord, tag))]))
    learner = _SqLearner(inst, Y_out, params, rng)
    pool = pool if pool is not None else CyclePool(inst)
    full = 0
    for _ in range(params.trials):
        agents = learner.trial()
        for a in agents:
            for c in a.cycles:
                pool.add(c, tag)
            full += not a.J.any()
        learner.reinforce(agents)
    if not len(pool):
        raise EmptyPool("no agent closed a cycle")
    try:
        cover = pool.best_cover()
    except Infeasible as exc:
        raise EmptyPool("pooled cycles admit no exact cover") from exc
    return UbResult("sq", cover, float(cover.cost), [cover], pool,
                    {"cycles": len(pool), "full_agents": full})


def sq_learning_multi(inst: QcpInstance, Y_out, alphas=(0.3, 0.5, 0.7), seed: int = 0, **kw) -> UbResult:
    """Runs for several learning rates sharing one cycle pool."""
    pool = CyclePool(inst)
    for alpha in alphas:
        sq_learning(inst, Y_out, SqParams(alpha=alpha, **kw), seed=seed, pool=pool)
    cover = pool.best_cover()
    return UbResult("sq", cover, float(cover.cost), [cover], pool, {"cycles": len(pool)})


# --- hybrid -----------------------------------------------------------------------


def ub_hybrid(inst: QcpInstance, results: list[UbResult]) -> UbResult:
    """Cheapest exact cover by the cycles of every cover and pool produced."""
    if not results:
        raise EmptyPool("no component bounds to combine")
    pool = CyclePool(inst)
    for res in results:
        for cover in res.covers:
            pool.add_cover(cover, res.method)
        if res.pool is not None:
            pool.merge(res.pool)
    cover = pool.best_cover()
    best_component = min(r.value for r in results)
    if cover.cost > best_component + 1e-9 * max(1.0, abs(best_component)):
        raise AssertionError("recombination is worse than a component bound")
    return UbResult("hybrid", cover, float(cover.cost), [cover], pool,
                    {"cycles": len(pool), "components": {r.method: r.value for r in results}})


def all_upper_bounds(inst: QcpInstance, Y_out, trials: int = 500, sq_trials: int | None = None,
                     seed: int = 0, family: str = "er", alphas=(0.3, 0.5, 0.7)) -> dict[str, UbResult]:
    """Every heuristic plus the hybrid; failed randomized methods are skipped
    and their error recorded under ``"errors"`` in the hybrid's info."""
    x_out = x_out_of(Y_out)
    out: dict[str, UbResult] = {"eb": ub_euclidean(inst, x_out)}
    errors = {}
    sq_kw = SqParams.for_family(family).__dict__.copy()
    sq_kw.pop("alpha")
    if sq_trials is not None:
        sq_kw["trials"] = sq_trials
    runs = {
        "us": lambda: ub_undersample(inst, x_out, trials=trials, seed=seed),
        "os": lambda: ub_oversample(inst, Y_out, x_out, trials=trials, seed=seed),
        "sq": lambda: sq_learning_multi(inst, Y_out, alphas=alphas, seed=seed, **sq_kw),
    }
    for name, run in runs.items():
        try:
            out[name] = run()
        except (NoFeasibleExtension, RoundBudgetExceeded, W0NearZero, EmptyPool) as exc:
            errors[name] = f"{type(exc).__name__}: {exc}"
    out["hybrid"] = ub_hybrid(inst, list(out.values()))
    out["hybrid"].info["errors"] = errors
    return out
