"""Linear and integer subproblems: arc transport over the 2-factor polytope,
the lower-bound LP over the polyhedral set, and exact set partitioning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from .errors import Infeasible, NoConvergence
from .graph import DiGraph

# --- transport ------------------------------------------------------------------


@dataclass(frozen=True)
class TransportProblem:
    """``max/min c^T z`` s.t. ``U_{N+} z = 1``, ``V_{N-} z = 1``, ``0 <= z <= 1``,
    with ``z_e = 0`` forced on arcs outside ``allowed``."""

    graph: DiGraph
    c: np.ndarray
    n_plus: frozenset
    n_minus: frozenset
    allowed: np.ndarray | None = None
    sense: str = "max"

    @classmethod
    def full(cls, g: DiGraph, c, allowed=None, sense="max") -> TransportProblem:
        nodes = frozenset(range(g.n))
        return cls(g, np.asarray(c, dtype=float), nodes, nodes, allowed, sense)


def solve_transport(tp: TransportProblem) -> tuple[np.ndarray, float] | None:
    """Optimal 0/1 solution, or ``None`` when the constraints cannot be met.

    The problem is reduced to a square assignment: rows are the constrained
    tails plus one slack row per constrained head, columns the constrained
    heads plus one slack column per constrained tail. A tail matched to its own
    slack column takes its best arc into an unconstrained head (and vice versa);
    slack-to-slack pairs cost nothing. Arcs between two unconstrained nodes are
    set independently by the sign of their coefficient.
    """
    g = tp.graph
    sign = 1.0 if tp.sense == "max" else -1.0
    c = sign * np.asarray(tp.c, dtype=float)
    allowed = np.ones(g.m, dtype=bool) if tp.allowed is None else np.asarray(tp.allowed, dtype=bool)
    rows = sorted(tp.n_plus)
    cols = sorted(tp.n_minus)
    row_of = {i: k for k, i in enumerate(rows)}
    col_of = {j: k for k, j in enumerate(cols)}
    p, q = len(rows), len(cols)
    size = p + q
    z = np.zeros(g.m)
    # best arc per constrained tail into a free head, per constrained head from a free tail
    best_out = {i: -1 for i in rows}
    best_in = {j: -1 for j in cols}
    W = np.full((size, size), -np.inf)
    arc_at = {}
    for a, (t, h) in enumerate(g.arcs):
        if not allowed[a]:
            continue
        tin, hin = t in row_of, h in col_of
        if tin and hin:
            r, s = row_of[t], col_of[h]
            if c[a] > W[r, s]:
                W[r, s] = c[a]
                arc_at[(r, s)] = a
        elif tin:
            b = best_out[t]
            if b < 0 or c[a] > c[b]:
                best_out[t] = a
        elif hin:
            b = best_in[h]
            if b < 0 or c[a] > c[b]:
                best_in[h] = a
        elif c[a] > 0:
            z[a] = 1.0
    for i, a in best_out.items():
        if a >= 0:
            W[row_of[i], q + row_of[i]] = c[a]
    for j, a in best_in.items():
        if a >= 0:
            W[p + col_of[j], col_of[j]] = c[a]
    W[p:, q:] = 0.0
    if size:
        cost = np.where(np.isfinite(W), -W, np.inf)
        try:
            ri, ci = linear_sum_assignment(cost)
        except ValueError:
            return None
        if not np.all(np.isfinite(W[ri, ci])):
            return None
        for r, s in zip(ri, ci):
            if r < p and s < q:
                z[arc_at[(r, s)]] = 1.0
            elif r < p and s == q + r:
                z[best_out[rows[r]]] = 1.0
            elif r >= p and s < q and r - p == s:
                z[best_in[cols[s]]] = 1.0
    U, V = g.incidence()
    if rows and not np.all((U[rows] @ z) == 1):
        raise AssertionError("transport solution violates an out-degree row")
    if cols and not np.all((V[cols] @ z) == 1):
        raise AssertionError("transport solution violates an in-degree row")
    if np.any(z[~allowed]):
        raise AssertionError("transport solution uses a masked arc")
    return z, float(tp.c @ z)


# --- lower-bound LP --------------------------------------------------------------------


def solve_lb_lp(C: np.ndarray, cuts, zero_mask: np.ndarray, n: int) -> float:
    """``min <C, Y>`` over the polyhedral set with triangle cuts.

    Variables are the arrow ``y`` (with ``sum y = n``, ``0 <= y <= 1``) and the
    off-diagonal entries ``X_ef`` (``e < f``, in ``[0, 1]``, zero on the
    pattern). Entries not touched by a cut are set by the sign of their
    coefficient; the rest goes to an LP solver.
    """
    C = np.asarray(C, dtype=float)
    m = C.shape[0] - 1
    cy = np.diag(C)[1:] + C[0, 1:] + C[1:, 0]
    Coff = C[1:, 1:] + C[1:, 1:].T
    free = np.triu(~zero_mask[1:, 1:], k=1)
    value = float(C[0, 0])
    cuts = list(cuts)
    if not cuts:
        order = np.argsort(cy, kind="stable")
        value += float(cy[order[:n]].sum())
        value += float(np.minimum(Coff[free], 0.0).sum())
        return value
    # variables: y_0..y_{m-1}, then coupled off-diagonal entries
    coupled: dict[tuple[int, int], int] = {}

    def var(e, f):
        e, f = min(e, f), max(e, f)
        if not free[e, f]:
            return None
        if (e, f) not in coupled:
            coupled[(e, f)] = m + len(coupled)
        return coupled[(e, f)]

    rows = []
    for cut in cuts:
        e, f, g = cut.e, cut.f, cut.g
        row = {e: -1.0}
        for (s, t), sgn in (((e, f), 1.0), ((e, g), 1.0), ((f, g), -1.0)):
            k = var(s, t)
            if k is not None:
                row[k] = row.get(k, 0.0) + sgn
        rows.append(row)
    nvar = m + len(coupled)
    cost = np.zeros(nvar)
    cost[:m] = cy
    for (e, f), k in coupled.items():
        cost[k] = Coff[e, f]
    A_ub = np.zeros((len(rows), nvar))
    for r, row in enumerate(rows):
        for k, v in row.items():
            A_ub[r, k] = v
    A_eq = np.zeros((1, nvar))
    A_eq[0, :m] = 1.0
    res = linprog(cost, A_ub=A_ub, b_ub=np.zeros(len(rows)), A_eq=A_eq, b_eq=[float(n)],
                  bounds=[(0.0, 1.0)] * nvar, method="highs")
    if res.status != 0:
        raise NoConvergence(f"lower-bound LP failed: {res.message}")
    value += float(res.fun)
    # uncoupled off-diagonal entries
    mask = free.copy()
    for (e, f) in coupled:
        mask[e, f] = False
    value += float(np.minimum(Coff[mask], 0.0).sum())
    return value


# --- set partitioning ----------------------------------------------------------------


@dataclass
class SppResult:
    columns: list[int]
    value: float
    optimal: bool
    nodes: int


def solve_spp(columns, costs, n: int, node_limit: int = 5_000_000) -> SppResult:
    """Exact cover of ``0..n-1`` by columns (node sets) at minimum cost.

    Depth-first branch and bound on the lowest uncovered node, bounded below
    by each uncovered node's cheapest cost share ``cost / |column|``.
    Raises :class:`Infeasible` when no exact cover exists.
    """
    costs = [float(c) for c in costs]
    # keep the cheapest column per node set
    by_set: dict[frozenset, int] = {}
    for k, col in enumerate(columns):
        s = frozenset(col)
        if len(s) == 0 or max(s) >= n or min(s) < 0:
            raise ValueError(f"column {k} has nodes outside 0..{n - 1}")
        if s not in by_set or costs[k] < costs[by_set[s]]:
            by_set[s] = k
    cols = sorted(by_set.values())
    masks = {k: sum(1 << i for i in columns[k]) for k in cols}
    share = np.full(n, np.inf)
    for k in cols:
        for i in columns[k]:
            share[i] = min(share[i], costs[k] / len(columns[k]))
    if not np.all(np.isfinite(share)):
        raise Infeasible("some node is on no column")
    by_node: list[list[int]] = [[] for _ in range(n)]
    for k in cols:
        by_node[min(columns[k])].append(k)
    for lst in by_node:
        lst.sort(key=lambda k: (costs[k] / len(columns[k]), k))
    full = (1 << n) - 1
    best_val = np.inf
    best_sel: list[int] | None = None
    seen: dict[int, float] = {}
    nodes = 0
    complete = True
    shares = share.tolist()

    def bound(covered):
        return sum(shares[i] for i in range(n) if not covered >> i & 1)

    stack = [(0, 0.0, [])]
    while stack:
        covered, cost, sel = stack.pop()
        nodes += 1
        if nodes > node_limit:
            complete = False
            break
        if covered == full:
            if cost < best_val:
                best_val, best_sel = cost, sel
            continue
        if cost + bound(covered) >= best_val - 1e-12:
            continue
        if seen.get(covered, np.inf) <= cost:
            continue
        seen[covered] = cost
        i = 0
        while covered >> i & 1:
            i += 1
        # columns are indexed by their lowest node, so the branching node must be it
        children = [k for k in by_node[i] if not masks[k] & covered]
        for k in reversed(children):
            stack.append((covered | masks[k], cost + costs[k], sel + [k]))
    if best_sel is None:
        if not complete:
            raise NoConvergence("set partitioning hit its node limit without a solution")
        raise Infeasible("no exact cover exists")
    return SppResult(sorted(best_sel), float(sum(costs[k] for k in best_sel)), complete, nodes)
