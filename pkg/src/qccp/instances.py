"""QCCP instances: generators, preprocessing and the text file format.

File format (UTF-8, LF line endings, 1-based node and arc numbers)::

    QCCP 1
    n m
    tail head        # m lines
    k
    e f cost         # k lines, arc f must leave the head of arc e
    # meta {...}     # optional trailing comment with generator metadata

Lines starting with ``#`` are ignored except ``# meta`` which carries a JSON
object.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GenerationFailed, InstanceInfeasible, ParseError, ValidationError
from .graph import DiGraph, find_cycle_cover, never_used_arcs

MAGIC = "QCCP"
VERSION = 1

# Version tag of the sampling streams; bump when generator draws change.
STREAM_VERSION = 1


@dataclass
class QcpInstance:
    graph: DiGraph
    q: dict[tuple[int, int], float]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        g = self.graph
        for (e, f), c in self.q.items():
            if not (0 <= e < g.m and 0 <= f < g.m):
                raise ValidationError(f"cost entry ({e}, {f}) refers to a missing arc")
            if g.arcs[e][1] != g.arcs[f][0]:
                raise ValidationError(f"arc {f} is not a successor of arc {e}")
            if not math.isfinite(c):
                raise ValidationError(f"cost of ({e}, {f}) is not finite")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def m(self) -> int:
        return self.graph.m

    def cost_matrix(self) -> np.ndarray:
        """Dense ``Q`` (m x m), not symmetrized."""
        Q = np.zeros((self.m, self.m))
        for (e, f), c in self.q.items():
            Q[e, f] = c
        return Q

    def q_hat(self) -> np.ndarray:
        """Extended symmetric cost matrix of order m+1 with a zero border."""
        Q = self.cost_matrix()
        Qh = np.zeros((self.m + 1, self.m + 1))
        Qh[1:, 1:] = 0.5 * (Q + Q.T)
        return Qh

    def cover_cost(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(sum(c * x[e] * x[f] for (e, f), c in self.q.items()))

    def cycle_cost(self, cycle_arcs) -> float:
        """Cost of one directed cycle given as arcs in traversal order."""
        k = len(cycle_arcs)
        return float(sum(self.q.get((cycle_arcs[i], cycle_arcs[(i + 1) % k]), 0.0) for i in range(k)))


def _rng(seed, tag: str) -> np.random.Generator:
    # PCG64 stream keyed by (stream version, family tag, seed)
    key = [STREAM_VERSION, sum(ord(c) << (8 * i) for i, c in enumerate(tag[:8])), int(seed)]
    return np.random.default_rng(np.random.SeedSequence(key))


def _successor_pairs(g: DiGraph):
    for e in range(g.m):
        for f in g.successors(e):
            yield e, f


def _reload_costs(g: DiGraph, rng, num_colors: int, low: int, high: int) -> dict:
    colors = rng.integers(0, num_colors, size=g.m)
    r = rng.integers(low, high + 1, size=(num_colors, num_colors))
    return {
        (e, f): (0.0 if colors[e] == colors[f] else float(r[colors[e], colors[f]]))
        for e, f in _successor_pairs(g)
    }


def gen_erdos_renyi(n: int, p: float, cost_model: str = "uniform0to100", seed: int = 0,
                    max_retries: int = 100) -> QcpInstance:
    """G(n, p) digraph with uniform {0..100} or 20-color reload {1..100} costs.

    The instance is preprocessed; graphs without a cycle cover are redrawn.
    """
    if n < 2 or not (0 < p <= 1):
        raise ValueError("need n >= 2 and 0 < p <= 1")
    if cost_model not in ("uniform0to100", "reload20colors1to100"):
        raise ValueError(f"unknown cost model {cost_model!r}")
    rng = _rng(seed, "er" if cost_model == "uniform0to100" else "er-rel")
    for _ in range(max_retries):
        mask = rng.random((n, n)) < p
        arcs = [(i, j) for i in range(n) for j in range(n) if i != j and mask[i, j]]
        g = DiGraph(n, arcs)
        if cost_model == "uniform0to100":
            q = {(e, f): float(rng.integers(0, 101)) for e, f in _successor_pairs(g)}
        else:
            q = _reload_costs(g, rng, 20, 1, 100)
        meta = {"family": "er" if cost_model == "uniform0to100" else "er-reload",
                "n": n, "p": p, "seed": seed, "stream": STREAM_VERSION}
        try:
            inst, _ = preprocess(QcpInstance(g, q, meta))
        except InstanceInfeasible:
            continue
        return inst
    raise GenerationFailed(f"no feasible G({n}, {p}) instance after {max_retries} draws")


def gen_reload(n: int, D: int, num_colors: int = 20, seed: int = 0) -> QcpInstance:
    """Complete digraph with reload costs r(s, t) drawn from {1..D}."""
    if D < 1 or n < 2:
        raise ValueError("need n >= 2 and D >= 1")
    rng = _rng(seed, "reload")
    g = DiGraph.complete(n)
    q = _reload_costs(g, rng, num_colors, 1, D)
    meta = {"family": "reload", "n": n, "D": D, "colors": num_colors, "seed": seed,
            "stream": STREAM_VERSION}
    return QcpInstance(g, q, meta)


def manhattan_graph(dims) -> DiGraph:
    """Directed torus grid: one arc per node and dimension.

    Along dimension ``i`` node ``x`` points to ``x + e_i`` when the sum of its
    other coordinates is even and to ``x - e_i`` otherwise (mod ``n_i``).
    """
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 2 for d in dims):
        raise ValueError("all dimensions must be >= 2")
    nodes = list(itertools.product(*(range(d) for d in dims)))
    index = {x: k for k, x in enumerate(nodes)}
    arcs = []
    for x in nodes:
        total = sum(x)
        for i, d in enumerate(dims):
            sign = 1 if (total - x[i]) % 2 == 0 else -1
            y = list(x)
            y[i] = (x[i] + sign) % d
            arcs.append((index[x], index[tuple(y)]))
    return DiGraph(len(nodes), arcs)


def gen_manhattan(dims, max_cost: int = 10, seed: int = 0) -> QcpInstance:
    g = manhattan_graph(dims)
    rng = _rng(seed, "mh")
    q = {(e, f): float(rng.integers(0, max_cost + 1)) for e, f in _successor_pairs(g)}
    meta = {"family": "manhattan", "dims": list(dims), "seed": seed, "stream": STREAM_VERSION}
    return QcpInstance(g, q, meta)


def preprocess(inst: QcpInstance) -> tuple[QcpInstance, list[int | None]]:
    """Drop arcs used by no cycle cover and compact the arc numbering.

    Returns the reduced instance and ``remap[old] -> new`` (``None`` for a
    removed arc).
    """
    g = inst.graph
    find_cycle_cover(g)
    unused = never_used_arcs(g)
    if not unused:
        return inst, list(range(g.m))
    keep = [a for a in range(g.m) if a not in unused]
    remap: list[int | None] = [None] * g.m
    for new, old in enumerate(keep):
        remap[old] = new
    q = {(remap[e], remap[f]): c for (e, f), c in inst.q.items()
         if remap[e] is not None and remap[f] is not None}
    meta = dict(inst.meta)
    meta["removed_arcs"] = sorted(unused)
    return QcpInstance(g.subgraph(keep), q, meta), remap


# --- text format -----------------------------------------------------------


def _fmt_cost(c: float) -> str:
    return str(int(c)) if float(c).is_integer() and abs(c) < 2**53 else repr(float(c))


def dumps_instance(inst: QcpInstance) -> str:
    g = inst.graph
    lines = [f"{MAGIC} {VERSION}", f"{g.n} {g.m}"]
    lines += [f"{t + 1} {h + 1}" for t, h in g.arcs]
    entries = sorted(inst.q.items())
    lines.append(str(len(entries)))
    lines += [f"{e + 1} {f + 1} {_fmt_cost(c)}" for (e, f), c in entries]
    if inst.meta:
        lines.append("# meta " + json.dumps(inst.meta, sort_keys=True))
    return "\n".join(lines) + "\n"


def write_instance(inst: QcpInstance, path) -> None:
    Path(path).write_text(dumps_instance(inst), encoding="utf-8", newline="\n")


def loads_instance(text: str) -> QcpInstance:
    meta = {}
    rows = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.startswith("# meta "):
                try:
                    meta = json.loads(line[len("# meta "):])
                except json.JSONDecodeError as exc:
                    raise ParseError(f"bad metadata: {exc}", lineno) from None
            continue
        rows.append((lineno, line.split()))
    it = iter(rows)

    def take(count, what):
        try:
            lineno, toks = next(it)
        except StopIteration:
            raise ParseError(f"unexpected end of file, expected {what}") from None
        if len(toks) != count:
            raise ParseError(f"expected {count} fields for {what}, got {len(toks)}", lineno)
        return lineno, toks

    def as_int(tok, lineno, lo, hi, what):
        try:
            v = int(tok)
        except ValueError:
            raise ParseError(f"{what} {tok!r} is not an integer", lineno) from None
        if not lo <= v <= hi:
            raise ParseError(f"{what} {v} out of range {lo}..{hi}", lineno)
        return v

    lineno, toks = take(2, "header")
    if toks[0] != MAGIC or toks[1] != str(VERSION):
        raise ParseError(f"expected '{MAGIC} {VERSION}' header", lineno)
    lineno, toks = take(2, "'n m'")
    n = as_int(toks[0], lineno, 1, 10**9, "n")
    m = as_int(toks[1], lineno, 0, 10**9, "m")
    arcs = []
    for _ in range(m):
        lineno, toks = take(2, "arc")
        arcs.append((as_int(toks[0], lineno, 1, n, "tail") - 1, as_int(toks[1], lineno, 1, n, "head") - 1))
    try:
        g = DiGraph(n, arcs)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    lineno, toks = take(1, "cost count")
    k = as_int(toks[0], lineno, 0, 10**12, "cost count")
    q = {}
    for _ in range(k):
        lineno, toks = take(3, "cost entry")
        e = as_int(toks[0], lineno, 1, m, "arc") - 1
        f = as_int(toks[1], lineno, 1, m, "arc") - 1
        try:
            c = float(toks[2])
        except ValueError:
            raise ParseError(f"cost {toks[2]!r} is not a number", lineno) from None
        if g.arcs[e][1] != g.arcs[f][0]:
            raise ValidationError(f"line {lineno}: arc {f + 1} is not a successor of arc {e + 1}")
        if (e, f) in q:
            raise ParseError(f"duplicate cost entry ({e + 1}, {f + 1})", lineno)
        q[(e, f)] = c
    extra = next(it, None)
    if extra is not None:
        raise ParseError("trailing data after cost entries", extra[0])
    return QcpInstance(g, q, meta)


def read_instance(path) -> QcpInstance:
    return loads_instance(Path(path).read_text(encoding="utf-8"))
