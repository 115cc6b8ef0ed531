"""Compiled inner loop for the triangle-cut passes of cyclic Dykstra.

The arithmetic mirrors ``projections._plan_step`` operation for operation so
both routes agree bitwise.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def cut_passes(Xf, R, gather, scatter, rows, K):
    """``K`` passes over all cuts in order; each cut updates its five entries
    and mirrors, and its 5-entry normal ``R[rows[t]]``."""
    sixth = 1.0 / 6.0
    for _ in range(K):
        for t in range(gather.shape[0]):
            r = rows[t]
            l0 = Xf[gather[t, 0]] + R[r, 0]
            l1 = Xf[gather[t, 1]] + R[r, 1]
            l2 = Xf[gather[t, 2]] + R[r, 2]
            l3 = Xf[gather[t, 3]] + R[r, 3]
            l4 = Xf[gather[t, 4]] + R[r, 4]
            pi1 = (l0 + 2.0 * l1) / 3.0
            lam = (l3 + l4 - l2 - pi1) * (12.0 / 11.0)
            if not lam > 0.0:
                lam = 0.0
            n0 = l0 + lam * sixth
            n0 += pi1 - l0
            n2 = l2 + lam * 0.25
            n3 = l3 + lam * -0.25
            n4 = l4 + lam * -0.25
            R[r, 0] = l0 - n0
            R[r, 1] = l1 - n0
            R[r, 2] = l2 - n2
            R[r, 3] = l3 - n3
            R[r, 4] = l4 - n4
            Xf[scatter[t, 0]] = n0
            Xf[scatter[t, 1]] = n0
            Xf[scatter[t, 2]] = n0
            Xf[scatter[t, 3]] = n2
            Xf[scatter[t, 4]] = n2
            Xf[scatter[t, 5]] = n3
            Xf[scatter[t, 6]] = n3
            Xf[scatter[t, 7]] = n4
            Xf[scatter[t, 8]] = n4


@njit(cache=True)
def tabu_search(colors, nbr_ptr, nbr_idx, k, noise, pick, max_iter):
    """Tabu search for a proper ``k``-coloring, in place on ``colors``.

    ``noise[it]`` is the random part of the tenure and ``pick[it]`` two
    uniforms for the random move taken when every move is tabu. Returns
    whether a proper coloring was reached.
    """
    n = colors.shape[0]
    gamma = np.zeros((n, k), dtype=np.int64)
    for v in range(n):
        for j in range(nbr_ptr[v], nbr_ptr[v + 1]):
            gamma[v, colors[nbr_idx[j]]] += 1
    tabu = np.zeros((n, k), dtype=np.int64)
    conflicts = 0
    for v in range(n):
        conflicts += gamma[v, colors[v]]
    conflicts //= 2
    best = conflicts
    conf = np.empty(n, dtype=np.int64)
    for it in range(max_iter):
        if conflicts == 0:
            return True
        nconf = 0
        for v in range(n):
            if gamma[v, colors[v]] > 0:
                conf[nconf] = v
                nconf += 1
        bv = -1
        bc = -1
        bd = 0
        for i in range(nconf):
            v = conf[i]
            own = gamma[v, colors[v]]
            for c in range(k):
                if c == colors[v]:
                    continue
                d = gamma[v, c] - own
                if tabu[v, c] > it and not conflicts + d < best:
                    continue
                if bv < 0 or d < bd:
                    bv, bc, bd = v, c, d
        if bv < 0:
            bv = conf[min(int(pick[it, 0] * nconf), nconf - 1)]
            bc = min(int(pick[it, 1] * (k - 1)), k - 2)
            if bc >= colors[bv]:
                bc += 1
            bd = gamma[bv, bc] - gamma[bv, colors[bv]]
        old = colors[bv]
        conflicts += bd
        colors[bv] = bc
        for j in range(nbr_ptr[bv], nbr_ptr[bv + 1]):
            u = nbr_idx[j]
            gamma[u, old] -= 1
            gamma[u, bc] += 1
        tabu[bv, old] = it + int(0.6 * nconf) + noise[it]
        if conflicts < best:
            best = conflicts
    return conflicts == 0

