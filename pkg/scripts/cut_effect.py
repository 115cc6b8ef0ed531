"""Bound at level s2 against level s3 (triangle cuts) on generated instances.

Runs are driven to convergence (both residuals below tolerance, no
stagnation stop) so the comparison reflects the relaxations, not early stops.
"""

import argparse

import numpy as np

from qccp.cuts import separate
from qccp.facial import face_basis
from qccp.instances import gen_erdos_renyi, gen_manhattan, gen_reload, preprocess
from qccp.solver import PrsmParams, solve_cpalm


def instances(seeds):
    for s in range(seeds):
        yield f"er15-{s}", gen_erdos_renyi(15, 0.3, seed=s)
        yield f"reload10-{s}", gen_reload(10, 30, seed=s)
        yield f"mh4x5-{s}", preprocess(gen_manhattan([4, 5], seed=s))[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--max-iter", type=int, default=25_000)
    ap.add_argument("--num-cuts", type=int, default=50)
    ap.add_argument("--eps-cuts", type=float, default=1e-6, help="tolerance of the rounds after cuts")
    args = ap.parse_args()

    kw = dict(stop_rule="both", max_stag_iter=10**9, max_iter=args.max_iter, max_iter_cuts=args.max_iter,
              max_total_iter=4 * args.max_iter)
    gains = []
    print("instance,n,m,lb_s2,violated,lb_s3,cuts,gain_pct")
    for name, inst in instances(args.seeds):
        basis = face_basis(inst.graph)
        s2 = solve_cpalm(inst, basis, PrsmParams(level="s2", **kw))
        violated = len(separate(s2.state.Y, args.num_cuts))
        if violated:
            s3 = solve_cpalm(inst, basis, PrsmParams(level="s3", num_cuts=args.num_cuts,
                                                     eps_prsm_cuts=args.eps_cuts, **kw))
            lb3, cuts = s3.lb, s3.report["cuts"]
        else:
            lb3, cuts = s2.lb, 0
        gain = 100 * (lb3 - s2.lb) / abs(s2.lb) if abs(s2.lb) >= 1 else float("nan")
        gains.append(gain)
        print(f"{name},{inst.n},{inst.m},{s2.lb:.6f},{violated},{lb3:.6f},{cuts},{gain:.4f}", flush=True)
    g = np.array([x for x in gains if np.isfinite(x)])
    if g.size:
        print(f"# gain %: min {g.min():.4f} median {np.median(g):.4f} max {g.max():.4f} over {g.size} instances")


if __name__ == "__main__":
    main()
