"""Residual and bound traces of PRSM and ADMM on one generated instance.

Writes one CSV per method with columns k, objective, primal_res, dual_res, lb.
"""

import argparse
import csv
from pathlib import Path

from qccp.facial import face_basis
from qccp.instances import gen_erdos_renyi, gen_manhattan, gen_reload, preprocess
from qccp.solver import PrsmParams, solve_cpalm


def make_instance(args):
    if args.family == "er":
        return gen_erdos_renyi(args.n, args.p, seed=args.seed), "er"
    if args.family == "reload":
        return gen_reload(args.n, args.D, seed=args.seed), "reload"
    return preprocess(gen_manhattan([int(d) for d in args.dims.split(",")], seed=args.seed))[0], "manhattan"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", choices=["er", "reload", "manhattan"], default="er")
    ap.add_argument("--n", type=int, default=15)
    ap.add_argument("--p", type=float, default=0.3)
    ap.add_argument("--D", type=int, default=30)
    ap.add_argument("--dims", default="5,5")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--level", choices=["s1", "s2", "s3"], default="s2")
    ap.add_argument("--max-iter", type=int, default=2500)
    ap.add_argument("--stop-rule", choices=["min", "both"], default="min")
    ap.add_argument("--out", default="traces")
    args = ap.parse_args()

    inst, family = make_instance(args)
    basis = face_basis(inst.graph)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for mode in ("prsm", "admm"):
        params = PrsmParams(mode=mode, level=args.level, family=family, stop_rule=args.stop_rule,
                            max_stag_iter=10**9, max_iter=args.max_iter, max_total_iter=args.max_iter)
        res = solve_cpalm(inst, basis, params)
        path = out / f"{family}_n{inst.n}_m{inst.m}_{mode}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "objective", "primal_res", "dual_res", "lb"])
            w.writerows(res.trace)
        r = res.report
        print(f"{mode}: iterations={r['iterations']} stop={r['stops'][-1]} objective={r['objective']:.6f} "
              f"primal={r['primal_res']:.2e} dual={r['dual_res']:.2e} lb={res.lb:.6f} -> {path}")


if __name__ == "__main__":
    main()
