"""Command-line driver: instance generation, bounds, and benchmark tables.

Exit codes: 0 success, 1 usage or input error, 2 infeasible instance,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import errors
from .facial import dumps_basis, face_basis
from .graph import find_cycle_cover
from .heuristics import (SqParams, all_upper_bounds, sq_learning_multi, ub_euclidean, ub_hybrid, ub_oversample,
                         ub_undersample, x_out_of)
from .instances import (dumps_instance, gen_erdos_renyi, gen_manhattan, gen_reload, preprocess, read_instance,
                        write_instance)
from .oracle import brute_opt
from .solver import PrsmParams, SolverState, solve_cpalm

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 1, 2, 3
BENCH_COLUMNS = ["instance", "n", "m", "method", "bound", "time_s", "iters", "primal_res", "dual_res", "cuts",
                 "gap_pct"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _family(inst) -> str:
    fam = inst.meta.get("family", "er")
    return {"er-reload": "reload"}.get(fam, fam)


def _solver_params(args, inst) -> PrsmParams:
    kw = dict(mode=args.method, level=args.level, num_cuts=args.num_cuts, eps_prsm=args.eps_prsm,
              seed=args.seed, family="manhattan" if _family(inst) == "manhattan" else "er",
              dykstra=args.dykstra, stop_rule=args.stop_rule)
    for name in ("max_iter", "max_total_iter", "beta", "max_stag_iter"):
        value = getattr(args, name)
        if value is not None:
            kw[name] = value
    return PrsmParams(**kw)


def _surface(report, out=sys.stderr) -> None:
    if report["dykstra_capped"]:
        print(f"warning: {report['dykstra_capped']} projections stopped at the sweep cap", file=out)
    if "iter_cap" in report["stops"]:
        print("warning: an inner loop stopped at its iteration cap", file=out)


def _write_trace(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "objective", "primal_res", "dual_res", "lb"])
        for k, obj, p, d, lb in trace:
            w.writerow([k, repr(obj), repr(p), repr(d), "" if math.isnan(lb) else repr(lb)])


# --- subcommands --------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.family in ("er", "er-reload"):
        model = "reload20colors1to100" if args.family == "er-reload" else args.cost_model
        inst = gen_erdos_renyi(args.n, args.p, model, seed=args.seed)
    elif args.family == "reload":
        inst = gen_reload(args.n, args.D, seed=args.seed)
    else:
        if not args.dims:
            raise UsageError("--dims is required for the manhattan family")
        inst, _ = preprocess(gen_manhattan([int(d) for d in args.dims.split(",")], seed=args.seed))
    if args.output:
        write_instance(inst, args.output)
    else:
        sys.stdout.write(dumps_instance(inst))
    return EXIT_OK


def cmd_check(args) -> int:
    inst = read_instance(args.file)
    find_cycle_cover(inst.graph)
    print(f"n={inst.n} m={inst.m} cost_entries={len(inst.q)} family={inst.meta.get('family', 'unknown')}")
    return EXIT_OK


def cmd_reduce(args) -> int:
    inst = read_instance(args.file)
    reduced, remap = preprocess(inst)
    removed = [a + 1 for a, r in enumerate(remap) if r is None]
    print(f"removed {len(removed)} arcs" + (f": {' '.join(map(str, removed))}" if removed else ""),
          file=sys.stderr)
    if args.output:
        write_instance(reduced, args.output)
    else:
        sys.stdout.write(dumps_instance(reduced))
    return EXIT_OK


def cmd_basis(args) -> int:
    inst = read_instance(args.file)
    b = face_basis(inst.graph)
    text = dumps_basis(b)
    if args.output:
        Path(args.output).write_text(text)
        print(f"alpha={b.alpha} dim={b.dim}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_lb(args) -> int:
    inst = read_instance(args.file)
    params = _solver_params(args, inst)
    state = SolverState.load(args.checkpoint_in) if args.checkpoint_in else None
    log = (lambda s: print(s, file=sys.stderr)) if args.verbose else None
    res = solve_cpalm(inst, params=params, state=state, log=log)
    _surface(res.report)
    if args.trace:
        _write_trace(args.trace, res.trace)
    if args.checkpoint_out:
        res.state.save(args.checkpoint_out)
    r = res.report
    print(f"lb={res.lb_ceil} lb_raw={res.lb:.9f} iters={r['iterations']} cuts={r['cuts']} "
          f"primal_res={r['primal_res']:.3e} dual_res={r['dual_res']:.3e} stops={','.join(r['stops'])}")
    return EXIT_OK


def _y_out(args, inst) -> np.ndarray:
    if args.from_state:
        Y = SolverState.load(args.from_state).Y
        if Y.shape != (inst.m + 1, inst.m + 1):
            raise errors.ValidationError("state does not match the instance size")
        return Y
    res = solve_cpalm(inst, params=PrsmParams(level="s2", seed=args.seed,
                                              family="manhattan" if _family(inst) == "manhattan" else "er"))
    _surface(res.report)
    return res.state.Y


def cmd_ub(args) -> int:
    inst = read_instance(args.file)
    Y = _y_out(args, inst)
    x_out = x_out_of(Y)
    fam = _family(inst)
    sq_kw = {} if args.sq_trials is None else {"trials": args.sq_trials}
    sq_base = SqParams.for_family(fam, **sq_kw).__dict__.copy()
    sq_base.pop("alpha")
    if args.method == "eb":
        res = ub_euclidean(inst, x_out)
    elif args.method == "us":
        res = ub_undersample(inst, x_out, trials=args.trials, seed=args.seed)
    elif args.method == "os":
        res = ub_oversample(inst, Y, x_out, trials=args.trials, seed=args.seed)
    elif args.method == "sq":
        res = sq_learning_multi(inst, Y, alphas=args.sq_alpha, seed=args.seed, **sq_base)
    else:
        res = all_upper_bounds(inst, Y, trials=args.trials, sq_trials=sq_base["trials"], seed=args.seed,
                               family=fam, alphas=args.sq_alpha)["hybrid"]
        for name, msg in res.info.get("errors", {}).items():
            print(f"warning: {name} skipped: {msg}", file=sys.stderr)
    cover = " ".join(str(a + 1) for a in res.cover.arcs)
    print(f"ub={res.value:g} method={res.method} arcs={cover}")
    return EXIT_OK


def cmd_brute(args) -> int:
    inst = read_instance(args.file)
    opt, cover = brute_opt(inst, max_n=args.max_n)
    print(f"opt={opt:g} arcs={' '.join(str(a + 1) for a in cover.arcs)}")
    return EXIT_OK


def _fmt(x, digits=6) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{x:.{digits}g}"


def bench_rows(path, args) -> list[list[str]]:
    inst = read_instance(path)
    name = Path(path).stem
    rows = []
    t0 = time.perf_counter()
    res = solve_cpalm(inst, params=_solver_params(args, inst))
    _surface(res.report)
    r = res.report
    lb = res.lb_ceil
    timing = (lambda t: "") if args.no_timing else (lambda t: f"{t:.3f}")
    rows.append([name, inst.n, inst.m, f"lb_{args.level}", lb, timing(time.perf_counter() - t0), r["iterations"],
                 _fmt(r["primal_res"]), _fmt(r["dual_res"]), r["cuts"], ""])
    t1 = time.perf_counter()
    ubs = all_upper_bounds(inst, res.state.Y, trials=args.trials, sq_trials=args.sq_trials, seed=args.seed,
                           family=_family(inst), alphas=args.sq_alpha)
    elapsed = timing(time.perf_counter() - t1)
    for method, ub in ubs.items():
        gap = 100.0 * (ub.value - lb) / lb if lb > 0 else float("nan")
        rows.append([name, inst.n, inst.m, f"ub_{method}", _fmt(ub.value), elapsed, "", "", "", "", _fmt(gap, 4)])
    for method, msg in ubs["hybrid"].info.get("errors", {}).items():
        print(f"warning: {name}: {method} skipped: {msg}", file=sys.stderr)
    return [[str(c) for c in row] for row in rows]


def cmd_bench(args) -> int:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_COLUMNS)
    for path in args.files:
        for row in bench_rows(path, args):
            w.writerow(row)
    if args.output:
        Path(args.output).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def _add_solver_flags(p) -> None:
    g = p.add_argument_group("solver", "defaults: beta = ceil(m/n), gamma1 = 0.9, gamma2 = 1.09, K = 5, "
                                       "eps_stag = 1e-5, eps_proj = 1e-8, eps_prsm 1e-6 then 1e-4 after cuts")
    g.add_argument("--method", choices=["prsm", "admm"], default="prsm")
    g.add_argument("--level", choices=["s1", "s2", "s3"], default="s3")
    g.add_argument("--num-cuts", type=int, default=50)
    g.add_argument("--max-iter", type=int, default=None, help="inner iteration cap before cuts "
                   "(default 1000, 1500 for manhattan)")
    g.add_argument("--max-total-iter", type=int, default=None, help="default 2500/3000/3500 by m, "
                   "500 more for manhattan")
    g.add_argument("--max-stag-iter", type=int, default=None)
    g.add_argument("--eps-prsm", type=float, default=1e-6)
    g.add_argument("--stop-rule", choices=["min", "both"], default="min",
                   help="stop when either residual is below eps, or only when both are")
    g.add_argument("--beta", type=float, default=None)
    g.add_argument("--dykstra", choices=["cyclic", "parallel"], default="cyclic")
    g.add_argument("--seed", type=int, default=0)


def _add_ub_flags(p) -> None:
    p.add_argument("--trials", type=int, default=500, help="undersampling and oversampling trials")
    p.add_argument("--sq-trials", type=int, default=None, help="Q-learning trials (500, or 100 for manhattan)")
    p.add_argument("--sq-alpha", type=float, nargs="+", default=[0.3, 0.5, 0.7], help="learning rates; "
                   "one run per value, cycles pooled")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qccp", description="Lower and upper bounds for the quadratic cycle cover problem.")
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("gen", help="generate an instance")
    g.add_argument("--family", choices=["er", "er-reload", "reload", "manhattan"], required=True)
    g.add_argument("--n", type=int, default=10)
    g.add_argument("--p", type=float, default=0.5)
    g.add_argument("--D", type=int, default=100)
    g.add_argument("--dims", default=None, help="comma-separated grid sizes, e.g. 5,5")
    g.add_argument("--cost-model", choices=["uniform0to100", "reload20colors1to100"], default="uniform0to100")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("check", help="validate an instance and report its size")
    c.add_argument("file")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("reduce", help="remove arcs used by no cycle cover")
    r.add_argument("file")
    r.add_argument("-o", "--output")
    r.set_defaults(func=cmd_reduce)

    b = sub.add_parser("basis", help="face basis of the relaxation")
    b.add_argument("file")
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_basis)

    lb = sub.add_parser("lb", help="SDP lower bound")
    lb.add_argument("file")
    _add_solver_flags(lb)
    lb.add_argument("--checkpoint-out")
    lb.add_argument("--checkpoint-in")
    lb.add_argument("--trace", help="per-iteration CSV (k, objective, primal_res, dual_res, lb)")
    lb.add_argument("-v", "--verbose", action="store_true")
    lb.set_defaults(func=cmd_lb)

    ub = sub.add_parser("ub", help="upper bound by rounding")
    ub.add_argument("file")
    ub.add_argument("--method", choices=["eb", "us", "os", "sq", "hybrid"], default="hybrid")
    ub.add_argument("--from", dest="from_state", help="solver checkpoint to round (default: solve at level s2)")
    ub.add_argument("--seed", type=int, default=0)
    _add_ub_flags(ub)
    ub.set_defaults(func=cmd_ub)

    br = sub.add_parser("brute", help="exact optimum by enumeration (small n)")
    br.add_argument("file")
    br.add_argument("--max-n", type=int, default=10)
    br.set_defaults(func=cmd_brute)

    be = sub.add_parser("bench", help="lower and upper bounds for several instances as CSV")
    be.add_argument("files", nargs="+")
    _add_solver_flags(be)
    _add_ub_flags(be)
    be.add_argument("--no-timing", action="store_true", help="leave time_s empty for byte-stable output")
    be.add_argument("-o", "--output")
    be.set_defaults(func=cmd_bench)
    return p


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (errors.InstanceInfeasible, errors.GenerationFailed, errors.Infeasible) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (errors.ParseError, errors.ValidationError, errors.TooLarge, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (errors.QccpError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())
