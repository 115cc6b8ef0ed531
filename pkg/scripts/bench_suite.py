"""Generate a seeded instance suite and run the bench command over it."""

import argparse
from pathlib import Path

from qccp.cli import run
from qccp.instances import gen_erdos_renyi, gen_manhattan, gen_reload, preprocess, write_instance


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="suite")
    ap.add_argument("--seeds", type=int, default=2)
    ap.add_argument("--no-timing", action="store_true")
    ap.add_argument("--trials", type=int, default=500)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for s in range(args.seeds):
        for name, inst in ((f"er20-{s}", gen_erdos_renyi(20, 0.25, seed=s)),
                           (f"er-reload12-{s}", gen_erdos_renyi(12, 0.6, "reload20colors1to100", seed=s)),
                           (f"reload10-{s}", gen_reload(10, 30, seed=s)),
                           (f"mh5x5-{s}", preprocess(gen_manhattan([5, 5], seed=s))[0])):
            path = out / f"{name}.txt"
            write_instance(inst, path)
            files.append(str(path))
    argv = ["bench", *files, "--trials", str(args.trials), "-o", str(out / "bench.csv")]
    if args.no_timing:
        argv.append("--no-timing")
    code = run(argv)
    print((out / "bench.csv").read_text(), end="")
    raise SystemExit(code)


if __name__ == "__main__":
    main()
