import csv
import io
import re
import subprocess
import sys

import numpy as np
import pytest

from qccp.cli import run
from qccp.instances import read_instance, write_instance

from conftest import random_instance


def call(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def field(text, key):
    return float(re.search(rf"\b{key}=(\S+)", text).group(1))


@pytest.fixture
def toy(tmp_path):
    path = tmp_path / "toy.txt"
    write_instance(random_instance(np.random.default_rng(7), 6, 0.4), path)
    return path


def test_gen_manhattan_and_check(capsys, tmp_path):
    path = tmp_path / "mh.txt"
    assert call(capsys, "gen", "--family", "manhattan", "--dims", "5,5", "--seed", 1, "-o", path)[0] == 0
    code, out, _ = call(capsys, "check", path)
    assert code == 0 and "n=25 m=50" in out


@pytest.mark.parametrize("family,extra", [("er", ["--n", 8, "--p", 0.5]), ("er-reload", ["--n", 8]),
                                          ("reload", ["--n", 6, "--D", 20])])
def test_gen_families_are_deterministic(capsys, family, extra):
    code, a, _ = call(capsys, "gen", "--family", family, "--seed", 3, *extra)
    _, b, _ = call(capsys, "gen", "--family", family, "--seed", 3, *extra)
    assert code == 0 and a == b and a


def test_bounds_bracket_the_optimum(capsys, toy, tmp_path):
    _, out, _ = call(capsys, "brute", toy)
    opt = field(out, "opt")
    trace = tmp_path / "trace.csv"
    code, out, _ = call(capsys, "lb", toy, "--num-cuts", 10, "--trace", trace)
    assert code == 0
    lb = field(out, "lb")
    assert lb <= opt
    rows = list(csv.reader(trace.open()))
    assert rows[0] == ["k", "objective", "primal_res", "dual_res", "lb"]
    assert len(rows) - 1 == int(field(out, "iters"))
    for method in ("eb", "us", "os", "sq", "hybrid"):
        code, out, _ = call(capsys, "ub", toy, "--method", method, "--trials", 30, "--sq-trials", 30)
        assert code == 0 and field(out, "ub") >= opt


def test_ub_from_checkpoint(capsys, toy, tmp_path):
    ck = tmp_path / "state.npz"
    assert call(capsys, "lb", toy, "--level", "s2", "--checkpoint-out", ck)[0] == 0
    code, out, _ = call(capsys, "ub", toy, "--method", "eb", "--from", ck)
    assert code == 0 and "method=eb" in out
    code, out, _ = call(capsys, "lb", toy, "--level", "s3", "--checkpoint-in", ck, "--num-cuts", 5)
    assert code == 0


def test_reduce_and_basis(capsys, toy, tmp_path):
    out_path = tmp_path / "reduced.txt"
    code, _, err = call(capsys, "reduce", toy, "-o", out_path)
    assert code == 0 and "removed" in err
    assert read_instance(out_path).n == 6
    code, out, _ = call(capsys, "basis", toy)
    assert code == 0 and out


def test_bench_is_byte_stable_without_timing(capsys, toy):
    args = ["bench", toy, "--no-timing", "--num-cuts", 5, "--trials", 10, "--sq-trials", 10]
    code, a, _ = call(capsys, *args)
    _, b, _ = call(capsys, *args)
    assert code == 0 and a == b
    rows = list(csv.DictReader(io.StringIO(a)))
    assert [r["method"] for r in rows] == ["lb_s3", "ub_eb", "ub_us", "ub_os", "ub_sq", "ub_hybrid"]
    assert all(r["time_s"] == "" for r in rows)


def test_exit_codes(capsys, tmp_path):
    assert call(capsys, "lb")[0] == 1
    assert call(capsys, "check", tmp_path / "missing.txt")[0] == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("3 2\n1 2\n")
    code, _, err = call(capsys, "check", bad)
    assert code == 1 and err
    code, _, err = call(capsys, "gen", "--family", "er", "--n", 5, "--p", 0.05, "--seed", 1)
    assert code == 2 and "infeasible" in err
    assert call(capsys, "gen", "--family", "er", "--n", 5, "--p", 0.0)[0] == 1
    big = tmp_path / "big.txt"
    write_instance(random_instance(np.random.default_rng(0), 12, 0.2), big)
    assert call(capsys, "brute", big)[0] == 1


def test_console_entry_point(toy):
    proc = subprocess.run([sys.executable, "-c", "from qccp.cli import main; main()", "check", str(toy)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("n=6")
