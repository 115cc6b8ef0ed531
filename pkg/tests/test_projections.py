import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qccp.cuts import CutPool, TriangleCut, cluster
from qccp.graph import DiGraph
from qccp.oracle import cut_oracle, qp_project_oracle
from qccp.projections import (MaxSweepsReached, PolySetY, cut_multiplier, cut_values, dykstra_cyclic,
                              dykstra_parallel, project_cut, project_Y, project_Y_aff, t_arrow, t_arrow_star)

from cases import oracle_projection, projection_case, random_pool, random_sym

# closed-form coefficients of the violated case, rows (delta, theta, mu, pi) over
# inputs (M_ee, M_0e, M_fg, M_ef, M_eg), all over 11
CLOSED_FORM = np.array([
    [1, 2, 3, 8, -3],
    [1, 2, 3, -3, 8],
    [-1, -2, 8, 3, 3],
    [3, 6, -2, 2, 2],
]) / 11.0

five = st.tuples(*[st.floats(-5, 5, allow_nan=False)] * 5)


def test_arrow_adjoint():
    rng = np.random.default_rng(0)
    M = random_sym(rng, 5)
    x = rng.normal(size=4)
    assert np.sum(t_arrow(M) * x) == pytest.approx(np.sum(M * t_arrow_star(x)))


def test_project_Y_feasible_and_idempotent():
    rng = np.random.default_rng(1)
    g = DiGraph.complete(3)
    for level in ("s1", "s2"):
        ys = PolySetY.from_graph(g, level)
        P = project_Y(random_sym(rng, 7), ys)
        assert ys.violation(P) < 1e-12
        assert np.allclose(project_Y(P, ys), P)


def test_zero_pattern_marks_shared_tails_and_heads():
    g = DiGraph(3, [(0, 1), (0, 2), (1, 2), (2, 0)])
    ys = PolySetY.from_graph(g)
    assert ys.zero_pairs() == [(0, 1), (1, 2)]
    assert PolySetY.from_graph(g, "s1").zero_pairs() == []


@pytest.mark.parametrize("level", ["s1", "s2"])
def test_project_Y_matches_oracle(level):
    rng = np.random.default_rng(2)
    for _ in range(15):
        g, ys, _, M = projection_case(rng)
        ys = PolySetY.from_graph(g, level)
        want = qp_project_oracle(M, ys.n, ys.zero_pairs(), boxed=ys.boxed)
        assert np.abs(project_Y(M, ys) - want).max() < 1e-8


def test_project_Y_aff_matches_oracle():
    rng = np.random.default_rng(3)
    from qccp.oracle import QpProblem, SymVars, solve_qp, y_set_constraints
    for _ in range(10):
        g, ys, _, M = projection_case(rng)
        sv = SymVars(g.m + 1)
        A, b, _, _ = y_set_constraints(sv, ys.n, ys.zero_pairs(), boxed=True)
        p = QpProblem(sv.pack(M), sv.weights(), A, b, np.zeros((0, sv.size)), np.zeros(0))
        assert np.abs(project_Y_aff(M, ys) - sv.unpack(solve_qp(p))).max() < 1e-9


@given(five)
def test_cut_values_match_enumeration_oracle(t):
    pi, mu, delta, theta = cut_values(*t)
    ee, e0, fg, ef, eg = cut_oracle(*t)
    assert np.allclose([pi, pi, mu, delta, theta], [ee, e0, fg, ef, eg], atol=1e-9)


@given(five)
def test_cut_values_match_closed_form_coefficients(t):
    mee, m0e, mfg, mef, meg = t
    pi, mu, delta, theta = cut_values(*t)
    if mef + meg > (mee + 2 * m0e) / 3 + mfg:
        want = CLOSED_FORM @ np.array(t)
        assert np.allclose([delta, theta, mu, pi], want, atol=1e-9)
    else:
        assert (delta, theta, mu) == (mef, meg, mfg)
        assert pi == pytest.approx((mee + 2 * m0e) / 3)


def kkt_residuals(t):
    mee, m0e, mfg, mef, meg = t
    pi, mu, delta, theta = cut_values(*t)
    lam = cut_multiplier(*t)
    stat = np.array([4 * (delta - mef) + lam, 4 * (theta - meg) + lam, 4 * (mu - mfg) - lam,
                     2 * (pi - mee) + 4 * (pi - m0e) - lam])
    slack = delta + theta - mu - pi
    return np.abs(stat).max(), lam, slack, abs(lam * slack)


@given(five)
def test_cut_projection_kkt(t):
    stat, lam, slack, comp = kkt_residuals(t)
    scale = max(1.0, max(abs(x) for x in t))
    assert stat < 1e-10 * scale
    assert lam >= 0
    assert slack <= 1e-10 * scale
    assert comp < 1e-10 * scale * scale


def test_cut_tie_uses_arrow_average_only():
    # M_ef + M_eg equals the threshold exactly
    pi, mu, delta, theta = cut_values(3.0, 0.0, 0.0, 0.5, 0.5)
    assert (pi, mu, delta, theta) == (1.0, 0.0, 0.5, 0.5)


def test_project_cut_matches_oracle():
    rng = np.random.default_rng(4)
    for _ in range(10):
        g, ys, pool, M = projection_case(rng)
        if not pool.cuts:
            continue
        cut = pool.cuts[0]
        want = qp_project_oracle(M, ys.n, cuts=[(cut.e, cut.f, cut.g)], arrow_only_for_cuts=True)
        assert np.abs(project_cut(M, cut) - want).max() < 1e-9


def test_dykstra_without_cuts_is_project_Y():
    rng = np.random.default_rng(5)
    g, ys, _, M = projection_case(rng)
    assert np.array_equal(dykstra_cyclic(M, ys, CutPool()).X, project_Y(M, ys))
    assert np.array_equal(dykstra_parallel(M, ys, None).X, project_Y(M, ys))


def test_dykstra_cyclic_matches_oracle():
    rng = np.random.default_rng(6)
    for _ in range(10):
        g, ys, pool, M = projection_case(rng)
        X = dykstra_cyclic(M, ys, pool, eps_proj=1e-13, max_sweeps=20000).X
        assert np.abs(X - oracle_projection(M, ys, pool)).max() < 1e-6


def test_dykstra_parallel_matches_oracle():
    rng = np.random.default_rng(7)
    for _ in range(5):
        g, ys, pool, M = projection_case(rng)
        X = dykstra_parallel(M, ys, pool, theta=0.5, eps_proj=1e-13, max_sweeps=50000).X
        assert np.abs(X - oracle_projection(M, ys, pool)).max() < 1e-6


def test_affine_preprocessing_leaves_projection_unchanged():
    rng = np.random.default_rng(8)
    for _ in range(5):
        g, ys, pool, M = projection_case(rng)
        a = dykstra_cyclic(M, ys, pool, eps_proj=1e-13, max_sweeps=20000).X
        b = dykstra_cyclic(project_Y_aff(M, ys), ys, pool, eps_proj=1e-13, max_sweeps=20000).X
        assert np.abs(a - b).max() < 1e-8


def test_kernels_agree_bitwise():
    rng = np.random.default_rng(9)
    g = DiGraph.complete(4)
    ys = PolySetY.from_graph(g, "s3")
    for seed in range(3):
        pool = random_pool(rng, g.m, 25, seed=seed)
        M = random_sym(rng, g.m + 1)
        runs = [dykstra_cyclic(M, ys, pool, max_sweeps=30, kernel=k, warn=False).X
                for k in ("compiled", "vectorized", "sequential")]
        assert np.array_equal(runs[0], runs[1]) and np.array_equal(runs[1], runs[2])


def test_unknown_kernel():
    g = DiGraph.complete(3)
    with pytest.raises(ValueError):
        dykstra_cyclic(np.zeros((7, 7)), PolySetY.from_graph(g), None, kernel="gpu")


def test_sweep_cap_warns():
    rng = np.random.default_rng(10)
    g = DiGraph.complete(4)
    ys = PolySetY.from_graph(g, "s3")
    pool = random_pool(rng, g.m, 10)
    with pytest.warns(MaxSweepsReached):
        res = dykstra_cyclic(random_sym(rng, g.m + 1, scale=3), ys, pool, eps_proj=1e-15, max_sweeps=2)
    assert not res.converged and res.sweeps == 2


def test_unclustered_pool_is_clustered_on_demand():
    rng = np.random.default_rng(11)
    g = DiGraph.complete(3)
    ys = PolySetY.from_graph(g, "s3")
    pool = CutPool()
    pool.add([TriangleCut(0, 1, 2), TriangleCut(3, 4, 5)])
    M = random_sym(rng, 7)
    a = dykstra_cyclic(M, ys, pool).X
    b = dykstra_cyclic(M, ys, cluster(pool)).X
    assert np.array_equal(a, b)
