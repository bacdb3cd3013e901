import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gengeom.chart import Chart, EndoField, MatrixField, MetricField, dtwoform, musical, nijenhuis_classical
from gengeom.genbundle import (BlockEndo, make_J_g, make_J_lambda, make_J_omega,
                               spherical_combination, weak_example)
from gengeom.integrability import (condition_residuals, oracle_frame_nijenhuis,
                                   strong_sufficiency_check, symmetrized_conditions)


@pytest.fixture(scope="module")
def r4_setup(r4):
    pts = r4.chart.sample(12, margin=0.1)
    st_ = {"lam+": make_J_lambda(r4.J, 1, pts), "lam-": make_J_lambda(r4.J, -1, pts),
           "omega": make_J_omega(r4.metric, r4.J, points=pts), "g": make_J_g(r4.metric, pts),
           "weak": weak_example(r4.J, r4.metric),
           "variable": spherical_combination("cos(u1)", "sin(u1)*cos(u2)", "sin(u1)*sin(u2)",
                                             r4.J, r4.metric, pts)}
    return r4, pts, st_


@pytest.mark.parametrize("name", ["lam+", "lam-", "omega", "g", "weak", "variable"])
def test_oracle_equivalence_r4(r4_setup, name):
    _, pts, st_ = r4_setup
    rep = condition_residuals(st_[name], pts)
    oracle = oracle_frame_nijenhuis(st_[name], pts)
    assert np.max(np.abs(rep.residuals - oracle)) <= 1e-9
    # not a vacuous comparison: every structure here has some nonzero condition
    assert rep.max_abs() > 1e-3


@given(st.floats(0, 2 * np.pi), st.floats(0.05, np.pi - 0.05))
def test_oracle_equivalence_constant_directions(phi, theta):
    from gengeom.config import builtin
    r4 = builtin("r4")
    pts = r4.chart.sample(3, margin=0.1)
    T = spherical_combination(np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi),
                              np.cos(theta), r4.J, r4.metric, pts)
    diff = condition_residuals(T, pts).residuals - oracle_frame_nijenhuis(T, pts)
    assert np.max(np.abs(diff)) <= 1e-9


def test_oracle_equivalence_s6(s6):
    pts = s6.sample(8, seed=5)
    T = spherical_combination(0.48, 0.6, 0.64, s6.J, s6.metric, pts)
    diff = condition_residuals(T, pts).residuals - oracle_frame_nijenhuis(T, pts)
    assert np.max(np.abs(diff)) <= 1e-8


def test_equal_frame_arguments_match_conditions(r4_setup):
    # N(d_i, d_i) is not assumed to vanish; it must match the (i, i, l) residuals
    _, pts, st_ = r4_setup
    T = st_["weak"]
    rep = condition_residuals(T, pts)
    oracle = oracle_frame_nijenhuis(T, pts)
    for i in range(4):
        assert np.allclose(rep.residuals[:, :, i, i, :], oracle[:, :, i, i, :], atol=1e-10)


def test_flat_kahler_reductions(r2):
    pts = r2.chart.sample(20, margin=0.1)
    assert condition_residuals(make_J_lambda(r2.J, -1, pts), pts).max_abs() <= 1e-10
    assert condition_residuals(make_J_omega(r2.metric, r2.J, points=pts), pts).max_abs() <= 1e-10


def test_conformal_plane_is_still_symplectic():
    # every 2-form on a surface is closed, so J_omega passes even for a curved metric
    ch = Chart(("u1", "u2"), [(-1.0, 1.0)] * 2)
    f = "(2 + sin(u1)*u2)"
    g = MetricField(MatrixField.from_strings(ch, [[f, "0"], ["0", f]]),
                    MatrixField.from_strings(ch, [[f"1/{f}", "0"], ["0", f"1/{f}"]]))
    J = EndoField.from_strings(ch, [["0", "1"], ["-1", "0"]])
    pts = ch.sample(15, margin=0.1)
    rep = condition_residuals(make_J_omega(g, J, points=pts), pts)
    assert rep.vanishes()
    assert rep.verdict() == "vanishes"
    # while J_g is not integrable there
    assert condition_residuals(make_J_g(g, pts), pts).verdict() == "nonvanishing"


def test_first_condition_is_classical_nijenhuis(r4_setup):
    r4, pts, st_ = r4_setup
    rep = condition_residuals(st_["lam-"], pts)
    for i in range(4):
        for j in range(4):
            assert np.allclose(rep.residuals[0, :, i, j, :],
                               nijenhuis_classical(r4.J, i, j).values(pts), atol=1e-10)


def test_first_condition_of_J_omega_is_d_omega(r4_setup):
    r4, pts, st_ = r4_setup
    mus = musical(r4.metric, r4.J, 1, pts)
    dw = dtwoform(mus.flat_omega, pts).values(pts)          # (P, i, j, k)
    sharp = mus.sharp_omega.values(pts)                      # (P, k, l)
    expected = np.einsum("pijk,pkl->pijl", dw, sharp)
    rep = condition_residuals(st_["omega"], pts)
    assert np.allclose(rep.residuals[0], expected, atol=1e-9)
    assert rep.max_abs(1) > 1e-3 and np.abs(dw).max() > 1e-3


def test_symmetrized_trivial_cases(r2, r4_setup):
    _, pts, st_ = r4_setup
    s1, s2 = symmetrized_conditions(st_["lam+"], pts[0])   # B = 0
    assert s1.shape == (4, 4, 4) and np.all(s1 == 0) and np.all(s2 == 0)
    p = r2.chart.sample(3, margin=0.1)
    s1, s2 = symmetrized_conditions(make_J_g(r2.metric, p), p)   # constant blocks
    assert np.allclose(s1, 0) and np.allclose(s2, 0)


def test_symmetrized_conditions_follow_from_vanishing(r2):
    p = r2.chart.sample(5, margin=0.1)
    T = make_J_omega(r2.metric, r2.J, points=p)
    assert condition_residuals(T, p).max_abs() <= 1e-10
    s1, s2 = symmetrized_conditions(T, p)
    assert np.abs(s1).max() <= 1e-9 and np.abs(s2).max() <= 1e-9


def test_symmetrized_s1_is_combination_of_conditions(r4_setup):
    # S1(i,j,l) = -(cond3(i,j,l) + cond5(j,i,l)) holds identically
    _, pts, st_ = r4_setup
    T = st_["variable"]
    rep = condition_residuals(T, pts)
    s1, s2 = symmetrized_conditions(T, pts)
    assert np.allclose(s1, -(rep.residuals[2] + np.swapaxes(rep.residuals[4], 1, 2)), atol=1e-10)
    assert np.allclose(s2, -(rep.residuals[6] + np.swapaxes(rep.residuals[6], 1, 2)), atol=1e-10)


def test_s2_of_J_g_on_the_sphere(s6):
    u1 = math.pi / 3
    p = np.array([u1, 1.0, 1.2, 1.0, 1.0, 1.0])
    _, s2 = symmetrized_conditions(s6.structures(p[None])["J_g"], p)
    # literal S2 at (2, 2, 1) is -4 cos/sin^3; the normalized combination used
    # in the b-obstruction is -(S2(2,2,1) - g^22 S2(1,1,1)) / 2 = 2 cos/sin^3
    assert s2[1, 1, 0] == pytest.approx(-4 * math.cos(u1) / math.sin(u1) ** 3, rel=1e-12)
    combo = -0.5 * (s2[1, 1, 0] - s2[0, 0, 0] / math.sin(u1) ** 2)
    assert combo == pytest.approx(8 / (3 * math.sqrt(3)), abs=1e-9)


def test_strong_sufficiency(r2, s6):
    p = r2.chart.sample(4, margin=0.1)
    ok, cmax, nmax = strong_sufficiency_check(make_J_omega(r2.metric, r2.J, points=p), p, detail=True)
    assert ok and cmax <= 1e-8 and nmax <= 1e-8
    assert strong_sufficiency_check(make_J_lambda(r2.J, -1, p), p)
    q = s6.sample(3, seed=2)
    ok, cmax, nmax = strong_sufficiency_check(s6.structures(q)["J_omega"], q, pairs=4, detail=True)
    assert ok and cmax > 1e-3 and nmax > 1e-3


def test_sufficiency_refuses_weak(r2):
    p = r2.chart.sample(3, margin=0.1)
    with pytest.raises(ValueError):
        strong_sufficiency_check(make_J_g(r2.metric, p), p)


def test_report_invariants(r4_setup):
    _, pts, st_ = r4_setup
    rep = condition_residuals(st_["weak"], pts)
    assert rep.count == 8 * 4 ** 3 * len(pts)
    assert rep.max_abs() == max(rep.per_condition())
    loc = rep.argmax()
    r = rep.residuals[loc["condition"] - 1, loc["point"], loc["i"] - 1, loc["j"] - 1, loc["l"] - 1]
    assert abs(r) == rep.max_abs()
    assert rep.summary()["verdict"] == "nonvanishing"


def test_random_blocks_structure():
    # conjugating a constant structure by a point-dependent shear keeps T^2 = -Id
    ch = Chart(("u1", "u2"), [(-1.0, 1.0)] * 2)
    s = "(0.5*sin(u1) + u2^2)"
    P = [["1", "0", s, "0"], ["0", "1", "0", "u1*u2"], ["0", "0", "1", "0"], ["0", "0", "0", "1"]]
    Pinv = [["1", "0", f"-{s}", "0"], ["0", "1", "0", "-u1*u2"], ["0", "0", "1", "0"], ["0", "0", "0", "1"]]
    T0 = [["0", "0", "1", "0"], ["0", "0", "0", "1"], ["-1", "0", "0", "0"], ["0", "-1", "0", "0"]]
    M = MatrixField.from_strings(ch, Pinv) @ MatrixField.from_strings(ch, T0) @ MatrixField.from_strings(ch, P)
    T = BlockEndo(ch, M.fn, (4, 4), name="sheared")
    pts = ch.sample(10, margin=0.1)
    T.check_square(pts)
    rep = condition_residuals(T, pts)
    assert np.max(np.abs(rep.residuals - oracle_frame_nijenhuis(T, pts))) <= 1e-10
