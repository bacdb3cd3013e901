import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gengeom.chart import pullback_metric
from gengeom.exprcore import DomainError
from gengeom.genbundle import hypercomplex_check
from gengeom.sphere6 import (ALL_HALF_PI, CalibrationError, CrossTable, calibrate_table,
                             default_directions, default_table, fixture_mismatch, fixtures,
                             generator_candidates, j_solve_residual, octonion_cross,
                             ac_identity, scan_nonexistence, signed_permutation_orbit,
                             b_identity)
from gengeom.verify import AC_BOX

E = np.eye(7)


def test_default_convention():
    t = default_table()
    assert np.allclose(octonion_cross(E[0], E[1], t), E[3])
    assert np.allclose(octonion_cross(E[0], E[0], t), 0.0)
    assert np.allclose(octonion_cross(E[6], E[0], t), E[2])  # 7 x 1 = 3


@pytest.mark.parametrize("table", [default_table(), None])
def test_cross_table_invariants(table, s6):
    table = table or s6.table
    c = table.c
    assert np.array_equal(c, -np.swapaxes(c, 0, 1))
    rng = np.random.default_rng(0)
    p, w = rng.normal(size=(200, 7)), rng.normal(size=(200, 7))
    x = octonion_cross(p, w, table)
    assert np.allclose(np.sum(x * p, axis=1), 0.0, atol=1e-10)
    assert np.allclose(np.sum(x * w, axis=1), 0.0, atol=1e-10)
    lhs = np.sum(x * x, axis=1)
    rhs = np.sum(p * p, 1) * np.sum(w * w, 1) - np.sum(p * w, 1) ** 2
    assert np.allclose(lhs, rhs, atol=1e-10)


@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6))
def test_cross_with_unit_vector_is_isometric(v):
    w = np.array([0.0] + v)
    assert np.linalg.norm(octonion_cross(E[0], w)) == pytest.approx(np.linalg.norm(w), abs=1e-12)


def test_generic_and_float_paths_agree():
    rng = np.random.default_rng(2)
    p, w = rng.normal(size=7), rng.normal(size=7)
    generic = octonion_cross(list(p), list(w))
    assert np.allclose(np.array(generic, dtype=float), octonion_cross(p, w))


def test_candidate_sets():
    gens = generator_candidates()
    assert len(gens) == 28
    orbit = signed_permutation_orbit()
    assert len(orbit) == 480
    keys = {t.key() for t in orbit}
    assert all(g.key() in keys for g in gens)


def test_generator_set_does_not_reproduce_fixtures():
    with pytest.raises(CalibrationError) as info:
        calibrate_table(generator_candidates())
    assert len(info.value.best) == 28
    assert min(info.value.best.values()) > 1e-3


def test_calibration_is_deterministic_and_revalidates(s6):
    again = calibrate_table()
    assert again.key() == s6.table.key()
    fresh = s6.sample(100, seed=99)
    assert fixture_mismatch(s6.J, fresh) <= 1e-8
    assert s6.table.triples() == [(1, 2, 3), (1, 4, 5), (1, 7, 6), (2, 4, 7), (2, 6, 5),
                                  (3, 6, 4), (3, 7, 5)]


def test_sign_flip_breaks_fixture_match(s6):
    c = s6.table.c.copy()
    c[0, 1] *= -1
    c[1, 0] *= -1
    with pytest.raises(CalibrationError):
        calibrate_table([CrossTable(c, "flipped e1 x e2")])
    with pytest.raises(CalibrationError):
        calibrate_table([s6.table.negated()])


def test_table_round_trips_through_triples(s6):
    again = CrossTable.from_triples(s6.table.triples())
    assert np.array_equal(again.c, s6.table.c)


def test_metric_fidelity(s6, s6_points):
    g = s6.metric.g.values(s6_points)
    assert np.max(np.abs(g - pullback_metric(s6.chart).values(s6_points))) <= 1e-10
    asym, inv = s6.metric.check(s6_points)
    assert inv <= 1e-10


def test_J_is_almost_hermitian(s6, s6_points):
    m = s6.J.values(s6_points)
    g = s6.metric.g.values(s6_points)
    assert np.max(np.abs(m @ m + np.eye(6))) <= 1e-9
    assert np.max(np.abs(m @ g @ np.swapaxes(m, 1, 2) - g)) <= 1e-9
    assert j_solve_residual(s6.chart, s6.table, s6_points) <= 1e-9


def test_fixture_rows_at_half_pi(s6):
    m = s6.J.values(ALL_HALF_PI)
    row = np.zeros(6)
    row[5] = -1.0
    assert np.max(np.abs(m[0] - row)) <= 1e-10
    assert np.max(np.abs(m[:, 0] + row)) <= 1e-10


def test_fixtures_have_five_nonzero_entries():
    fx = fixtures()
    p = np.array([[1.0, 1.1, 1.2, 1.3, 1.4, 1.5]])
    row, col = fx.values(p)
    assert np.count_nonzero(np.abs(row) > 1e-12) == 5
    assert np.count_nonzero(np.abs(col) > 1e-12) == 5


def test_J11_vanishes(s6, s6_points):
    assert np.max(np.abs(s6.J.values(s6_points)[:, 0, 0])) <= 1e-9


def test_hypercomplex_on_sphere(s6, s6_points):
    pts = s6_points[:20]
    st_ = s6.structures(pts)
    assert hypercomplex_check(st_["J_lambda(+1)"], st_["J_g"], st_["J_omega"], pts)


def test_ac_identity_values(s6_points):
    lhs, rhs = ac_identity((math.pi / 2, math.pi / 3, math.pi / 3, 1.0, 1.0, 1.0))
    assert rhs == pytest.approx(-math.sqrt(3) / 3, abs=1e-10)
    assert lhs == pytest.approx(rhs, abs=1e-10)
    lhs, rhs = ac_identity((1.0, math.pi / 2, math.pi / 2, 1.0, 1.0, 1.0))
    assert abs(rhs) <= 1e-15 and abs(lhs) <= 1e-12
    lhs, rhs = ac_identity(s6_points)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9


@given(st.floats(0.31, math.pi - 0.31), st.floats(0.31, math.pi - 0.31), st.floats(0.31, math.pi - 0.31))
def test_ac_identity_rhs_is_negative(u1, u2, u3):
    _, rhs = ac_identity((u1, u2, u3, 1.0, 1.0, 1.0))
    if abs(u2 - math.pi / 2) > 1e-6 or abs(u3 - math.pi / 2) > 1e-6:
        assert rhs < 0


def test_ac_identity_bounded_away_on_sub_box(s6):
    box = s6.chart.sample(200, seed=4, box=AC_BOX)
    _, rhs = ac_identity(box)
    assert np.min(np.abs(rhs)) >= 0.1


def test_proof_identities_from_built_J(s6, s6_points):
    # the fixture-based identity agrees with the symmetrized condition of the built structure
    from gengeom.genbundle import spherical_combination
    from gengeom.integrability import symmetrized_conditions
    pts = s6_points[:5]
    a, c = 0.6, 0.8
    s1, _ = symmetrized_conditions(spherical_combination(a, 0, c, s6.J, s6.metric, pts), pts)
    row, _ = fixtures().values(pts)
    combo = -row[:, 2] * s1[:, 0, 1, 0] + row[:, 1] * s1[:, 0, 2, 0]
    assert np.allclose(combo, 2 * a * c * ac_identity(pts)[1], rtol=1e-10)


def test_b_identity_values(s6_points):
    lhs, rhs = b_identity((math.pi / 3, 1.0, 1.0, 1.0, 1.0, 1.0), b="1")
    assert rhs == pytest.approx(8 / (3 * math.sqrt(3)), abs=1e-9)
    assert lhs == pytest.approx(rhs, abs=1e-9)
    lhs, rhs = b_identity(s6_points, b="0", c="1")
    assert np.all(lhs == 0) and np.all(rhs == 0)
    lhs, rhs = b_identity(s6_points, b="sin(u2)")
    assert np.max(np.abs(lhs - rhs)) <= 1e-9


def test_domain_errors():
    with pytest.raises(DomainError):
        ac_identity((0.0, 1.0, 1.0, 1.0, 1.0, 1.0))
    with pytest.raises(DomainError):
        b_identity((1.0, 1.0, 1.0, 1.0, 1.0, 7.0))


def test_directions_are_unit_and_seeded():
    d = default_directions()
    assert d.shape == (200, 3)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
    assert np.array_equal(d, default_directions())


def test_scan_named_directions(s6):
    pts = s6.sample(10, seed=1)
    out = scan_nonexistence([(1, 0, 0), (0, 0, 1), (0, 1, 0)], pts, s6=s6)
    assert out["all_violate"]
    assert all(r["max_residual"] >= 1e-3 for r in out["directions"])


def test_scan_b_direction_at_u1_pi_over_3(s6):
    from gengeom.integrability import symmetrized_conditions
    box = [(math.pi / 3, math.pi / 3 + 1e-9)] + [(0.5, 2.5)] * 4 + [(0.5, 5.5)]
    pts = s6.chart.sample(5, seed=0, box=box)
    out = scan_nonexistence([(0, 1, 0)], pts, s6=s6)
    assert out["directions"][0]["violates"]
    _, s2 = symmetrized_conditions(s6.structures(pts)["J_g"], pts)
    combo = -0.5 * (s2[:, 1, 1, 0] - s2[:, 0, 0, 0] / np.sin(pts[:, 0]) ** 2)
    assert np.allclose(combo, 8 / (3 * math.sqrt(3)), atol=1e-6)


def test_scan_rejects_bad_input(s6):
    with pytest.raises(ValueError):
        scan_nonexistence(np.zeros((0, 3)), s6=s6)
    with pytest.raises(ValueError):
        scan_nonexistence([(1, 1, 0)], s6=s6)
