"""Claim-by-claim verification behind ``gengeom verify-paper``.

Each check returns :class:`Item` records; ``run_all`` collects them in a fixed
order so the JSON report is reproducible byte for byte.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import exprcore as ec
from .chart import Chart, EndoField, MatrixField, MetricField, OneForm, nijenhuis_classical, pullback_metric
from .config import builtin
from .dorfman import tensoriality_probe
from .genbundle import (classify, g0_gram, make_J_lambda, make_J_omega,
                        spherical_combination, weak_example)
from .integrability import condition_residuals, oracle_frame_nijenhuis
from .sphere6 import (ALL_HALF_PI, CrossTable, Sphere6, fixture_mismatch,
                      ac_identity, scan_nonexistence, sphere6, b_identity)

__all__ = ["Item", "random_expression", "run_all", "AC_BOX"]

AC_BOX = [(math.pi / 3, 2 * math.pi / 3), (math.pi / 4, math.pi / 3), (math.pi / 4, math.pi / 3),
              (0.3, math.pi - 0.3), (0.3, math.pi - 0.3), (0.3, 2 * math.pi - 0.3)]


@dataclass
class Item:
    claim_id: str
    paper_anchor: str
    residual: float
    tolerance: float
    comparison: str = "<="

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.residual):
            return False
        if self.comparison == "<=":
            return self.residual <= self.tolerance
        return self.residual >= self.tolerance

    def as_dict(self) -> dict:
        d = asdict(self)
        d["residual"] = float(self.residual)
        d["pass"] = bool(self.passed)
        return d


def random_expression(rng: np.random.Generator, nvars: int, depth: int = 3) -> ec.Expr:
    """Random smooth expression; denominators are kept away from zero."""
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.7:
            return ec.Var(int(rng.integers(nvars)))
        return ec.Const(float(np.round(rng.uniform(-2, 2), 3)))
    op = rng.integers(7)
    a = random_expression(rng, nvars, depth - 1)
    if op == 0:
        return a + random_expression(rng, nvars, depth - 1)
    if op == 1:
        return a - random_expression(rng, nvars, depth - 1)
    if op == 2:
        return a * random_expression(rng, nvars, depth - 1)
    if op == 3:
        return ec.Sin(a)
    if op == 4:
        return ec.Cos(a)
    if op == 5:
        return ec.PowInt(a, int(rng.integers(2, 4)))
    return a / (ec.Const(2.5) + ec.Sin(random_expression(rng, nvars, depth - 1)))


# ---------------------------------------------------------------------------
# individual claims
# ---------------------------------------------------------------------------

def check_ad(seed: int, count: int = 1000) -> list[Item]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        e = random_expression(rng, 3)
        p = rng.uniform(-1, 1, size=3)
        d = ec.eval_dual(e, p)
        for k in range(3):
            fd = ec.finite_diff(e, p, k, h=1e-5)
            worst = max(worst, abs(d.partials[k] - fd) / max(1.0, abs(d.partials[k])))
    return [Item("C1.ad_vs_central_differences", "dual-number partials vs central differences",
                 worst, 1e-6)]


def check_metric(s6: Sphere6, pts) -> list[Item]:
    g = s6.metric.g.values(pts)
    pull = pullback_metric(s6.chart).values(pts)
    inv = s6.metric.g_inv.values(pts) @ g - np.eye(6)
    return [Item("C2.metric_pullback", "round metric induced by the Euclidean metric",
                 float(np.max(np.abs(g - pull))), 1e-10),
            Item("C2.metric_inverse", "inverse round metric", float(np.max(np.abs(inv))), 1e-10)]


def check_fixtures(s6: Sphere6, pts) -> list[Item]:
    m = s6.J.values(ALL_HALF_PI)
    want_row = np.zeros(6)
    want_row[5] = -1.0
    fx_pts = s6.J.values(pts)
    return [Item("C3.fixture_rows", "explicit rows J d_1 and J* du^1",
                 fixture_mismatch(s6.J, pts), 1e-8),
            Item("C3.half_pi_J_d1", "J d_1 = -d_6 at the all-pi/2 point",
                 float(np.max(np.abs(m[0] - want_row))), 1e-10),
            Item("C3.half_pi_Jstar_du1", "J* du^1 = du^6 at the all-pi/2 point",
                 float(np.max(np.abs(m[:, 0] + want_row))), 1e-10),
            Item("C3.J11_zero", "J* du^1 has no du^1 term", float(np.max(np.abs(fx_pts[:, 0, 0]))),
                 1e-9)]


def check_algebra(s6: Sphere6, pts) -> list[Item]:
    m = s6.J.values(pts)
    g = s6.metric.g.values(pts)
    herm = m @ g @ np.swapaxes(m, 1, 2) - g
    st = s6.structures(pts)
    j1, jg, jw = st["J_lambda(+1)"], st["J_g"], st["J_omega"]
    m1, mg, mw = (t.values(pts) for t in (j1, jg, jw))
    hyper = max(float(np.max(np.abs(a @ b + b @ a))) for a, b in ((m1, mg), (m1, mw), (mg, mw)))
    hyper = max(hyper, float(np.max(np.abs(mw - m1 @ mg))))
    gram = g0_gram(6)
    cor = 0.0
    expected_cls = []
    for a, b, c in ((0.6, 0.0, 0.8), (0.48, 0.6, 0.64), (0.0, 0.6, 0.8), (0.0, 0.0, 1.0),
                    (0.0, 0.0, -1.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)):
        T = spherical_combination(a, b, c, s6.J, s6.metric, pts)
        t = T.values(pts)
        lhs = t @ gram @ np.swapaxes(t, 1, 2)
        rhs = ((-a * a - b * b + c * c) * gram + 2 * a * c * gram @ np.swapaxes(mg, 1, 2)
               - 2 * b * c * m1 @ gram)
        cor = max(cor, float(np.max(np.abs(lhs - rhs))))
        expected_cls.append(classify(T, pts).strong == (abs(c) == 1.0))
    induced = [classify(j1, pts).strong is False, classify(st["J_lambda(-1)"], pts).strong is True,
               classify(jw, pts).strong is True, classify(jg, pts).strong is False]
    return [Item("C4.J_square", "J^2 = -Id", float(np.max(np.abs(m @ m + np.eye(6)))), 1e-9),
            Item("C4.hermitian", "g(JX, JY) = g(X, Y)", float(np.max(np.abs(herm))), 1e-9),
            Item("C4.hypercomplex", "J_{1,J}, J_g, J_omega form a hypercomplex triple", hyper, 1e-9),
            Item("C4.pairing_identity", "G0(Ju, Jv) for spherical combinations", cor, 1e-9),
            Item("C4.classify_induced", "weak/strong verdicts of the induced structures",
                 float(induced.count(False)), 0.0),
            Item("C4.classify_spherical", "spherical combination strong iff c = +-1",
                 float(expected_cls.count(False)), 0.0)]


def check_oracle(s6: Sphere6, pts) -> list[Item]:
    st = s6.structures(pts)
    st["spherical(0.6,0,0.8)"] = spherical_combination(0.6, 0.0, 0.8, s6.J, s6.metric, pts)
    st["spherical(variable)"] = spherical_combination(
        "cos(u1)", "sin(u1)*cos(u2)", "sin(u1)*sin(u2)", s6.J, s6.metric, pts)
    items = []
    for name, T in st.items():
        diff = np.abs(condition_residuals(T, pts).residuals - oracle_frame_nijenhuis(T, pts))
        items.append(Item(f"C5.oracle_equivalence[{name}]",
                          "coordinate conditions vs frame Nijenhuis components",
                          float(diff.max()), 1e-8))
    return items


def check_reductions(s6: Sphere6, pts, seed: int, count: int, tol_nonvanish: float) -> list[Item]:
    flat = builtin("r2")
    chart, metric, J = flat.chart, flat.metric, flat.J
    rpts = chart.sample(count, seed=seed, margin=0.1)
    lam = condition_residuals(make_J_lambda(J, -1, rpts), rpts).max_abs()
    om = condition_residuals(make_J_omega(metric, J, 1, rpts), rpts).max_abs()
    st = s6.structures(pts)
    s1 = condition_residuals(st["J_lambda(+1)"], pts).max_abs()
    sw = condition_residuals(st["J_omega"], pts).max_abs()
    # the first condition of J_{-1,J} is the classical Nijenhuis tensor
    jm = st["J_lambda(-1)"]
    rep = condition_residuals(jm, pts[:10])
    nij = np.stack([np.stack([nijenhuis_classical(s6.J, i, j).values(pts[:10]) for j in range(6)], 1)
                    for i in range(6)], 1)
    return [Item("C6.flat_kahler_lambda", "integrable J on flat R^2", lam, 1e-10),
            Item("C6.flat_kahler_omega", "symplectic omega on flat R^2", om, 1e-10),
            Item("C6.s6_lambda_nonvanishing", "octonion J is not integrable", s1, tol_nonvanish, ">="),
            Item("C6.s6_omega_nonvanishing", "fundamental form is not closed", sw, tol_nonvanish, ">="),
            Item("C6.classical_nijenhuis", "first condition equals the classical Nijenhuis tensor",
                 float(np.max(np.abs(rep.residuals[0] - nij))), 1e-10)]


def check_tensoriality(seed: int, count: int = 50) -> list[Item]:
    chart = Chart(tuple(f"u{i}" for i in range(1, 5)), [(-1.0, 1.0)] * 4, label="flat4")
    J = EndoField.from_strings(chart, [["0", "1", "0", "0"], ["-1", "0", "0", "0"],
                                       ["0", "0", "0", "1"], ["0", "0", "-1", "0"]])
    ident = [["1" if a == b else "0" for b in range(4)] for a in range(4)]
    g = MetricField(MatrixField.from_strings(chart, ident), MatrixField.from_strings(chart, ident))
    T = weak_example(J, g)
    rng = np.random.default_rng(seed)
    pts = chart.sample(4, seed=seed, margin=0.1)
    worst = worst_const = 0.0
    for _ in range(count):
        f = random_expression(rng, 4)
        xi = OneForm.from_exprs(chart, [random_expression(rng, 4, 2) for _ in range(4)])
        eta = OneForm.from_exprs(chart, [random_expression(rng, 4, 2) for _ in range(4)])
        d, c = tensoriality_probe(T, f, xi, eta, pts)
        worst = max(worst, float(np.max(np.abs(d - c))))
    for _ in range(5):
        xi = OneForm.from_exprs(chart, [random_expression(rng, 4, 2) for _ in range(4)])
        eta = OneForm.from_exprs(chart, [random_expression(rng, 4, 2) for _ in range(4)])
        d, _ = tensoriality_probe(T, ec.Const(float(rng.uniform(-2, 2))), xi, eta, pts)
        worst_const = max(worst_const, float(np.max(np.abs(d))))
    return [Item("C7.tensoriality_closed_form", "failure of function linearity", worst, 1e-8),
            Item("C7.tensoriality_constant_f", "no failure for constant f", worst_const, 1e-8)]


def check_ac_identity(s6: Sphere6, pts) -> list[Item]:
    lhs, rhs = ac_identity(pts)
    l0, r0 = ac_identity((math.pi / 2, math.pi / 3, math.pi / 3, 1.0, 1.0, 1.0))
    box = s6.chart.sample(100, seed=1, box=AC_BOX)
    _, rbox = ac_identity(box)
    return [Item("C8.ac_identity", "obstruction to a c != 0", float(np.max(np.abs(lhs - rhs))), 1e-9),
            Item("C8.ac_identity_value", "-sqrt(3)/3 at (pi/2, pi/3, pi/3)",
                 max(abs(r0 + math.sqrt(3) / 3), abs(l0 + math.sqrt(3) / 3)), 1e-9),
            Item("C8.ac_identity_bounded_away", "min |rhs| on the sub-box", float(np.min(np.abs(rbox))), 0.1, ">=")]


def check_b_identity(pts) -> list[Item]:
    lhs, rhs = b_identity(pts, b="sin(u2)", c="0.5*cos(u3)")
    lhs1, rhs1 = b_identity(pts, b="1", c="0")
    l0, r0 = b_identity((math.pi / 3, 1.0, 1.0, 1.0, 1.0, 1.0), b="1")
    value = 8 / (3 * math.sqrt(3))
    return [Item("C9.b_identity", "obstruction to b != 0",
                 float(max(np.max(np.abs(lhs - rhs)), np.max(np.abs(lhs1 - rhs1)))), 1e-9),
            Item("C9.b_identity_value", "8/(3 sqrt 3) at u1 = pi/3 with b = 1",
                 max(abs(l0 - value), abs(r0 - value)), 1e-9)]


def check_scan(s6: Sphere6, seed: int, tol_nonvanish: float, directions=None, points: int = 50):
    pts = s6.sample(points, seed=seed)
    out = scan_nonexistence(directions, pts, s6=s6, tol_nonvanish=tol_nonvanish)
    return [Item("C10.nonexistence_scan", "no constant spherical combination is integrable",
                 out["min_max_residual"], tol_nonvanish, ">=")], out


def run_all(seed: int = 0, points: int = 100, tol_vanish: float | None = None,
            tol_nonvanish: float = 1e-3, table: CrossTable | None = None) -> list[Item]:
    """Every claim in a fixed order.  ``tol_vanish`` overrides the closeness tolerances."""
    s6 = sphere6(table)
    pts = s6.sample(points, seed=seed)
    items: list[Item] = []
    items += check_ad(seed)
    items += check_metric(s6, pts)
    items += check_fixtures(s6, pts)
    items += check_algebra(s6, pts)
    items += check_oracle(s6, pts)
    items += check_reductions(s6, pts, seed, points, tol_nonvanish)
    items += check_tensoriality(seed)
    items += check_ac_identity(s6, pts)
    items += check_b_identity(pts)
    items += check_scan(s6, seed, tol_nonvanish)[0]
    if tol_vanish is not None:
        for it in items:
            if it.comparison == "<=" and it.tolerance > 0:
                it.tolerance = tol_vanish
    return items
