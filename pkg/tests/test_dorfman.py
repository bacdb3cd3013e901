import numpy as np
import pytest
from hypothesis import given, strategies as st

from gengeom.chart import Chart, EndoField, MatrixField, MetricField, OneForm, VectorField
from gengeom.chart import interior_d, lie_bracket, lie_derivative_form
from gengeom.dorfman import dorfman_bracket, gen_nijenhuis, tensoriality_probe
from gengeom.exprcore import Const
from gengeom.genbundle import GenSection, coefficient_field, make_J_lambda, weak_example
from gengeom.verify import random_expression

CH = Chart(("u1", "u2", "u3", "u4"), [(-1.0, 1.0)] * 4, label="flat4")
N = 4


def _vec(rng):
    return VectorField.from_exprs(CH, [random_expression(rng, N, 2) for _ in range(N)])


def _form(rng):
    return OneForm.from_exprs(CH, [random_expression(rng, N, 2) for _ in range(N)])


def _section(rng):
    return GenSection.from_parts(CH, _vec(rng), _form(rng))


PTS = CH.sample(3, margin=0.1)


@given(st.integers(0, 2 ** 31 - 1))
def test_bracket_reduces_to_classical_operations(s):
    rng = np.random.default_rng(s)
    X, Y, xi, eta = _vec(rng), _vec(rng), _form(rng), _form(rng)
    out = dorfman_bracket(GenSection.from_parts(CH, X, xi), GenSection.from_parts(CH, Y, eta)).values(PTS)
    assert np.allclose(out[:, :N], lie_bracket(X, Y).values(PTS), atol=1e-10)
    form = lie_derivative_form(X, eta).values(PTS) - interior_d(Y, xi).values(PTS)
    assert np.allclose(out[:, N:], form, atol=1e-10)


@given(st.integers(0, 2 ** 31 - 1))
def test_bracket_of_section_with_itself_is_exact(s):
    # [[u, u]] = d(xi(X))
    rng = np.random.default_rng(s)
    X, xi = _vec(rng), _form(rng)
    u = GenSection.from_parts(CH, X, xi)
    out = dorfman_bracket(u, u).values(PTS)
    pairing = coefficient_field(CH, 0.0)
    pairing = type(pairing)(CH, lambda c: np.array(X(c) @ xi(c), dtype=object), ())
    _, dp = pairing.jet(PTS)
    assert np.allclose(out[:, :N], 0.0, atol=1e-12)
    assert np.allclose(out[:, N:], dp, atol=1e-10)


def test_anchor_rule():
    # [[u, f v]] = f [[u, v]] + X(f) v
    rng = np.random.default_rng(7)
    u, v = _section(rng), _section(rng)
    f = coefficient_field(CH, "sin(u1)*u2 + u3")
    lhs = dorfman_bracket(u, v.scaled(f)).values(PTS)
    fv, df = f.jet(PTS)
    Xf = np.sum(u.values(PTS)[:, :N] * df, axis=1)
    rhs = fv[:, None] * dorfman_bracket(u, v).values(PTS) + Xf[:, None] * v.values(PTS)
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_leibniz_identity():
    rng = np.random.default_rng(11)
    ch = Chart(("u1", "u2"), [(-1.0, 1.0)] * 2)

    def sec():
        return GenSection.from_parts(ch, VectorField.from_exprs(ch, [random_expression(rng, 2, 2) for _ in range(2)]),
                                     OneForm.from_exprs(ch, [random_expression(rng, 2, 2) for _ in range(2)]))

    a, b, c = sec(), sec(), sec()
    p = ch.sample(3, margin=0.1)
    lhs = dorfman_bracket(a, dorfman_bracket(b, c)).values(p)
    rhs = (dorfman_bracket(dorfman_bracket(a, b), c).values(p)
           + dorfman_bracket(b, dorfman_bracket(a, c)).values(p))
    assert np.allclose(lhs, rhs, atol=1e-9)


def test_bracket_is_not_skew():
    u = GenSection.from_parts(CH, None, OneForm.from_strings(CH, ["0", "u2", "0", "0"]))
    v = GenSection.from_parts(CH, VectorField.coordinate(CH, 1), None)
    a, b = dorfman_bracket(u, v).values(PTS), dorfman_bracket(v, u).values(PTS)
    assert not np.allclose(a, -b)


def _flat_weak():
    J = EndoField.from_strings(CH, [["0", "1", "0", "0"], ["-1", "0", "0", "0"],
                                    ["0", "0", "0", "1"], ["0", "0", "-1", "0"]])
    ident = MatrixField.from_strings(CH, [["1" if a == b else "0" for b in range(N)] for a in range(N)])
    return J, weak_example(J, MetricField(ident, ident))


def test_integrable_J_has_vanishing_nijenhuis():
    J, _ = _flat_weak()
    T = make_J_lambda(J, -1, PTS)
    rng = np.random.default_rng(5)
    for _ in range(3):
        assert np.allclose(gen_nijenhuis(T, _section(rng), _section(rng)).values(PTS), 0.0, atol=1e-10)


@given(st.integers(0, 2 ** 31 - 1))
def test_tensoriality_closed_form(s):
    rng = np.random.default_rng(s)
    _, T = _flat_weak()
    d, c = tensoriality_probe(T, random_expression(rng, N), _form(rng), _form(rng), PTS)
    assert np.allclose(d, c, atol=1e-8)


def test_tensoriality_vanishes_for_constant_f():
    rng = np.random.default_rng(3)
    _, T = _flat_weak()
    d, c = tensoriality_probe(T, Const(1.7), _form(rng), _form(rng), PTS)
    assert np.allclose(d, 0.0, atol=1e-10) and np.allclose(c, 0.0)


def test_probe_rejects_other_structures():
    J, _ = _flat_weak()
    with pytest.raises(ValueError):
        tensoriality_probe(make_J_lambda(J, -1, PTS), "u1", OneForm.coordinate(CH, 0),
                           OneForm.coordinate(CH, 1), PTS)
