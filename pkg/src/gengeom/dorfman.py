"""Dorfman bracket, generalized Nijenhuis map and the tensoriality probe."""
from __future__ import annotations

import numpy as np

from .chart import Field, jet_objects, objarray
from .exprcore import seed, value_of
from .genbundle import BlockEndo, GenSection, coefficient_field

__all__ = ["bracket_jets", "nijenhuis_jets", "dorfman_bracket", "gen_nijenhuis",
           "tensoriality_probe"]


def bracket_jets(U: np.ndarray, V: np.ndarray, tag: int, n: int) -> np.ndarray:
    """``[[X + xi, Y + eta]] = [X, Y] + L_X eta - i_Y d xi`` from component jets.

    ``U`` and ``V`` hold the ``2n`` components of each section, as Duals at
    ``tag`` (or constants).  The result is one derivative level lower.
    """
    uv, du = jet_objects(U, tag, n)
    vv, dv = jet_objects(V, tag, n)
    X, Y, eta = uv[:n], vv[:n], vv[n:]
    dX, dxi, dY, deta = du[:, :n], du[:, n:], dv[:, :n], dv[:, n:]
    vec = X @ dY - Y @ dX
    lie = X @ deta + dX @ eta
    contraction = Y @ dxi - dxi @ Y
    return objarray(list(vec) + list(lie - contraction), (2 * n,))


def nijenhuis_jets(T: np.ndarray, U: np.ndarray, V: np.ndarray, tag: int, n: int) -> np.ndarray:
    """``N(u, v) = [[Ju, Jv]] - J([[Ju, v]] + [[u, Jv]]) - [[u, v]]`` from jets.

    ``T`` is the full table of the structure evaluated on the same seeded
    coordinates, so ``u @ T`` carries the derivative of ``J u``.
    """
    JU = U @ T
    JV = V @ T
    Tval = objarray([value_of(x, tag) for x in T.flat], T.shape)
    mixed = bracket_jets(JU, V, tag, n) + bracket_jets(U, JV, tag, n)
    return bracket_jets(JU, JV, tag, n) - mixed @ Tval - bracket_jets(U, V, tag, n)


def dorfman_bracket(u: GenSection, v: GenSection) -> GenSection:
    """The Dorfman bracket as a section evaluator.  Not skew-symmetric."""
    u.same_chart(v)
    n = u.chart.dim

    def fn(coords):
        seeded, tag = seed(coords)
        return bracket_jets(u(seeded), v(seeded), tag, n)

    return GenSection(u.chart, fn, (2 * n,))


def gen_nijenhuis(J: BlockEndo, u: GenSection, v: GenSection) -> GenSection:
    """Generalized Nijenhuis map ``N_J(u, v)`` as a section evaluator."""
    J.same_chart(u, v)
    n = J.chart.dim

    def fn(coords):
        seeded, tag = seed(coords)
        return nijenhuis_jets(J(seeded), u(seeded), v(seeded), tag, n)

    return GenSection(J.chart, fn, (2 * n,))


def tensoriality_probe(J: BlockEndo, f, xi: Field, eta: Field, p, tol: float = 1e-9):
    """Failure of ``F(M)``-linearity for the weak structure ``[[J, sharp_g], [0, J*]]``.

    Returns ``(discrepancy, closed_form)`` at ``p`` where
    ``discrepancy = N(f xi, eta) - f N(xi, eta)`` and
    ``closed_form = -2 g(sharp xi, sharp eta) (sharp_g df + J* df)``.
    """
    J.same_chart(xi, eta)
    chart, n = J.chart, J.chart.dim
    m = J.values(p)
    if (np.max(np.abs(m[..., :n, n:])) > tol
            or np.max(np.abs(m[..., n:, n:] - np.swapaxes(m[..., :n, :n], -1, -2))) > tol):
        raise ValueError("structure is not of the form [[J, sharp_g], [0, J*]]")
    f = coefficient_field(chart, f)
    u = GenSection.from_parts(chart, None, xi)
    v = GenSection.from_parts(chart, None, eta)
    fu = u.scaled(f)
    discrepancy = gen_nijenhuis(J, fu, v).values(p) - \
        f.values(p)[..., None] * gen_nijenhuis(J, u, v).values(p)

    jmat, sharp = m[..., :n, :n], m[..., n:, :n]
    xv, ev = xi.values(p), eta.values(p)
    _, df = f.jet(p)  # (..., n)
    g_xe = np.einsum("...i,...ij,...j->...", xv, sharp, ev)
    sharp_df = np.einsum("...i,...ij->...j", df, sharp)
    jstar_df = np.einsum("...i,...ji->...j", df, jmat)
    closed = -2.0 * g_xe[..., None] * np.concatenate([sharp_df, jstar_df], axis=-1)
    return discrepancy, closed
