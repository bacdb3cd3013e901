"""Sections and endomorphisms of the generalized tangent bundle TM + T*M.

A section ``u = X + xi`` is stored as one component row of length ``2n``
(vector part first).  A bundle endomorphism is stored as the full ``2n x 2n``
table in the package's row-input convention::

    [[A, C],
     [B, D]]

so that ``u @ T`` gives ``(X A + xi B) + (X C + xi D)``, and the composite
``S o T`` (apply ``T`` first) has table ``T @ S``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chart import (Chart, ChartMismatch, EndoField, Field, MatrixField,
                    MetricField, Musical, OneForm, VectorField, check_involution,
                    SingularMetricError, identity, musical, objarray, scale_obj, zeros)
from .exprcore import Expr, as_expr, evaluate

__all__ = [
    "GenSection", "BlockEndo", "StructureClass", "pairing_G0", "g0_gram", "apply", "compose",
    "linear_combination", "make_J_lambda", "make_J_omega", "make_J_g", "weak_example",
    "classify", "g0_defects", "hypercomplex_check", "spherical_combination", "NormError",
    "coefficient_field",
]


class NormError(ValueError):
    """Spherical-combination coefficients do not satisfy a^2 + b^2 + c^2 = 1."""


class GenSection(Field):
    """``u = X + xi``; components ``[X^1..X^n, xi_1..xi_n]``."""

    @classmethod
    def from_parts(cls, chart: Chart, X: Field | Sequence | None = None,
                   xi: Field | Sequence | None = None) -> "GenSection":
        n = chart.dim
        X = _as_field(chart, X, VectorField)
        xi = _as_field(chart, xi, OneForm)

        def fn(coords):
            return objarray(list(X(coords)) + list(xi(coords)), (2 * n,))

        return cls(chart, fn, (2 * n,))

    @classmethod
    def frame(cls, chart: Chart, a: int) -> "GenSection":
        """``d_a`` for ``a < n``, ``dx^(a-n)`` otherwise."""
        m = 2 * chart.dim
        comps = objarray([1.0 if k == a else 0.0 for k in range(m)], (m,))
        return cls(chart, lambda coords: comps, (m,))

    @property
    def X(self) -> VectorField:
        n, src = self.chart.dim, self
        return VectorField(self.chart, lambda c: src(c)[:n], (n,))

    @property
    def xi(self) -> OneForm:
        n, src = self.chart.dim, self
        return OneForm(self.chart, lambda c: src(c)[n:], (n,))

    def scaled(self, f: Expr | str | float) -> "GenSection":
        """``f u`` for a scalar function ``f``."""
        f = coefficient_field(self.chart, f)
        src = self
        return GenSection(self.chart, lambda c: scale_obj(src(c), f(c)[()]), self.shape)

    def __add__(self, other: "GenSection") -> "GenSection":
        self.same_chart(other)
        a, b = self, other
        return GenSection(self.chart, lambda c: a(c) + b(c), self.shape)


def _as_field(chart, part, cls):
    if part is None:
        return cls.from_exprs(chart, ["0"] * chart.dim)
    if isinstance(part, Field):
        if part.chart != chart:
            raise ChartMismatch("section parts live on different charts")
        return part
    return cls.from_exprs(chart, list(part))


def coefficient_field(chart: Chart, f) -> Field:
    """A scalar function given as Expr, grammar string or number."""
    if isinstance(f, Field):
        return f
    e = chart.parse(f) if isinstance(f, str) else as_expr(f)
    return Field(chart, lambda c: objarray([evaluate(e, c)], ()), (), objarray([e], ()))


class BlockEndo(Field):
    """Endomorphism of TM + T*M as the full row-input table ``[[A, C], [B, D]]``."""

    def __init__(self, chart, fn, shape=None, exprs=None, name: str = "",
                 almost_complex: bool = False):
        super().__init__(chart, fn, shape, exprs)
        self.name = name
        self.almost_complex = almost_complex

    @classmethod
    def from_blocks(cls, A: MatrixField | None = None, B: MatrixField | None = None,
                    C: MatrixField | None = None, D: MatrixField | None = None,
                    chart: Chart | None = None, name: str = "",
                    almost_complex: bool = False) -> "BlockEndo":
        given = [m for m in (A, B, C, D) if m is not None]
        if chart is None:
            if not given:
                raise ValueError("a chart is needed when every block is zero")
            chart = given[0].chart
        for m in given:
            if m.chart != chart:
                raise ChartMismatch("blocks live on different charts")
        A, B, C, D = (zeros(chart) if m is None else m for m in (A, B, C, D))
        n = chart.dim

        def fn(coords):
            out = np.empty((2 * n, 2 * n), dtype=object)
            out[:n, :n] = A(coords)
            out[:n, n:] = C(coords)
            out[n:, :n] = B(coords)
            out[n:, n:] = D(coords)
            return out

        exprs = None
        if all(m.exprs is not None for m in (A, B, C, D)):
            exprs = np.block([[A.exprs, C.exprs], [B.exprs, D.exprs]])
        return cls(chart, fn, (2 * n, 2 * n), exprs, name, almost_complex)

    @classmethod
    def identity(cls, chart: Chart, sign: float = 1.0) -> "BlockEndo":
        ident = identity(chart).scaled(sign)
        return cls.from_blocks(ident, None, None, ident, chart=chart,
                               name="Id" if sign > 0 else "-Id")

    def _block(self, rows: slice, cols: slice, cls=MatrixField) -> MatrixField:
        src, n = self, self.chart.dim
        return cls(self.chart, lambda c: src(c)[rows, cols], (n, n))

    @property
    def A(self) -> EndoField:
        n = self.chart.dim
        return self._block(slice(0, n), slice(0, n), EndoField)

    @property
    def B(self) -> MatrixField:
        n = self.chart.dim
        return self._block(slice(n, 2 * n), slice(0, n))

    @property
    def C(self) -> MatrixField:
        n = self.chart.dim
        return self._block(slice(0, n), slice(n, 2 * n))

    @property
    def D(self) -> MatrixField:
        n = self.chart.dim
        return self._block(slice(n, 2 * n), slice(n, 2 * n))

    def check_square(self, points, tol: float = 1e-9) -> float:
        return check_involution(self, points, tol)


@dataclass(frozen=True)
class StructureClass:
    weak: bool
    strong: bool

    def __post_init__(self):
        if self.strong and not self.weak:
            raise ValueError("a strong structure is also weak")


# ---------------------------------------------------------------------------
# pairing and algebra
# ---------------------------------------------------------------------------

def pairing_G0(u: GenSection, v: GenSection, p) -> float | np.ndarray:
    """``G0(X + xi, Y + eta) = (xi(Y) + eta(X)) / 2`` at ``p`` (point or batch)."""
    u.same_chart(v)
    n = u.chart.dim
    a, b = u.values(p), v.values(p)
    return 0.5 * (np.sum(a[..., n:] * b[..., :n], axis=-1) + np.sum(b[..., n:] * a[..., :n], axis=-1))


def g0_gram(n: int) -> np.ndarray:
    """Gram matrix of ``G0`` on the frame ``(d_1..d_n, dx^1..dx^n)``."""
    gram = np.zeros((2 * n, 2 * n))
    gram[:n, n:] = 0.5 * np.eye(n)
    gram[n:, :n] = 0.5 * np.eye(n)
    return gram


def apply(T: BlockEndo, u: GenSection) -> GenSection:
    """``T(X + xi) = (A X + B xi) + (C X + D xi)``."""
    T.same_chart(u)
    return GenSection(T.chart, lambda c: u(c) @ T(c), u.shape)


def compose(S: BlockEndo, T: BlockEndo) -> BlockEndo:
    """``S o T`` (``T`` applied first)."""
    S.same_chart(T)
    return BlockEndo(S.chart, lambda c: T(c) @ S(c), S.shape, name=f"{S.name}*{T.name}")


def linear_combination(coeffs: Sequence, terms: Sequence[BlockEndo],
                       name: str = "") -> BlockEndo:
    """Pointwise ``sum_k coeffs[k] * terms[k]`` with function coefficients."""
    if len(coeffs) != len(terms) or not terms:
        raise ValueError("need one coefficient per term")
    chart = terms[0].chart
    terms[0].same_chart(*terms[1:])
    fields = [coefficient_field(chart, c) for c in coeffs]

    def fn(coords):
        total = None
        for f, t in zip(fields, terms):
            part = scale_obj(t(coords), f(coords)[()])
            total = part if total is None else total + part
        return total

    return BlockEndo(chart, fn, terms[0].shape, name=name)


def _sample(chart: Chart, points):
    return chart.sample(20) if points is None else points


def make_J_lambda(J: MatrixField, lam: int, points=None) -> BlockEndo:
    """``J_{lam,J} = [[J, 0], [0, lam J*]]``; ``lam`` must be +1 or -1."""
    if lam not in (1, -1):
        raise ValueError("lambda must be +1 or -1")
    check_involution(J, _sample(J.chart, points))
    D = J.transpose().scaled(float(lam))
    return BlockEndo.from_blocks(J, None, None, D, name=f"J_lambda({lam:+d})",
                                 almost_complex=True)


def make_J_omega(g: MetricField | Musical, J: MatrixField | None = None, eps: int = 1,
                 points=None) -> BlockEndo:
    """``J_omega = [[0, -sharp_w], [flat_w, 0]]`` for ``omega = g(J., .)``."""
    mus = g if isinstance(g, Musical) else musical(g, J, eps, points)
    if mus.flat_omega is None:
        raise ValueError("an almost complex structure J is required")
    chart = mus.flat_g.chart
    w = mus.flat_omega.values(_sample(chart, points))
    if np.any(np.linalg.cond(w) > 1e12):
        raise SingularMetricError("omega is degenerate at a sampled point")
    return BlockEndo.from_blocks(None, mus.sharp_omega.scaled(-1.0), mus.flat_omega, None,
                                 name="J_omega", almost_complex=True)


def make_J_g(g: MetricField | Musical, points=None) -> BlockEndo:
    """``J_g = [[0, -sharp_g], [flat_g, 0]]``."""
    mus = g if isinstance(g, Musical) else musical(g, None, 1, points)
    return BlockEndo.from_blocks(None, mus.sharp_g.scaled(-1.0), mus.flat_g, None,
                                 name="J_g", almost_complex=True)


def weak_example(J: MatrixField, g: MetricField) -> BlockEndo:
    """The weak structure ``[[J, sharp_g], [0, J*]]`` on an almost Hermitian chart."""
    return BlockEndo.from_blocks(J, g.g_inv, None, J.transpose(), name="weak_example",
                                 almost_complex=True)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def g0_defects(T: BlockEndo, points) -> tuple[float, float]:
    """Max over the frame of ``|G0(Tu,v) + G0(u,Tv)|`` and ``|G0(Tu,v) - G0(u,Tv)|``."""
    m = T.values(points)
    gram = g0_gram(T.chart.dim)
    left = m @ gram  # G0(T e_a, e_b)
    right = np.swapaxes(left, -1, -2)  # G0(e_a, T e_b)
    return float(np.max(np.abs(left + right))), float(np.max(np.abs(left - right)))


def classify(T: BlockEndo, points=None, tol: float = 1e-9) -> StructureClass:
    """Weak iff ``T^2 = -Id`` sampled; strong iff also ``G0``-skew on the frame."""
    pts = _sample(T.chart, points)
    T.check_square(pts)
    skew, _ = g0_defects(T, pts)
    return StructureClass(weak=True, strong=skew <= tol)


def hypercomplex_check(J1: BlockEndo, J2: BlockEndo, J3: BlockEndo, points=None,
                       tol: float = 1e-9) -> bool:
    """Pairwise anticommutation and ``J3 = J2 o J1`` at the sampled points."""
    J1.same_chart(J2, J3)
    pts = _sample(J1.chart, points)
    m1, m2, m3 = (J.values(pts) for J in (J1, J2, J3))
    worst = 0.0
    for a, b in ((m1, m2), (m1, m3), (m2, m3)):
        worst = max(worst, float(np.max(np.abs(a @ b + b @ a))))
    worst = max(worst, float(np.max(np.abs(m3 - m1 @ m2))))
    return worst <= tol


def spherical_combination(a, b, c, J: MatrixField, g: MetricField, points=None,
                          tol: float = 1e-10) -> BlockEndo:
    """``a J_{1,J} + b J_g + c J_omega`` with ``a^2 + b^2 + c^2 = 1``."""
    chart = J.chart
    pts = _sample(chart, points)
    fa, fb, fc = (coefficient_field(chart, x) for x in (a, b, c))
    norm = sum(f.values(pts) ** 2 for f in (fa, fb, fc))
    defect = float(np.max(np.abs(norm - 1.0)))
    if defect > tol:
        raise NormError(f"a^2 + b^2 + c^2 deviates from 1 by {defect:.3g}")
    mus = musical(g, J, 1, pts)
    terms = [make_J_lambda(J, 1, pts), make_J_g(mus), make_J_omega(mus, points=pts)]
    out = linear_combination([fa, fb, fc], terms, name="spherical")
    out.almost_complex = True
    out.check_square(pts)
    return out
