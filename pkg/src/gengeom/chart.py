"""Coordinate charts and the classical calculus on them.

A field is a function from chart coordinates to an object array of
components.  Coordinates may be floats, numpy arrays (a batch of points) or
Duals, so any field can be differentiated by evaluating it on seeded
coordinates, including fields that are themselves built from derivatives
(brackets, Lie derivatives).  Nothing is differentiated symbolically.

Index convention for every n x n table, fixed throughout the package:
row index = input.  For an endomorphism ``T`` of TM the entry ``T[i, k]`` is
the coefficient in ``T d_i = T[i, k] d_k``; ``B[i, j]`` in ``B dx^i = B[i, j] d_j``;
``C[i, j]`` in ``C d_i = C[i, j] dx^j``; ``D[i, j]`` in ``D dx^i = D[i, j] dx^j``.
Applying a table to a component row vector ``v`` is therefore ``v @ T``,
and the dual ``J*`` of an endomorphism ``J`` has table ``J.T``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .exprcore import DomainError, Expr, as_expr, evaluate, parse, partial_of, seed, value_of

__all__ = [
    "Chart", "Point", "Field", "VectorField", "OneForm", "MatrixField", "EndoField",
    "MetricField", "Musical", "ChartMismatch", "InvolutionError", "AsymmetryError",
    "SingularMetricError", "lie_bracket", "lie_derivative_form", "interior_d", "dtwoform",
    "nijenhuis_classical", "musical", "pullback_metric", "coords_of", "objarray", "realize",
    "jet_objects", "scale_obj",
]


class ChartMismatch(ValueError):
    pass


class InvolutionError(ValueError):
    """An endomorphism expected to square to -Id does not, at a sampled point."""


class AsymmetryError(ValueError):
    pass


class SingularMetricError(ValueError):
    pass


# ---------------------------------------------------------------------------
# object-array plumbing
# ---------------------------------------------------------------------------

def objarray(items, shape) -> np.ndarray:
    """Object array of the given shape; never lets numpy split array entries."""
    out = np.empty(int(np.prod(shape)) if shape else 1, dtype=object)
    for k, x in enumerate(items):
        out[k] = x
    return out.reshape(shape)


def coords_of(points) -> list:
    """Split a point ``(n,)`` or a batch ``(P, n)`` into per-coordinate entries."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        return [float(c) for c in pts]
    return [pts[:, k] for k in range(pts.shape[1])]


def realize(obj: np.ndarray, points) -> np.ndarray:
    """Float array ``(P, *shape)`` (or ``shape`` for a single point)."""
    pts = np.asarray(points, dtype=float)
    obj = np.asarray(obj, dtype=object)
    if pts.ndim == 1:
        return np.array([float(x) for x in obj.flat]).reshape(obj.shape)
    npts = pts.shape[0]
    flat = [np.broadcast_to(np.asarray(x, dtype=float), (npts,)) for x in obj.flat]
    if not flat:
        return np.zeros((npts,) + obj.shape)
    return np.stack(flat, axis=-1).reshape((npts,) + obj.shape)


def scale_obj(obj: np.ndarray, s) -> np.ndarray:
    """Multiply every entry by a scalar that may itself be an array or Dual."""
    return objarray([x * s for x in obj.flat], obj.shape)


def _map(fn, obj):
    return objarray([fn(x) for x in obj.flat], obj.shape)


def jet_objects(out: np.ndarray, tag: int, n: int):
    """Split Dual-valued components into values and partials ``[k, ...]``."""
    vals = _map(lambda x: value_of(x, tag), out)
    parts = objarray([partial_of(x, k, tag) for k in range(n) for x in out.flat],
                     (n,) + out.shape)
    return vals, parts


# ---------------------------------------------------------------------------
# charts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Point:
    coords: tuple[float, ...]


@dataclass(frozen=True)
class Chart:
    """A single coordinate chart: names, an open box, optional embedding."""

    names: tuple[str, ...]
    domain: tuple[tuple[float, float], ...]
    embedding: tuple[Expr, ...] | None = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "domain", tuple((float(a), float(b)) for a, b in self.domain))
        if len(self.names) != len(self.domain):
            raise ValueError("one domain interval per coordinate is required")
        if len(set(self.names)) != len(self.names):
            raise ValueError("coordinate names must be distinct")
        for lo, hi in self.domain:
            if not lo < hi:
                raise ValueError(f"empty interval ({lo}, {hi})")
        if self.embedding is not None:
            emb = tuple(parse(e, self.names) if isinstance(e, str) else as_expr(e)
                        for e in self.embedding)
            object.__setattr__(self, "embedding", emb)

    @property
    def dim(self) -> int:
        return len(self.names)

    def parse(self, text: str) -> Expr:
        return parse(text, self.names)

    def contains(self, p: Sequence[float]) -> bool:
        return all(lo < c < hi for c, (lo, hi) in zip(p, self.domain))

    def point(self, coords: Sequence[float]) -> Point:
        if len(coords) != self.dim:
            raise ValueError(f"expected {self.dim} coordinates, got {len(coords)}")
        if not self.contains(coords):
            raise DomainError(f"point {tuple(coords)} lies outside the chart domain")
        return Point(tuple(float(c) for c in coords))

    def sample(self, count: int = 100, seed: int = 0, margin: float = 0.3,
               box: Sequence[tuple[float, float]] | None = None) -> np.ndarray:
        """Deterministic scrambled-Halton points, shape ``(count, dim)``.

        The domain is shrunk by ``margin`` on every side unless an explicit
        sub-box is given.
        """
        if box is None:
            box = [(lo + margin, hi - margin) for lo, hi in self.domain]
        lo = np.array([b[0] for b in box])
        hi = np.array([b[1] for b in box])
        if np.any(lo >= hi):
            raise ValueError("sampling box is empty; reduce the margin")
        unit = qmc.Halton(d=self.dim, scramble=True, seed=seed).random(count)
        return lo + unit * (hi - lo)

    def embedding_jacobian(self, points) -> np.ndarray:
        """``d emb / d u``, shape ``(P, m, n)`` (or ``(m, n)``)."""
        if self.embedding is None:
            raise ValueError("chart has no embedding")
        emb = VectorLike.from_exprs(self, list(self.embedding))
        _, parts = emb.jet(points)
        return np.swapaxes(parts, -1, -2)

    def check_embedding(self, points, tol: float = 1e-8) -> float:
        """Smallest singular value of the embedding Jacobian over ``points``."""
        jac = self.embedding_jacobian(points)
        smin = float(np.min(np.linalg.svd(jac, compute_uv=False)))
        if smin <= tol:
            raise DomainError(f"embedding Jacobian is rank deficient (sigma_min={smin:.3g})")
        return smin


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

class Field:
    """Components of a tensor field as a function of chart coordinates."""

    shape: tuple[int, ...] = ()

    def __init__(self, chart: Chart, fn: Callable[[Sequence], np.ndarray],
                 shape: tuple[int, ...] | None = None, exprs: np.ndarray | None = None):
        self.chart = chart
        self.fn = fn
        if shape is not None:
            self.shape = tuple(shape)
        self.exprs = exprs

    @classmethod
    def from_exprs(cls, chart: Chart, exprs, shape=None):
        arr = np.empty(np.shape(exprs) if shape is None else shape, dtype=object)
        flat = list(np.asarray(exprs, dtype=object).flat)
        for k, e in enumerate(flat):
            arr.flat[k] = chart.parse(e) if isinstance(e, str) else as_expr(e)
        shp = arr.shape

        def fn(coords):
            return objarray([evaluate(e, coords) for e in arr.flat], shp)

        return cls(chart, fn, shp, arr)

    @classmethod
    def from_strings(cls, chart: Chart, rows):
        return cls.from_exprs(chart, rows)

    def __call__(self, coords) -> np.ndarray:
        return self.fn(coords)

    def values(self, points) -> np.ndarray:
        return realize(self.fn(coords_of(points)), points)

    def jet(self, points):
        """Values ``(P, *shape)`` and partials ``(P, n, *shape)`` at ``points``."""
        seeded, tag = seed(coords_of(points))
        vals, parts = jet_objects(self.fn(seeded), tag, self.chart.dim)
        return realize(vals, points), realize(parts, points)

    def same_chart(self, *others: "Field"):
        for o in others:
            if o.chart != self.chart:
                raise ChartMismatch(f"fields live on different charts: {self.chart.label!r} "
                                    f"vs {o.chart.label!r}")


class VectorLike(Field):
    pass


class VectorField(VectorLike):
    """X = X^i d_i."""

    @classmethod
    def coordinate(cls, chart: Chart, i: int) -> "VectorField":
        comps = ["1" if k == i else "0" for k in range(chart.dim)]
        return cls.from_exprs(chart, comps)


class OneForm(VectorLike):
    """xi = xi_i dx^i."""

    @classmethod
    def coordinate(cls, chart: Chart, i: int) -> "OneForm":
        comps = ["1" if k == i else "0" for k in range(chart.dim)]
        return cls.from_exprs(chart, comps)


class MatrixField(Field):
    """An n x n table of components, row index = input."""

    def transpose(self) -> "MatrixField":
        src = self
        return type(self)(self.chart, lambda c: src(c).T, self.shape[::-1])

    def __matmul__(self, other: "MatrixField") -> "MatrixField":
        self.same_chart(other)
        a, b = self, other
        return MatrixField(self.chart, lambda c: a(c) @ b(c), (self.shape[0], other.shape[1]))

    def scaled(self, factor: float) -> "MatrixField":
        src = self
        return type(self)(self.chart, lambda c: src(c) * factor, self.shape)

    def apply(self, v: Field, out_type=None) -> Field:
        """Row-vector application ``v @ self`` as a new field."""
        self.same_chart(v)
        mat = self
        cls = out_type or VectorLike
        return cls(self.chart, lambda c: v(c) @ mat(c), (self.shape[1],))


class EndoField(MatrixField):
    """Endomorphism of TM: ``T d_i = T[i, k] d_k``."""

    def dual(self) -> MatrixField:
        """Table of the dual map ``(J* xi)(X) = xi(J X)`` acting on 1-forms."""
        return MatrixField(self.chart, self.transpose().fn, self.shape)


def zeros(chart: Chart, shape=None) -> MatrixField:
    n = chart.dim
    shp = (n, n) if shape is None else shape
    return MatrixField(chart, lambda c: objarray([0.0] * int(np.prod(shp)), shp), shp)


def identity(chart: Chart) -> MatrixField:
    n = chart.dim
    return MatrixField(chart, lambda c: objarray([1.0 if i == j else 0.0
                                                  for i in range(n) for j in range(n)], (n, n)),
                       (n, n))


@dataclass(frozen=True)
class MetricField:
    g: MatrixField
    g_inv: MatrixField

    @property
    def chart(self) -> Chart:
        return self.g.chart

    def check(self, points, sym_tol: float = 1e-12, inv_tol: float = 1e-10) -> tuple[float, float]:
        g = self.g.values(points)
        gi = self.g_inv.values(points)
        asym = float(np.max(np.abs(g - np.swapaxes(g, -1, -2))))
        if asym > sym_tol:
            raise AsymmetryError(f"metric is not symmetric (defect {asym:.3g})")
        ident = np.broadcast_to(np.eye(self.chart.dim), g.shape)
        inv = float(np.max(np.abs(gi @ g - ident)))
        if inv > inv_tol:
            raise SingularMetricError(f"g_inv is not the inverse of g (defect {inv:.3g})")
        return asym, inv


def pullback_metric(chart: Chart) -> MatrixField:
    """``g_ij = (d emb / d u^i) . (d emb / d u^j)`` as an evaluator."""
    if chart.embedding is None:
        raise ValueError("chart has no embedding")
    emb = chart.embedding
    n = chart.dim

    def fn(coords):
        seeded, tag = seed(coords)
        out = objarray([evaluate(e, seeded) for e in emb], (len(emb),))
        _, parts = jet_objects(out, tag, n)  # parts[i, a] = d x^a / d u^i
        return parts @ parts.T

    return MatrixField(chart, fn, (n, n))


# ---------------------------------------------------------------------------
# classical calculus
# ---------------------------------------------------------------------------

def _jet_at(field_: Field, seeded, tag, n):
    return jet_objects(field_(seeded), tag, n)


def lie_bracket(X: Field, Y: Field) -> VectorField:
    """``[X, Y]^l = X^k d_k Y^l - Y^k d_k X^l``."""
    X.same_chart(Y)
    n = X.chart.dim

    def fn(coords):
        seeded, tag = seed(coords)
        xv, dx = _jet_at(X, seeded, tag, n)
        yv, dy = _jet_at(Y, seeded, tag, n)
        return xv @ dy - yv @ dx

    return VectorField(X.chart, fn, (n,))


def lie_derivative_form(X: Field, eta: Field) -> OneForm:
    """``(L_X eta)_j = X^k d_k eta_j + eta_k d_j X^k``."""
    X.same_chart(eta)
    n = X.chart.dim

    def fn(coords):
        seeded, tag = seed(coords)
        xv, dx = _jet_at(X, seeded, tag, n)
        ev, de = _jet_at(eta, seeded, tag, n)
        return xv @ de + dx @ ev

    return OneForm(X.chart, fn, (n,))


def interior_d(Y: Field, xi: Field) -> OneForm:
    """``(i_Y d xi)_j = Y^i (d_i xi_j - d_j xi_i)``."""
    Y.same_chart(xi)
    n = Y.chart.dim

    def fn(coords):
        seeded, tag = seed(coords)
        yv = _map(lambda x: value_of(x, tag), Y(seeded))
        _, dxi = _jet_at(xi, seeded, tag, n)
        return yv @ dxi - dxi @ yv

    return OneForm(Y.chart, fn, (n,))


def dtwoform(omega: MatrixField, points=None, tol: float = 1e-12) -> Field:
    """``(d omega)_{ijk} = d_i w_jk - d_j w_ik + d_k w_ij`` for a 2-form table."""
    n = omega.chart.dim
    if points is None:
        points = omega.chart.sample(20)
    w = omega.values(points)
    asym = float(np.max(np.abs(w + np.swapaxes(w, -1, -2))))
    if asym > tol * (1.0 + float(np.max(np.abs(w)))):
        raise AsymmetryError(f"2-form table is not antisymmetric (defect {asym:.3g})")

    def fn(coords):
        seeded, tag = seed(coords)
        _, dw = _jet_at(omega, seeded, tag, n)  # dw[a, i, j] = d_a w_ij
        # d_i w_jk - d_j w_ik + d_k w_ij
        return dw - dw.transpose(1, 0, 2) + dw.transpose(1, 2, 0)

    return Field(omega.chart, fn, (n, n, n))


def check_involution(J: Field, points, tol: float = 1e-9) -> float:
    """Max |J^2 + Id| over ``points``; raises if above ``tol``."""
    m = J.values(points)
    sq = m @ m
    dim = m.shape[-1]
    defect = float(np.max(np.abs(sq + np.eye(dim))))
    if defect > tol:
        raise InvolutionError(f"square is not -Id (defect {defect:.3g})")
    return defect


def nijenhuis_classical(J: MatrixField, i: int, j: int, points=None) -> VectorField:
    """Components ``N_J(d_i, d_j)^l`` of the classical Nijenhuis tensor."""
    n = J.chart.dim
    check_involution(J, J.chart.sample(20) if points is None else points)

    def fn(coords):
        seeded, tag = seed(coords)
        m, dm = _jet_at(J, seeded, tag, n)  # m[a, b] = J_a^b, dm[k, a, b] = d_k J_a^b
        return (m[i] @ dm[:, j, :] - m[j] @ dm[:, i, :]
                + (dm[j, i, :] - dm[i, j, :]) @ m)

    return VectorField(J.chart, fn, (n,))


@dataclass(frozen=True)
class Musical:
    """Musical isomorphisms as tables, row index = input.

    ``flat_g`` maps vectors to forms, ``sharp_g`` forms to vectors, and the
    same for the 2-form ``omega = g(J., .)`` whose table is ``flat_omega``.
    """

    flat_g: MatrixField
    sharp_g: MatrixField
    flat_omega: MatrixField | None = None
    sharp_omega: MatrixField | None = None
    eps: int = 1
    extra: dict = field(default_factory=dict)

    @property
    def omega(self) -> MatrixField | None:
        return self.flat_omega


def musical(g: MetricField, J: MatrixField | None = None, eps: int = 1,
            points=None) -> Musical:
    """``flat_g``, ``sharp_g`` and, given ``J``, ``flat_w = flat_g J`` and
    ``sharp_w = eps sharp_g J*``."""
    if eps not in (1, -1):
        raise ValueError("eps must be +1 or -1")
    if points is None:
        points = g.chart.sample(20)
    det = np.linalg.det(g.g.values(points))
    if np.any(np.abs(det) < 1e-300) or not np.all(np.isfinite(det)):
        raise SingularMetricError("metric is singular at a sampled point")
    g.check(points)
    if J is None:
        return Musical(g.g, g.g_inv, eps=eps)
    g.g.same_chart(J)
    flat_w = J @ g.g
    sharp_w = (J.transpose() @ g.g_inv).scaled(float(eps))
    return Musical(g.g, g.g_inv, flat_w, sharp_w, eps)
