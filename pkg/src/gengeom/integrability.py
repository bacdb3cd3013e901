"""The eight coordinate integrability conditions and the frame-Nijenhuis oracle.

Block notation follows the row-is-input convention of :mod:`gengeom.genbundle`:

    A[i, k]  coefficient of d_k in A d_i          (A_i^k)
    B[i, k]  coefficient of d_k in B dx^i         (B^{ik})
    C[i, k]  coefficient of dx^k in C d_i         (C_{ik})
    D[i, k]  coefficient of dx^k in D dx^i        (D^i_k)

and ``dA[x, i, k]`` is the partial of ``A[i, k]`` along ``x^x``.  Inside the
condition loop the free indices ``i, j, l`` are broadcast index arrays, so each
line below reads like the coordinate formula it implements.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chart import Chart, OneForm, VectorField, coords_of, realize
from .dorfman import gen_nijenhuis, nijenhuis_jets
from .exprcore import seed
from .genbundle import BlockEndo, GenSection, classify

__all__ = ["BlockJet", "ResidualReport", "block_jet", "condition_residuals",
           "oracle_frame_nijenhuis", "strong_sufficiency_check",
           "symmetrized_conditions", "TOL_VANISH", "TOL_NONVANISH"]

TOL_VANISH = 1e-9
TOL_NONVANISH = 1e-3

# frame pair kinds in oracle order: (first is form, second is form)
_PAIRS = ((False, False), (False, True), (True, False), (True, True))


@dataclass
class BlockJet:
    """Block values ``(P, n, n)`` and first partials ``(P, n, n, n)`` of a structure."""
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    dA: np.ndarray
    dB: np.ndarray
    dC: np.ndarray
    dD: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[-1]

    @classmethod
    def from_arrays(cls, vals: np.ndarray, parts: np.ndarray) -> "BlockJet":
        n = vals.shape[-1] // 2
        lo, hi = slice(0, n), slice(n, 2 * n)
        return cls(vals[:, lo, lo], vals[:, hi, lo], vals[:, lo, hi], vals[:, hi, hi],
                   parts[:, :, lo, lo], parts[:, :, hi, lo], parts[:, :, lo, hi],
                   parts[:, :, hi, hi])

    def combine(self, coeffs, others) -> "BlockJet":
        """``sum c_m * jet_m`` for constant coefficients (the bracket is linear in the data)."""
        names = ("A", "B", "C", "D", "dA", "dB", "dC", "dD")
        out = {k: sum(c * getattr(o, k) for c, o in zip(coeffs, others)) for k in names}
        return BlockJet(**out)


def _batch(points) -> np.ndarray:
    return np.atleast_2d(np.asarray(points, dtype=float))


def block_jet(T: BlockEndo, points) -> BlockJet:
    vals, parts = T.jet(_batch(points))
    return BlockJet.from_arrays(vals, parts)


@dataclass
class ResidualReport:
    """Residuals of the eight conditions, shape ``(8, P, n, n, n)`` over ``(cond, point, i, j, l)``.

    ``scale`` carries the largest summand magnitude for each entry and is used
    to scale the vanishing tolerance.
    """
    residuals: np.ndarray
    scale: np.ndarray
    points: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return self.residuals.size

    def max_abs(self, condition: int | None = None) -> float:
        r = self.residuals if condition is None else self.residuals[condition - 1]
        return float(np.max(np.abs(r)))

    def per_condition(self) -> list[float]:
        return [self.max_abs(c) for c in range(1, 9)]

    def argmax(self) -> dict:
        """Location of the largest residual; condition and indices are 1-based."""
        c, p, i, j, l = np.unravel_index(np.argmax(np.abs(self.residuals)), self.residuals.shape)
        return {"condition": int(c) + 1, "point": int(p), "i": int(i) + 1, "j": int(j) + 1,
                "l": int(l) + 1, "value": float(self.residuals[c, p, i, j, l])}

    def vanishes(self, tol: float = TOL_VANISH, condition: int | None = None) -> bool:
        sl = slice(None) if condition is None else condition - 1
        r, s = np.abs(self.residuals[sl]), self.scale[sl]
        return bool(np.all(r <= tol * (1.0 + s)))

    def verdict(self, tol_vanish: float = TOL_VANISH, tol_nonvanish: float = TOL_NONVANISH) -> str:
        if self.vanishes(tol_vanish):
            return "vanishes"
        if self.max_abs() >= tol_nonvanish:
            return "nonvanishing"
        return "inconclusive"

    def summary(self, tol_vanish: float = TOL_VANISH, tol_nonvanish: float = TOL_NONVANISH) -> dict:
        return {"max_residual": self.max_abs(), "argmax": self.argmax(),
                "per_condition": self.per_condition(),
                "verdict": self.verdict(tol_vanish, tol_nonvanish)}


def _conditions(bj: BlockJet) -> tuple[np.ndarray, np.ndarray]:
    A, B, C, D = bj.A, bj.B, bj.C, bj.D
    dA, dB, dC, dD = bj.dA, bj.dB, bj.dC, bj.dD
    P, n = A.shape[0], bj.n
    i = np.arange(n)[:, None, None]
    j = np.arange(n)[None, :, None]
    l = np.arange(n)[None, None, :]
    res = np.zeros((8, P, n, n, n))
    scale = np.zeros_like(res)

    def term(c, factor, *parts):
        # factor * (sum of parts); scale sees |factor| * sum |parts|
        inner = parts[0] if len(parts) == 1 else sum(parts)
        res[c] += factor * inner
        mag = np.abs(factor) * sum(np.abs(q) for q in parts)
        np.maximum(scale[c], mag, out=scale[c])

    for k in range(n):
        # 1: vector part of N(d_i, d_j)
        term(0, A[:, i, k], dA[:, k, j, l])
        term(0, -A[:, j, k], dA[:, k, i, l])
        term(0, A[:, k, l], dA[:, j, i, k], -dA[:, i, j, k])
        term(0, -B[:, k, l], dC[:, i, j, k], -dC[:, j, i, k], dC[:, k, i, j])
        # 2: form part of N(d_i, d_j)
        term(1, A[:, i, k], dC[:, k, j, l])
        term(1, C[:, j, k], dA[:, l, i, k])
        term(1, A[:, j, k], dC[:, l, i, k], -dC[:, k, i, l])
        term(1, C[:, k, l], dA[:, j, i, k], -dA[:, i, j, k])
        term(1, -D[:, k, l], dC[:, i, j, k], -dC[:, j, i, k], dC[:, k, i, j])
        # 3: vector part of N(d_i, dx^j)
        term(2, A[:, i, k], dB[:, k, j, l])
        term(2, -B[:, j, k], dA[:, k, i, l])
        term(2, -A[:, k, l], dB[:, i, j, k])
        term(2, -B[:, k, l], dA[:, k, i, j], dD[:, i, j, k])
        # 4: form part of N(d_i, dx^j)
        term(3, A[:, i, k], dD[:, k, j, l])
        term(3, D[:, j, k], dA[:, l, i, k])
        term(3, B[:, j, k], dC[:, l, i, k], -dC[:, k, i, l])
        term(3, -C[:, k, l], dB[:, i, j, k])
        term(3, -D[:, k, l], dA[:, k, i, j], dD[:, i, j, k])
        # 5: vector part of N(dx^i, d_j)
        term(4, B[:, i, k], dA[:, k, j, l])
        term(4, -A[:, j, k], dB[:, k, i, l])
        term(4, A[:, k, l], dB[:, j, i, k])
        term(4, B[:, k, l], dD[:, j, i, k], -dD[:, k, i, j])
        # 6: form part of N(dx^i, d_j)
        term(5, B[:, i, k], dC[:, k, j, l])
        term(5, C[:, j, k], dB[:, l, i, k])
        term(5, A[:, j, k], dD[:, l, i, k], -dD[:, k, i, l])
        term(5, C[:, k, l], dB[:, j, i, k])
        term(5, D[:, k, l], dD[:, j, i, k], -dD[:, k, i, j])
        # 7: vector part of N(dx^i, dx^j)
        term(6, B[:, i, k], dB[:, k, j, l])
        term(6, -B[:, j, k], dB[:, k, i, l])
        term(6, -B[:, k, l], dB[:, k, i, j])
        # 8: form part of N(dx^i, dx^j)
        term(7, B[:, i, k], dD[:, k, j, l])
        term(7, D[:, j, k], dB[:, l, i, k])
        term(7, B[:, j, k], dD[:, l, i, k], -dD[:, k, i, l])
        term(7, -D[:, k, l], dB[:, k, i, j])
    return res, scale


def residuals_from_jet(bj: BlockJet, points=None) -> ResidualReport:
    res, scale = _conditions(bj)
    return ResidualReport(res, scale, points)


def condition_residuals(T: BlockEndo, points, check: bool = True, tol: float = 1e-9) -> ResidualReport:
    """Evaluate the left-hand sides of all eight conditions at every index triple and point."""
    pts = _batch(points)
    if check:
        T.check_square(pts, tol)
    return residuals_from_jet(block_jet(T, pts), pts)


def oracle_frame_nijenhuis(T: BlockEndo, points, check: bool = True, tol: float = 1e-9) -> np.ndarray:
    """Generalized Nijenhuis map on coordinate frame pairs, laid out like the condition residuals.

    Slot ``2m`` holds the vector part and slot ``2m + 1`` the form part of the
    ``m``-th pair kind: (d_i, d_j), (d_i, dx^j), (dx^i, d_j), (dx^i, dx^j).
    Computed through the Dorfman bracket, independently of the condition formulas.
    """
    pts = _batch(points)
    if check:
        T.check_square(pts, tol)
    n = T.chart.dim
    P = pts.shape[0]
    seeded, tag = seed(coords_of(pts))
    table = T(seeded)
    eye = np.eye(2 * n)
    out = np.zeros((8, P, n, n, n))
    for m, (form_i, form_j) in enumerate(_PAIRS):
        for i in range(n):
            for j in range(n):
                a, b = i + n * form_i, j + n * form_j
                N = realize(nijenhuis_jets(table, eye[a], eye[b], tag, n), pts)
                out[2 * m, :, i, j, :] = N[:, :n]
                out[2 * m + 1, :, i, j, :] = N[:, n:]
    return out


def _random_section(chart: Chart, rng: np.random.Generator) -> GenSection:
    names = chart.names
    n = chart.dim

    def coeff():
        a, b = rng.integers(0, n, size=2)
        c0, c1, c2 = np.round(rng.uniform(-1.5, 1.5, size=3), 3)
        return f"{c0} + {c1}*sin({names[a]}) + {c2}*{names[b]}*cos({names[a]})"

    return GenSection.from_parts(chart, VectorField.from_strings(chart, [coeff() for _ in range(n)]),
                                 OneForm.from_strings(chart, [coeff() for _ in range(n)]))


def strong_sufficiency_check(T: BlockEndo, points, pairs: int = 20, seed_: int = 0,
                             tol: float = 1e-8, detail: bool = False):
    """For a strong structure, conditions vanish exactly when ``N`` vanishes on random sections.

    Returns ``True`` when both sides agree (both vanish, or both fail); with
    ``detail`` also returns the two maxima.
    """
    if not classify(T, points).strong:
        raise ValueError("sufficiency is only asserted for strong structures")
    pts = _batch(points)
    cond = condition_residuals(T, pts)
    cond_vanish = cond.vanishes(tol)
    rng = np.random.default_rng(seed_)
    worst = 0.0
    for _ in range(pairs):
        u, v = _random_section(T.chart, rng), _random_section(T.chart, rng)
        worst = max(worst, float(np.max(np.abs(gen_nijenhuis(T, u, v).values(pts)))))
    nij_vanish = worst <= tol
    ok = cond_vanish == nij_vanish
    return (ok, cond.max_abs(), worst) if detail else ok


def symmetrized_conditions(T: BlockEndo, p) -> tuple[np.ndarray, np.ndarray]:
    """The two symmetrized consequences ``S1`` and ``S2`` over ``(i, j, l)``.

    ``S1 = B^{kl}(d_k A_i^j + d_k D^j_i)`` and ``S2 = B^{kl} d_k(B^{ij} + B^{ji})``.
    A single point gives arrays of shape ``(n, n, n)``; a batch prepends ``P``.
    """
    single = np.ndim(p) == 1
    bj = block_jet(T, p)
    n = bj.n
    i = np.arange(n)[:, None, None]
    j = np.arange(n)[None, :, None]
    l = np.arange(n)[None, None, :]
    s1 = np.zeros((bj.A.shape[0], n, n, n))
    s2 = np.zeros_like(s1)
    for k in range(n):
        s1 += bj.B[:, k, l] * (bj.dA[:, k, i, j] + bj.dD[:, k, j, i])
        s2 += bj.B[:, k, l] * (bj.dB[:, k, i, j] + bj.dB[:, k, j, i])
    return (s1[0], s2[0]) if single else (s1, s2)
