"""Float-lane helpers: fast evaluation, orthonormal frames, sphere sampling.

All float linear algebra downstream runs in a coordinate frame that is
orthonormal for the sphere-integral inner product.  The frame is computed
once per shape by an exact rational LDL^T factorization and floated at the
end, so its first vector is exactly the unit form and the remaining rows
span the section hyperplane.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import ratlinalg
from .errors import DomainError
from .measures import sphere_moment
from .poly import Poly, Shape, monomial_basis, unit_form


class FloatForm:
    """A form with float coefficients on an explicit exponent table."""

    __slots__ = ("shape", "exponents", "coeffs", "_grads")

    def __init__(self, shape: Shape, exponents: np.ndarray, coeffs: np.ndarray):
        self.shape = shape
        self.exponents = np.asarray(exponents, dtype=np.int64).reshape(-1, shape.n)
        self.coeffs = np.asarray(coeffs, dtype=np.float64).reshape(-1)
        if self.exponents.shape[0] != self.coeffs.shape[0]:
            raise DomainError("exponent/coefficient length mismatch")
        self._grads = None

    @classmethod
    def from_poly(cls, p: Poly) -> "FloatForm":
        monos = list(p.terms)
        exps = np.array(monos, dtype=np.int64).reshape(len(monos), p.shape.n)
        coeffs = np.array([float(p.terms[m]) for m in monos])
        return cls(p.shape, exps, coeffs)

    @classmethod
    def from_coeff_vector(cls, shape: Shape, vec, basis=None) -> "FloatForm":
        basis = basis if basis is not None else monomial_basis(shape)
        exps = np.array(basis, dtype=np.int64)
        return cls(shape, exps, np.asarray(vec, dtype=np.float64))

    def __neg__(self) -> "FloatForm":
        return FloatForm(self.shape, self.exponents, -self.coeffs)

    def eval(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        single = points.ndim == 1
        if single:
            points = points[None, :]
        vals = np.prod(points[:, None, :] ** self.exponents[None, :, :], axis=2)
        out = vals @ self.coeffs
        return out[0] if single else out

    def _gradient_tables(self):
        if self._grads is None:
            tables = []
            for j in range(self.shape.n):
                mask = self.exponents[:, j] > 0
                exps = self.exponents[mask].copy()
                coeffs = self.coeffs[mask] * exps[:, j]
                exps[:, j] -= 1
                tables.append((exps, coeffs))
            self._grads = tables
        return self._grads

    def grad(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        single = points.ndim == 1
        if single:
            points = points[None, :]
        out = np.zeros_like(points)
        for j, (exps, coeffs) in enumerate(self._gradient_tables()):
            if len(coeffs):
                vals = np.prod(points[:, None, :] ** exps[None, :, :], axis=2)
                out[:, j] = vals @ coeffs
        return out[0] if single else out

    def hessian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        n = self.shape.n
        out = np.zeros((n, n))
        for i, (exps, coeffs) in enumerate(self._gradient_tables()):
            if not len(coeffs):
                continue
            for j in range(i, n):
                mask = exps[:, j] > 0
                if not mask.any():
                    continue
                e2 = exps[mask].copy()
                c2 = coeffs[mask] * e2[:, j]
                e2[:, j] -= 1
                val = float(np.prod(x[None, :] ** e2, axis=1) @ c2)
                out[i, j] = val
                out[j, i] = val
        return out


def coeff_vector(p: Poly, basis=None) -> np.ndarray:
    basis = basis if basis is not None else monomial_basis(p.shape)
    return np.array([float(p.terms.get(m, 0)) for m in basis])


def exact_coeff_vector(p: Poly, basis) -> list[Fraction]:
    return [p.terms.get(m, Fraction(0)) for m in basis]


@dataclass
class Frame:
    """Orthonormal coordinates for the sphere-integral inner product."""

    shape: Shape
    monomials: list
    gram: np.ndarray  # float Gram of the monomial basis
    rows: np.ndarray  # orthonormal basis, rows[0] = unit form

    @property
    def dim(self) -> int:
        return len(self.monomials)

    @property
    def section_rows(self) -> np.ndarray:
        """Rows spanning the hyperplane orthogonal to the unit form."""
        return self.rows[1:]

    def ip(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(u @ self.gram @ v)

    def norm(self, u: np.ndarray) -> float:
        return math.sqrt(max(self.ip(u, u), 0.0))

    def to_frame(self, u: np.ndarray) -> np.ndarray:
        """Coordinates of a coefficient vector in the orthonormal frame."""
        return self.rows @ (self.gram @ u)

    def section_coords(self, u: np.ndarray) -> np.ndarray:
        return self.to_frame(u)[1:]


_frame_lock = threading.Lock()
_frame_cache: dict[Shape, Frame] = {}


def exact_monomial_gram(shape: Shape):
    monos = monomial_basis(shape)
    slices, ns = shape.slices, shape.ns
    size = len(monos)
    gram = [[Fraction(0)] * size for _ in range(size)]
    for i in range(size):
        for j in range(i, size):
            mom = Fraction(1)
            for n_i, sl in zip(ns, slices):
                mom *= sphere_moment(
                    n_i, tuple(x + y for x, y in zip(monos[i][sl], monos[j][sl]))
                )
                if mom == 0:
                    break
            gram[i][j] = mom
            gram[j][i] = mom
    return monos, gram


def build_frame(shape: Shape) -> Frame:
    with _frame_lock:
        cached = _frame_cache.get(shape)
    if cached is not None:
        return cached

    monos, gram = exact_monomial_gram(shape)
    size = len(monos)
    r = unit_form(shape)
    r_vec = [r.terms.get(m, Fraction(0)) for m in monos]
    drop = next(i for i, c in enumerate(r_vec) if c != 0)
    # Basis rows in monomial coordinates: the unit form first, then the
    # monomials with one dropped to keep the matrix square and invertible.
    rows_exact = [r_vec]
    for i in range(size):
        if i != drop:
            rows_exact.append(
                [Fraction(1) if j == i else Fraction(0) for j in range(size)]
            )
    inner = [
        [
            sum(
                rows_exact[a][i] * gram[i][j] * rows_exact[b][j]
                for i in range(size)
                for j in range(size)
                if rows_exact[a][i] and rows_exact[b][j]
            )
            for b in range(size)
        ]
        for a in range(size)
    ]
    low, diag = ratlinalg.ldl(inner)
    ortho = []
    for i in range(size):
        w = list(rows_exact[i])
        for l in range(i):
            f = low[i][l]
            if f:
                w = [a - f * b for a, b in zip(w, ortho[l])]
        ortho.append(w)
    rows = np.array(
        [
            [float(v) / math.sqrt(float(diag[i])) for v in ortho[i]]
            for i in range(size)
        ]
    )
    frame = Frame(
        shape=shape,
        monomials=monos,
        gram=np.array([[float(v) for v in row] for row in gram]),
        rows=rows,
    )
    with _frame_lock:
        return _frame_cache.setdefault(shape, frame)


def orthonormal_basis_rows(shape: Shape):
    """Orthonormal rows for the monomial basis of any degree layout.

    Unlike `build_frame` this does not anchor the first vector at the unit
    form, so it works for odd-degree spaces too (e.g. half-degree spaces).
    Returns (monomials, float rows).
    """
    monos, gram = exact_monomial_gram(shape)
    size = len(monos)
    low, diag = ratlinalg.ldl(gram)
    ortho = []
    for i in range(size):
        w = [Fraction(1) if j == i else Fraction(0) for j in range(size)]
        for l in range(i):
            f = low[i][l]
            if f:
                w = [a - f * b for a, b in zip(w, ortho[l])]
        ortho.append(w)
    rows = np.array(
        [
            [float(v) / math.sqrt(float(diag[i])) for v in ortho[i]]
            for i in range(size)
        ]
    )
    return monos, rows


# -- sphere sampling and retraction ----------------------------------------


def block_normalize(points: np.ndarray, shape: Shape) -> np.ndarray:
    points = np.array(points, dtype=np.float64, copy=True)
    single = points.ndim == 1
    if single:
        points = points[None, :]
    for sl in shape.slices:
        norms = np.linalg.norm(points[:, sl], axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        points[:, sl] /= norms
    return points[0] if single else points


def sphere_points(rng: np.random.Generator, shape: Shape, count: int) -> np.ndarray:
    return block_normalize(rng.standard_normal((count, shape.n)), shape)


def tangent_project(grad: np.ndarray, points: np.ndarray, shape: Shape) -> np.ndarray:
    out = np.array(grad, dtype=np.float64, copy=True)
    single = out.ndim == 1
    if single:
        out = out[None, :]
        points = points[None, :]
    for sl in shape.slices:
        dots = np.sum(out[:, sl] * points[:, sl], axis=1, keepdims=True)
        out[:, sl] -= dots * points[:, sl]
    return out[0] if single else out


def random_block_rotation(rng: np.random.Generator, shape: Shape) -> np.ndarray:
    """Block-diagonal special orthogonal matrix, for invariance tests."""
    n = shape.n
    rot = np.zeros((n, n))
    for sl in shape.slices:
        size = sl.stop - sl.start
        q, r = np.linalg.qr(rng.standard_normal((size, size)))
        q *= np.sign(np.diag(r))
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        rot[sl, sl] = q
    return rot


def worker_streams(seed: int, workers: int) -> list[np.random.Generator]:
    """Independent counter-based streams, deterministic in (seed, workers)."""
    base = np.random.Philox(key=int(seed))
    return [np.random.Generator(base.jumped(w + 1)) for w in range(workers)]
