"""Joint harmonic subspaces, the radial decomposition, and zonal kernels.

A form is jointly harmonic when every block Laplacian annihilates it.  The
whole space splits as an orthogonal sum of radial multiples of such
subspaces, indexed by per-block degrees that step down from the shape's
degrees in twos.  Zonal kernels reproduce point evaluation against the
sphere-integral inner product.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as _product
from math import comb

from . import ratlinalg
from .errors import DimensionCapError, DomainError, ShapeError
from .poly import Poly, Shape, monomial_basis, radial_power
from .measures import usual_ip

EXACT_DIM_CAP = 2000

_lock = threading.Lock()
_basis_cache: dict[tuple[Shape, tuple[int, ...]], "_AlphaBasis"] = {}
_solver_cache: dict[Shape, "_ExpansionSolver"] = {}


def set_exact_dim_cap(cap: int) -> None:
    global EXACT_DIM_CAP
    EXACT_DIM_CAP = int(cap)


def _check_cap(shape: Shape) -> None:
    if shape.dim_P > EXACT_DIM_CAP:
        raise DimensionCapError(
            f"dim {shape.dim_P} exceeds the exact-arithmetic cap {EXACT_DIM_CAP}"
        )


def alpha_indices(shape: Shape) -> list[tuple[int, ...]]:
    """Admissible per-block harmonic degrees, lowest first.

    Each entry steps down from the block degree by twos, so parities match
    the shape; for even shapes this is exactly the even-degree index set.
    """
    ranges = [range(d % 2, d + 1, 2) for d in shape.degrees]
    return [tuple(combo) for combo in _product(*ranges)]


def dim_h_block(n: int, j: int) -> int:
    """Dimension of degree-j harmonics in n variables."""
    if j < 0:
        raise ShapeError(f"negative degree {j}")
    if j == 0:
        return 1
    return comb(n + j - 1, j) - (comb(n + j - 3, j - 2) if j >= 2 else 0)


def dim_h(shape: Shape, alpha) -> int:
    alpha = tuple(alpha)
    out = 1
    for (n, _), a in zip(shape.blocks, alpha):
        out *= dim_h_block(n, a)
    return out


def dims_h_table(shape: Shape) -> dict[tuple[int, ...], int]:
    return {alpha: dim_h(shape, alpha) for alpha in alpha_indices(shape)}


@dataclass(frozen=True)
class _AlphaBasis:
    """Orthogonalized harmonic basis for one index, with self-pairings."""

    polys: tuple[Poly, ...]
    norms: tuple[Fraction, ...]


def _validate_alpha(shape: Shape, alpha) -> tuple[int, ...]:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != shape.m:
        raise ShapeError("need one harmonic degree per block")
    for a, d in zip(alpha, shape.degrees):
        if a < 0 or a > d or (d - a) % 2:
            raise ShapeError(
                f"harmonic degrees {alpha} are not admissible for {shape.literal()}"
            )
    return alpha


def _compute_alpha_basis(shape: Shape, alpha: tuple[int, ...]) -> _AlphaBasis:
    sub = shape.with_degrees(alpha)
    source = monomial_basis(sub)
    col_of = {mono: i for i, mono in enumerate(source)}
    rows: list[list[Fraction]] = []
    for i, (n_i, _) in enumerate(shape.blocks):
        if alpha[i] < 2:
            continue
        lowered = tuple(a - 2 if b == i else a for b, a in enumerate(alpha))
        targets = monomial_basis(sub.with_degrees(lowered))
        row_of = {mono: r for r, mono in enumerate(targets)}
        block_rows = [[Fraction(0)] * len(source) for _ in targets]
        sl = shape.slices[i]
        for mono, c in col_of.items():
            for j in range(sl.start, sl.stop):
                e = mono[j]
                if e >= 2:
                    low = mono[:j] + (e - 2,) + mono[j + 1 :]
                    block_rows[row_of[low]][c] += e * (e - 1)
        rows.extend(block_rows)
    vectors = ratlinalg.nullspace(rows, len(source))
    raw = [
        Poly(sub, {source[t]: v[t] for t in range(len(source)) if v[t] != 0})
        for v in vectors
    ]
    expected = dim_h(shape, alpha)
    if len(raw) != expected:
        raise DomainError(
            f"harmonic space at {alpha} has dimension {len(raw)}, expected {expected}"
        )
    # Gram-based orthogonalization without normalization keeps everything
    # rational; the self-pairings are carried alongside.
    ortho: list[Poly] = []
    norms: list[Fraction] = []
    for h in raw:
        for o, nrm in zip(ortho, norms):
            c = usual_ip(h, o)
            if c:
                h = h - o * (c / nrm)
        nrm = usual_ip(h, h)
        if nrm == 0:
            raise DomainError("harmonic basis degenerated during orthogonalization")
        ortho.append(h)
        norms.append(nrm)
    return _AlphaBasis(polys=tuple(ortho), norms=tuple(norms))


def _alpha_basis(shape: Shape, alpha: tuple[int, ...]) -> _AlphaBasis:
    key = (shape, alpha)
    with _lock:
        cached = _basis_cache.get(key)
    if cached is not None:
        return cached
    computed = _compute_alpha_basis(shape, alpha)
    with _lock:
        return _basis_cache.setdefault(key, computed)


def harmonic_basis(shape: Shape, alpha) -> tuple[Poly, ...]:
    """Exact orthogonal basis of the joint Laplacian nullspace at alpha."""
    _check_cap(shape)
    alpha = _validate_alpha(shape, alpha)
    return _alpha_basis(shape, alpha).polys


def harmonic_norms(shape: Shape, alpha) -> tuple[Fraction, ...]:
    alpha = _validate_alpha(shape, alpha)
    return _alpha_basis(shape, alpha).norms


@dataclass(frozen=True)
class HarmonicSplit:
    """Components f_alpha with p = sum over alpha of radial^... * f_alpha."""

    shape: Shape
    components: dict[tuple[int, ...], Poly]

    def reconstruct(self) -> Poly:
        total = Poly.zero(self.shape)
        for alpha, part in self.components.items():
            if part.is_zero():
                continue
            lift = tuple(d - a for d, a in zip(self.shape.degrees, alpha))
            total = total + radial_power(self.shape, lift) * part
        return total


class _ExpansionSolver:
    """Cached exact factorization of the radial-harmonic expansion basis."""

    def __init__(self, shape: Shape):
        self.shape = shape
        self.monomials = monomial_basis(shape)
        index = {mono: i for i, mono in enumerate(self.monomials)}
        self.layout: list[tuple[tuple[int, ...], int]] = []
        columns: list[list[Fraction]] = []
        for alpha in alpha_indices(shape):
            basis = _alpha_basis(shape, alpha)
            lift = tuple(d - a for d, a in zip(shape.degrees, alpha))
            rad = radial_power(shape, lift)
            for j, h in enumerate(basis.polys):
                expanded = rad * h
                col = [Fraction(0)] * len(self.monomials)
                for mono, c in expanded.terms.items():
                    col[index[mono]] = c
                columns.append(col)
                self.layout.append((alpha, j))
        if len(columns) != len(self.monomials):
            raise DomainError(
                "radial-harmonic expansion is not square: "
                f"{len(columns)} columns vs dimension {len(self.monomials)}"
            )
        matrix = [
            [columns[c][r] for c in range(len(columns))]
            for r in range(len(self.monomials))
        ]
        self.lu = ratlinalg.LU(matrix)
        self.index = index

    def decompose(self, p: Poly) -> HarmonicSplit:
        vec = [Fraction(0)] * len(self.monomials)
        for mono, c in p.terms.items():
            vec[self.index[mono]] = c
        coords = self.lu.solve(vec)
        parts: dict[tuple[int, ...], Poly] = {}
        for alpha in alpha_indices(self.shape):
            basis = _alpha_basis(self.shape, alpha)
            part = Poly.zero(self.shape.with_degrees(alpha))
            for (a, j), coord in zip(self.layout, coords):
                if a == alpha and coord != 0:
                    part = part + basis.polys[j] * coord
            parts[alpha] = part
        return HarmonicSplit(shape=self.shape, components=parts)


def _solver(shape: Shape) -> _ExpansionSolver:
    with _lock:
        cached = _solver_cache.get(shape)
    if cached is not None:
        return cached
    built = _ExpansionSolver(shape)
    with _lock:
        return _solver_cache.setdefault(shape, built)


def pi_decompose(p: Poly) -> HarmonicSplit:
    """Split p into its radial-harmonic components, exactly."""
    _check_cap(p.shape)
    return _solver(p.shape).decompose(p)


def check_on_spheres(shape: Shape, point) -> tuple[Fraction, ...]:
    """Validate that a rational point lies on every block's unit sphere."""
    point = tuple(Fraction(v) for v in point)
    if len(point) != shape.n:
        raise ShapeError(f"point has {len(point)} coordinates, expected {shape.n}")
    for i, sl in enumerate(shape.slices):
        norm_sq = sum(v * v for v in point[sl])
        if norm_sq != 1:
            raise DomainError(
                f"block {i + 1} of the point has squared norm {norm_sq}, not 1"
            )
    return point


def zonal_kernel(shape: Shape, v, alpha) -> Poly:
    """Reproducing element of the harmonic subspace at alpha for the point v."""
    _check_cap(shape)
    v = check_on_spheres(shape, v)
    alpha = _validate_alpha(shape, alpha)
    basis = _alpha_basis(shape, alpha)
    out = Poly.zero(shape.with_degrees(alpha))
    for h, nrm in zip(basis.polys, basis.norms):
        val = h(v)
        if val:
            out = out + h * (val / nrm)
    return out


def reproducing_kernel(shape: Shape, v) -> Poly:
    """The kernel p with <f, p> = f(v) on the whole space, expanded."""
    _check_cap(shape)
    v = check_on_spheres(shape, v)
    total = Poly.zero(shape)
    for alpha in alpha_indices(shape):
        q = zonal_kernel(shape, v, alpha)
        if q.is_zero():
            continue
        lift = tuple(d - a for d, a in zip(shape.degrees, alpha))
        total = total + radial_power(shape, lift) * q
    return total


def clear_caches() -> None:
    with _lock:
        _basis_cache.clear()
        _solver_cache.clear()
