"""The two inner products on a multihomogeneous space, evaluated exactly.

The "usual" product integrates fg over the product of unit spheres, each
sphere carrying its uniform *probability* measure (so the unit form pairs to
1 with itself).  The "differential" product applies one polynomial to the
other as a constant-coefficient differential operator.  Both reduce to finite
rational formulas, so every identity downstream can be tested with `==`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from . import ratlinalg
from .errors import ParityError, ShapeError
from .poly import Poly, Shape, apply_D


def _double_factorial(k: int) -> int:
    # (-1)!! = 1 by convention
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def sphere_moment(n: int, alpha) -> Fraction:
    """Moment of the monomial v^alpha over S^{n-1} (uniform probability).

    Zero when any exponent is odd; otherwise
    prod (alpha_j - 1)!! / (n (n+2) ... (n + |alpha| - 2)).
    A one-variable block is the two-point uniform measure on {-1, +1}.
    """
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n:
        raise ShapeError(f"exponent vector {alpha} has wrong length for n={n}")
    if any(a < 0 for a in alpha):
        raise ShapeError(f"negative exponent in {alpha}")
    if any(a % 2 for a in alpha):
        return Fraction(0)
    total = sum(alpha)
    if total == 0:
        return Fraction(1)
    num = math.prod(_double_factorial(a - 1) for a in alpha)
    den = math.prod(n + 2 * t for t in range(total // 2))
    return Fraction(num, den)


def _require_same_shape(f: Poly, g: Poly) -> Shape:
    if f.shape.ns != g.shape.ns or f.shape.degrees != g.shape.degrees:
        raise ShapeError("inner products need operands of one shape")
    return f.shape


def usual_ip(f: Poly, g: Poly) -> Fraction:
    """Integral of fg over the product of spheres, exactly."""
    shape = _require_same_shape(f, g)
    slices = shape.slices
    ns = shape.ns
    total = Fraction(0)
    for a, ca in f.terms.items():
        for b, cb in g.terms.items():
            mom = Fraction(1)
            for n_i, sl in zip(ns, slices):
                mom *= sphere_moment(
                    n_i, tuple(x + y for x, y in zip(a[sl], b[sl]))
                )
                if mom == 0:
                    break
            if mom:
                total += ca * cb * mom
    return total


def diff_ip(f: Poly, g: Poly) -> Fraction:
    """Differential (apolar) pairing; equals apply_D(f, g) as a constant."""
    _require_same_shape(f, g)
    total = Fraction(0)
    for mono, ca in f.terms.items():
        cb = g.terms.get(mono)
        if cb is not None:
            total += ca * cb * math.prod(math.factorial(e) for e in mono)
    return total


def axis_moment(shape: Shape) -> Fraction:
    """Product over blocks of the top-degree moment of one coordinate.

    This is the normalizer of the averaging operator; zero when a block
    degree is odd.
    """
    out = Fraction(1)
    for n, d in shape.blocks:
        out *= sphere_moment(n, (0,) * (n - 1) + (d,))
    return out


def pairing_scale(shape: Shape) -> Fraction:
    """Ratio between the differential and usual pairings under averaging.

    Equals prod_i d_i! divided by the axis moment; also equals the
    differential self-pairing of the unit form.
    """
    if not shape.is_even:
        raise ParityError(f"{shape.literal()} has an odd block degree")
    return Fraction(math.prod(math.factorial(d) for d in shape.degrees)) / axis_moment(
        shape
    )


@dataclass(frozen=True)
class GramMatrix:
    shape: Shape
    basis: tuple[Poly, ...]
    entries: tuple[tuple[Fraction, ...], ...]
    which: str

    @property
    def size(self) -> int:
        return len(self.basis)

    def is_symmetric(self) -> bool:
        return all(
            self.entries[i][j] == self.entries[j][i]
            for i in range(self.size)
            for j in range(i)
        )

    def det(self) -> Fraction:
        return ratlinalg.det([list(row) for row in self.entries])


def gram(basis, which: str = "usual") -> GramMatrix:
    """Exact Gram matrix of a family of polynomials of one shape."""
    basis = tuple(basis)
    if not basis:
        raise ShapeError("empty basis")
    shape = basis[0].shape
    for p in basis[1:]:
        _require_same_shape(basis[0], p)
    if which == "usual":
        ip = usual_ip
    elif which in ("differential", "diff"):
        ip = diff_ip
        which = "differential"
    else:
        raise ShapeError(f"unknown inner product {which!r}")
    size = len(basis)
    rows = [[Fraction(0)] * size for _ in range(size)]
    for i in range(size):
        for j in range(i, size):
            val = ip(basis[i], basis[j])
            rows[i][j] = val
            rows[j][i] = val
    entries = tuple(tuple(row) for row in rows)
    return GramMatrix(shape=shape, basis=basis, entries=entries, which=which)


def diff_pairing_oracle(f: Poly, g: Poly) -> Fraction:
    """Independent route to diff_ip through the differential operator."""
    return apply_D(f, g).constant_value()
