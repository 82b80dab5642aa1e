"""Exact sparse polynomial arithmetic over blocked variable sets.

Variables x1..xn are split into contiguous blocks; every polynomial handled
here is homogeneous of a fixed degree within each block.  Coefficients are
`fractions.Fraction` end to end, so algebraic identities can be asserted with
`==` instead of tolerances.

Representation: a monomial is an exponent tuple over all n variables; a
polynomial maps monomials to nonzero rational coefficients.  The zero
polynomial has an empty term map.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as _product
from typing import Iterable, Iterator, Mapping

from .errors import ParityError, ParseError, ShapeError

MultiIndex = tuple[int, ...]


@dataclass(frozen=True)
class Shape:
    """Block layout: one (variable count, block degree) pair per block."""

    blocks: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        blocks = tuple((int(n), int(d)) for n, d in self.blocks)
        if not blocks:
            raise ShapeError("a shape needs at least one block")
        for n, d in blocks:
            if n < 1:
                raise ShapeError(f"block dimension must be >= 1, got {n}")
            if d < 0:
                raise ShapeError(f"block degree must be >= 0, got {d}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def of(cls, ns: Iterable[int], degrees: Iterable[int]) -> "Shape":
        ns, degrees = tuple(ns), tuple(degrees)
        if len(ns) != len(degrees):
            raise ShapeError("need one degree per block")
        return cls(tuple(zip(ns, degrees)))

    @classmethod
    def parse(cls, text: str) -> "Shape":
        """Parse a shape literal such as ``N=3,2 K=2,3``."""
        ns = degs = None
        for token in text.replace(";", " ").split():
            m = re.fullmatch(r"(N|K)=(\d+(?:,\d+)*)", token)
            if not m:
                raise ParseError(f"bad shape token {token!r}")
            values = tuple(int(v) for v in m.group(2).split(","))
            if m.group(1) == "N":
                ns = values
            else:
                degs = values
        if ns is None or degs is None:
            raise ParseError(f"shape literal needs both N= and K=: {text!r}")
        return cls.of(ns, degs)

    def literal(self) -> str:
        return "N={} K={}".format(
            ",".join(str(n) for n in self.ns),
            ",".join(str(d) for d in self.degrees),
        )

    @property
    def ns(self) -> tuple[int, ...]:
        return tuple(n for n, _ in self.blocks)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.blocks)

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def n(self) -> int:
        return sum(self.ns)

    @property
    def slices(self) -> tuple[slice, ...]:
        out, start = [], 0
        for n, _ in self.blocks:
            out.append(slice(start, start + n))
            start += n
        return tuple(out)

    @property
    def dim_P(self) -> int:
        return math.prod(math.comb(n + d - 1, d) for n, d in self.blocks)

    @property
    def M(self) -> int:
        return self.dim_P - 1

    @property
    def is_even(self) -> bool:
        return all(d % 2 == 0 for d in self.degrees)

    @property
    def half_degrees(self) -> tuple[int, ...]:
        if not self.is_even:
            raise ParityError(f"{self.literal()} has an odd block degree")
        return tuple(d // 2 for d in self.degrees)

    def with_degrees(self, degrees: Iterable[int]) -> "Shape":
        return Shape.of(self.ns, degrees)

    def block_degrees(self, exps: MultiIndex) -> tuple[int, ...]:
        return tuple(sum(exps[s]) for s in self.slices)

    def __str__(self) -> str:
        return self.literal()


def _compositions(nvars: int, total: int) -> Iterator[tuple[int, ...]]:
    """All exponent tuples of length nvars summing to total, lex-descending."""
    if nvars == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(nvars - 1, total - first):
            yield (first,) + rest


def monomial_basis(shape: Shape) -> list[MultiIndex]:
    """Monomials spanning the space, graded-lex within the block order."""
    per_block = [list(_compositions(n, d)) for n, d in shape.blocks]
    return [sum(combo, ()) for combo in _product(*per_block)]


class Poly:
    """A multihomogeneous polynomial with exact rational coefficients."""

    __slots__ = ("shape", "terms")

    def __init__(self, shape: Shape, terms: Mapping[MultiIndex, Fraction | int]):
        canon: dict[MultiIndex, Fraction] = {}
        degrees = shape.degrees
        for mono, coeff in terms.items():
            coeff = Fraction(coeff)
            if coeff == 0:
                continue
            mono = tuple(mono)
            if len(mono) != shape.n:
                raise ShapeError(f"monomial {mono} has wrong length for {shape}")
            if any(e < 0 for e in mono):
                raise ShapeError(f"negative exponent in {mono}")
            if shape.block_degrees(mono) != degrees:
                raise ShapeError(
                    f"monomial {mono} does not have block degrees {degrees}"
                )
            canon[mono] = canon.get(mono, Fraction(0)) + coeff
        object.__setattr__(self, "shape", shape)
        object.__setattr__(
            self, "terms", {m: c for m, c in canon.items() if c != 0}
        )

    def __setattr__(self, name, value):  # immutable
        raise AttributeError("Poly is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, shape: Shape) -> "Poly":
        return cls(shape, {})

    @classmethod
    def constant(cls, shape: Shape, value: Fraction | int) -> "Poly":
        zero_shape = shape.with_degrees((0,) * shape.m)
        return cls(zero_shape, {(0,) * shape.n: Fraction(value)})

    @classmethod
    def monomial(
        cls, shape: Shape, exps: MultiIndex, coeff: Fraction | int = 1
    ) -> "Poly":
        exps = tuple(exps)
        return cls(shape.with_degrees(shape.block_degrees(exps)), {exps: coeff})

    @classmethod
    def variable(cls, shape: Shape, index: int) -> "Poly":
        if not 0 <= index < shape.n:
            raise ShapeError(f"variable index {index} out of range")
        exps = tuple(1 if j == index else 0 for j in range(shape.n))
        return cls.monomial(shape, exps)

    # -- queries -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def constant_value(self) -> Fraction:
        """The value of a degree-zero polynomial (0 for the zero polynomial)."""
        if self.is_zero():
            return Fraction(0)
        if any(self.shape.degrees):
            raise ShapeError("polynomial is not constant")
        return self.terms[(0,) * self.shape.n]

    def __call__(self, point) -> Fraction:
        return evaluate(self, point)

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            return NotImplemented
        return self.shape.ns == other.shape.ns and self.terms == other.terms

    def __hash__(self):
        return hash((self.shape.ns, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        return f"Poly({self.shape.literal()!r}, {poly_to_text(self)!r})"

    # -- arithmetic --------------------------------------------------------

    def _check_addable(self, other: "Poly") -> None:
        if self.shape.ns != other.shape.ns:
            raise ShapeError("block layouts differ")
        if not (self.is_zero() or other.is_zero()) and (
            self.shape.degrees != other.shape.degrees
        ):
            raise ShapeError("cannot add forms of different block degrees")

    def __add__(self, other: "Poly") -> "Poly":
        if not isinstance(other, Poly):
            return NotImplemented
        self._check_addable(other)
        out = dict(self.terms)
        for mono, coeff in other.terms.items():
            out[mono] = out.get(mono, Fraction(0)) + coeff
        shape = other.shape if self.is_zero() else self.shape
        return Poly(shape, out)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __neg__(self) -> "Poly":
        return Poly(self.shape, {m: -c for m, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Poly(self.shape, {m: c * other for m, c in self.terms.items()})
        if not isinstance(other, Poly):
            return NotImplemented
        return multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (Fraction(1) / Fraction(other))
        return NotImplemented

    def __pow__(self, exponent: int) -> "Poly":
        if exponent < 0:
            raise ShapeError("negative powers are not polynomials")
        result = Poly.constant(self.shape, 1)
        base = self
        e = exponent
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result


def evaluate(p: Poly, point) -> Fraction:
    """Evaluate exactly at a rational point."""
    point = tuple(Fraction(v) for v in point)
    if len(point) != p.shape.n:
        raise ShapeError(
            f"point has {len(point)} coordinates, expected {p.shape.n}"
        )
    total = Fraction(0)
    for mono, coeff in p.terms.items():
        val = coeff
        for base, e in zip(point, mono):
            if e:
                val *= base**e
        total += val
    return total


def multiply(p: Poly, q: Poly) -> Poly:
    """Product of two forms; block degrees add."""
    if p.shape.ns != q.shape.ns:
        raise ShapeError("block layouts differ")
    degrees = tuple(a + b for a, b in zip(p.shape.degrees, q.shape.degrees))
    out: dict[MultiIndex, Fraction] = {}
    for ma, ca in p.terms.items():
        for mb, cb in q.terms.items():
            mono = tuple(x + y for x, y in zip(ma, mb))
            out[mono] = out.get(mono, Fraction(0)) + ca * cb
    return Poly(p.shape.with_degrees(degrees), out)


def block_laplacian(p: Poly, i: int) -> Poly:
    """Sum of second partials over the variables of block i."""
    if not 0 <= i < p.shape.m:
        raise ShapeError(f"block index {i} out of range")
    sl = p.shape.slices[i]
    out: dict[MultiIndex, Fraction] = {}
    for mono, coeff in p.terms.items():
        for j in range(sl.start, sl.stop):
            e = mono[j]
            if e >= 2:
                lowered = mono[:j] + (e - 2,) + mono[j + 1 :]
                out[lowered] = out.get(lowered, Fraction(0)) + coeff * e * (e - 1)
    degrees = tuple(
        max(d - 2, 0) if b == i else d for b, d in enumerate(p.shape.degrees)
    )
    return Poly(p.shape.with_degrees(degrees), out)


def apply_D(f: Poly, g: Poly) -> Poly:
    """Apply f as a constant-coefficient differential operator to g."""
    if f.shape.ns != g.shape.ns:
        raise ShapeError("block layouts differ")
    degrees = tuple(
        max(dg - df, 0) for df, dg in zip(f.shape.degrees, g.shape.degrees)
    )
    out: dict[MultiIndex, Fraction] = {}
    for a, ca in f.terms.items():
        for b, cb in g.terms.items():
            if any(bj < aj for aj, bj in zip(a, b)):
                continue
            factor = 1
            for aj, bj in zip(a, b):
                for t in range(aj):
                    factor *= bj - t
            mono = tuple(bj - aj for aj, bj in zip(a, b))
            out[mono] = out.get(mono, Fraction(0)) + ca * cb * factor
    return Poly(f.shape.with_degrees(degrees), out)


def block_radius_sq(shape: Shape, i: int) -> Poly:
    """Sum of squares of the variables in block i."""
    if not 0 <= i < shape.m:
        raise ShapeError(f"block index {i} out of range")
    sl = shape.slices[i]
    terms = {}
    for j in range(sl.start, sl.stop):
        mono = tuple(2 if t == j else 0 for t in range(shape.n))
        terms[mono] = Fraction(1)
    degrees = tuple(2 if b == i else 0 for b in range(shape.m))
    return Poly(shape.with_degrees(degrees), terms)


def radial_power(shape: Shape, exponents: Iterable[int]) -> Poly:
    """Product over blocks of the block radius raised to even exponents."""
    exponents = tuple(exponents)
    if len(exponents) != shape.m:
        raise ShapeError("need one exponent per block")
    if any(e < 0 or e % 2 for e in exponents):
        raise ParityError(f"radial exponents must be even and >= 0: {exponents}")
    acc = Poly.constant(shape, 1)
    for i, e in enumerate(exponents):
        if e:
            acc = acc * block_radius_sq(shape, i) ** (e // 2)
    return acc


def unit_form(shape: Shape) -> Poly:
    """The form that restricts to 1 on the product of unit spheres."""
    return radial_power(shape, shape.degrees)


# -- text grammar ----------------------------------------------------------

_RATIONAL_RE = re.compile(r"\d+(?:/\d+)?")
_FACTOR_RE = re.compile(r"x(\d+)(?:\^(\d+))?")


def poly_to_text(p: Poly) -> str:
    """Render in the CLI grammar: terms joined by +/-, factors space-separated."""
    if p.is_zero():
        return "0"
    parts: list[str] = []
    for mono in sorted(p.terms, reverse=True):
        coeff = p.terms[mono]
        mag = abs(coeff)
        factors = [
            f"x{j + 1}" + (f"^{e}" if e > 1 else "")
            for j, e in enumerate(mono)
            if e > 0
        ]
        if not factors:
            body = str(mag)
        elif mag == 1:
            body = " ".join(factors)
        else:
            body = str(mag) + " " + " ".join(factors)
        if not parts:
            parts.append(("-" if coeff < 0 else "") + body)
        else:
            parts.append(("- " if coeff < 0 else "+ ") + body)
    return " ".join(parts)


def poly_from_text(text: str, shape: Shape) -> Poly:
    """Parse the CLI grammar into an exact polynomial of the given shape."""
    stripped = text.strip()
    if stripped in ("", "0", "-0", "+0"):
        return Poly.zero(shape)
    if stripped[0] not in "+-":
        stripped = "+" + stripped
    terms: dict[MultiIndex, Fraction] = {}
    for chunk in re.findall(r"[+-][^+-]+|[+-]$", stripped):
        sign = -1 if chunk[0] == "-" else 1
        body = chunk[1:].strip()
        if not body:
            raise ParseError(f"dangling sign in {text!r}")
        coeff = Fraction(sign)
        exps = [0] * shape.n
        for token in body.split():
            if _RATIONAL_RE.fullmatch(token):
                coeff *= Fraction(token)
                continue
            m = _FACTOR_RE.fullmatch(token)
            if not m:
                raise ParseError(f"bad factor {token!r} in {text!r}")
            idx = int(m.group(1))
            if not 1 <= idx <= shape.n:
                raise ParseError(f"variable x{idx} out of range for {shape}")
            exps[idx - 1] += int(m.group(2) or 1)
        mono = tuple(exps)
        terms[mono] = terms.get(mono, Fraction(0)) + coeff
    return Poly(shape, terms)


def parse_point(text: str):
    """Parse a comma-separated list of rationals."""
    try:
        return tuple(Fraction(tok.strip()) for tok in text.split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad point literal {text!r}") from exc
