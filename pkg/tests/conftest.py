from fractions import Fraction

import numpy as np
import pytest

from mhforms.poly import Poly, Shape, monomial_basis

# Exact unit-norm points per block dimension, used wherever a test needs a
# rational point on the product of spheres.
_BLOCK_POINTS = {
    1: ((Fraction(1),), (Fraction(-1),)),
    2: (
        (Fraction(3, 5), Fraction(4, 5)),
        (Fraction(5, 13), Fraction(12, 13)),
        (Fraction(1), Fraction(0)),
    ),
    3: (
        (Fraction(2, 7), Fraction(3, 7), Fraction(6, 7)),
        (Fraction(1, 3), Fraction(2, 3), Fraction(2, 3)),
        (Fraction(1), Fraction(0), Fraction(0)),
    ),
    4: (
        (Fraction(1, 2), Fraction(1, 2), Fraction(1, 2), Fraction(1, 2)),
        (Fraction(3, 5), Fraction(4, 5), Fraction(0), Fraction(0)),
    ),
}


def rational_sphere_point(shape: Shape, variant: int = 0):
    point = ()
    for n, _ in shape.blocks:
        choices = _BLOCK_POINTS[n]
        point += choices[variant % len(choices)]
    return point


def random_rational_poly(shape: Shape, rng: np.random.Generator) -> Poly:
    terms = {}
    for mono in monomial_basis(shape):
        num = int(rng.integers(-9, 10))
        if num:
            terms[mono] = Fraction(num, int(rng.integers(1, 10)))
    return Poly(shape, terms)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=20240817))


GRID_SHAPES = (
    Shape.of((2,), (2,)),
    Shape.of((2,), (4,)),
    Shape.of((3,), (2,)),
    Shape.of((2, 2), (2, 2)),
    Shape.of((3, 2), (2, 2)),
)
