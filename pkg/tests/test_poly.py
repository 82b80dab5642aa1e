from fractions import Fraction

import pytest

from mhforms.errors import ParseError, ShapeError
from mhforms.poly import (
    Poly,
    Shape,
    apply_D,
    block_laplacian,
    block_radius_sq,
    evaluate,
    monomial_basis,
    multiply,
    poly_from_text,
    poly_to_text,
    radial_power,
    unit_form,
)

from conftest import random_rational_poly

S2 = Shape.of((2,), (2,))


def test_shape_parse_roundtrip():
    shape = Shape.parse("N=3,2 K=2,3")
    assert shape.ns == (3, 2)
    assert shape.degrees == (2, 3)
    assert Shape.parse(shape.literal()) == shape


def test_shape_validation():
    with pytest.raises(ShapeError):
        Shape.of((0,), (2,))
    with pytest.raises(ShapeError):
        Shape.of((2,), (-2,))
    with pytest.raises(ParseError):
        Shape.parse("N=2")


def test_monomial_basis_small():
    assert monomial_basis(S2) == [(2, 0), (1, 1), (0, 2)]


@pytest.mark.parametrize(
    "ns,degs,expected",
    [((3, 2), (2, 3), 24), ((2, 2), (2, 2), 9), ((2,), (4,), 5), ((3,), (6,), 28)],
)
def test_basis_count_matches_dimension(ns, degs, expected):
    shape = Shape.of(ns, degs)
    basis = monomial_basis(shape)
    assert len(basis) == expected == shape.dim_P
    assert len(set(basis)) == len(basis)
    for mono in basis:
        assert shape.block_degrees(mono) == shape.degrees


def test_evaluate_worked_example():
    shape = Shape.of((3, 2), (3, 2))
    p = poly_from_text("x1^3 x4^2 + x1 x2^2 x5^2 + x3^3 x4 x5", shape)
    assert p((1, 1, 1, 1, 1)) == 3
    assert Poly.zero(shape)((1, 2, 3, 4, 5)) == 0


def test_evaluate_rational_point():
    p = poly_from_text("x1 x2", S2)
    assert p((Fraction(3, 5), Fraction(4, 5))) == Fraction(12, 25)
    with pytest.raises(ShapeError):
        evaluate(p, (1,))


def test_multiply_examples():
    lin = Shape.of((2,), (1,))
    a = poly_from_text("x1 + x2", lin)
    b = poly_from_text("x1 - x2", lin)
    assert multiply(a, b) == poly_from_text("x1^2 - x2^2", S2)
    r2 = block_radius_sq(S2, 0)
    assert r2 == poly_from_text("x1^2 + x2^2", S2)
    x1x2 = poly_from_text("x1 x2", S2)
    assert x1x2 * x1x2 == poly_from_text(
        "x1^2 x2^2", Shape.of((2,), (4,))
    )


def test_multiply_block_mismatch():
    other = Shape.of((3,), (2,))
    with pytest.raises(ShapeError):
        multiply(Poly.monomial(S2, (2, 0)), Poly.monomial(other, (2, 0, 0)))


def test_multiply_properties(rng):
    for _ in range(20):
        f = random_rational_poly(S2, rng)
        g = random_rational_poly(S2, rng)
        h = random_rational_poly(Shape.of((2,), (4,)), rng)
        assert f * g == g * f
        assert (f * g) * h == f * (g * h)
        pt = (Fraction(2, 3), Fraction(-1, 7))
        assert (f * g)(pt) == f(pt) * g(pt)


def test_block_laplacian_examples():
    r2 = block_radius_sq(S2, 0)
    assert block_laplacian(r2, 0).constant_value() == 4
    harm = poly_from_text("x1^2 - x2^2", S2)
    assert block_laplacian(harm, 0).is_zero()
    quartic = poly_from_text("x1^2 x2^2", Shape.of((2,), (4,)))
    assert block_laplacian(quartic, 0) == poly_from_text("2 x1^2 + 2 x2^2", S2)
    with pytest.raises(ShapeError):
        block_laplacian(r2, 3)


def test_block_laplacians_commute(rng):
    shape = Shape.of((2, 2), (2, 2))
    for _ in range(10):
        f = random_rational_poly(shape, rng)
        assert block_laplacian(block_laplacian(f, 0), 1) == block_laplacian(
            block_laplacian(f, 1), 0
        )


def test_apply_d_examples():
    x1x2 = poly_from_text("x1 x2", S2)
    assert apply_D(x1x2, x1x2).constant_value() == 1
    x1sq = poly_from_text("x1^2", S2)
    assert apply_D(x1sq, x1sq).constant_value() == 2
    x2sq = poly_from_text("x2^2", S2)
    assert apply_D(x1sq, x2sq).is_zero()


def test_apply_d_symmetric_as_pairing(rng):
    for _ in range(20):
        f = random_rational_poly(S2, rng)
        g = random_rational_poly(S2, rng)
        assert apply_D(f, g).constant_value() == apply_D(g, f).constant_value()


def test_radial_power_and_unit_form():
    shape = Shape.of((2, 2), (2, 2))
    r = unit_form(shape)
    assert r((Fraction(3, 5), Fraction(4, 5), Fraction(0), Fraction(1))) == 1
    assert radial_power(shape, (0, 0)) == Poly.constant(shape, 1)
    with pytest.raises(ShapeError):
        radial_power(shape, (1, 0))


def test_text_grammar_roundtrip(rng):
    shapes = [S2, Shape.of((3, 2), (2, 2)), Shape.of((2,), (4,))]
    for shape in shapes:
        for _ in range(10):
            p = random_rational_poly(shape, rng)
            assert poly_from_text(poly_to_text(p), shape) == p
    assert poly_from_text("0", S2).is_zero()
    assert poly_to_text(Poly.zero(S2)) == "0"


def test_text_grammar_errors():
    with pytest.raises(ParseError):
        poly_from_text("x9^2", S2)
    with pytest.raises(ParseError):
        poly_from_text("3 y^2", S2)
    with pytest.raises(ShapeError):
        poly_from_text("x1", S2)  # degree mismatch
