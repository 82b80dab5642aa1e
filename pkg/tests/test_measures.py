import math
from fractions import Fraction

import pytest
from scipy import integrate

from mhforms.errors import ParityError, ShapeError
from mhforms.measures import (
    axis_moment,
    diff_ip,
    diff_pairing_oracle,
    gram,
    pairing_scale,
    sphere_moment,
    usual_ip,
)
from mhforms.poly import (
    Poly,
    Shape,
    apply_D,
    block_laplacian,
    block_radius_sq,
    monomial_basis,
    multiply,
    poly_from_text,
    unit_form,
)

from conftest import random_rational_poly

S2 = Shape.of((2,), (2,))


def test_sphere_moment_values():
    assert sphere_moment(2, (2, 2)) == Fraction(1, 8)
    assert sphere_moment(2, (1, 1)) == 0
    assert sphere_moment(2, (4, 0)) == Fraction(3, 8)
    assert sphere_moment(3, (2, 0, 0)) == Fraction(1, 3)
    assert sphere_moment(2, (0, 0)) == 1
    # one-variable block: two-point measure
    assert sphere_moment(1, (6,)) == 1
    assert sphere_moment(1, (3,)) == 0


def test_sphere_moments_sum_to_one():
    # moments of r^degree restricted to the sphere must total 1
    for n, d in ((2, 4), (3, 4), (4, 2)):
        shape = Shape.of((n,), (d,))
        r = unit_form(shape)
        total = sum(
            c * sphere_moment(n, mono) for mono, c in r.terms.items()
        )
        assert total == 1


def test_usual_ip_examples():
    x1x2 = poly_from_text("x1 x2", S2)
    assert usual_ip(x1x2, x1x2) == Fraction(1, 8)
    assert usual_ip(poly_from_text("x1^2 - x2^2", S2), x1x2) == 0
    for shape in (S2, Shape.of((2, 2), (2, 2)), Shape.of((3, 2), (2, 2))):
        r = unit_form(shape)
        assert usual_ip(r, r) == 1


def test_diff_ip_examples():
    x1x2 = poly_from_text("x1 x2", S2)
    assert diff_ip(x1x2, x1x2) == 1
    x1sq = poly_from_text("x1^2", S2)
    assert diff_ip(x1sq, x1sq) == 2
    assert diff_ip(x1sq, poly_from_text("x2^2", S2)) == 0
    with pytest.raises(ShapeError):
        diff_ip(x1sq, poly_from_text("x1^2 x2^2", Shape.of((2,), (4,))))


def test_diff_ip_equals_operator_oracle(rng):
    for shape in (S2, Shape.of((2, 2), (2, 2)), Shape.of((3,), (2,))):
        for _ in range(25):
            f = random_rational_poly(shape, rng)
            g = random_rational_poly(shape, rng)
            assert diff_ip(f, g) == diff_pairing_oracle(f, g)


def test_constants():
    assert axis_moment(S2) == Fraction(1, 2)
    assert axis_moment(Shape.of((2, 2), (2, 2))) == Fraction(1, 4)
    assert axis_moment(Shape.of((2, 2), (0, 0))) == 1
    assert pairing_scale(S2) == 4
    assert pairing_scale(Shape.of((2, 2), (2, 2))) == 16
    assert pairing_scale(Shape.of((2, 2), (0, 0))) == 1
    with pytest.raises(ParityError):
        pairing_scale(Shape.of((2,), (3,)))


def test_gram_tables():
    basis = [Poly.monomial(S2, m) for m in monomial_basis(S2)]
    gm = gram(basis, "usual")
    assert gm.entries == (
        (Fraction(3, 8), Fraction(0), Fraction(1, 8)),
        (Fraction(0), Fraction(1, 8), Fraction(0)),
        (Fraction(1, 8), Fraction(0), Fraction(3, 8)),
    )
    gd = gram(basis, "differential")
    assert gd.entries == (
        (Fraction(2), Fraction(0), Fraction(0)),
        (Fraction(0), Fraction(1), Fraction(0)),
        (Fraction(0), Fraction(0), Fraction(2)),
    )
    assert gm.is_symmetric() and gd.is_symmetric()
    assert gm.det() != 0 and gd.det() != 0
    singleton = gram([unit_form(S2)], "usual")
    assert singleton.entries == ((Fraction(1),),)


def test_gram_positive_diagonal(rng):
    shape = Shape.of((3,), (2,))
    basis = [Poly.monomial(shape, m) for m in monomial_basis(shape)]
    for which in ("usual", "differential"):
        gm = gram(basis, which)
        assert all(gm.entries[i][i] > 0 for i in range(gm.size))


def _quadrature_ip(f, g, shape):
    """Adaptive quadrature of the product over the sphere product."""

    def fval(poly, point):
        return float(
            sum(c * math.prod(x**e for x, e in zip(point, mono)) for mono, c in poly.terms.items())
        )

    if shape.ns == (2,):
        def integrand(theta):
            point = (math.cos(theta), math.sin(theta))
            return fval(f, point) * fval(g, point)

        val, _ = integrate.quad(integrand, 0, 2 * math.pi, epsabs=1e-13, limit=200)
        return val / (2 * math.pi)
    if shape.ns == (3,):
        def integrand(phi, theta):
            point = (
                math.sin(phi) * math.cos(theta),
                math.sin(phi) * math.sin(theta),
                math.cos(phi),
            )
            return fval(f, point) * fval(g, point) * math.sin(phi)

        val, _ = integrate.dblquad(
            integrand, 0, 2 * math.pi, 0, math.pi, epsabs=1e-12
        )
        return val / (4 * math.pi)
    if shape.ns == (2, 2):
        def integrand(t2, t1):
            point = (math.cos(t1), math.sin(t1), math.cos(t2), math.sin(t2))
            return fval(f, point) * fval(g, point)

        val, _ = integrate.dblquad(
            integrand, 0, 2 * math.pi, 0, 2 * math.pi, epsabs=1e-12
        )
        return val / (4 * math.pi**2)
    raise NotImplementedError


@pytest.mark.parametrize("ns,degs", [((2,), (2,)), ((3,), (2,)), ((2, 2), (2, 2))])
def test_usual_ip_matches_quadrature(ns, degs, rng):
    shape = Shape.of(ns, degs)
    for _ in range(3):
        f = random_rational_poly(shape, rng)
        g = random_rational_poly(shape, rng)
        exact = float(usual_ip(f, g))
        quad = _quadrature_ip(f, g, shape)
        assert quad == pytest.approx(exact, rel=1e-9, abs=1e-12)


def test_multiplication_adjoint_identity(rng):
    """The product/differentiation adjoint identity, factor-free.

    The printed degree-factorial factors belong to the degree-normalized
    variant of the pairing; with this pairing the exact oracle confirms
    the identity without them.
    """
    lin = Shape.of((2,), (1,))
    for _ in range(20):
        p = random_rational_poly(lin, rng)
        q = random_rational_poly(lin, rng)
        h = random_rational_poly(S2, rng)
        assert diff_ip(multiply(p, q), h) == diff_ip(q, apply_D(p, h))
    shape = Shape.of((2, 2), (2, 2))
    half = Shape.of((2, 2), (1, 1))
    for _ in range(10):
        p = random_rational_poly(half, rng)
        q = random_rational_poly(half, rng)
        h = random_rational_poly(shape, rng)
        assert diff_ip(multiply(p, q), h) == diff_ip(q, apply_D(p, h))


def test_radius_laplacian_adjoint_identity(rng):
    """Multiplying by a block radius is adjoint to that block Laplacian."""
    quartic = Shape.of((2,), (4,))
    for _ in range(20):
        p = random_rational_poly(S2, rng)
        q = random_rational_poly(quartic, rng)
        lhs = diff_ip(multiply(block_radius_sq(S2, 0), p), q)
        rhs = diff_ip(p, block_laplacian(q, 0))
        assert lhs == rhs
    shape = Shape.of((2, 2), (2, 2))
    target = Shape.of((2, 2), (4, 2))
    for _ in range(10):
        p = random_rational_poly(shape, rng)
        q = random_rational_poly(target, rng)
        assert diff_ip(multiply(block_radius_sq(shape, 0), p), q) == diff_ip(
            p, block_laplacian(q, 0)
        )
