"""Quick exact-identity suite behind the `selftest` CLI command.

One line per check; exits nonzero on the first failure.  Everything here is
exact rational arithmetic, so there are no tolerances to tune.
"""

from __future__ import annotations

from fractions import Fraction

from .cones import kernel_image_check
from .harmonics import pi_decompose, reproducing_kernel
from .measures import diff_ip, diff_pairing_oracle, usual_ip
from .poly import Poly, Shape, monomial_basis, unit_form
from .transform import (
    apply_direct,
    apply_spectral,
    ball_ratio_bounds,
    det_transform,
    eigenvalue,
    pairing_check,
)

_SHAPES = (Shape.of((2,), (2,)), Shape.of((2, 2), (2, 2)))
_SPHERE_POINTS = {
    Shape.of((2,), (2,)): (Fraction(3, 5), Fraction(4, 5)),
    Shape.of((2, 2), (2, 2)): (
        Fraction(3, 5),
        Fraction(4, 5),
        Fraction(5, 13),
        Fraction(12, 13),
    ),
}


def _random_rational_poly(shape: Shape, rng) -> Poly:
    terms = {}
    for mono in monomial_basis(shape):
        num = rng.integers(-9, 10)
        if num:
            terms[mono] = Fraction(int(num), int(rng.integers(1, 10)))
    return Poly(shape, terms)


def run_selftest() -> int:
    import numpy as np

    rng = np.random.Generator(np.random.Philox(key=7))
    failures = 0

    def check(label: str, ok: bool) -> None:
        nonlocal failures
        print(("ok - " if ok else "FAIL - ") + label)
        if not ok:
            failures += 1

    for shape in _SHAPES:
        tag = shape.literal()
        basis = monomial_basis(shape)
        check(f"{tag}: basis size equals dimension", len(basis) == shape.dim_P)

        agree = all(
            apply_direct(Poly.monomial(shape, m))
            == apply_spectral(Poly.monomial(shape, m))
            for m in basis
        )
        check(f"{tag}: direct and spectral averaging agree on the basis", agree)

        det = det_transform(shape)
        check(f"{tag}: determinant closed form vs direct", det.direct_checked)
        check(
            f"{tag}: determinant root inside its bracket",
            ball_ratio_bounds(shape).det_root_inside,
        )

        zero_alpha = (0,) * shape.m
        check(f"{tag}: eigenvalue at the bottom index is 1",
              eigenvalue(shape, zero_alpha) == 1)

        ok_pairs = True
        for _ in range(5):
            f = _random_rational_poly(shape, rng)
            g = _random_rational_poly(shape, rng)
            left, right = pairing_check(f, g)
            ok_pairs = ok_pairs and left == right
        check(f"{tag}: averaging/pairing identity on random pairs", ok_pairs)

        ok_round = True
        for _ in range(5):
            f = _random_rational_poly(shape, rng)
            ok_round = ok_round and pi_decompose(f).reconstruct() == f
        check(f"{tag}: decomposition round-trip", ok_round)

        ok_diff = True
        for _ in range(3):
            f = _random_rational_poly(shape, rng)
            g = _random_rational_poly(shape, rng)
            ok_diff = ok_diff and diff_ip(f, g) == diff_pairing_oracle(f, g)
        check(f"{tag}: differential pairing equals the operator oracle", ok_diff)

        v = _SPHERE_POINTS[shape]
        p_v = reproducing_kernel(shape, v)
        f = _random_rational_poly(shape, rng)
        check(f"{tag}: reproducing property at a rational point",
              usual_ip(f, p_v) == f(v))
        check(f"{tag}: kernel self-pairing equals the dimension",
              usual_ip(p_v, p_v) == shape.dim_P)
        check(f"{tag}: unit form is fixed by averaging",
              apply_spectral(unit_form(shape)) == unit_form(shape))
        kernel_image_check(shape, v)
        check(f"{tag}: averaged kernel equals the normalized power kernel", True)

    print(("selftest passed" if failures == 0 else f"selftest failed ({failures})"))
    return 0 if failures == 0 else 1
