"""Closed-form evaluation of the published volume-ratio bounds.

Every displayed bound is an explicit product formula in the block
dimensions and degrees, possibly times an absolute constant the source
leaves unvalued.  Unvalued constants are explicit inputs defaulting to 1
and every value that depends on one is flagged, never silently baked in.
Products with large exponents are evaluated in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError, ParityError
from .measures import pairing_scale
from .poly import Shape
from .transform import ball_ratio_bounds

KERNEL_CONSTANT = 2**10 * math.e  # the explicit constant in the SOS upper bound

DEFAULT_CONSTANTS = {
    "c0": 5.0,  # upper bound for the nonnegative section (capped in print)
    "c1": 1.0,
    "c2": 1.0,
    "c3": 1.0,
    "c": KERNEL_CONSTANT,
}

FLAGGED = ("c1", "c2", "c3")


def merged_constants(overrides: dict | None) -> dict:
    merged = dict(DEFAULT_CONSTANTS)
    if overrides:
        for key, value in overrides.items():
            if key not in merged:
                raise DomainError(f"unknown constant {key!r}")
            merged[key] = float(value)
    return merged


@dataclass
class ConeBound:
    lower: float
    upper: float
    lower_flags: tuple[str, ...] = ()
    upper_flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "lower_flags": list(self.lower_flags),
            "upper_flags": list(self.upper_flags),
        }


@dataclass
class BoundReport:
    kind: str
    params: dict
    cones: dict[str, ConeBound]
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.params,
            "cones": {name: b.to_dict() for name, b in self.cones.items()},
            **self.extras,
        }


def _halves(shape: Shape) -> list[tuple[int, int]]:
    if not shape.is_even:
        raise ParityError(f"bounds need even degrees: {shape.literal()}")
    return [(n, d // 2) for n, d in shape.blocks]


def _log_prod(terms) -> float:
    return math.exp(sum(terms))


def _flags(constants: dict, names: tuple[str, ...]) -> tuple[str, ...]:
    return tuple(
        f"{n}-default" for n in names if constants[n] == DEFAULT_CONSTANTS[n] and n in FLAGGED
    )


def pos_lower_main(shape: Shape) -> float:
    """Lower bound for the nonnegative section in the main bound display."""
    halves = _halves(shape)
    value = 1.0 / (4 ** shape.m * math.sqrt(max(shape.ns)))
    return value * _log_prod(-0.5 * math.log(2 * k + 1) for _, k in halves)


def sq_power_lower(shape: Shape) -> float:
    """The shared product (2k_i + n_i/2)^(-k_i/2) of the SOS and power lower bounds."""
    halves = _halves(shape)
    return _log_prod(
        -(k / 2) * math.log(2 * k + n / 2) for n, k in halves if k > 0
    )


def cone_volume_bounds(shape: Shape, constants: dict | None = None) -> BoundReport:
    """The six closed-form bound expressions for the three cones."""
    cs = merged_constants(constants)
    halves = _halves(shape)
    maxn = max(shape.ns)

    pos = ConeBound(
        lower=pos_lower_main(shape),
        upper=cs["c0"],
        upper_flags=("c0-statement-cap",),
    )
    shared_lower = sq_power_lower(shape)
    sq = ConeBound(
        lower=cs["c1"] * shared_lower,
        upper=cs["c2"]
        * _log_prod(
            (k / 2) * math.log(cs["c"] * k / (n + k)) for n, k in halves if k > 0
        ),
        lower_flags=_flags(cs, ("c1",)),
        upper_flags=_flags(cs, ("c2",)),
    )
    lin_upper = (
        math.sqrt(maxn)
        * _log_prod(math.log(4.0) + 0.5 * math.log(2 * k + 1) for _, k in halves)
        * _log_prod((k / 2) * math.log(2 * k / n) for n, k in halves if k > 0)
    )
    lin = ConeBound(
        lower=cs["c3"] * shared_lower,
        upper=lin_upper,
        lower_flags=_flags(cs, ("c3",)),
    )
    return BoundReport(
        kind="cone-volume-bounds",
        params={"shape": shape.literal(), "constants": cs},
        cones={"pos": pos, "sq": sq, "lin": lin},
    )


def ratio_case_bounds(n: int, k: int, variant: int, constants: dict | None = None) -> BoundReport:
    """The two worked parameter families for the SOS-to-nonnegative ratio."""
    cs = merged_constants(constants)
    if variant == 1:
        if n < 3 or k < 1:
            raise DomainError("variant 1 needs n >= 3 and k >= 1")
        lower = (
            cs["c1"] * (2 * k - 1) ** ((-k + 1) / 2) * (n + 2) ** (-0.5)
        )
        bound = ConeBound(
            lower=lower,
            upper=1.0,
            lower_flags=_flags(cs, ("c1",)),
        )
        params = {"n": n, "k": k, "variant": 1, "shape": f"N=2,{n - 2} K={2 * k - 2},2"}
    elif variant == 2:
        if k < 1 or n % k:
            raise DomainError("variant 2 needs n divisible by k")
        cprime = KERNEL_CONSTANT / 48
        lower = cs["c1"] * (2 + n / (2 * k)) ** (-k / 2)
        upper = cs["c2"] * (n / (cprime * k)) ** ((-k + 1) / 2)
        bound = ConeBound(
            lower=lower,
            upper=upper,
            lower_flags=_flags(cs, ("c1",)),
            upper_flags=_flags(cs, ("c2",)),
        )
        params = {
            "n": n,
            "k": k,
            "variant": 2,
            "shape": "N=" + ",".join([str(n // k)] * k) + " K=" + ",".join(["2"] * k),
            "c_variant": cprime,
        }
    else:
        raise DomainError(f"unknown variant {variant}")
    return BoundReport(kind="ratio-case-bounds", params=params, cones={"sq_over_pos": bound})


def blekherman_bounds(n: int, k: int, constants: dict | None = None) -> BoundReport:
    """The single-block comparison display for the same ratio."""
    if n < 3 or k < 2:
        raise DomainError("comparison display needs n >= 3 and k >= 2")
    cs = merged_constants(constants)
    log_lower = (
        ((k + 1) / 2) * math.log(n)
        - k * math.log(n / 2 + 2 * k)
        + math.lgamma(k + 1)
        + math.lgamma(k)
        - 2 * k * math.log(4)
        - math.lgamma(2 * k + 1)
    )
    log_upper = (
        2 * k * math.log(4)
        + math.lgamma(2 * k + 1)
        + 0.5 * math.log(k)
        - math.lgamma(k + 1)
        + ((-k + 1) / 2) * math.log(n)
    )
    bound = ConeBound(
        lower=cs["c1"] * math.exp(log_lower),
        upper=cs["c2"] * math.exp(log_upper),
        lower_flags=_flags(cs, ("c1",)),
        upper_flags=_flags(cs, ("c2",)),
    )
    return BoundReport(
        kind="single-block-comparison",
        params={"n": n, "k": k},
        cones={"sq_over_pos": bound},
    )


def section_bounds(shape: Shape, constants: dict | None = None) -> BoundReport:
    """The section-level bound displays, tied to the operator brackets."""
    cs = merged_constants(constants)
    halves = _halves(shape)
    maxn = max(shape.ns)
    two_block = shape.m == 2

    gauge_lower = 1.0 / math.sqrt(
        16.0 * maxn * math.prod(2 * k + 1 for _, k in halves)
    )
    pos = ConeBound(lower=gauge_lower, upper=cs["c0"], upper_flags=("c0-statement-cap",))

    k_total = sum(k for _, k in halves)
    width_upper = (
        4.5
        * KERNEL_CONSTANT ** (k_total / 2)
        * _log_prod((k / 2) * math.log(k / (n + k)) for n, k in halves if k > 0)
    )
    santalo_lower = cs["c3"] * sq_power_lower(shape)
    sq = ConeBound(
        lower=santalo_lower,
        upper=width_upper,
        lower_flags=_flags(cs, ("c3",)),
    )

    lin_lower = cs["c3"] * _log_prod(
        -(k / 2) * math.log(k * (2 + n / (2 * k))) for n, k in halves if k > 0
    )
    lin_upper = (
        4.0
        * math.sqrt(maxn * math.prod(2 * k + 1 for _, k in halves))
        * _log_prod(-(k / 2) * math.log(1 + n / (2 * k)) for n, k in halves if k > 0)
    )
    lin = ConeBound(
        lower=lin_lower,
        upper=lin_upper,
        lower_flags=_flags(cs, ("c3",)),
    )

    brackets = ball_ratio_bounds(shape)
    body_upper = 4.0 * math.sqrt(maxn * math.prod(2 * k + 1 for _, k in halves))
    extras = {
        "two_block_display": two_block,
        "santalo_sqrt_cC": math.sqrt(cs["c3"] * float(pairing_scale(shape))),
        "kernel_body_bracket": [1.0, body_upper],
        "kernel_body_bracket_flags": ["lower-constant-default"],
        "operator_brackets": brackets.to_dict(),
    }
    if not two_block:
        extras["flags"] = ["two-block-display-extended"]
    return BoundReport(
        kind="section-bounds",
        params={"shape": shape.literal(), "constants": cs},
        cones={"pos": pos, "sq": sq, "lin": lin},
        extras=extras,
    )


def bounds_grid(shapes, constants: dict | None = None) -> list[dict]:
    """Flatten the main bounds over a sweep of shapes, for CSV export."""
    rows = []
    for shape in shapes:
        report = cone_volume_bounds(shape, constants)
        for cone, bound in report.cones.items():
            rows.append(
                {
                    "shape": shape.literal(),
                    "dim": shape.dim_P,
                    "cone": cone,
                    "lower": bound.lower,
                    "upper": bound.upper,
                    "lower_flags": ";".join(bound.lower_flags),
                    "upper_flags": ";".join(bound.upper_flags),
                }
            )
    return rows
