"""Command-line front end.

Every report echoes the run configuration, serializes exact rationals as
"p/q" strings, and is byte-identical across repeated runs with the same
arguments (timing is only included on request).  Exit codes: 0 success,
1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import bounds as bounds_mod
from . import cones as cones_mod
from . import transform as transform_mod
from . import volumetrics as vol_mod
from .errors import DomainError, ParseError
from .harmonics import dims_h_table, pi_decompose, reproducing_kernel, zonal_kernel
from .measures import gram as gram_matrix
from .poly import (
    Poly,
    Shape,
    monomial_basis,
    parse_point,
    poly_from_text,
    poly_to_text,
)


def _rat(value: Fraction) -> str:
    return str(value)


def _alpha_key(alpha) -> str:
    return ",".join(str(a) for a in alpha)


def _flatten(report: dict, prefix: str = "") -> dict:
    out: dict = {}
    for key in sorted(report):
        value = report[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        elif isinstance(value, (list, tuple)):
            if all(not isinstance(v, (dict, list, tuple)) for v in value):
                out[name] = ";".join(str(v) for v in value)
            else:
                out[name] = json.dumps(value)
        else:
            out[name] = value
    return out


def _emit(report: dict, fmt: str = "json") -> None:
    if fmt == "csv":
        flat = _flatten(report)
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(flat.keys())
        writer.writerow(flat.values())
        return
    print(json.dumps(report, indent=2, sort_keys=True, allow_nan=False))


def _config_block(args, command: str) -> dict:
    cfg = {"command": command}
    for name in ("shape", "seed", "samples", "workers", "budget", "format"):
        if hasattr(args, name):
            cfg[name] = getattr(args, name)
    if getattr(args, "constants", None):
        cfg["constants"] = args.constants
    return cfg


def _parse_constants(text: str | None) -> dict | None:
    if not text:
        return None
    out = {}
    for pair in text.split(","):
        if "=" not in pair:
            raise ParseError(f"bad constant override {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = float(value)
    return out


def _load_poly(args, shape: Shape) -> Poly:
    if getattr(args, "poly", None):
        return poly_from_text(args.poly, shape)
    if getattr(args, "poly_file", None):
        return poly_from_text(Path(args.poly_file).read_text(), shape)
    raise ParseError("provide --poly or --poly-file")


def _add_shape(parser):
    parser.add_argument("--shape", required=True, help='shape literal, e.g. "N=2,2 K=2,2"')


def _add_common(parser, *, samples=None):
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--budget", type=int, default=None)
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    if samples is not None:
        parser.add_argument("--samples", type=int, default=samples)


def _add_poly_args(parser):
    parser.add_argument("--poly", help="polynomial in the text grammar")
    parser.add_argument("--poly-file", help="file containing the polynomial")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mhforms",
        description="Multihomogeneous polynomial machinery, cone tests, and "
        "cone-section volumetrics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dims", help="space dimensions and harmonic table")
    _add_shape(p)

    p = sub.add_parser("gram", help="exact Gram matrix of the monomial basis")
    _add_shape(p)
    p.add_argument("--which", choices=("usual", "differential"), default="usual")

    p = sub.add_parser("decompose", help="radial-harmonic decomposition")
    _add_shape(p)
    _add_poly_args(p)

    p = sub.add_parser("zonal", help="zonal or full reproducing kernel at a point")
    _add_shape(p)
    p.add_argument("--point", required=True, help="comma-separated rationals")
    p.add_argument("--alpha", help="harmonic degrees, e.g. 2,0 (omit for full kernel)")

    p = sub.add_parser("t", help="averaging transform utilities")
    tsub = p.add_subparsers(dest="t_command", required=True)
    ts = tsub.add_parser("spectrum")
    _add_shape(ts)
    ta = tsub.add_parser("apply")
    _add_shape(ta)
    _add_poly_args(ta)
    ta.add_argument(
        "--method", choices=("spectral", "direct", "both"), default="both"
    )
    td = tsub.add_parser("det")
    _add_shape(td)

    p = sub.add_parser("cone", help="cone membership tests")
    csub = p.add_subparsers(dest="cone_command", required=True)
    cp = csub.add_parser("pos")
    _add_shape(cp)
    _add_poly_args(cp)
    _add_common(cp)
    cs = csub.add_parser("sos")
    _add_shape(cs)
    _add_poly_args(cs)
    _add_common(cs)
    cl = csub.add_parser("lin")
    _add_shape(cl)
    cl.add_argument("--point", required=True)

    p = sub.add_parser("volume", help="Monte Carlo section estimates")
    vsub = p.add_subparsers(dest="volume_command", required=True)
    for name, default_samples in (
        ("pos", vol_mod.DEFAULT_VOLUME_SAMPLES),
        ("sq-width", vol_mod.DEFAULT_VOLUME_SAMPLES),
        ("isotropy", vol_mod.DEFAULT_ISOTROPY_SAMPLES),
    ):
        vp = vsub.add_parser(name)
        _add_shape(vp)
        _add_common(vp, samples=default_samples)
        vp.add_argument("--dump", help="write per-sample CSV here")
        vp.add_argument("--figure", help="figure path (default: alongside the dump)")
        vp.add_argument("--no-figure", action="store_true")
        vp.add_argument("--timing", action="store_true", help="include wall time")

    p = sub.add_parser("bounds", help="closed-form bound evaluation")
    p.add_argument("--shape", help='shape literal, e.g. "N=2,2 K=2,2"')
    p.add_argument("--constants", help="overrides, e.g. c1=2,c2=0.5")
    bsub = p.add_subparsers(dest="bounds_command")
    bg = bsub.add_parser("grid", help="sweep shapes to CSV (+ figure)")
    bg.add_argument(
        "--shapes",
        help='semicolon-separated shape literals; default small built-in grid',
    )
    bg.add_argument("--csv", required=True, help="output CSV path")
    bg.add_argument("--figure", help="figure path (default: alongside the CSV)")
    bg.add_argument("--no-figure", action="store_true")
    bg.add_argument("--constants", help="overrides, e.g. c1=2,c2=0.5")

    sub.add_parser("selftest", help="run the exact-identity suite")

    return parser


# -- command implementations -------------------------------------------------


def _cmd_dims(args) -> dict:
    shape = Shape.parse(args.shape)
    table = dims_h_table(shape)
    return {
        "dim_P": shape.dim_P,
        "M": shape.M,
        "blocks": [{"n": n, "degree": d} for n, d in shape.blocks],
        "dims_H": {_alpha_key(a): v for a, v in table.items()},
        "harmonic_index_count": len(table),
        "dims_H_total": sum(table.values()),
    }


def _cmd_gram(args) -> dict:
    shape = Shape.parse(args.shape)
    basis = [Poly.monomial(shape, m) for m in monomial_basis(shape)]
    gm = gram_matrix(basis, args.which)
    return {
        "which": gm.which,
        "basis": [poly_to_text(b) for b in basis],
        "entries": [[_rat(v) for v in row] for row in gm.entries],
        "symmetric": gm.is_symmetric(),
        "det": _rat(gm.det()),
    }


def _cmd_decompose(args) -> dict:
    shape = Shape.parse(args.shape)
    p = _load_poly(args, shape)
    split = pi_decompose(p)
    recon = split.reconstruct()
    return {
        "input": poly_to_text(p),
        "components": {
            _alpha_key(a): poly_to_text(f) for a, f in split.components.items()
        },
        "reconstruction_ok": recon == p,
    }


def _cmd_zonal(args) -> dict:
    shape = Shape.parse(args.shape)
    point = parse_point(args.point)
    if args.alpha:
        alpha = tuple(int(a) for a in args.alpha.split(","))
        q = zonal_kernel(shape, point, alpha)
        return {
            "kind": "zonal",
            "alpha": _alpha_key(alpha),
            "point": [str(v) for v in point],
            "polynomial": poly_to_text(q),
            "value_at_point": _rat(q(point)),
        }
    p_v = reproducing_kernel(shape, point)
    from .measures import usual_ip

    return {
        "kind": "reproducing-kernel",
        "point": [str(v) for v in point],
        "polynomial": poly_to_text(p_v),
        "self_pairing": _rat(usual_ip(p_v, p_v)),
        "dim_P": shape.dim_P,
    }


def _cmd_t(args) -> dict:
    shape = Shape.parse(args.shape)
    if args.t_command == "spectrum":
        spec = transform_mod.spectrum(shape)
        return {
            "eigenvalues": {
                _alpha_key(a): {"value": _rat(v), "multiplicity": m}
                for a, (v, m) in spec.table.items()
            },
            "top": _rat(spec.top),
            "max": _rat(spec.max_value),
            "min": _rat(spec.min_value),
            "multiplicity_total": spec.multiplicity_total(),
        }
    if args.t_command == "apply":
        p = _load_poly(args, shape)
        out = {}
        if args.method in ("spectral", "both"):
            out["spectral"] = poly_to_text(transform_mod.apply_spectral(p))
        if args.method in ("direct", "both"):
            out["direct"] = poly_to_text(transform_mod.apply_direct(p))
        if args.method == "both":
            out["methods_agree"] = out["spectral"] == out["direct"]
        out["result"] = out.get("spectral", out.get("direct"))
        return out
    det = transform_mod.det_transform(shape)
    brackets = transform_mod.ball_ratio_bounds(shape)
    return {
        "det": _rat(det.value),
        "root": det.root,
        "direct_checked": det.direct_checked,
        "brackets": brackets.to_dict(),
    }


def _cmd_cone(args) -> dict:
    shape = Shape.parse(args.shape)
    if args.cone_command == "pos":
        p = _load_poly(args, shape)
        budget = args.budget or 64
        res = cones_mod.pos_min(p, budget=budget, seed=args.seed)
        return {
            "min": res.value,
            "argmin": [float(x) for x in res.point],
            "starts": res.starts,
        }
    if args.cone_command == "sos":
        p = _load_poly(args, shape)
        budget = args.budget or 50_000
        status = cones_mod.sos_feasibility(p, budget=budget, seed=args.seed)
        report = {
            "verdict": status.verdict,
            "iterations": status.iterations,
            "message": status.message,
        }
        if status.residual is not None:
            report["residual"] = status.residual
        if status.gram is not None:
            report["witness"] = [[float(v) for v in row] for row in status.gram]
            report["witness_min_eig"] = status.gram_min_eig
            report["witness_basis"] = [
                poly_to_text(Poly.monomial(shape.with_degrees(shape.half_degrees), m))
                for m in status.half_basis
            ]
        if status.certificate is not None:
            report["certificate"] = [float(v) for v in status.certificate]
            report["certificate_min_eig"] = status.certificate_min_eig
            report["pairing"] = status.pairing
        return report
    point = parse_point(args.point)
    kernel = cones_mod.linear_power_kernel(shape, point)
    deviation = cones_mod.kernel_image_check(shape, point)
    return {
        "kernel": poly_to_text(kernel),
        "image_check_deviation": _rat(deviation),
        "unit_pairing": "1",
    }


def _figure_path(args, stem_source: str) -> str | None:
    if args.no_figure:
        return None
    if args.figure:
        return args.figure
    return str(Path(stem_source).with_suffix(".png"))


def _cmd_volume(args) -> dict:
    shape = Shape.parse(args.shape)
    outputs = {}
    if args.volume_command == "pos":
        budget = args.budget or 6
        report, dump = vol_mod.estimate_mu_pos(
            shape,
            samples=args.samples,
            budget=budget,
            seed=args.seed,
            workers=args.workers,
            return_samples=True,
        )
        dump_values = dump["gauge"]
        dump_header = ["index", "gauge", "sup_norm"]
        dump_rows = [
            [i, dump["gauge"][i], dump["sup"][i]] for i in range(len(dump["gauge"]))
        ]
        figure_kwargs = {
            "title": "gauge of sampled section directions",
            "xlabel": "|min over the sphere product|",
            "log_x": True,
        }
    elif args.volume_command == "sq-width":
        report, dump = vol_mod.mean_width_sq(
            shape,
            samples=args.samples,
            seed=args.seed,
            workers=args.workers,
            return_samples=True,
        )
        dump_values = dump["lambda_max"]
        dump_header = ["index", "lambda_max"]
        dump_rows = [[i, v] for i, v in enumerate(dump["lambda_max"])]
        figure_kwargs = {
            "title": "support function samples of the SOS section",
            "xlabel": "largest eigenvalue",
            "log_x": False,
        }
    else:
        report = vol_mod.isotropy_check(
            shape,
            samples=args.samples,
            seed=args.seed,
            workers=args.workers,
        )
        dump_values = report.extras["deviations"]
        dump_header = ["probe", "abs_deviation", "stderr"]
        dump_rows = [
            [i, d, s]
            for i, (d, s) in enumerate(
                zip(report.extras["deviations"], report.extras["probe_stderr"])
            )
        ]
        figure_kwargs = {
            "title": "second-moment deviations per probe",
            "xlabel": "|mean - 1|",
            "log_x": False,
        }

    result = report.to_dict(include_timing=getattr(args, "timing", False))
    if args.dump:
        with open(args.dump, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(dump_header)
            writer.writerows(dump_rows)
        outputs["dump"] = args.dump
        figure = _figure_path(args, args.dump)
        if figure:
            from .plots import save_samples_figure

            outputs["figure"] = save_samples_figure(
                dump_values, figure, **figure_kwargs
            )
    result["outputs"] = outputs
    return result


_DEFAULT_GRID = (
    "N=2 K=2;N=2 K=4;N=3 K=2;N=3 K=4;N=2,2 K=2,2;N=3,2 K=2,2;N=3,3 K=2,2"
)


def _cmd_bounds(args) -> dict:
    constants = _parse_constants(getattr(args, "constants", None))
    if getattr(args, "bounds_command", None) != "grid":
        if not args.shape:
            raise ParseError("bounds needs --shape (or the grid subcommand)")
        shape = Shape.parse(args.shape)
        main = bounds_mod.cone_volume_bounds(shape, constants)
        section = bounds_mod.section_bounds(shape, constants)
        return {"main": main.to_dict(), "section": section.to_dict()}
    literals = (args.shapes or _DEFAULT_GRID).split(";")
    shapes = [Shape.parse(lit.strip()) for lit in literals if lit.strip()]
    rows = bounds_mod.bounds_grid(shapes, constants)
    with open(args.csv, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    outputs = {"csv": args.csv}
    figure = _figure_path(args, args.csv)
    if figure:
        from .plots import save_bounds_grid_figure

        outputs["figure"] = save_bounds_grid_figure(rows, figure)
    return {"rows": len(rows), "shapes": [s.literal() for s in shapes], "outputs": outputs}


def _cmd_selftest(_args) -> int:
    from .selftest import run_selftest

    return run_selftest()


def dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "dims":
            report = _cmd_dims(args)
        elif args.command == "gram":
            report = _cmd_gram(args)
        elif args.command == "decompose":
            report = _cmd_decompose(args)
        elif args.command == "zonal":
            report = _cmd_zonal(args)
        elif args.command == "t":
            report = _cmd_t(args)
        elif args.command == "cone":
            report = _cmd_cone(args)
        elif args.command == "volume":
            report = _cmd_volume(args)
        elif args.command == "bounds":
            report = _cmd_bounds(args)
        elif args.command == "selftest":
            return _cmd_selftest(args)
        else:  # pragma: no cover
            parser.error(f"unknown command {args.command}")
            return 2
    except (DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report["config"] = _config_block(args, args.command)
    _emit(report, getattr(args, "format", "json"))
    return 0


def main(argv=None) -> int:
    return dispatch(argv)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
