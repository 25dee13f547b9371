"""Command-line surface for the registration pipeline.

Subcommands cover the full flow: distance transforms and label maps for
landmark volumes, landmark extraction, two-stage point registration
(closed-form similarity, then optional Adam refinement), TRE evaluation,
plus a seeded synthetic-case generator and a batch method comparison.

Exit codes: 0 success, 2 I/O or format problem, 3 degenerate data,
4 correspondence mismatch, 5 numerical degeneracy.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .core import Point3, Volume3, compose, decompose
from .errors import (
    CorrespondenceError,
    DecompositionError,
    DegenerateConfigurationError,
    DegenerateGeometryError,
    DegenerateTestError,
    DivergenceError,
    FormatError,
    InsufficientSampleError,
    InvalidDataError,
    InvalidParameterError,
    LandregError,
    NoFeatureError,
    OutOfBoundsError,
)
from .evaluate import (
    compare_methods,
    identity_method,
    refined_method,
    tre,
    umeyama_method,
)
from .fileio import (
    read_points,
    read_transform,
    read_volume,
    write_trace,
    write_transform,
    write_volume,
)
from .landmarks import BinaryMask, distance_transform, extract_extremes, make_label, recover_landmark
from .refine import RefineConfig, refine
from .synth import SCALE_MODES, SynthConfig, generate_cases, load_cases, save_cases
from .umeyama import umeyama_fit

EXIT_OK = 0
EXIT_FORMAT = 2
EXIT_DEGENERATE_DATA = 3
EXIT_CORRESPONDENCE = 4
EXIT_NUMERICAL = 5

_METHOD_FACTORIES = {
    "identity": identity_method,
    "umeyama": umeyama_method,
    "umeyama+refine": refined_method,
}

_AXES = {"x": 0, "y": 1, "z": 2}


def _exit_code(exc: LandregError) -> int:
    if isinstance(exc, FormatError):
        return EXIT_FORMAT
    if isinstance(
        exc,
        (
            NoFeatureError,
            OutOfBoundsError,
            InvalidDataError,
            DegenerateGeometryError,
            DegenerateTestError,
            InsufficientSampleError,
        ),
    ):
        return EXIT_DEGENERATE_DATA
    if isinstance(exc, CorrespondenceError):
        return EXIT_CORRESPONDENCE
    if isinstance(
        exc,
        (DegenerateConfigurationError, DecompositionError, DivergenceError, InvalidParameterError),
    ):
        return EXIT_NUMERICAL
    return 1


def _triple_floats(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected 'a,b,c', got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _triple_ints(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected 'nx,ny,nz', got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _nonneg_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return value


def _methods_arg(text: str) -> tuple[str, ...]:
    names = tuple(part.strip() for part in text.split(","))
    for name in names:
        if name not in _METHOD_FACTORIES:
            known = ", ".join(sorted(_METHOD_FACTORIES))
            raise argparse.ArgumentTypeError(f"unknown method {name!r} (known: {known})")
    if len(set(names)) != len(names):
        raise argparse.ArgumentTypeError(f"duplicate method in {text!r}")
    return names


def cmd_edt(args: argparse.Namespace) -> int:
    volume = read_volume(args.mask)
    try:
        mask = BinaryMask(volume)
    except InvalidDataError as exc:
        raise FormatError(f"{args.mask}: {exc}") from exc
    write_volume(distance_transform(mask).volume, args.out)
    return EXIT_OK


def cmd_make_label(args: argparse.Namespace) -> int:
    nx, ny, nz = args.dims
    if min(nx, ny, nz) <= 0:
        raise FormatError(f"dims must be positive, got {args.dims}")
    template = Volume3(
        dims=(nx, ny, nz),
        spacing=args.spacing,
        origin=Point3(*args.origin),
        data=np.zeros(nx * ny * nz),
    )
    label = make_label(Point3(*args.landmark), template)
    write_volume(label.volume, args.out)
    return EXIT_OK


def cmd_register(args: argparse.Namespace) -> int:
    if args.trace and not args.refine:
        raise FormatError("--trace requires --refine")
    moving = read_points(args.moving)
    fixed = read_points(args.fixed)
    if moving.names is not None and fixed.names is not None and moving.names != fixed.names:
        raise CorrespondenceError(
            f"landmark names disagree: {list(moving.names)} vs {list(fixed.names)}"
        )
    matrix = umeyama_fit(moving, fixed)
    if args.refine:
        config = RefineConfig(iterations=args.iters, step_size=args.lr)
        result = refine(decompose(matrix), moving, fixed, config)
        matrix = compose(result.params)
        write_transform(matrix, args.out, params=result.params)
        if args.trace:
            write_trace(result.loss_trace, args.trace)
        print(f"initial loss: {result.initial_loss:.3f} mm")
        print(f"final loss: {result.final_loss:.3f} mm")
    else:
        write_transform(matrix, args.out)
        print(f"loss: {tre(matrix, moving, fixed).mean:.3f} mm")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    transform = read_transform(args.transform)
    moving = read_points(args.moving)
    fixed = read_points(args.fixed)
    print(f"TRE: {tre(transform, moving, fixed)}")
    return EXIT_OK


def cmd_extract(args: argparse.Namespace) -> int:
    volume = read_volume(args.volume)
    print("name,x,y,z")
    if args.mode == "landmark":
        point = recover_landmark(volume)
        print(f"landmark,{point.x!r},{point.y!r},{point.z!r}")
    else:
        lo, hi = extract_extremes(BinaryMask(volume), axis=_AXES[args.axis])
        print(f"lo,{lo.x!r},{lo.y!r},{lo.z!r}")
        print(f"hi,{hi.x!r},{hi.y!r},{hi.z!r}")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    config = SynthConfig(
        n_fit=args.n_fit,
        n_holdout=args.n_holdout,
        box_mm=args.box,
        t_max=args.t_max,
        r_max=args.r_max,
        scale_min=args.scale_min,
        scale_max=args.scale_max,
        noise_sigma=args.noise,
        scale_mode=args.scale_mode,
    )
    cases = generate_cases(args.seed, args.cases, config)
    save_cases(cases, args.out_dir, config)
    print(f"wrote {len(cases)} case(s) to {args.out_dir}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    cases = load_cases(args.case_dir)
    methods = [_METHOD_FACTORIES[name]() for name in args.methods]
    comparison = compare_methods(cases, methods)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(comparison.to_csv())
    print(comparison.to_text(), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="landreg",
        description="Landmark-driven volume registration: distance maps, "
        "closed-form similarity fitting, and gradient-refined affine alignment.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser(
        "edt",
        help="exact Euclidean distance transform of a binary mask volume",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("mask", help="input binary mask volume (JSON header)")
    p.add_argument("out", help="output distance-map volume (JSON header)")
    p.set_defaults(func=cmd_edt)

    p = sub.add_parser(
        "make-label",
        help="normalized landmark label volume exp(-10 d / max d)",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("out", help="output label volume (JSON header)")
    p.add_argument("--landmark", type=_triple_floats, required=True, metavar="X,Y,Z", help="landmark position in mm")
    p.add_argument("--dims", type=_triple_ints, required=True, metavar="NX,NY,NZ", help="grid size in voxels")
    p.add_argument("--spacing", type=_triple_floats, required=True, metavar="SX,SY,SZ", help="voxel spacing in mm")
    p.add_argument("--origin", type=_triple_floats, default=(0.0, 0.0, 0.0), metavar="OX,OY,OZ", help="grid origin in mm")
    p.set_defaults(func=cmd_make_label)

    p = sub.add_parser(
        "register",
        help="fit a transform from corresponding landmark CSVs",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("moving", help="moving landmark CSV")
    p.add_argument("fixed", help="fixed landmark CSV")
    p.add_argument("out", help="output transform JSON")
    p.add_argument("--refine", action="store_true", help="refine all nine parameters with Adam after the closed-form fit")
    p.add_argument("--iters", type=_positive_int, default=10000, help="refinement iterations")
    p.add_argument("--lr", type=_positive_float, default=1e-5, help="refinement step size")
    p.add_argument("--trace", metavar="CSV", help="write per-iteration loss CSV (requires --refine)")
    p.set_defaults(func=cmd_register)

    p = sub.add_parser(
        "evaluate",
        help="TRE of a transform over evaluation landmark CSVs",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("transform", help="transform JSON")
    p.add_argument("moving", help="moving evaluation landmark CSV")
    p.add_argument("fixed", help="fixed evaluation landmark CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser(
        "extract",
        help="landmark coordinates from a heatmap or mask volume",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("volume", help="input volume (JSON header)")
    p.add_argument("--mode", choices=("landmark", "extremes"), default="landmark", help="peak of a heatmap, or extreme feature voxels of a mask")
    p.add_argument("--axis", choices=tuple(_AXES), default="x", help="axis for extreme extraction")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser(
        "synth",
        help="generate seeded synthetic registration cases",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("out_dir", help="output directory (one subdirectory per case)")
    p.add_argument("--seed", type=_nonneg_int, required=True, help="master seed")
    p.add_argument("--cases", type=_positive_int, default=1, help="number of cases")
    p.add_argument("--noise", type=_nonneg_float, default=0.0, help="Gaussian landmark noise sigma in mm")
    p.add_argument("--scale-mode", choices=SCALE_MODES, default="uniform", help="one shared scale or three independent scales")
    p.add_argument("--n-fit", type=_positive_int, default=4, help="fitting landmarks per case")
    p.add_argument("--n-holdout", type=_nonneg_int, default=1, help="hold-out landmarks per case")
    p.add_argument("--box", type=_positive_float, default=50.0, help="landmark box edge in mm")
    p.add_argument("--t-max", type=_nonneg_float, default=10.0, help="max |translation| per axis in mm")
    p.add_argument("--r-max", type=_nonneg_float, default=0.3, help="max |rotation| per axis in rad")
    p.add_argument("--scale-min", type=_positive_float, default=0.8, help="smallest generator scale")
    p.add_argument("--scale-max", type=_positive_float, default=1.25, help="largest generator scale")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser(
        "compare",
        help="TRE table and paired t tests for several methods over a case directory",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("case_dir", help="directory of cases (layout of the synth command)")
    p.add_argument(
        "--methods",
        type=_methods_arg,
        default=("identity", "umeyama", "umeyama+refine"),
        metavar="A,B,...",
        help="comma-separated method names: identity, umeyama, umeyama+refine",
    )
    p.add_argument("--csv", metavar="PATH", help="also write the table as CSV")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LandregError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
