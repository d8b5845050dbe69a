"""Command-line interface.

Subcommands cover the full pipeline: dataset generation, skeleton
degradation, projection estimation, GA refinement, deskewing, metric
evaluation and rotation sweeps.  Exit codes: 0 on success, 1 for usage
errors (reported on stderr with the usage text), 2 for unreadable or
invalid data files.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import deskew as deskew_mod
from . import ga as ga_mod
from . import metrics as metrics_mod
from . import noise as noise_mod
from . import render as render_mod
from . import xycut as xycut_mod
from .model import CANVAS, RasterImage, TableGenotype, TablegridError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that defers error handling to run()."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _parse_canvas(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        canvas = (int(w), int(h))
    except ValueError:
        raise UsageError(f"bad canvas {text!r}, expected WxH") from None
    if canvas[0] < 1 or canvas[1] < 1:
        raise UsageError(f"bad canvas {text!r}, dimensions must be positive")
    return canvas


def _parse_angles(text: str) -> list[float]:
    """Parse start:stop:step into an inclusive angle list."""
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"bad angle range {text!r}, expected start:stop:step") from None
    if step <= 0:
        raise UsageError("angle step must be positive")
    angles = []
    a = start
    while a <= stop + 1e-9:
        angles.append(round(a, 6))
        a += step
    if not angles:
        raise UsageError(f"angle range {text!r} is empty")
    return angles


def _parse_int_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"bad range {text!r}, expected lo:hi") from None
    return lo, hi


def build_parser() -> _Parser:
    parser = _Parser(prog="tablegrid", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a synthetic dataset")
    p_gen.add_argument("--config", default="all",
                       choices=sorted(render_mod.BUILTIN_CONFIGS) + ["all"])
    p_gen.add_argument("--count", type=int, required=True,
                       help="tables per configuration")
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--style", default="blurry", choices=["solid", "blurry"])
    p_gen.add_argument("--canvas", default=None, help="WxH, default 595x842")
    p_gen.add_argument("--p-vis", type=float, default=render_mod.DEFAULT_P_VIS,
                       help="interior divider visibility probability")
    p_gen.add_argument("--workers", type=int, default=1)

    p_deg = sub.add_parser("degrade", help="add artifacts/jitter to a skeleton")
    p_deg.add_argument("--in", dest="src", required=True)
    p_deg.add_argument("--out", required=True)
    p_deg.add_argument("--seed", type=int, required=True)
    p_deg.add_argument("--count", default="2:5", help="artifact count range lo:hi")
    p_deg.add_argument("--len-frac", type=float, default=0.2)
    p_deg.add_argument("--thickness", type=int, default=2)
    p_deg.add_argument("--jitter-sigma", type=float, default=0.0)

    p_est = sub.add_parser("estimate", help="estimate structure from a skeleton")
    p_est.add_argument("--skeleton", required=True)
    p_est.add_argument("--out", required=True)
    p_est.add_argument("--threshold", type=int, default=xycut_mod.DEFAULT_THRESHOLD)
    p_est.add_argument("--min-frac", type=float, default=xycut_mod.DEFAULT_MIN_FRAC)
    p_est.add_argument("--max-rows", type=int, default=None)
    p_est.add_argument("--max-cols", type=int, default=None)

    p_opt = sub.add_parser("optimize", help="GA-refine a structure estimate")
    p_opt.add_argument("--skeleton", required=True)
    p_opt.add_argument("--initial", default=None,
                       help="starting genotype JSON; omit to start from estimate")
    p_opt.add_argument("--out", required=True)
    p_opt.add_argument("--seed", type=int, required=True)
    p_opt.add_argument("--history", default=None, help="CSV of best fitness per epoch")
    p_opt.add_argument("--style", default="blurry", choices=["solid", "blurry"])
    p_opt.add_argument("--population-size", type=int, default=50)
    p_opt.add_argument("--max-epochs", type=int, default=200)
    p_opt.add_argument("--reproduce-frac", type=float, default=0.70)
    p_opt.add_argument("--numeric-mutation-prob", type=float, default=0.1)
    p_opt.add_argument("--numeric-mutation-sigma", type=float, default=5.0)
    p_opt.add_argument("--structural-mutation-prob", type=float, default=0.1)
    p_opt.add_argument("--convergence-epsilon", type=float, default=0.01)
    p_opt.add_argument("--convergence-window", type=int, default=3)
    p_opt.add_argument("--no-elitism", action="store_true")

    p_dsk = sub.add_parser("deskew", help="estimate and remove skew")
    p_dsk.add_argument("--in", dest="src", required=True)
    p_dsk.add_argument("--out", required=True)
    p_dsk.add_argument("--passes", type=int, default=deskew_mod.DEFAULT_PASSES)
    p_dsk.add_argument("--max-angle", type=float, default=deskew_mod.DEFAULT_MAX_ANGLE)
    p_dsk.add_argument("--report", default=None, help="write a JSON skew report")
    p_dsk.add_argument("--crop", default=None,
                       help="WxH center crop applied after deskewing")

    p_eval = sub.add_parser("eval", help="evaluate a dataset's skeletons")
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--csv", required=True)

    p_sweep = sub.add_parser("sweep", help="rotation robustness sweep")
    p_sweep.add_argument("--manifest", required=True)
    p_sweep.add_argument("--angles", default="-30:30:5", help="start:stop:step")
    p_sweep.add_argument("--deskew", default="off", choices=["on", "off"])
    p_sweep.add_argument("--csv", required=True)
    p_sweep.add_argument("--plot", default=None, help="optional SVG output")
    p_sweep.add_argument("--passes", type=int, default=deskew_mod.DEFAULT_PASSES)
    p_sweep.add_argument("--max-angle", type=float,
                         default=deskew_mod.DEFAULT_MAX_ANGLE)
    p_sweep.add_argument("--workers", type=int, default=1)
    return parser


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------


def _cmd_gen(args) -> int:
    if args.config == "all":
        configs = list(render_mod.BUILTIN_CONFIGS.values())
    else:
        configs = [render_mod.BUILTIN_CONFIGS[args.config]]
    canvas = _parse_canvas(args.canvas) if args.canvas else CANVAS
    style = render_mod.BLURRY if args.style == "blurry" else render_mod.SOLID
    manifest = render_mod.generate_dataset(
        configs, args.count, args.out, args.seed,
        style=style, canvas=canvas, p_vis=args.p_vis, workers=args.workers)
    print(f"wrote {len(manifest.entries)} entries to {args.out}")
    return 0


def _cmd_degrade(args) -> int:
    params = noise_mod.NoiseParams(
        artifact_count_range=_parse_int_range(args.count),
        artifact_len_frac=args.len_frac,
        artifact_thickness=args.thickness,
        gray_jitter_sigma=args.jitter_sigma,
        seed=args.seed,
    )
    noise_mod.degrade(RasterImage.load(args.src), params).save(args.out)
    return 0


def _cmd_estimate(args) -> int:
    skeleton = RasterImage.load(args.skeleton)
    genotype = xycut_mod.estimate_structure(
        skeleton, threshold=args.threshold, min_frac=args.min_frac,
        max_rows=args.max_rows, max_cols=args.max_cols)
    genotype.save(args.out)
    return 0


def _cmd_optimize(args) -> int:
    skeleton = RasterImage.load(args.skeleton)
    if args.initial is not None:
        initial = TableGenotype.load(args.initial)
    else:
        initial = xycut_mod.estimate_structure(skeleton)
    params = ga_mod.GAParams(
        population_size=args.population_size,
        elitism=not args.no_elitism,
        reproduce_frac=args.reproduce_frac,
        numeric_mutation_prob=args.numeric_mutation_prob,
        numeric_mutation_sigma=args.numeric_mutation_sigma,
        structural_mutation_prob=args.structural_mutation_prob,
        convergence_epsilon=args.convergence_epsilon,
        convergence_window=args.convergence_window,
        max_epochs=args.max_epochs,
        seed=args.seed,
    )
    style = render_mod.BLURRY if args.style == "blurry" else render_mod.SOLID
    best, history = ga_mod.evolve(initial, skeleton, params, style)
    best.save(args.out)
    if args.history:
        with open(args.history, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("epoch", "best_fitness"))
            for epoch, value in enumerate(history):
                writer.writerow((epoch, f"{value:.8f}"))
    return 0


def _cmd_deskew(args) -> int:
    img = RasterImage.load(args.src)
    result, report = deskew_mod.deskew_iterative(img, args.passes, args.max_angle)
    if args.crop:
        crop_w, crop_h = _parse_canvas(args.crop)
        result = deskew_mod.crop_center(result, crop_w, crop_h)
    result.save(args.out)
    if args.report:
        import json
        Path(args.report).write_text(
            json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_eval(args) -> int:
    manifest = render_mod.DatasetManifest.load(args.manifest)
    manifest.validate_files()
    reports = metrics_mod.evaluate_manifest(manifest)
    metrics_mod.metrics_to_csv(reports, args.csv)
    return 0


def _cmd_sweep(args) -> int:
    manifest = render_mod.DatasetManifest.load(args.manifest)
    manifest.validate_files()
    report = metrics_mod.rotation_sweep(
        manifest, _parse_angles(args.angles), args.deskew == "on",
        passes=args.passes, max_angle=args.max_angle, workers=args.workers)
    metrics_mod.sweep_to_csv(report, args.csv)
    if args.plot:
        metrics_mod.sweep_to_svg(report, args.plot)
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "degrade": _cmd_degrade,
    "estimate": _cmd_estimate,
    "optimize": _cmd_optimize,
    "deskew": _cmd_deskew,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
}


def _merge_dash_values(argv, flags=("--angles",)):
    """Join flag-value pairs whose value begins with a dash.

    argparse reads "-30:30:5" as an option token, so "--angles -30:30:5"
    becomes "--angles=-30:30:5" before parsing.
    """
    merged = []
    skip = False
    for i, token in enumerate(argv):
        if skip:
            skip = False
            continue
        if (token in flags and i + 1 < len(argv)
                and argv[i + 1].startswith("-")):
            merged.append(f"{token}={argv[i + 1]}")
            skip = True
        else:
            merged.append(token)
    return merged


def run(argv=None) -> int:
    """Entry point returning an exit code instead of raising SystemExit."""
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = build_parser().parse_args(_merge_dash_values(list(argv)))
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (TablegridError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
