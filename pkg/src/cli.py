"""
Command-line entry point: python src/cli.py <subcommand> [flags]

Exit codes: 0 success, 1 domain or I/O error, 2 usage error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from bench_harness import (Metric, Reference, SweepConfig, TableFormat, crossover_analysis,
                           emit_plot, emit_sweep_csv, emit_table, published_result, run_sweep,
                           synthetic_scene)
from errors import DespeckleError
from image_core import as_gray, histogram, load_image, plot_histogram, save_image, to_byte, to_unit
from parsing import parse_border, parse_kind, parse_levels, parse_reference, parse_seeds, parse_size
from quality_metrics import format_metric, metrics_report
from spatial_filters import Border, FilterKind, WindowSpec, apply_filter
from speckle_noise import NoiseSpec, add_speckle

logger = logging.getLogger("cli")


# SUBCOMMANDS
def cmd_gray(args) -> int:
    save_image(as_gray(load_image(args.input)), args.out)
    return 0


def cmd_noise(args) -> int:
    spec = NoiseSpec(args.variance, args.seed)
    clean = as_gray(load_image(args.input))
    save_image(to_byte(add_speckle(to_unit(clean), spec)), args.out)
    return 0


def cmd_filter(args) -> int:
    window = WindowSpec(args.window, args.border)
    img = as_gray(load_image(args.input))
    save_image(apply_filter(args.kind, img, window), args.out)
    return 0


def cmd_metrics(args) -> int:
    report = metrics_report(as_gray(load_image(args.ref)), as_gray(load_image(args.cand)))
    mse_text, psnr_text = format_metric(report.mse), format_metric(report.psnr)
    if args.format == "csv":
        print("mse,psnr")
        print(f"{mse_text},{psnr_text}")
    else:
        print(f"mse={mse_text} psnr={psnr_text}")
    return 0


def cmd_histogram(args) -> int:
    hist = histogram(as_gray(load_image(args.input)))
    text = "level,count\n" + "".join(f"{level},{count}\n" for level, count in enumerate(hist.bins))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.plot:
        plot_histogram(hist, args.plot, title=f"Histogram distribution of {Path(args.input).name}")
    return 0


def cmd_scene(args) -> int:
    width, height = args.size
    save_image(synthetic_scene(width, height, args.seed), args.out)
    return 0


def cmd_bench(args) -> int:
    config = SweepConfig(
        levels=args.levels,
        window=WindowSpec(args.window, args.border),
        seeds=args.seeds,
        reference=args.reference,
    )
    if args.input:
        img, image_id = as_gray(load_image(args.input)), Path(args.input).name
    else:
        width, height = args.synthetic
        img = synthetic_scene(width, height, args.scene_seed)
        image_id = f"synthetic {width}x{height} (scene seed {args.scene_seed})"

    # no artifact flags means every artifact
    everything = not (args.metric_tables or args.plots or args.crossover)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []

    def write(name: str, text: str) -> None:
        path = out_dir / name
        written.append(path)
        path.write_text(text)
        logger.info("wrote %s", path)

    try:
        result = run_sweep(img, config, workers=args.workers, image_id=image_id)
        write("sweep.csv", emit_sweep_csv(result))

        if everything or args.metric_tables:
            for metric in Metric:
                write(f"table_{metric.value}.csv", emit_table(result, metric, TableFormat.CSV))
                write(f"table_{metric.value}.md", emit_table(result, metric, TableFormat.MARKDOWN))
        if everything or args.plots:
            for metric in Metric:
                write(f"plot_{metric.value}.svg", emit_plot(result, metric, log_x=args.log_x))
        if everything or args.crossover:
            write("crossover.txt", _crossover_text(result, image_id, config))
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise

    print(f"wrote {len(written)} files to {out_dir}")
    return 0


def _crossover_text(result, image_id: str, config: SweepConfig) -> str:
    lines = [f"measured on {image_id}: window {config.window.size}, {config.window.border.value} border, "
             f"{config.reference.value} reference, {len(config.seeds)} seeds"]
    lines += [crossover_analysis(result, metric).describe() for metric in Metric]
    lines.append("published tables")
    published = published_result()
    lines += [crossover_analysis(published, metric).describe() for metric in Metric]
    return "\n".join(lines) + "\n"


# PARSER
def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="despeckle",
        description="Speckle noise injection, mean/median despeckling and filter benchmarks.",
        formatter_class=fmt,
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for progress, -vv for debug output")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    gray = subparsers.add_parser("gray", help="convert an image to 8-bit gray", formatter_class=fmt)
    gray.add_argument("--in", dest="input", required=True, help="input PGM or PNG")
    gray.add_argument("--out", required=True, help="output PGM or PNG")
    gray.set_defaults(handler=cmd_gray)

    noise = subparsers.add_parser("noise", help="inject multiplicative speckle noise", formatter_class=fmt)
    noise.add_argument("--in", dest="input", required=True, help="input PGM or PNG")
    noise.add_argument("--out", required=True, help="output PGM or PNG")
    noise.add_argument("--variance", type=float, required=True, help="noise variance in (0, 1]")
    noise.add_argument("--seed", type=int, default=0, help="noise seed")
    noise.set_defaults(handler=cmd_noise)

    filt = subparsers.add_parser("filter", help="apply a mean or median filter", formatter_class=fmt)
    filt.add_argument("--in", dest="input", required=True, help="input PGM or PNG")
    filt.add_argument("--out", required=True, help="output PGM or PNG")
    filt.add_argument("--kind", type=parse_kind, default=FilterKind.MEAN, help="mean or median")
    filt.add_argument("--window", type=int, default=3, help="odd window size")
    filt.add_argument("--border", type=parse_border, default=Border.REPLICATE, help="replicate or zero")
    filt.set_defaults(handler=cmd_filter)

    metrics = subparsers.add_parser("metrics", help="MSE and PSNR of a candidate against a reference",
                                    formatter_class=fmt)
    metrics.add_argument("--ref", required=True, help="reference image")
    metrics.add_argument("--cand", required=True, help="candidate image")
    metrics.add_argument("--format", choices=("text", "csv"), default="text", help="output layout")
    metrics.set_defaults(handler=cmd_metrics)

    hist = subparsers.add_parser("histogram", help="256-bin gray-level histogram", formatter_class=fmt)
    hist.add_argument("--in", dest="input", required=True, help="input PGM or PNG")
    hist.add_argument("--out", default=None, help="CSV output path (stdout when omitted)")
    hist.add_argument("--plot", default=None, help="also render a bar chart PNG here")
    hist.set_defaults(handler=cmd_histogram)

    scene = subparsers.add_parser("scene", help="write the synthetic coastal scene", formatter_class=fmt)
    scene.add_argument("--size", type=parse_size, default=(512, 512), help="WIDTHxHEIGHT")
    scene.add_argument("--seed", type=int, default=0, help="scene seed")
    scene.add_argument("--out", required=True, help="output PGM or PNG")
    scene.set_defaults(handler=cmd_scene)

    bench = subparsers.add_parser("bench", help="sweep noise levels and compare the filters", formatter_class=fmt)
    source = bench.add_mutually_exclusive_group()
    source.add_argument("--in", dest="input", default=None, help="benchmark image")
    source.add_argument("--synthetic", type=parse_size, default=(512, 512),
                        help="size of the synthetic scene used when --in is not given")
    bench.add_argument("--scene-seed", type=int, default=0, help="synthetic scene seed")
    bench.add_argument("--out-dir", required=True, help="artifact directory")
    bench.add_argument("--levels", type=parse_levels, default="paper",
                       help="'paper' or a comma list of variances")
    bench.add_argument("--seeds", type=parse_seeds, default="1-5", help="comma list or range of noise seeds")
    bench.add_argument("--window", type=int, default=3, help="odd window size")
    bench.add_argument("--border", type=parse_border, default=Border.REPLICATE, help="replicate or zero")
    bench.add_argument("--reference", type=parse_reference, default=Reference.CLEAN,
                       help="score against the clean or the noisy image")
    bench.add_argument("--metric-tables", action="store_true", help="write table_mse/table_psnr")
    bench.add_argument("--plots", action="store_true", help="write plot_mse.svg/plot_psnr.svg")
    bench.add_argument("--crossover", action="store_true", help="write crossover.txt")
    bench.add_argument("--log-x", action="store_true", help="logarithmic variance axis in plots")
    bench.add_argument("--workers", type=int, default=1, help="threads evaluating sweep cells")
    bench.set_defaults(handler=cmd_bench)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        return args.handler(args)
    except (DespeckleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
