"""Command-line entry point: ``gneighbor {denoise,bench,simulate-hw}``."""

from __future__ import annotations

import argparse
import logging
import math
import sys

from .bench import BenchConfig, run_bench
from .filters import FilterKind, filter_image
from .image_core import BorderPolicy, PGMError, Window3x3, read_pgm, write_pgm
from .neuromorphic import COMPARISON_ORDER, CalibrationError, calibrate, run_window_pipeline
from .noise_metrics import score


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _unit_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{value} is outside [0, 1]")
    return value


def _fmt_db(x):
    return "inf" if math.isinf(x) else f"{x:.4f}"


def cmd_denoise(args) -> int:
    try:
        img = read_pgm(args.input)
        kind = FilterKind.adaptive(args.theta) if args.filter == "adaptive" else FilterKind(args.filter)
        out = filter_image(img, kind, args.border)
        write_pgm(args.output, out)
        if args.reference:
            q = score(read_pgm(args.reference), out)
            print(f"mse={q.mse:.6g} psnr_db={_fmt_db(q.psnr_db)}")
    except (OSError, PGMError, ValueError) as exc:
        print(f"denoise: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_bench(args) -> int:
    try:
        cfg = BenchConfig(
            corpus_dir=args.corpus,
            noise_variances=args.noise,
            thetas=args.thetas,
            filters=args.filters.split(","),
            seed=args.seed,
            border=args.border,
        )
        report = run_bench(cfg)
    except (OSError, ValueError) as exc:
        print(f"bench: {exc}", file=sys.stderr)
        return 1
    report.to_csv(args.out)
    print(report.format_table())
    return 0


def cmd_simulate_hw(args) -> int:
    if len(args.neighbors) != 8:
        print(f"simulate-hw: expected 8 neighbor values, got {len(args.neighbors)}", file=sys.stderr)
        return 2
    if any(not 0.0 <= v <= 1.0 for v in args.neighbors):
        print("simulate-hw: neighbor intensities must lie in [0, 1]", file=sys.stderr)
        return 2
    try:
        params = calibrate(args.theta)
    except CalibrationError as exc:
        print(f"simulate-hw: {exc}", file=sys.stderr)
        return 1
    window = Window3x3.from_center(args.center, args.neighbors)
    mask, output, trace = run_window_pipeline(window, params, trace_stride=args.trace_stride)
    trace.to_csv(args.trace)

    print(f"theta={args.theta:g} charge_rate={params.charge_rate:.6g} V/s firing_duty={params.firing_duty:.6f}")
    print(f"mask={mask} n={mask.n}")
    for slot, (k, state) in enumerate(zip(COMPARISON_ORDER, trace.slot_states), start=1):
        start = (slot - 1) * params.slot_duration
        fired = f"fired at {start + state.fire_time:.6f} s" if state.fired else "no fire"
        print(f"slot {slot} pixel {k} value={window.values[k]:.6g}: {fired}")
    print(f"output={output:.12g}")
    print(f"readout window: {trace.activation_time:.6f} s to {trace.duration:.6f} s")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gneighbor", description="Neuron-gated adaptive mean filtering.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    borders = [p.value for p in BorderPolicy]

    p = sub.add_parser("denoise", help="filter one PGM image")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--filter", choices=["mean", "median", "adaptive"], default="adaptive")
    p.add_argument("--theta", type=_unit_float, default=0.3, help="similarity threshold for --filter adaptive")
    p.add_argument("--border", choices=borders, default="replicate")
    p.add_argument("--reference", help="clean image to score the output against")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("bench", help="noise/threshold sweep over a PGM corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--noise", type=_float_list, default=[0.02, 0.04])
    p.add_argument("--thetas", type=_float_list, default=[0.2, 0.3, 0.4])
    p.add_argument("--filters", default="mean,median,adaptive")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--border", choices=borders, default="replicate")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("simulate-hw", help="simulate the analog pipeline on one window")
    p.add_argument("--center", type=_unit_float, required=True)
    p.add_argument("--neighbors", type=_float_list, required=True, help="8 comma-separated values, row-major")
    p.add_argument("--theta", type=float, default=0.3)
    p.add_argument("--trace", required=True, help="CSV file for the sampled waveforms")
    p.add_argument("--trace-stride", type=int, default=1)
    p.set_defaults(func=cmd_simulate_hw)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if getattr(args, "trace_stride", 1) < 1:
        parser.error("--trace-stride must be a positive integer")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
