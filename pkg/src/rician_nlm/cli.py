"""Command-line interface: simulate, denoise, evaluate, sm-table, hist-experiment.

Every command that writes an output file also writes ``<output>.manifest.json``
recording the full command line, the resolved parameter values, sigma, seed
and the random-generator identifier; re-running the recorded command line
reproduces the outputs byte for byte.

Exit codes: 0 success, 2 usage / parameter error, 3 file-format error,
4 numeric or degenerate-computation error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .image import Domain, Image
from .io import FormatError, read_image, write_image
from .metrics import SsimParams, evaluate, format_float, metrics_json
from .nlm import (
    DegenerateWeightsError,
    NlmParams,
    denoise,
    get_pipeline,
)
from .noise import GENERATOR_ID
from .oracle import QuadratureError, analytic_p1, analytic_p2, hist_csv, hist_experiment
from .phantom import PhantomKind, PhantomSpec, add_rician_noise, generate_phantom
from .similarity import MeasureKind, SimilarityMeasure

_EXIT_USAGE = 2
_EXIT_FORMAT = 3
_EXIT_NUMERIC = 4

_SQRT_HALF_PI = float(np.sqrt(np.pi / 2.0))


def _json_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format_float(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f'"{k}": {_json_value(x)}' for k, x in v.items()) + "}"
    if v is None:
        return "null"
    raise TypeError(f"cannot serialize {type(v)!r}")


def stable_json(obj: dict) -> str:
    """Deterministic JSON: insertion-ordered keys, 9-significant-digit floats."""
    return _json_value(obj)


def _write_manifest(output_path, argv, **fields) -> None:
    manifest = {
        "tool": "rician-nlm",
        "version": __version__,
        "command": list(argv),
        "generator": GENERATOR_ID,
    }
    manifest.update(fields)
    with open(f"{output_path}.manifest.json", "w", encoding="ascii") as fh:
        fh.write(stable_json(manifest) + "\n")


def _parse_widths(parser, value, what):
    if value < 1 or value % 2 == 0:
        parser.error(f"--{what} must be an odd positive width (e.g. 5, 11)")
    return (value - 1) // 2


def _cmd_simulate(args, argv) -> int:
    spec = PhantomSpec(
        kind=PhantomKind(args.phantom),
        size=args.size,
        intensity_max=args.intensity_max,
        flat_value=args.flat_value,
    )
    truth = generate_phantom(spec)
    noisy, sigma = add_rician_noise(truth, args.sigma_frac, args.seed)
    write_image(args.output, noisy)
    _write_manifest(
        args.output,
        argv,
        seed=args.seed,
        sigma=sigma,
        params={
            "phantom": args.phantom,
            "size": args.size,
            "intensity_max": float(args.intensity_max),
            "sigma_frac": float(args.sigma_frac),
        },
    )
    if args.truth:
        write_image(args.truth, truth)
        _write_manifest(args.truth, argv, seed=args.seed, sigma=sigma,
                        params={"phantom": args.phantom, "size": args.size, "role": "truth"})
    print(f"sigma = {format_float(sigma)}  ->  {args.output}")
    return 0


def _sigma_from_background(img: Image, rect: str) -> float:
    try:
        x0, y0, w, h = (int(p) for p in rect.split(","))
    except ValueError as exc:
        raise ValueError("--sigma-from-background expects x0,y0,w,h") from exc
    if w < 1 or h < 1 or x0 < 0 or y0 < 0 or y0 + h > img.height or x0 + w > img.width:
        raise ValueError("background rectangle outside image bounds")
    # Rayleigh-mean inversion on a pure-background patch (convenience, not a
    # calibrated estimator): sigma = mean(M) / sqrt(pi/2)
    return float(img.data[y0 : y0 + h, x0 : x0 + w].mean()) / _SQRT_HALF_PI


def _cmd_denoise(args, argv) -> int:
    patch_radius = _parse_widths(args.parser, args.patch, "patch")
    search_radius = _parse_widths(args.parser, args.search, "search")
    noisy = read_image(args.input, Domain.MAGNITUDE_M)
    if args.sigma is not None:
        sigma = args.sigma
    elif args.sigma_from_background is not None:
        sigma = _sigma_from_background(noisy, args.sigma_from_background)
    else:
        args.parser.error("one of --sigma or --sigma-from-background is required")
    params = NlmParams(patch_radius=patch_radius, search_radius=search_radius, h=args.h)
    pipe = get_pipeline(args.method)
    out = denoise(noisy, pipe, sigma, params, threads=args.threads)
    write_image(args.output, out)
    _write_manifest(
        args.output,
        argv,
        sigma=float(sigma),
        params={
            "method": args.method,
            "patch": args.patch,
            "search": args.search,
            "h": float(args.h),
            "threads": args.threads,
            "input": str(args.input),
        },
    )
    print(f"denoised ({args.method}, sigma={format_float(sigma)})  ->  {args.output}")
    return 0


def _cmd_evaluate(args, argv) -> int:
    truth = read_image(args.truth, Domain.AMPLITUDE_A)
    est = read_image(args.est, Domain.AMPLITUDE_A)
    ssim_params = SsimParams(dynamic_range=args.dynamic_range)
    report = evaluate(truth, est, ssim_params, with_map=args.ssim_map is not None)
    record = metrics_json(report)
    print(record)
    if args.json:
        with open(args.json, "w", encoding="ascii") as fh:
            fh.write(record + "\n")
    if args.ssim_map is not None:
        # map values live in [-1, 1]; shift to [0, 1] for image containers
        shifted = Image((report.ssim_map + 1.0) * 0.5, Domain.AMPLITUDE_A)
        write_image(args.ssim_map, shifted)
    return 0


def _cmd_sm_table(args, argv) -> int:
    kind = MeasureKind(args.measure)
    measure = SimilarityMeasure(kind, args.sigma)
    sources = [float(s) for s in args.sources.split(",") if s]
    targets = np.linspace(args.t_min, args.t_max, args.points)
    lines = ["measure,sigma,source,target,value,log_value"]
    sig = format_float(measure.sigma) if measure.sigma is not None else ""
    for src in sources:
        logs = measure.log_value(np.full_like(targets, src), targets)
        vals = np.exp(logs)
        for t, v, lv in zip(targets, vals, logs):
            lines.append(
                f"{args.measure},{sig},{format_float(src)},{format_float(float(t))},"
                f"{format_float(float(v))},{format_float(float(lv))}"
            )
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w", encoding="ascii") as fh:
            fh.write(text)
        _write_manifest(args.output, argv, sigma=measure.sigma, params={"measure": args.measure})
        print(f"{len(sources)} curves x {args.points} points  ->  {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_hist_experiment(args, argv) -> int:
    result = hist_experiment(
        trials=args.trials,
        n_avg=args.avg,
        a=args.a,
        sigma=args.sigma,
        seed=args.seed,
        bins=args.bins,
    )
    summary = {
        "trials": result.trials,
        "n_avg": result.n_avg,
        "a": result.a,
        "sigma": result.sigma,
        "seed": result.seed,
        "p1_nonpos": result.p1_nonpos,
        "p2_nonpos": result.p2_nonpos,
        "p1_analytic": analytic_p1(result.n_avg) if result.a == 0 else None,
        "p2_normal_approx": analytic_p2(result.n_avg) if result.a == 0 else None,
        "generator": GENERATOR_ID,
    }
    record = stable_json(summary)
    print(record)
    if args.output:
        with open(args.output, "w", encoding="ascii") as fh:
            fh.write(hist_csv(result))
        _write_manifest(args.output, argv, seed=args.seed, sigma=float(args.sigma),
                        params={"trials": args.trials, "avg": args.avg, "a": float(args.a)})
    if args.json:
        with open(args.json, "w", encoding="ascii") as fh:
            fh.write(record + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rician-nlm",
        description="Non-local-means denoising of Rician-corrupted magnitude images.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a phantom and its noisy counterpart")
    p_sim.add_argument("--phantom", required=True,
                       choices=[k.value for k in PhantomKind])
    p_sim.add_argument("--size", type=int, default=256)
    p_sim.add_argument("--intensity-max", type=float, default=255.0)
    p_sim.add_argument("--flat-value", type=float, default=None)
    p_sim.add_argument("--sigma-frac", type=float, required=True,
                       help="noise level as a fraction of the image maximum")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("-o", "--output", required=True, help="noisy image (.nlmf/.pgm)")
    p_sim.add_argument("--truth", default=None, help="optional noise-free image output")
    p_sim.set_defaults(func=_cmd_simulate)

    p_den = sub.add_parser("denoise", help="run a denoising pipeline on a magnitude image")
    p_den.add_argument("-i", "--input", required=True)
    p_den.add_argument("--method", required=True, choices=["gnlm", "nlms", "nlmr"])
    p_den.add_argument("--sigma", type=float, default=None,
                       help="noise standard deviation of the input")
    p_den.add_argument("--sigma-from-background", default=None, metavar="X0,Y0,W,H",
                       help="estimate sigma from a background rectangle (convenience)")
    p_den.add_argument("--patch", type=int, default=5, help="patch width, odd (default 5)")
    p_den.add_argument("--search", type=int, default=11, help="search-window width, odd (default 11)")
    p_den.add_argument("--h", type=float, default=0.4, dest="h", help="smoothing parameter")
    p_den.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p_den.add_argument("-o", "--output", required=True)
    p_den.set_defaults(func=_cmd_denoise)

    p_eval = sub.add_parser("evaluate", help="RMSE/cRMSE/SSIM of an estimate against truth")
    p_eval.add_argument("--truth", required=True)
    p_eval.add_argument("--est", required=True)
    p_eval.add_argument("--json", default=None, help="also write the JSON record here")
    p_eval.add_argument("--ssim-map", default=None, help="write the SSIM map image here")
    p_eval.add_argument("--dynamic-range", type=float, default=None)
    p_eval.set_defaults(func=_cmd_evaluate)

    p_sm = sub.add_parser("sm-table", help="dump similarity-measure curves as CSV")
    p_sm.add_argument("--measure", required=True,
                      choices=[k.value for k in MeasureKind])
    p_sm.add_argument("--sources", default="1,4,9,16",
                      help="comma-separated fixed source intensities")
    p_sm.add_argument("--t-min", type=float, default=0.0)
    p_sm.add_argument("--t-max", type=float, default=30.0)
    p_sm.add_argument("--points", type=int, default=301)
    p_sm.add_argument("--sigma", type=float, default=None)
    p_sm.add_argument("-o", "--output", default=None)
    p_sm.set_defaults(func=_cmd_sm_table)

    p_hist = sub.add_parser("hist-experiment",
                            help="histogram the signed pre-clamp bias-removal estimates")
    p_hist.add_argument("--trials", type=int, required=True)
    p_hist.add_argument("--avg", type=int, default=25, help="samples averaged per trial")
    p_hist.add_argument("--a", type=float, default=0.0, help="true amplitude")
    p_hist.add_argument("--sigma", type=float, default=1.0)
    p_hist.add_argument("--seed", type=int, default=0)
    p_hist.add_argument("--bins", type=int, default=101)
    p_hist.add_argument("-o", "--output", default=None, help="histogram CSV")
    p_hist.add_argument("--json", default=None, help="also write the JSON summary here")
    p_hist.set_defaults(func=_cmd_hist_experiment)

    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    args.parser = parser
    try:
        return args.func(args, argv)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return _EXIT_FORMAT
    except (DegenerateWeightsError, QuadratureError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_USAGE


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
