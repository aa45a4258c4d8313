"""Command-line driver: ``wcel0 {simulate,solve,evaluate,sweep-lambda,render}``.

Exit codes: 0 success, 2 configuration error, 3 I/O or input-format error,
4 numerical divergence.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig
from .errors import DivergenceError, ParameterError, ParseError
from .formats import (dumps_json, read_frame_stack, read_image, read_localizations, write_frame_stack,
                      write_json, write_reconstructions)
from .metrics import evaluate_stack
from .pipeline import data_energy_scale, localize_stack, solve_stack, sweep_lambda
from .render import render_png
from .simulate import simulate_stack

log = logging.getLogger("wcel0")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DIVERGENCE = 0, 2, 3, 4


class ConfigError(Exception):
    pass


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _global_flags(p, suppress):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="JSON run configuration")
    p.add_argument("--seed", type=int, default=d)
    p.add_argument("--threads", type=int, default=d, help="worker threads (0 = all cores)")
    p.add_argument("--out", default=d, help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="wcel0", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic frame stack and its ground truth")
    _global_flags(p, suppress=True)
    p.add_argument("--n-frames", type=int)
    p.add_argument("--n-per-frame", type=int)
    p.add_argument("--background", type=float)

    p = sub.add_parser("solve", help="reconstruct every frame of a stack")
    _global_flags(p, suppress=True)
    p.add_argument("frames")
    p.add_argument("--model", choices=["cel0", "wcel0"])
    p.add_argument("--lam", type=float, help="absolute lambda")
    p.add_argument("--lam-rel", type=float, help="lambda as a multiple of the data energy scale")
    p.add_argument("--no-stabilization", action="store_true", help="use w = 1/y without a floor")

    p = sub.add_parser("evaluate", help="Jaccard evaluation of localizations against ground truth")
    _global_flags(p, suppress=True)
    p.add_argument("estimates")
    p.add_argument("truth")
    p.add_argument("--deltas", type=_floats)
    p.add_argument("--label", default="", help="model name for the summary row")
    p.add_argument("--method", choices=["greedy", "hungarian"])

    p = sub.add_parser("sweep-lambda", help="choose lambda by Jaccard score on sampled frames")
    _global_flags(p, suppress=True)
    p.add_argument("frames")
    p.add_argument("--truth", help="ground-truth CSV (required)")
    p.add_argument("--model", choices=["cel0", "wcel0"])
    p.add_argument("--grid", type=_floats, help="relative lambda values")
    p.add_argument("--n-sample-frames", type=int)
    p.add_argument("--sweep-mode", choices=["mean-score", "mean-argmax"])

    p = sub.add_parser("render", help="write a reconstruction as a grayscale PNG")
    _global_flags(p, suppress=True)
    p.add_argument("image", help=".npy image or image stack")
    p.add_argument("png")
    p.add_argument("--scale", choices=["linear", "sqrt"], default="linear")
    p.add_argument("--frame", default="sum", help="frame index for stacks, or 'sum'")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {}
    for attr, key in [("seed", "seed"), ("threads", "threads"), ("out", "out"), ("n_frames", "n_frames"),
                      ("n_per_frame", "n_per_frame"), ("background", "background"), ("model", "model"),
                      ("lam", "lam"), ("lam_rel", "lam_rel"), ("deltas", "deltas"), ("method", "match_method"),
                      ("grid", "lambda_grid"), ("n_sample_frames", "n_sample_frames"),
                      ("sweep_mode", "sweep_mode")]:
        v = getattr(args, attr, None)
        if v is not None:
            overrides[key] = v
    if getattr(args, "no_stabilization", False):
        overrides["epsilon"] = None
    return RunConfig.from_dict({**cfg.to_dict(), **overrides})


def _outdir(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(cfg: RunConfig):
    out = _outdir(cfg)
    op = cfg.operator()
    stack = simulate_stack(op, cfg.n_frames, cfg.n_per_frame, tuple(cfg.intensity_range),
                           cfg.background, cfg.seed)
    stack.meta["fwhm_nm"] = cfg.fwhm_nm
    write_frame_stack(out / "frames.wfs", stack)
    stack.ground_truth.write_csv(out / "ground_truth.csv")
    write_json(out / "config.json", cfg.to_dict())
    sys.stdout.write(dumps_json(cfg.to_dict()))
    return stack


def _effective_lambda(cfg, frames):
    if cfg.lam is not None:
        return float(cfg.lam), None
    scale = data_energy_scale(frames, cfg.model, cfg.epsilon)
    return cfg.lam_rel * scale, scale


def cmd_solve(cfg: RunConfig, frames_path):
    out = _outdir(cfg)
    stack = read_frame_stack(frames_path)
    if stack.grid != cfg.grid():
        raise ParameterError(f"frame stack grid {stack.grid} does not match config grid {cfg.grid()}")
    op = cfg.operator()
    lam, scale = _effective_lambda(cfg, stack.frames)
    results = solve_stack(stack.frames, op, cfg.model, lam, cfg.solver_config(), cfg.epsilon, cfg.threads)
    N = op.grid.N
    images = np.stack([x.reshape(N, N) for x, _ in results]) if results else np.zeros((0, N, N))
    write_reconstructions(out / "reconstruction.npy", images)
    locs = localize_stack(images, op.grid, cfg.min_intensity)
    locs.write_csv(out / "localizations.csv")
    write_json(out / "trace.json", {
        "model": cfg.model,
        "lambda": lam,
        "lambda_scale": scale,
        "frames": [tr.to_dict() for _, tr in results],
    })
    write_json(out / "config.json", cfg.to_dict())
    log.info("solved %d frames with %s, lambda=%.6g", len(results), cfg.model, lam)
    return images, locs


def cmd_evaluate(cfg: RunConfig, est_path, truth_path, label=""):
    out = _outdir(cfg)
    est = read_localizations(est_path)
    truth = read_localizations(truth_path)
    report = evaluate_stack(est, truth, cfg.deltas, cfg.grid(), method=cfg.match_method)
    (out / "report.json").write_text(report.to_json())
    (out / "report.csv").write_text(report.to_csv())
    row = report.table_row(label)
    keys = list(row)
    table = ",".join(keys) + "\n" + ",".join(
        str(row[k]) if isinstance(row[k], str) else f"{row[k]:.6g}" for k in keys) + "\n"
    (out / "table.csv").write_text(table)
    write_json(out / "config.json", cfg.to_dict())
    sys.stdout.write(table)
    return report


def cmd_sweep_lambda(cfg: RunConfig, frames_path, truth_path):
    if not truth_path:
        raise ConfigError("sweep-lambda needs --truth (ground truth is required to score lambdas)")
    out = _outdir(cfg)
    stack = read_frame_stack(frames_path)
    truth = read_localizations(truth_path)
    res = sweep_lambda(stack, truth, cfg.operator(), cfg.model, cfg.lambda_grid, cfg.n_sample_frames,
                       cfg.seed, cfg.solver_config(), cfg.epsilon, max(cfg.deltas), cfg.sweep_mode,
                       cfg.threads, cfg.min_intensity)
    (out / f"sweep_{cfg.model}.csv").write_text(res.to_csv())
    summary = {"model": cfg.model, "best_lambda": res.best_lambda, "best_lambda_rel": res.best_rel,
               "lambda_scale": res.scale, "frames": res.frames, "mode": cfg.sweep_mode}
    write_json(out / f"sweep_{cfg.model}.json", summary)
    write_json(out / "config.json", cfg.to_dict())
    sys.stdout.write(dumps_json(summary))
    return res


def cmd_render(image_path, png_path, scale="linear", frame="sum"):
    img = read_image(image_path)
    if img.ndim == 3:
        if frame == "sum":
            img = img.sum(axis=0)
        else:
            try:
                img = img[int(frame)]
            except (ValueError, IndexError):
                raise ConfigError(f"no frame {frame!r} in a stack of {img.shape[0]}") from None
    render_png(img, png_path, scale)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "render":
            cmd_render(args.image, args.png, args.scale, args.frame)
            return EXIT_OK
        cfg = resolve_config(args)
        if args.command == "simulate":
            cmd_simulate(cfg)
        elif args.command == "solve":
            cmd_solve(cfg, args.frames)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, args.estimates, args.truth, args.label)
        elif args.command == "sweep-lambda":
            cmd_sweep_lambda(cfg, args.frames, args.truth)
    except (ParameterError, ConfigError) as exc:
        print(f"wcel0: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ParseError) as exc:
        print(f"wcel0: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DivergenceError as exc:
        print(f"wcel0: numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
