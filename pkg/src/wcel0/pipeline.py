"""Stack-level drivers: model setup, per-frame solves and the lambda sweep."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .localizations import LocalizationSet
from .metrics import evaluate_stack, extract_localizations
from .operator import FidelityWeights, ForwardOperator
from .simulate import FrameStack
from .solver import SolverConfig, irl1_solve

MODELS = ("cel0", "wcel0")


def model_weights(y, model: str, epsilon: float | None = 1.0) -> FidelityWeights:
    """``W = I`` for CEL0, ``W = diag(1 / max(y, epsilon))`` for wCEL0."""
    y = np.asarray(y, dtype=float).ravel()
    if model == "cel0":
        return FidelityWeights.uniform(y.size)
    if model == "wcel0":
        return FidelityWeights.from_counts(y, epsilon)
    raise ParameterError(f"unknown model {model!r}")


def data_energy_scale(frames, model: str, epsilon: float | None = 1.0) -> float:
    """Mean of ``w_j y_j**2`` over all pixels of all frames.

    Relative lambdas are multiples of this; it makes one grid usable for
    both fidelities.
    """
    frames = np.asarray(frames, dtype=float)
    if frames.size == 0:
        return 1.0
    vals = [np.mean(model_weights(y, model, epsilon).w * y * y) for y in frames.reshape(frames.shape[0], -1)]
    s = float(np.mean(vals))
    return s if s > 0 else 1.0


def default_lambda_grid(n: int = 16):
    return np.logspace(-2, 3, n)


def _workers(threads):
    return threads if threads and threads > 0 else (os.cpu_count() or 1)


def solve_frame(y, op: ForwardOperator, model: str, lam: float, cfg: SolverConfig,
                epsilon: float | None = 1.0):
    y = np.asarray(y, dtype=float).ravel()
    return irl1_solve(y, op, model_weights(y, model, epsilon), lam, cfg)


def solve_stack(frames, op: ForwardOperator, model: str, lam: float, cfg: SolverConfig,
                epsilon: float | None = 1.0, threads: int = 1):
    """Solve every frame; results come back in frame order."""
    frames = np.asarray(frames, dtype=float)

    def job(y):
        return solve_frame(y, op, model, lam, cfg, epsilon)

    workers = _workers(threads)
    if workers == 1 or len(frames) <= 1:
        return [job(y) for y in frames]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, frames))


def localize_stack(images, grid, min_intensity: float = 0.0, frame_ids=None) -> LocalizationSet:
    if frame_ids is None:
        frame_ids = range(len(images))
    return LocalizationSet.concat(
        extract_localizations(x, grid, min_intensity, frame=f) for f, x in zip(frame_ids, images)
    )


@dataclass
class SweepResult:
    best_lambda: float
    best_rel: float
    scale: float
    frames: list
    rows: list

    def to_csv(self):
        lines = ["lambda_rel,lambda,mean_J,frame_J"]
        for r in self.rows:
            per = ";".join(f"{j:.12g}" for j in r["frame_J"])
            lines.append(f"{r['lambda_rel']:.12g},{r['lambda']:.12g},{r['mean_J']:.12g},{per}")
        return "\n".join(lines) + "\n"


def sweep_lambda(stack: FrameStack, truth: LocalizationSet, op: ForwardOperator, model: str,
                 lambda_grid=None, n_sample_frames: int = 8, seed: int = 0,
                 cfg: SolverConfig | None = None, epsilon: float | None = 1.0,
                 delta: float = 4.0, mode: str = "mean-score", threads: int = 1,
                 min_intensity: float = 0.0) -> SweepResult:
    """Pick lambda by Jaccard score on randomly chosen frames.

    ``lambda_grid`` holds multiples of :func:`data_energy_scale`.
    ``mode="mean-score"`` maximizes the frame-averaged J; ``"mean-argmax"``
    averages the per-frame best lambdas. Ties go to the smaller lambda.
    """
    if truth is None or len(truth) == 0:
        raise ParameterError("the lambda sweep needs ground truth")
    grid_rel = np.asarray(default_lambda_grid() if lambda_grid is None else lambda_grid, dtype=float)
    if grid_rel.size == 0 or np.any(grid_rel <= 0):
        raise ParameterError("lambda grid must be non-empty and positive")
    if mode not in ("mean-score", "mean-argmax"):
        raise ParameterError(f"unknown sweep mode {mode!r}")
    cfg = cfg or SolverConfig()
    n = len(stack)
    if n == 0:
        raise ParameterError("frame stack is empty")
    k = min(n_sample_frames, n)
    picked = sorted(int(i) for i in np.random.default_rng(seed).choice(n, size=k, replace=False))
    sub = stack.frames[picked].astype(float)
    scale = data_energy_scale(stack.frames, model, epsilon)
    sub_truth = LocalizationSet.concat(truth.for_frame(f) for f in picked)

    rows = []
    scores = np.zeros((grid_rel.size, k))
    for gi, rel in enumerate(grid_rel):
        lam = rel * scale
        results = solve_stack(sub, op, model, lam, cfg, epsilon, threads)
        est = localize_stack([x for x, _ in results], op.grid, min_intensity, picked)
        rep = evaluate_stack(est, sub_truth, (delta,), op.grid, frames=picked)
        js = [r["J"] for r in rep.per_frame]
        scores[gi] = js
        rows.append({"lambda_rel": float(rel), "lambda": float(lam), "mean_J": float(np.mean(js)),
                     "frame_J": [float(j) for j in js]})

    if mode == "mean-score":
        best_rel = float(grid_rel[int(np.argmax(scores.mean(axis=1)))])
    else:
        best_rel = float(np.mean(grid_rel[np.argmax(scores, axis=0)]))
    return SweepResult(best_rel * scale, best_rel, scale, picked, rows)
