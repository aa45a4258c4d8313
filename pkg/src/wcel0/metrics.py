"""Localization extraction and Jaccard-index evaluation.

Positions are compared after snapping to fine-grid pixels; distances are
Euclidean in fine-pixel units, so ``delta = 0`` means "same fine pixel".
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ParameterError
from .localizations import LocalizationSet
from .operator import GridSpec

DEFAULT_DELTAS = (0.0, 2.0, 4.0)


def extract_localizations(x_hat, grid: GridSpec, min_intensity: float = 0.0,
                          frame: int = 0) -> LocalizationSet:
    """One record per fine pixel whose value exceeds ``min_intensity``, at the pixel center."""
    img = np.asarray(x_hat, dtype=float).reshape(grid.N, grid.N)
    rows, cols = np.nonzero(img > min_intensity)
    px = grid.fine_pixel_nm
    return LocalizationSet(
        np.full(rows.size, frame),
        (cols + 0.5) * px,
        (rows + 0.5) * px,
        img[rows, cols],
    )


@dataclass
class MatchResult:
    cd: int
    fn: int
    fp: int
    pairs: list = field(default_factory=list)


def _single_frame(locs: LocalizationSet):
    fr = locs.frames()
    if fr.size > 1:
        raise ParameterError(f"expected one frame, got frames {fr.tolist()}")
    return int(fr[0]) if fr.size else None


def match_detections(est: LocalizationSet, truth: LocalizationSet, delta_pixels: float,
                     grid: GridSpec, method: str = "greedy") -> MatchResult:
    """Match estimates to ground truth within ``delta_pixels``.

    ``method="greedy"`` accepts candidate pairs nearest-first (ties broken by
    estimate index, then truth index). ``method="hungarian"`` maximizes the
    number of matches, then minimizes their total distance.
    """
    if delta_pixels < 0:
        raise ParameterError("delta must be nonnegative")
    fe, ft = _single_frame(est), _single_frame(truth)
    if fe is not None and ft is not None and fe != ft:
        raise ParameterError(f"frame mismatch: estimates {fe}, truth {ft}")
    ne, nt = len(est), len(truth)
    if ne == 0 or nt == 0:
        return MatchResult(0, nt, ne, [])

    pe = est.fine_pixels(grid.fine_pixel_nm).astype(float)
    pt = truth.fine_pixels(grid.fine_pixel_nm).astype(float)
    dist = np.sqrt(((pe[:, None, :] - pt[None, :, :]) ** 2).sum(axis=-1))
    ok = dist <= delta_pixels + 1e-9

    pairs = []
    if method == "greedy":
        ei, ti = np.nonzero(ok)
        order = np.lexsort((ti, ei, dist[ei, ti]))
        used_e = np.zeros(ne, bool)
        used_t = np.zeros(nt, bool)
        for k in order:
            a, b = ei[k], ti[k]
            if not used_e[a] and not used_t[b]:
                used_e[a] = used_t[b] = True
                pairs.append((int(a), int(b), float(dist[a, b])))
    elif method == "hungarian":
        big = 1.0 + float(dist[ok].sum()) if ok.any() else 1.0
        cost = np.where(ok, dist, big * (ne + nt))
        rows, cols = linear_sum_assignment(cost)
        pairs = sorted((int(a), int(b), float(dist[a, b])) for a, b in zip(rows, cols) if ok[a, b])
    else:
        raise ParameterError(f"unknown matching method {method!r}")
    cd = len(pairs)
    return MatchResult(cd, nt - cd, ne - cd, pairs)


def jaccard(m: MatchResult) -> float:
    denom = m.cd + m.fn + m.fp
    return 1.0 if denom == 0 else m.cd / denom


@dataclass
class JaccardReport:
    deltas: tuple
    per_frame: list
    means: dict

    def table_row(self, model: str = ""):
        """``model, J_delta..., CD, FN, FP`` with counts taken at the largest delta."""
        row = {"model": model}
        for d in self.deltas:
            row[f"J{_fmt_delta(d)}"] = self.means[d]["J"]
        top = self.means[max(self.deltas)]
        row.update(CD=top["cd"], FN=top["fn"], FP=top["fp"])
        return row

    def to_dict(self):
        return {
            "deltas": [float(d) for d in self.deltas],
            "per_frame": self.per_frame,
            "means": {_fmt_delta(d): v for d, v in self.means.items()},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self):
        lines = ["frame,delta,J,cd,fn,fp"]
        for r in self.per_frame:
            lines.append(f"{r['frame']},{_fmt_delta(r['delta'])},{r['J']:.12g},{r['cd']},{r['fn']},{r['fp']}")
        for d in self.deltas:
            m = self.means[d]
            lines.append(f"mean,{_fmt_delta(d)},{m['J']:.12g},{m['cd']:.12g},{m['fn']:.12g},{m['fp']:.12g}")
        return "\n".join(lines) + "\n"


def _fmt_delta(d):
    return f"{d:g}"


def evaluate_stack(est: LocalizationSet, truth: LocalizationSet, deltas=DEFAULT_DELTAS,
                   grid: GridSpec = None, frames=None, method: str = "greedy") -> JaccardReport:
    """Per-frame matching and frame-averaged Jaccard indices (mean of ratios).

    ``frames`` defaults to every frame id present in either set.
    """
    if len(truth) == 0:
        raise ParameterError("ground truth is empty")
    if grid is None:
        raise ParameterError("a grid is required")
    deltas = tuple(float(d) for d in deltas)
    if frames is None:
        frames = np.union1d(truth.frames(), est.frames())
    per_frame = []
    acc = {d: {"J": [], "cd": [], "fn": [], "fp": []} for d in deltas}
    for f in frames:
        e, t = est.for_frame(f), truth.for_frame(f)
        for d in deltas:
            m = match_detections(e, t, d, grid, method)
            j = jaccard(m)
            per_frame.append({"frame": int(f), "delta": d, "J": j, "cd": m.cd, "fn": m.fn, "fp": m.fp})
            for k, v in (("J", j), ("cd", m.cd), ("fn", m.fn), ("fp", m.fp)):
                acc[d][k].append(v)
    means = {d: {k: float(np.mean(v)) for k, v in a.items()} for d, a in acc.items()}
    return JaccardReport(deltas, per_frame, means)
