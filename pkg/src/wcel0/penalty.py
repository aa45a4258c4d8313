"""l0 and weighted-CEL0 objectives, and the IRL1 reweighting rule.

Both objectives use the fidelity ``0.5 * ||Ax - y||_W**2``; the per-column
thresholds ``sqrt(2 lam) / ||a_i||_W`` are derived under that convention.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .operator import FidelityWeights


@dataclass(frozen=True)
class PenaltyParams:
    lam: float
    col_norms_sq: np.ndarray
    thresholds: np.ndarray

    @classmethod
    def from_norms(cls, lam: float, col_norms_sq) -> "PenaltyParams":
        if not np.isfinite(lam) or lam <= 0:
            raise ParameterError(f"lambda must be positive, got {lam}")
        c = np.asarray(col_norms_sq, dtype=float).ravel().copy()
        if np.any(c <= 0) or not np.all(np.isfinite(c)):
            raise ParameterError("column norms must be positive and finite")
        t = np.sqrt(2.0 * lam) / np.sqrt(c)
        c.setflags(write=False)
        t.setflags(write=False)
        return cls(float(lam), c, t)

    @property
    def col_norms(self):
        return np.sqrt(self.col_norms_sq)

    def __len__(self):
        return self.col_norms_sq.size


def wcel0_params(op, weights: FidelityWeights, lam: float) -> PenaltyParams:
    return PenaltyParams.from_norms(lam, op.column_norms_sq(weights))


def cel0_params(op, lam: float) -> PenaltyParams:
    """CEL0 is wCEL0 with ``W = I``."""
    return wcel0_params(op, FidelityWeights.uniform(op.shape[0]), lam)


@dataclass(frozen=True)
class ObjectiveValue:
    fidelity: float
    penalty: float
    indicator_ok: bool

    @property
    def total(self) -> float:
        return self.fidelity + self.penalty if self.indicator_ok else np.inf


def penalty_terms(x, p: PenaltyParams):
    """Per-component values of the wCEL0 penalty, each in ``[0, lam]``."""
    ax = np.abs(np.asarray(x, dtype=float).ravel())
    # below threshold, lam - c/2 (t - a)**2 == c a (t - a/2) since c t**2 = 2 lam;
    # the second form is exactly zero at a = 0
    below = p.col_norms_sq * ax * (p.thresholds - 0.5 * ax)
    return np.where(ax < p.thresholds, np.minimum(below, p.lam), p.lam)


def wcel0_penalty(x, p: PenaltyParams) -> float:
    return float(np.sum(penalty_terms(x, p)))


def irl1_weights(x, p: PenaltyParams):
    """Slopes of the penalty terms in ``|x_i|``, divided by ``lam``.

    At ``x_i = 0`` the right derivative (largest subgradient) is taken.
    """
    ax = np.abs(np.asarray(x, dtype=float).ravel())
    slope = p.col_norms * np.sqrt(2.0 * p.lam) - p.col_norms_sq * ax
    return np.maximum(slope, 0.0) / p.lam


def weighted_fidelity(x, y, op, weights: FidelityWeights) -> float:
    """``0.5 * ||Ax - y||_W**2``."""
    y = np.asarray(y, dtype=float).ravel()
    r = op.forward(x) - y
    if r.size != weights.w.size:
        raise DimensionError("weights do not match the data")
    return 0.5 * float(np.dot(weights.w * r, r))


def l0_objective(x, y, op, weights: FidelityWeights, p: PenaltyParams) -> ObjectiveValue:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != len(p):
        raise DimensionError(f"x has {x.size} entries, expected {len(p)}")
    return ObjectiveValue(
        weighted_fidelity(x, y, op, weights),
        p.lam * float(np.count_nonzero(x)),
        bool(np.all(x >= 0)),
    )


def wcel0_objective(x, y, op, weights: FidelityWeights, p: PenaltyParams) -> ObjectiveValue:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != len(p):
        raise DimensionError(f"x has {x.size} entries, expected {len(p)}")
    return ObjectiveValue(
        weighted_fidelity(x, y, op, weights),
        wcel0_penalty(x, p),
        bool(np.all(x >= 0)),
    )
