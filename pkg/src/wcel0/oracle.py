"""Exhaustive global minimization of the weighted l2-l0 objective on tiny problems.

Only usable for ``N**2 <= 20`` unknowns; the cost is exponential in the
support size.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import nnls

from .errors import CapExceededError, ParameterError
from .operator import DenseOperator, FidelityWeights
from .penalty import l0_objective, wcel0_objective, wcel0_params

MAX_UNKNOWNS = 20


@dataclass
class OracleResult:
    x_star: np.ndarray
    objective: float
    support: tuple
    enumerated: int


def restricted_nnls(A, y, weights: FidelityWeights, support):
    """Nonnegative weighted least squares with ``x`` supported on ``support``."""
    n = A.shape[1]
    x = np.zeros(n)
    if len(support) == 0:
        return x
    sw = np.sqrt(weights.w)
    idx = list(support)
    xs, _ = nnls(sw[:, None] * A[:, idx], sw * y, maxiter=50 * n)
    x[idx] = xs
    return x


def brute_force_l0(y, dense_A, weights: FidelityWeights, lam, max_support=None) -> OracleResult:
    """Global minimizer of ``0.5||Ax - y||_W**2 + lam ||x||_0`` over ``x >= 0``.

    Every support of size ``<= max_support`` is visited; on each the
    restricted NNLS problem is solved exactly and scored with the size of its
    actual nonzero set. Ties keep the first support in (size, lexicographic)
    order.
    """
    A = np.atleast_2d(np.asarray(dense_A, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = A.shape[1]
    if n > MAX_UNKNOWNS:
        raise CapExceededError(f"{n} unknowns exceeds the brute-force cap of {MAX_UNKNOWNS}")
    if lam < 0:
        raise ParameterError("lambda must be nonnegative")
    if max_support is None:
        max_support = min(n, A.shape[0])
    if not 0 <= max_support <= n:
        raise ParameterError(f"max_support must lie in [0, {n}]")
    usable = [i for i in range(n) if np.any(A[:, i] != 0)]

    best_x, best_obj, best_supp = np.zeros(n), np.inf, ()
    count = 0
    for k in range(max_support + 1):
        for supp in combinations(usable, k):
            count += 1
            x = restricted_nnls(A, y, weights, supp)
            obj = 0.5 * float(np.sum(weights.w * (A @ x - y) ** 2)) + lam * np.count_nonzero(x)
            if obj < best_obj:
                best_x, best_obj = x, obj
                best_supp = tuple(int(i) for i in np.flatnonzero(x))
    return OracleResult(best_x, best_obj, best_supp, count)


@dataclass
class RelaxationReport:
    n_samples: int
    n_violations: int
    max_violation: float
    oracle: OracleResult
    l0_at_star: float
    wcel0_at_star: float
    star_saturated: bool
    sampled_min_wcel0: float


def verify_relaxation(y, dense_A, weights: FidelityWeights, lam, n_samples=1000, seed=0,
                      max_support=None) -> RelaxationReport:
    """Sample feasible points and compare the relaxed and l0 objectives.

    Each sample activates every component with probability 0.3 and draws its
    value uniformly in ``[0, 2 t_i]`` so both sides of each threshold are hit.
    """
    A = np.atleast_2d(np.asarray(dense_A, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if A.shape[1] > MAX_UNKNOWNS:
        raise CapExceededError(f"{A.shape[1]} unknowns exceeds the brute-force cap of {MAX_UNKNOWNS}")
    op = DenseOperator(A)
    p = wcel0_params(op, weights, lam)
    rng = np.random.default_rng(seed)
    n = A.shape[1]

    worst, violations, sampled_min = -np.inf, 0, np.inf
    for _ in range(n_samples):
        mask = rng.random(n) < 0.3
        x = np.where(mask, rng.random(n) * 2.0 * p.thresholds, 0.0)
        g_rel = wcel0_objective(x, y, op, weights, p).total
        g_l0 = l0_objective(x, y, op, weights, p).total
        gap = g_rel - g_l0
        worst = max(worst, gap)
        if gap > 1e-12 * max(1.0, abs(g_l0)):
            violations += 1
        sampled_min = min(sampled_min, g_rel)

    star = brute_force_l0(y, A, weights, lam, max_support)
    nz = star.x_star != 0
    return RelaxationReport(
        n_samples=n_samples,
        n_violations=violations,
        max_violation=float(worst),
        oracle=star,
        l0_at_star=l0_objective(star.x_star, y, op, weights, p).total,
        wcel0_at_star=wcel0_objective(star.x_star, y, op, weights, p).total,
        star_saturated=bool(np.all(star.x_star[nz] >= p.thresholds[nz])),
        sampled_min_wcel0=float(sampled_min),
    )
