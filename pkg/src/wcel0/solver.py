"""IRL1 minimization of the (weighted) CEL0 objective.

Each outer iteration majorizes the penalty by a weighted l1 norm at the
current iterate and solves

    min_{x >= 0} 0.5 * ||Ax - y||_W**2 + lam * sum_i omega_i |x_i|

with a monotone FISTA that backtracks the Lipschitz constant both up and
down. The momentum sequence follows the rule for varying step sizes,
``t_{k+1} = (1 + sqrt(1 + 4 (L_{k+1} / L_k) t_k**2)) / 2``.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DivergenceError, ParameterError
from .operator import FidelityWeights, power_iteration_norm
from .penalty import irl1_weights, wcel0_objective, wcel0_params

log = logging.getLogger(__name__)

MAX_BACKTRACKS = 200


@dataclass(frozen=True)
class SolverConfig:
    max_outer: int = 50
    max_inner: int = 200
    tol_outer_rel_obj: float = 1e-4
    tol_inner_rel_x: float = 1e-5
    lipschitz_seed: str = "power-iteration"
    power_iters: int = 20
    bt_increase: float = 2.0
    bt_decrease: float = 0.95

    def __post_init__(self):
        if self.max_outer < 1 or self.max_inner < 1:
            raise ParameterError("iteration caps must be >= 1")
        if self.tol_outer_rel_obj <= 0 or self.tol_inner_rel_x <= 0:
            raise ParameterError("tolerances must be positive")
        if not (self.bt_increase > 1.0 >= self.bt_decrease > 0.0):
            raise ParameterError("need bt_increase > 1 >= bt_decrease > 0")
        if self.lipschitz_seed not in ("power-iteration", "naive-bound"):
            raise ParameterError(f"unknown Lipschitz seed {self.lipschitz_seed!r}")

    def to_dict(self):
        return asdict(self)


@dataclass
class SolverTrace:
    outer_objectives: list = field(default_factory=list)
    inner_iter_counts: list = field(default_factory=list)
    lipschitz: list = field(default_factory=list)
    final_step_size: float = float("nan")
    stop_reason: str = ""

    def to_dict(self):
        return {
            "outer_objectives": [float(v) for v in self.outer_objectives],
            "inner_iter_counts": [int(v) for v in self.inner_iter_counts],
            "lipschitz": [float(v) for v in self.lipschitz],
            "final_step_size": float(self.final_step_size),
            "stop_reason": self.stop_reason,
        }


def prox_weighted_l1_nonneg(v, s):
    """Componentwise ``argmin_{x >= 0} 0.5 (x - v)**2 + s |x|``."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ParameterError("thresholds must be nonnegative")
    return np.maximum(np.asarray(v, dtype=float) - s, 0.0)


def fidelity_gradient(x, y, op, weights: FidelityWeights):
    """Gradient ``A^T W (Ax - y)`` of ``0.5 * ||Ax - y||_W**2``."""
    return op.adjoint(weights.w * (op.forward(x) - np.asarray(y, dtype=float).ravel()))


def lipschitz_seed(op, weights: FidelityWeights, cfg: SolverConfig) -> float:
    bound = op.lipschitz_bound(weights)
    if cfg.lipschitz_seed == "naive-bound":
        return bound
    est = power_iteration_norm(op, weights, cfg.power_iters)
    return min(est, bound) if est > 0 else bound


def gfista_inner(y, op, weights: FidelityWeights, omega, lam, x_init, cfg: SolverConfig,
                 L_init=None, L_max=None):
    """Approximately solve the nonnegative weighted-l1 subproblem.

    Returns
    -------
    x : ndarray
    iterations : int
    L : float
        Lipschitz estimate accepted at the last iteration.
    """
    y = np.asarray(y, dtype=float).ravel()
    w = weights.w
    s = lam * np.asarray(omega, dtype=float).ravel()
    if np.any(s < 0):
        raise ParameterError("omega must be nonnegative")
    x = np.asarray(x_init, dtype=float).ravel().copy()
    if np.any(x < 0):
        raise ParameterError("x_init must be nonnegative")
    if L_max is None:
        L_max = op.lipschitz_bound(weights)
    L = L_init if L_init is not None else lipschitz_seed(op, weights, cfg)
    L = min(L, L_max)

    def smooth(ax):
        r = ax - y
        return 0.5 * float(np.dot(w * r, r))

    ax = op.forward(x)
    gx = op.adjoint(w * (ax - y))
    F = smooth(ax) + float(np.dot(s, x))
    if not np.isfinite(F):
        raise DivergenceError("non-finite objective at the initial point")
    ax_prev, gx_prev, x_prev = ax, gx, x
    t = 1.0
    restarted = False
    it = 0
    for it in range(1, cfg.max_inner + 1):
        L_old = L
        L = L * cfg.bt_decrease
        for _ in range(MAX_BACKTRACKS):
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * (L / L_old) * t * t))
            beta = (t - 1.0) / t_new
            if beta > 0.0:
                xb = x + beta * (x - x_prev)
                axb = ax + beta * (ax - ax_prev)
                gb = gx + beta * (gx - gx_prev)
            else:
                xb, axb, gb = x, ax, gx
            x_new = np.maximum(xb - (gb + s) / L, 0.0)
            ax_new = op.forward(x_new)
            f_new = smooth(ax_new)
            d = x_new - xb
            bound = smooth(axb) + float(np.dot(gb, d)) + 0.5 * L * float(np.dot(d, d))
            if not np.isfinite(f_new):
                raise DivergenceError("non-finite objective during backtracking")
            if f_new <= bound + 1e-14 * abs(bound) or L >= L_max:
                break
            L = min(L * cfg.bt_increase, L_max)
        else:
            raise DivergenceError("backtracking did not terminate")

        F_new = f_new + float(np.dot(s, x_new))
        if F_new > F:
            # monotone variant: keep x, drop momentum
            if restarted:
                break
            restarted = True
            t = 1.0
            x_prev, ax_prev, gx_prev = x, ax, gx
            continue
        restarted = False
        g_new = op.adjoint(w * (ax_new - y))
        step = np.linalg.norm(x_new - x)
        x_prev, ax_prev, gx_prev = x, ax, gx
        x, ax, gx, F, t = x_new, ax_new, g_new, F_new, t_new
        nx = np.linalg.norm(x)
        if step == 0.0 or step <= cfg.tol_inner_rel_x * nx:
            break
    return x, it, L


def irl1_solve(y, op, weights: FidelityWeights, lam, cfg: SolverConfig | None = None,
               x_init=None, callback=None):
    """Minimize ``0.5||Ax - y||_W**2 + Phi_wCEL0(x; lam)`` over ``x >= 0``.

    The penalty thresholds are built from ``weights``; pass uniform weights
    for plain CEL0. ``callback(k, x)`` is called after every outer iteration.

    Returns
    -------
    x : ndarray
    trace : SolverTrace
    """
    cfg = cfg or SolverConfig()
    if not np.isfinite(lam) or lam <= 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    y = np.asarray(y, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise ParameterError("data must be finite")
    p = wcel0_params(op, weights, lam)
    if x_init is None:
        x = np.maximum(op.adjoint(y), 0.0)
    else:
        x = np.asarray(x_init, dtype=float).ravel().copy()
        if np.any(x < 0):
            raise ParameterError("x_init must be nonnegative")

    L_max = op.lipschitz_bound(weights)
    L = lipschitz_seed(op, weights, cfg)
    G = wcel0_objective(x, y, op, weights, p).total
    trace = SolverTrace(outer_objectives=[G])
    trace.stop_reason = "max-iterations"
    for k in range(cfg.max_outer):
        omega = irl1_weights(x, p)
        x_new, n_inner, L = gfista_inner(y, op, weights, omega, lam, x, cfg, L_init=L, L_max=L_max)
        G_new = wcel0_objective(x_new, y, op, weights, p).total
        if not np.isfinite(G_new):
            raise DivergenceError(f"non-finite objective at outer iteration {k}")
        rel_obj = abs(G - G_new) / max(abs(G), np.finfo(float).tiny)
        nx = np.linalg.norm(x_new)
        rel_x = np.linalg.norm(x_new - x) / nx if nx > 0 else np.linalg.norm(x_new - x)
        trace.outer_objectives.append(G_new)
        trace.inner_iter_counts.append(n_inner)
        trace.lipschitz.append(L)
        x, G = x_new, G_new
        if callback is not None:
            callback(k, x)
        log.debug("outer %d: G=%.10g inner=%d L=%.4g", k, G, n_inner, L)
        if rel_obj < cfg.tol_outer_rel_obj and rel_x < cfg.tol_inner_rel_x:
            trace.stop_reason = "tolerance"
            break
    trace.final_step_size = 1.0 / L if L > 0 else float("inf")
    return x, trace


def irl1_multistart(y, op, weights: FidelityWeights, lam, cfg: SolverConfig | None = None,
                    n_starts: int = 10, seed: int = 0):
    """Best of several IRL1 runs by final objective.

    The first run starts from ``A^T y``; the others from points drawn
    uniformly in ``[0, t_i]`` componentwise, ``t_i`` being the penalty
    thresholds.
    """
    if n_starts < 1:
        raise ParameterError("n_starts must be >= 1")
    thresholds = wcel0_params(op, weights, lam).thresholds
    rng = np.random.default_rng(seed)
    best = None
    for k in range(n_starts):
        x0 = None if k == 0 else rng.random(thresholds.size) * thresholds
        x, trace = irl1_solve(y, op, weights, lam, cfg, x_init=x0)
        if best is None or trace.outer_objectives[-1] < best[1].outer_objectives[-1]:
            best = (x, trace)
    return best
