"""Weighted-CEL0 sparse super-resolution for single-molecule localization microscopy."""
from .errors import (CapExceededError, DimensionError, DivergenceError, ParameterError,
                     ParseError, WCEL0Error)
from .localizations import LocalizationSet
from .metrics import evaluate_stack, extract_localizations, jaccard, match_detections
from .operator import (DenseOperator, FidelityWeights, ForwardOperator, GridSpec, apply_adjoint,
                       apply_forward, build_psf, materialize_dense, naive_lipschitz_bound,
                       power_iteration_norm, weighted_column_norms)
from .penalty import (PenaltyParams, cel0_params, irl1_weights, l0_objective, wcel0_objective,
                      wcel0_params, wcel0_penalty)
from .solver import SolverConfig, SolverTrace, gfista_inner, irl1_multistart, irl1_solve, prox_weighted_l1_nonneg

__version__ = "0.1.0"
