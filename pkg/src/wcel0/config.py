"""Run configuration: defaults, JSON loading and validation."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import ParameterError
from .operator import ForwardOperator, GridSpec
from .pipeline import MODELS
from .solver import SolverConfig


@dataclass
class RunConfig:
    # acquisition geometry
    M: int = 64
    L: int = 4
    coarse_pixel_nm: float = 100.0
    fwhm_nm: float = 258.2
    # model
    model: str = "wcel0"
    lam: float | None = None
    lam_rel: float = 10.0
    epsilon: float | None = 1.0
    solver: dict = field(default_factory=lambda: SolverConfig().to_dict())
    # simulation
    seed: int = 1
    n_frames: int = 20
    n_per_frame: int = 15
    intensity_range: list = field(default_factory=lambda: [500.0, 2000.0])
    background: float = 1.0
    # evaluation
    min_intensity: float = 0.0
    deltas: list = field(default_factory=lambda: [0.0, 2.0, 4.0])
    match_method: str = "greedy"
    # lambda sweep
    lambda_grid: list | None = None
    n_sample_frames: int = 8
    sweep_mode: str = "mean-score"
    # execution
    threads: int = 0
    out: str = "out"

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        base = cls()
        merged = {**asdict(base), **d}
        if "solver" in d:
            merged["solver"] = {**base.solver, **d["solver"]}
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParameterError(f"config is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ParameterError("config must be a JSON object")
        return cls.from_dict(d)

    def to_dict(self):
        return asdict(self)

    def validate(self):
        self.grid()
        if not np.isfinite(self.fwhm_nm) or self.fwhm_nm <= 0:
            raise ParameterError("fwhm_nm must be positive")
        if self.model not in MODELS:
            raise ParameterError(f"model must be one of {MODELS}")
        if self.lam is not None and not 0 < self.lam < math.inf:
            raise ParameterError("lam must be positive and finite")
        if not 0 < self.lam_rel < math.inf:
            raise ParameterError("lam_rel must be positive and finite")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ParameterError("epsilon must be positive or null")
        self.solver_config()
        if self.n_frames < 0 or self.n_per_frame < 0:
            raise ParameterError("frame and molecule counts must be nonnegative")
        lo, hi = self.intensity_range
        if not 0 < lo <= hi:
            raise ParameterError("intensity_range must satisfy 0 < min <= max")
        if self.background < 0 or self.min_intensity < 0:
            raise ParameterError("background and min_intensity must be nonnegative")
        if not self.deltas or any(d < 0 for d in self.deltas):
            raise ParameterError("deltas must be a non-empty list of nonnegative values")
        if self.match_method not in ("greedy", "hungarian"):
            raise ParameterError("match_method must be greedy or hungarian")
        if self.lambda_grid is not None and (not self.lambda_grid or min(self.lambda_grid) <= 0):
            raise ParameterError("lambda_grid must be non-empty and positive")
        if self.n_sample_frames < 1:
            raise ParameterError("n_sample_frames must be >= 1")
        if self.sweep_mode not in ("mean-score", "mean-argmax"):
            raise ParameterError("sweep_mode must be mean-score or mean-argmax")
        if self.threads < 0:
            raise ParameterError("threads must be >= 0")

    def grid(self) -> GridSpec:
        return GridSpec(int(self.M), int(self.L), float(self.coarse_pixel_nm))

    def operator(self) -> ForwardOperator:
        return ForwardOperator.gaussian(self.grid(), self.fwhm_nm)

    def solver_config(self) -> SolverConfig:
        try:
            return SolverConfig(**self.solver)
        except TypeError as exc:
            raise ParameterError(f"bad solver settings: {exc}") from None
