from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

SmallJumpMode = Literal["gaussian-match", "drop"]
ExitKind = Literal["none", "jump", "diffusion", "bridge"]


@dataclass(frozen=True)
class SimConfig:
    epsilon: float
    dt: float
    n_paths: int
    seed: int = 0
    small_jump_mode: SmallJumpMode = "gaussian-match"
    exit_refinement: int = 8

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.small_jump_mode not in ("gaussian-match", "drop"):
            raise ValueError(f"unknown small_jump_mode {self.small_jump_mode!r}")
        if self.exit_refinement < 0:
            raise ValueError("exit_refinement must be >= 0")


@dataclass(frozen=True)
class EmpiricalStats:
    estimate: float
    half_width: float
    n_paths: int
    seed: int
    estimator: str
    ci_low: float = float("nan")
    ci_high: float = float("nan")

    def __post_init__(self):
        if self.half_width < 0:
            raise ValueError("half_width must be nonnegative")


@dataclass(frozen=True)
class ExitRecord:
    exited: bool
    tau: float
    exit_position: np.ndarray
    pre_exit_position: np.ndarray
    kind: ExitKind


@dataclass(frozen=True, eq=False)
class PathBatch:
    """Per-path outcome arrays of one simulation run, ordered by path index."""

    tau: np.ndarray
    kind: np.ndarray
    exit_position: np.ndarray
    pre_exit_position: np.ndarray
    final_position: np.ndarray
    occupation: np.ndarray | None = None

    @property
    def n_paths(self) -> int:
        return int(self.tau.shape[0])
