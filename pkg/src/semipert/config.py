"""Run configuration shared by the CLI and the HTTP service.

A RunConfig is a flat, JSON-serializable description of one suite run:
grid, exponent, kernel choice, horizons, series and iteration controls,
seed, pass threshold and refinement depth. Validation failures surface as
ConfigError, which the CLI maps to exit code 2.
"""

from __future__ import annotations

import json
from pathlib import Path

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .funcspace import Grid, GridFunction, is_multiple, load_grid_function
from .perturbation import BoundaryFunctional, NeumannConfig

KERNEL_PRESETS = ("zero", "uniform", "bump")


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    b: float = 1.0
    L: float = 4.0
    h_s: float = 1.0 / 256.0
    h_t: float | None = None          # defaults to h_s
    p: float = 2.0
    t0: float = 0.125                 # series horizon
    t_final: float = 0.5              # evolution horizon
    kernel: str = "uniform"           # preset name or path to a kernel CSV
    kernel_strength: float = 1.0      # target K for the bump preset
    x0_csv: str | None = None         # optional initial state (else seeded)
    tol: float = 1e-10
    max_terms: int = 64
    tracked: tuple[int, ...] = (1, 2, 3)
    seed: int = 2026
    threshold: float = 1e-8           # evolve comparison gate
    refine: int = 0                   # joint halvings for refinement ladders
    window_factor: float = 0.5        # Picard window contraction target
    fp_tol: float = 1e-12
    fp_damping: float = 0.5
    fp_max_iter: int = 100

    @property
    def time_step(self) -> float:
        return self.h_s if self.h_t is None else self.h_t

    @field_validator("b", "L", "h_s", "t0", "t_final", "tol", "threshold",
                     "kernel_strength", "fp_tol")
    @classmethod
    def _positive(cls, v, info):
        if info.field_name == "t_final":
            if v < 0.0:
                raise ValueError("t_final must be nonnegative")
            return v
        if v <= 0.0:
            raise ValueError(f"{info.field_name} must be positive")
        return v

    @field_validator("p")
    @classmethod
    def _exponent(cls, v):
        if not (1.0 < v < float("inf")):
            raise ValueError("p must satisfy 1 < p < inf")
        return v

    @field_validator("max_terms", "fp_max_iter")
    @classmethod
    def _at_least_one(cls, v, info):
        if v < 1:
            raise ValueError(f"{info.field_name} must be at least 1")
        return v

    @field_validator("refine")
    @classmethod
    def _refine_range(cls, v):
        if not (0 <= v <= 4):
            raise ValueError("refine must lie in 0..4")
        return v

    @field_validator("seed")
    @classmethod
    def _seed_range(cls, v):
        if v < 0:
            raise ValueError("seed must be nonnegative")
        return v

    @field_validator("window_factor", "fp_damping")
    @classmethod
    def _unit_interval(cls, v, info):
        if not (0.0 < v < 1.0):
            raise ValueError(f"{info.field_name} must lie strictly in (0, 1)")
        return v

    @model_validator(mode="after")
    def _cross_checks(self):
        if self.L < 1.0:
            raise ValueError("L must be at least 1 (the kernel window reaches -1)")
        if not is_multiple(self.b + self.L, self.h_s):
            raise ValueError("b + L must be an integer number of space steps h_s")
        ht = self.time_step
        if not is_multiple(ht, self.h_s) or ht < self.h_s * (1.0 - 1e-9):
            raise ValueError("h_t must be a positive integer multiple of h_s")
        if self.t0 > self.b + 1e-12:
            raise ValueError("t0 must not exceed b")
        if not is_multiple(self.t0, ht):
            raise ValueError("t0 must be an integer number of time steps h_t")
        if round(self.t0 / ht) < 2:
            raise ValueError("t0 must span at least 2 time steps")
        if not is_multiple(self.t_final, ht):
            raise ValueError("t_final must be an integer number of time steps h_t")
        for n in self.tracked:
            if n != int(n) or not (1 <= n <= self.L):
                raise ValueError(f"tracked index {n} must be an integer in [1, L]")
        if not self.tracked:
            raise ValueError("tracked must not be empty")
        if self.kernel not in KERNEL_PRESETS and not Path(self.kernel).exists():
            raise ValueError(
                f"kernel {self.kernel!r} is neither a preset {KERNEL_PRESETS} nor a file"
            )
        return self

    # -------------------------------------------------------------- builders

    def grid(self) -> Grid:
        return Grid(self.b, self.L, self.h_s)

    def boundary_functional(self, grid: Grid | None = None) -> BoundaryFunctional:
        grid = grid or self.grid()
        if self.kernel in KERNEL_PRESETS:
            if self.kernel == "bump":
                return BoundaryFunctional.bump(grid, self.p, self.kernel_strength)
            return BoundaryFunctional.preset(self.kernel, grid, self.p)
        phi = BoundaryFunctional.load_csv(Path(self.kernel))
        if phi.grid != grid or phi.p != self.p:
            raise ConfigError("kernel file grid or exponent disagrees with the run config")
        return phi

    def initial_state(self, grid: Grid) -> GridFunction | None:
        if self.x0_csv is None:
            return None
        x0 = load_grid_function(Path(self.x0_csv))
        if x0.grid != grid or x0.p != self.p:
            raise ConfigError("x0 file grid or exponent disagrees with the run config")
        return x0

    def neumann(self) -> NeumannConfig:
        return NeumannConfig(tol=self.tol, max_terms=self.max_terms, tracked=self.tracked)

    def scaled(self, halvings: int) -> "RunConfig":
        """Config with space and time steps jointly halved `halvings` times."""
        factor = 2.0 ** halvings
        return self.model_copy(update={
            "h_s": self.h_s / factor,
            "h_t": self.time_step / factor,
        })


def config_from_dict(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(x) for x in first.get("loc", ())) or "config"
        raise ConfigError(f"invalid config: {loc}: {first.get('msg')}") from exc


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Read a JSON config file (optional) and apply non-None overrides."""
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return config_from_dict(data)
