"""Discretized state space: uniform grid on [-L, b], graded seminorms, paths.

States model functions in L^p_loc(-inf, b] truncated to [-L, b] and sampled
on a uniform grid. The graded seminorm with index n integrates |x|^p over
[-n, b] by composite trapezoid. Paths are time-indexed families of states
with their own uniform step, locked to an integer multiple of the space step
so that shifts stay exact index operations.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .errors import AlignmentError, ConfigError, GridMismatchError

REL_TOL = 1e-9


def is_multiple(value: float, step: float, tol: float = REL_TOL) -> bool:
    """True if value is an integer multiple of step up to relative slack."""
    if step <= 0.0:
        return False
    ratio = value / step
    return abs(ratio - round(ratio)) <= tol * max(1.0, abs(ratio))


def multiple_of(value: float, step: float, what: str = "value") -> int:
    """Return round(value/step), raising if value is not aligned to step."""
    if not is_multiple(value, step):
        raise AlignmentError(f"{what}={value!r} is not a multiple of step {step!r}")
    return int(round(value / step))


def trapezoid(values: np.ndarray, dx: float) -> float:
    """Composite trapezoid of sampled values with uniform spacing dx."""
    v = np.asarray(values, dtype=float)
    if v.shape[-1] < 2:
        return 0.0
    return float(dx * (v[..., 1:-1].sum(axis=-1) + 0.5 * (v[..., 0] + v[..., -1])))


@dataclass(frozen=True)
class Grid:
    """Uniform spatial grid on [-L, b] with step h (b, L, h all positive)."""

    b: float
    L: float
    h: float

    def __post_init__(self) -> None:
        if not (self.b > 0.0 and self.L > 0.0 and self.h > 0.0):
            raise ConfigError("grid requires b > 0, L > 0, h > 0")
        span = self.b + self.L
        if not is_multiple(span, self.h):
            raise ConfigError(
                f"grid span b+L={span!r} is not an integer number of steps h={self.h!r}"
            )
        if self.n_points < 3:
            raise ConfigError("grid needs at least 3 points")

    @property
    def n_points(self) -> int:
        return int(round((self.b + self.L) / self.h)) + 1

    @property
    def points(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.n_points)

    def index_of(self, s: float) -> int:
        """Index of the node at coordinate s; raises if s is off-grid."""
        pos = (s + self.L) / self.h
        i = int(round(pos))
        if abs(pos - i) > 1e-6 or i < 0 or i >= self.n_points:
            raise AlignmentError(f"coordinate {s!r} is not a node of the grid")
        return i

    def steps(self, t: float, what: str = "time") -> int:
        """Number of grid steps in a duration t >= 0 (must be aligned)."""
        k = multiple_of(t, self.h, what)
        if k < 0:
            raise AlignmentError(f"{what}={t!r} must be nonnegative")
        return k

    def window_start(self, n: float) -> int:
        """Start index of the seminorm window [-n, b]."""
        if n < 1.0 - REL_TOL or n > self.L + REL_TOL:
            raise ConfigError(f"seminorm index n={n!r} outside [1, L={self.L!r}]")
        return self.index_of(-float(n))

    def trapezoid_weights(self, start: int) -> np.ndarray:
        """Trapezoid quadrature weights for nodes[start:]."""
        m = self.n_points - start
        w = np.full(m, self.h)
        w[0] = 0.5 * self.h
        w[-1] = 0.5 * self.h
        return w


def _check_exponent(p: float) -> None:
    if not (1.0 < p < np.inf):
        raise ConfigError(f"exponent p={p!r} must satisfy 1 < p < inf")


@dataclass(frozen=True)
class GridFunction:
    """A state: samples on a Grid plus the integrability exponent p."""

    grid: Grid
    values: np.ndarray
    p: float

    def __post_init__(self) -> None:
        _check_exponent(self.p)
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.shape[0] != self.grid.n_points:
            raise GridMismatchError(
                f"values shape {v.shape} does not match grid with {self.grid.n_points} points"
            )
        if not np.isfinite(v).all():
            raise ConfigError("state contains non-finite samples")
        object.__setattr__(self, "values", v)

    @classmethod
    def zero(cls, grid: Grid, p: float) -> "GridFunction":
        return cls(grid, np.zeros(grid.n_points), p)

    @classmethod
    def from_callable(cls, grid: Grid, p: float, fn) -> "GridFunction":
        return cls(grid, np.asarray([fn(s) for s in grid.points], dtype=float), p)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, values, self.p)

    @property
    def boundary_value(self) -> float:
        """Sample at the right endpoint b."""
        return float(self.values[-1])


def assert_same_space(a: GridFunction, b: GridFunction) -> None:
    if a.grid != b.grid or a.p != b.p:
        raise GridMismatchError("operands live on different grids or exponents")


@dataclass(frozen=True)
class TimePath:
    """A path of states on [0, t0]: frames at a uniform time step h_t.

    h_t must be an integer multiple of the space step so shifts of any frame
    by any whole number of time steps remain exact index operations.
    """

    grid: Grid
    p: float
    h_t: float
    values: np.ndarray  # shape (n_frames, n_points)

    def __post_init__(self) -> None:
        _check_exponent(self.p)
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != self.grid.n_points:
            raise GridMismatchError(
                f"path values shape {v.shape} incompatible with grid ({self.grid.n_points} points)"
            )
        if v.shape[0] < 1:
            raise ConfigError("path needs at least one frame")
        if multiple_of(self.h_t, self.grid.h, "h_t") < 1:
            raise ConfigError(f"h_t={self.h_t!r} must be a positive multiple of h_s")
        if not np.isfinite(v).all():
            raise ConfigError("path contains non-finite samples")
        object.__setattr__(self, "values", v)

    @property
    def n_frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def t0(self) -> float:
        return self.h_t * (self.n_frames - 1)

    @property
    def times(self) -> np.ndarray:
        return self.h_t * np.arange(self.n_frames)

    def frame(self, j: int) -> GridFunction:
        if not (0 <= j < self.n_frames):
            raise IndexError(f"frame index {j} outside [0, {self.n_frames})")
        return GridFunction(self.grid, self.values[j], self.p)

    def frame_at(self, t: float) -> GridFunction:
        return self.frame(multiple_of(t, self.h_t, "frame time"))

    def with_values(self, values: np.ndarray) -> "TimePath":
        return TimePath(self.grid, self.p, self.h_t, values)

    @property
    def starts_at_zero(self) -> bool:
        """Membership in the path class used by the resolvent (f(0) = 0)."""
        return bool(np.all(self.values[0] == 0.0))

    @classmethod
    def from_frames(cls, frames: Iterable[GridFunction], h_t: float) -> "TimePath":
        frames = list(frames)
        if not frames:
            raise ConfigError("cannot build a path from zero frames")
        for fr in frames[1:]:
            assert_same_space(frames[0], fr)
        return cls(frames[0].grid, frames[0].p, h_t, np.vstack([fr.values for fr in frames]))


def assert_same_path_space(a: TimePath, b: TimePath) -> None:
    if a.grid != b.grid or a.p != b.p or not np.isclose(a.h_t, b.h_t, rtol=REL_TOL):
        raise GridMismatchError("paths live on different grids, exponents or time steps")


# ----------------------------------------------------------------- seminorms

def seminorm(x: GridFunction, n: float) -> float:
    """p_n(x) = (trapezoid of |x|^p over [-n, b])^(1/p)."""
    start = x.grid.window_start(n)
    w = x.grid.trapezoid_weights(start)
    acc = float(np.dot(w, np.abs(x.values[start:]) ** x.p))
    return acc ** (1.0 / x.p)


def seminorm_profile(path: TimePath, n: float) -> np.ndarray:
    """Per-frame seminorms p_n(f(t_j)) as a vector over frames."""
    start = path.grid.window_start(n)
    w = path.grid.trapezoid_weights(start)
    acc = np.abs(path.values[:, start:]) ** path.p @ w
    return acc ** (1.0 / path.p)


def sup_seminorm(path: TimePath, n: float) -> float:
    """Sup-in-time lift: max_j p_n(f(t_j))."""
    return float(seminorm_profile(path, n).max())


def l1_seminorm(path: TimePath, n: float) -> float:
    """L1-in-time lift: trapezoid of p_n(f(t)) over the path's own [0, t0]."""
    return trapezoid(seminorm_profile(path, n), path.h_t)


class DomainCheck(NamedTuple):
    member: bool
    residual: float


def in_domain_dirichlet(x: GridFunction, tol: float = 1e-9) -> DomainCheck:
    """Domain test for the absorbing generator: boundary sample must vanish."""
    residual = abs(x.boundary_value)
    return DomainCheck(residual <= tol, residual)


def in_domain_feedback(x: GridFunction, phi, tol: float = 1e-9) -> DomainCheck:
    """Domain test for the feedback generator: x(b) must equal phi(x)."""
    residual = abs(x.boundary_value - phi(x))
    return DomainCheck(residual <= tol, residual)


# ------------------------------------------------------------------ file io

def _write_csv(path: Path, header: list[str], rows: Iterable[Iterable[float]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def save_grid_function(x: GridFunction, csv_path: str | Path,
                       meta_path: str | Path | None = None) -> None:
    """Write samples as (s, value) rows plus a JSON sidecar with grid metadata."""
    csv_path = Path(csv_path)
    meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".json")
    _write_csv(csv_path, ["s", "value"], zip(x.grid.points, x.values))
    meta = {"b": x.grid.b, "L": x.grid.L, "h_s": x.grid.h, "p": x.p}
    meta_path.parent.mkdir(parents=True, exist_ok=True)
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")


def load_grid_function(csv_path: str | Path,
                       meta_path: str | Path | None = None) -> GridFunction:
    csv_path = Path(csv_path)
    meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".json")
    try:
        meta = json.loads(meta_path.read_text())
        grid = Grid(float(meta["b"]), float(meta["L"]), float(meta["h_s"]))
        p = float(meta["p"])
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"bad grid metadata {meta_path}: {exc}") from exc
    coords, vals = [], []
    with csv_path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:2]] != ["s", "value"]:
            raise ConfigError(f"{csv_path}: expected header 's,value'")
        for row in reader:
            coords.append(float(row[0]))
            vals.append(float(row[1]))
    if len(vals) != grid.n_points:
        raise ConfigError(
            f"{csv_path}: {len(vals)} rows but grid has {grid.n_points} nodes"
        )
    if not np.allclose(coords, grid.points, rtol=0.0, atol=1e-9 * max(1.0, grid.b + grid.L)):
        raise ConfigError(f"{csv_path}: coordinate column disagrees with grid nodes")
    return GridFunction(grid, np.asarray(vals), p)


def save_time_path(f: TimePath, csv_path: str | Path,
                   meta_path: str | Path | None = None) -> None:
    """Write a path as (t, s, value) rows ordered by frame then node."""
    csv_path = Path(csv_path)
    meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".json")
    times = f.times
    pts = f.grid.points

    def rows():
        for j in range(f.n_frames):
            for i in range(f.grid.n_points):
                yield (times[j], pts[i], f.values[j, i])

    _write_csv(csv_path, ["t", "s", "value"], rows())
    meta = {"b": f.grid.b, "L": f.grid.L, "h_s": f.grid.h, "p": f.p, "h_t": f.h_t}
    meta_path.parent.mkdir(parents=True, exist_ok=True)
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")


def load_time_path(csv_path: str | Path,
                   meta_path: str | Path | None = None) -> TimePath:
    csv_path = Path(csv_path)
    meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".json")
    try:
        meta = json.loads(meta_path.read_text())
        grid = Grid(float(meta["b"]), float(meta["L"]), float(meta["h_s"]))
        p = float(meta["p"])
        h_t = float(meta["h_t"])
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"bad path metadata {meta_path}: {exc}") from exc
    vals = []
    with csv_path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:3]] != ["t", "s", "value"]:
            raise ConfigError(f"{csv_path}: expected header 't,s,value'")
        vals = [float(row[2]) for row in reader]
    n = grid.n_points
    if len(vals) % n != 0 or len(vals) == 0:
        raise ConfigError(f"{csv_path}: row count {len(vals)} is not a frame multiple of {n}")
    arr = np.asarray(vals).reshape(len(vals) // n, n)
    return TimePath(grid, p, h_t, arr)
