"""Deterministic sample states and paths used by the check suites.

Draws are split from evaluation: a spec captures random coefficients once,
evaluation samples the same analytic function on any grid. Refinement
ladders rely on that split to halve steps without changing the function
under test. Everything is seeded, so reruns reproduce reports byte for
byte.

States built for contraction-type checks vanish at the right endpoint b,
where evolved states always vanish anyway; see README for why that matters
with trapezoid windows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .funcspace import Grid, GridFunction, TimePath


@dataclass(frozen=True)
class SmoothSpec:
    """Coefficients of a low-mode sine series vanishing at s = -L and s = b."""

    coefs: tuple[float, ...]


def draw_smooth(rng: np.random.Generator, modes: int = 6) -> SmoothSpec:
    coefs = rng.normal(size=modes) / np.arange(1, modes + 1) ** 2
    return SmoothSpec(tuple(coefs))


def eval_smooth(spec: SmoothSpec, grid: Grid, p: float) -> GridFunction:
    s = grid.points
    span = grid.b + grid.L
    vals = np.zeros_like(s)
    for j, c in enumerate(spec.coefs, start=1):
        vals += c * np.sin(j * np.pi * (grid.b - s) / span)
    vals[-1] = 0.0  # kill roundoff at s = b
    return GridFunction(grid, vals, p)


def smooth_states(grid: Grid, p: float, rng: np.random.Generator,
                  count: int, modes: int = 6) -> list[GridFunction]:
    return [eval_smooth(draw_smooth(rng, modes), grid, p) for _ in range(count)]


def rough_states(grid: Grid, p: float, rng: np.random.Generator,
                 count: int, boundary_zero: bool = True) -> list[GridFunction]:
    """Independent normal samples per node; no smoothness at all."""
    out = []
    for _ in range(count):
        v = rng.normal(size=grid.n_points)
        if boundary_zero:
            v[-1] = 0.0
        out.append(GridFunction(grid, v, p))
    return out


@dataclass(frozen=True)
class PathSpec:
    """Two smooth shapes, each riding a smooth time profile with value 0 at t=0."""

    shapes: tuple[SmoothSpec, SmoothSpec]
    time_coefs: tuple[tuple[float, ...], tuple[float, ...]]


def draw_path(rng: np.random.Generator, modes: int = 6,
              time_modes: int = 3) -> PathSpec:
    shapes = (draw_smooth(rng, modes), draw_smooth(rng, modes))
    tc = tuple(tuple(rng.normal(size=time_modes)) for _ in range(2))
    return PathSpec(shapes, tc)


def eval_path(spec: PathSpec, grid: Grid, p: float, h_t: float, t0: float) -> TimePath:
    n_frames = int(round(t0 / h_t)) + 1
    times = h_t * np.arange(n_frames)
    vals = np.zeros((n_frames, grid.n_points))
    for shape, tc in zip(spec.shapes, spec.time_coefs):
        prof = np.zeros_like(times)
        for k, c in enumerate(tc, start=1):
            prof += c * np.sin(k * np.pi * times / (2.0 * t0))
        prof[0] = 0.0
        vals += np.outer(prof, eval_smooth(shape, grid, p).values)
    return TimePath(grid, p, h_t, vals)


def paths_starting_at_zero(grid: Grid, p: float, h_t: float, t0: float,
                           rng: np.random.Generator, count: int) -> list[TimePath]:
    """Paths f with f(0) = 0, smooth in space and time."""
    return [eval_path(draw_path(rng), grid, p, h_t, t0) for _ in range(count)]


@dataclass(frozen=True)
class CompatPathSpec:
    """One smooth shape times t^2 (c0 + c1 t + c2 t^2)."""

    shape: SmoothSpec
    poly: tuple[float, float, float]


def draw_compatible_path(rng: np.random.Generator, modes: int = 6) -> CompatPathSpec:
    return CompatPathSpec(draw_smooth(rng, modes), tuple(rng.normal(size=3)))


def eval_compatible_path(spec: CompatPathSpec, grid: Grid, p: float,
                         h_t: float, t0: float) -> TimePath:
    n_frames = int(round(t0 / h_t)) + 1
    times = h_t * np.arange(n_frames)
    c0, c1, c2 = spec.poly
    a = times ** 2 * (c0 + c1 * times + c2 * times ** 2)
    return TimePath(grid, p, h_t, np.outer(a, eval_smooth(spec.shape, grid, p).values))


def compatible_paths(grid: Grid, p: float, h_t: float, t0: float,
                     rng: np.random.Generator, count: int) -> list[TimePath]:
    """Paths for the resolvent identity checks.

    Each is a(t) * x(s) with a(t) = t^2 (c0 + c1 t + c2 t^2), so f(0) = 0
    and f'(0) = 0 hold (the quadratic factor makes the one-sided time
    stencil at t = 0 vanish to second order), and every frame vanishes at
    s = b so frames sit in the absorbing generator's domain.
    """
    return [eval_compatible_path(draw_compatible_path(rng), grid, p, h_t, t0)
            for _ in range(count)]


def _eta(u: np.ndarray) -> np.ndarray:
    """Standard bump on (-1, 1), normalized to 1 at u = 0, zero outside."""
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui ** 2))
    return out


def _eta_prime(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = -2.0 * ui / (1.0 - ui ** 2) ** 2 * np.exp(1.0 - 1.0 / (1.0 - ui ** 2))
    return out


def feedback_domain_states(grid: Grid, p: float, phi,
                           width: float = 0.25) -> list[GridFunction]:
    """Three states in the feedback generator's domain, compatible to first order.

    Starting from three smooth base shapes, each state gets a correction
    alpha*e1 + beta*e2 with e1, e2 bumps supported within width of b, chosen
    so that both x(b) = phi(x) (exactly, with the discrete functional) and
    x'(b) = phi(x') (with analytic derivatives sampled on the grid). The
    second condition removes the corner layer that would otherwise cap the
    observable order of the difference-quotient check at 1/2.
    """
    s = grid.points
    b = grid.b
    u = (s - b) / width
    e1 = _eta(u)                       # e1(b) = 1, e1'(b) = 0
    e1_d = _eta_prime(u) / width
    e2 = (s - b) * _eta(u)             # e2(b) = 0, e2'(b) = 1
    e2_d = _eta(u) + (s - b) * _eta_prime(u) / width

    span = b + grid.L
    bases = [
        (np.sin(np.pi * (b - s) / span),
         -np.pi / span * np.cos(np.pi * (b - s) / span)),
        (np.cos(np.pi * s / span),
         -np.pi / span * np.sin(np.pi * s / span)),
        (np.exp(-((s - (b - 1.0)) ** 2)),
         -2.0 * (s - (b - 1.0)) * np.exp(-((s - (b - 1.0)) ** 2))),
    ]

    def f(vals: np.ndarray) -> float:
        return phi(GridFunction(grid, vals, p))

    mat = np.array([
        [e1[-1] - f(e1), e2[-1] - f(e2)],
        [e1_d[-1] - f(e1_d), e2_d[-1] - f(e2_d)],
    ])
    out = []
    for base, base_d in bases:
        rhs = np.array([f(base) - base[-1], f(base_d) - base_d[-1]])
        alpha, beta = np.linalg.solve(mat, rhs)
        vals = base + alpha * e1 + beta * e2
        # pin the boundary sample so x(b) = phi(x) holds to machine precision
        cut = phi.cut_weight
        vals[-1] = (f(vals) - cut * vals[-1]) / (1.0 - cut)
        out.append(GridFunction(grid, vals, p))
    return out
