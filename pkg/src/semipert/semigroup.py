"""Left-shift semigroup on the grid, its generators, and the axiom checks.

The semigroup moves samples toward the evaluation point b and pads with
zero beyond it: (T(t)x)(s) = x(s+t) if s+t <= b else 0. Because admissible
times are whole numbers of grid steps, applying T is exact index shifting;
the semigroup law and identity hold to machine precision by construction,
and the axiom checker verifies exactly that.

Two generator discretizations are provided, selected by stencil_order:

* order 1: the evolution-matching stencil (forward differences, with the
  boundary row reproducing what one discrete evolution step does), so the
  difference quotient (T(h)x - x)/h agrees with it exactly at h equal to
  the grid step;
* order 2: plain second-order derivative stencils (centered interior,
  one-sided three-point edges) with no boundary override, used where the
  checks need the residual to shrink like a square.

The boundary condition itself lives in the domain test, not the stencil:
"dirichlet" requires x(b) = 0, "feedback" requires x(b) = phi(x).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConfigError, DomainMembershipError
from .funcspace import (
    DomainCheck,
    Grid,
    GridFunction,
    TimePath,
    in_domain_dirichlet,
    in_domain_feedback,
    seminorm,
)
from .reports import CheckReport


class ShiftSemigroup:
    """Exact left shift with zero fill on a fixed grid."""

    def __init__(self, grid: Grid):
        self.grid = grid

    def steps(self, t: float) -> int:
        return self.grid.steps(t)

    def shift_values(self, values: np.ndarray, k: int) -> np.ndarray:
        """Shift samples k nodes toward b along the last axis, zero fill."""
        if k < 0:
            raise ConfigError("shift count must be nonnegative")
        out = np.zeros_like(values)
        n = values.shape[-1]
        if k < n:
            out[..., : n - k] = values[..., k:]
        return out

    def apply(self, t: float, x: GridFunction) -> GridFunction:
        if x.grid != self.grid:
            raise ConfigError("state lives on a different grid")
        return x.with_values(self.shift_values(x.values, self.steps(t)))

    def apply_path(self, t: float, f: TimePath) -> TimePath:
        if f.grid != self.grid:
            raise ConfigError("path lives on a different grid")
        return f.with_values(self.shift_values(f.values, self.steps(t)))


@dataclass(frozen=True)
class GeneratorSpec:
    """Discrete generator: first derivative plus a boundary behavior.

    kind "dirichlet" is the unperturbed generator (absorbing boundary,
    domain x(b) = 0). kind "feedback" couples the boundary to the linear
    functional phi (domain x(b) = phi(x)); its boundary row solves the
    one-node self-reference the quadrature weight at b introduces.
    """

    kind: str
    phi: object = None
    stencil_order: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("dirichlet", "feedback"):
            raise ConfigError(f"unknown generator kind {self.kind!r}")
        if self.stencil_order not in (1, 2):
            raise ConfigError("stencil_order must be 1 or 2")
        if self.kind == "feedback" and self.phi is None:
            raise ConfigError("feedback generator requires a boundary functional")

    def in_domain(self, x: GridFunction, tol: float = 1e-9) -> DomainCheck:
        if self.kind == "dirichlet":
            return in_domain_dirichlet(x, tol)
        return in_domain_feedback(x, self.phi, tol)

    def _derivative_rows(self, values: np.ndarray, h: float) -> np.ndarray:
        v = np.atleast_2d(values)
        d = np.empty_like(v)
        if self.stencil_order == 1:
            d[:, :-1] = (v[:, 1:] - v[:, :-1]) / h
            d[:, -1] = (v[:, -1] - v[:, -2]) / h
        else:
            d[:, 1:-1] = (v[:, 2:] - v[:, :-2]) / (2.0 * h)
            d[:, 0] = (-3.0 * v[:, 0] + 4.0 * v[:, 1] - v[:, 2]) / (2.0 * h)
            d[:, -1] = (3.0 * v[:, -1] - 4.0 * v[:, -2] + v[:, -3]) / (2.0 * h)
        return d

    def apply_values(self, values: np.ndarray, grid: Grid) -> np.ndarray:
        squeeze = values.ndim == 1
        d = self._derivative_rows(values, grid.h)
        if self.kind == "dirichlet" and self.stencil_order == 1:
            # evolution-matching row: one shift step feeds a zero ghost at b+h
            d[:, -1] = -np.atleast_2d(values)[:, -1] / grid.h
        elif self.kind == "feedback":
            # boundary row y = phi(x'), resolving the self-weight at node b
            cut = self.phi.cut_weight
            raw = self.phi.apply_values(d)
            d[:, -1] = (raw - cut * d[:, -1]) / (1.0 - cut)
        return d[0] if squeeze else d

    def apply(self, x: GridFunction) -> GridFunction:
        return x.with_values(self.apply_values(x.values, x.grid))

    def apply_path(self, f: TimePath) -> TimePath:
        return f.with_values(self.apply_values(f.values, f.grid))


def aligned_times(grid: Grid, t0: float, max_count: int = 129) -> np.ndarray:
    """Grid-aligned times covering [0, t0], at most max_count of them."""
    k_max = grid.steps(t0)
    if k_max + 1 <= max_count:
        ks = np.arange(k_max + 1)
    else:
        ks = np.unique(np.round(np.linspace(0, k_max, max_count)).astype(int))
    return ks * grid.h


def check_semigroup_axioms(sg: ShiftSemigroup, states: list[GridFunction],
                           times: np.ndarray, indices: tuple[int, ...] = (1, 2, 3),
                           rel_bound: float = 1e-12) -> CheckReport:
    """Identity, composition law, linearity and nilpotency, per seminorm index.

    Residuals are recorded relative to p_n(x) of the state they came from.
    With aligned times everything is index arithmetic, so the expected
    residuals are exactly zero; the bound guards against regressions.
    """
    report = CheckReport("semigroup_axioms",
                         meta={"states": len(states), "times": len(times)})
    grid = sg.grid
    tiny = np.finfo(float).tiny
    mat = np.vstack([x.values for x in states])
    p = states[0].p
    scale = {n: np.array([max(seminorm(x, n), tiny) for x in states]) for n in indices}

    def rel_residual(diff_mat: np.ndarray, n: int) -> float:
        start = grid.window_start(n)
        w = grid.trapezoid_weights(start)
        norms = (np.abs(diff_mat[:, start:]) ** p @ w) ** (1.0 / p)
        return float((norms / scale[n]).max())

    ident = mat - sg.shift_values(mat, 0)
    for n in indices:
        report.add("identity", rel_residual(ident, n), rel_bound, n=n, t=0.0)

    ks = sorted({grid.steps(t) for t in times})
    worst = {n: (0.0, 0.0) for n in indices}  # residual, at time t+s
    for ka in ks:
        shifted_a = sg.shift_values(mat, ka)
        for kb in ks:
            diff = sg.shift_values(shifted_a, kb) - sg.shift_values(mat, ka + kb)
            for n in indices:
                r = rel_residual(diff, n)
                if r > worst[n][0]:
                    worst[n] = (r, (ka + kb) * grid.h)
    for n in indices:
        r, tsum = worst[n]
        report.add("composition", r, rel_bound, n=n, t=tsum)

    if len(states) >= 2:
        k_mid = ks[len(ks) // 2]
        combo = 0.7 * mat[0] - 1.3 * mat[1]
        lin = (sg.shift_values(combo, k_mid)
               - (0.7 * sg.shift_values(mat[0], k_mid) - 1.3 * sg.shift_values(mat[1], k_mid)))
        for n in indices:
            start = grid.window_start(n)
            w = grid.trapezoid_weights(start)
            r = float((np.dot(w, np.abs(lin[start:]) ** p)) ** (1.0 / p))
            report.add("linearity", r / max(seminorm(states[0], n), tiny),
                       rel_bound, n=n, t=k_mid * grid.h)

    t_kill = grid.b + grid.L + grid.h
    dead = sg.shift_values(mat, grid.steps(t_kill))
    for n in indices:
        report.add("nilpotency", rel_residual(dead, n), rel_bound, n=n, t=t_kill)
    return report


class EquicontinuityEstimate(NamedTuple):
    M: float
    q_index: int


def equicontinuity_constants(sg: ShiftSemigroup, t0: float, n: int,
                             states: list[GridFunction],
                             times: np.ndarray | None = None) -> EquicontinuityEstimate:
    """Smallest observed constant M with p_n(T(t)x) <= M p_q(x) on [0, t0].

    For the left shift the window [-n+t, b] sits inside [-n, b], so the same
    index works: q = n and M should not exceed 1 (exactly, when x(b) = 0;
    see README for the trapezoid endpoint caveat otherwise).
    """
    if times is None:
        times = aligned_times(sg.grid, t0)
    grid = sg.grid
    p = states[0].p
    start = grid.window_start(n)
    w = grid.trapezoid_weights(start)
    mat = np.vstack([x.values for x in states])
    base = (np.abs(mat[:, start:]) ** p @ w) ** (1.0 / p)
    keep = base > 0.0
    worst = 0.0
    for t in times:
        shifted = sg.shift_values(mat, grid.steps(t))
        norms = (np.abs(shifted[:, start:]) ** p @ w) ** (1.0 / p)
        if keep.any():
            worst = max(worst, float((norms[keep] / base[keep]).max()))
    return EquicontinuityEstimate(worst, n)


def generator_residual(evolve: Callable[[float, GridFunction], GridFunction],
                       gen: GeneratorSpec, x: GridFunction, h: float, n: int,
                       domain_tol: float = 1e-9) -> float:
    """p_n of ((evolve(h)x - x)/h - gen(x)); raises if x fails gen's domain test."""
    chk = gen.in_domain(x, domain_tol)
    if not chk.member:
        raise DomainMembershipError(
            f"state outside domain of {gen.kind} generator (residual {chk.residual:.3e})"
        )
    moved = evolve(h, x)
    quotient = (moved.values - x.values) / h
    return seminorm(x.with_values(quotient - gen.apply(x).values), n)
