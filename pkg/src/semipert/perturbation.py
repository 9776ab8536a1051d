"""Boundary functional, generalized resolvent, and the perturbation series.

The perturbation couples the boundary value at b to a linear functional
phi(x) = integral of kernel * x over [-1, b]. Everything the series needs
reduces to closed-form window assignments:

* (R f)(t) = integral_0^t T(t-s) f(s) ds, computed by an exact shift
  recurrence reproducing composite trapezoid in time;
* the one-step perturbation form places the trace tau -> phi(f(tau)) on the
  window [b - t0, b] and is zero below it;
* the series step does the same per frame on the growing window [b - t, b].

The operator norm of the one-step form is bounded by t0^(1/p) * K, with K
the conjugate-exponent norm of the kernel; the discrete inequality is exact
because the trapezoid weights of the window sum to t0 and the discrete
Hoelder step mirrors the continuous one. The series converges geometrically
whenever t0^(1/p) * K < 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    AlignmentError,
    ConfigError,
    ContractionError,
    DomainMembershipError,
    GridMismatchError,
)
from .funcspace import (
    Grid,
    GridFunction,
    TimePath,
    load_grid_function,
    multiple_of,
    save_grid_function,
    seminorm,
    seminorm_profile,
    sup_seminorm,
    trapezoid,
)
from .reports import CheckReport
from .semigroup import GeneratorSpec, ShiftSemigroup


class BoundaryFunctional:
    """phi(x) = trapezoid of kernel * x over [-1, b]; kernel vanishes below -1.

    Exposes the conjugate-norm constant K with |phi(x)| <= K * p_1(x) (exact
    in the discrete weighted Hoelder sense), the full-grid weight vector for
    vectorized application, and cut_weight, the self-weight the quadrature
    assigns the node at b (needed by boundary rows that solve through it).
    """

    def __init__(self, kernel: GridFunction):
        grid = kernel.grid
        if grid.L < 1.0 - 1e-12:
            raise ConfigError("grid must reach at least -1 to host the kernel support")
        try:
            start = grid.index_of(-1.0)
        except AlignmentError as exc:
            raise ConfigError("-1 must be a grid node for the kernel window") from exc
        if np.any(kernel.values[:start] != 0.0):
            raise ConfigError("kernel must vanish below -1")
        self.kernel = kernel
        self.grid = grid
        self.p = kernel.p
        self.q = kernel.p / (kernel.p - 1.0)
        w = grid.trapezoid_weights(start)
        self.K = float(np.dot(w, np.abs(kernel.values[start:]) ** self.q) ** (1.0 / self.q))
        full = np.zeros(grid.n_points)
        full[start:] = w * kernel.values[start:]
        self.node_weights = full
        self.cut_weight = float(full[-1])

    def __call__(self, x: GridFunction) -> float:
        if x.grid != self.grid or x.p != self.p:
            raise GridMismatchError("state incompatible with boundary functional")
        return float(np.dot(self.node_weights, x.values))

    def apply_values(self, values: np.ndarray) -> np.ndarray:
        return values @ self.node_weights

    def apply_path(self, f: TimePath) -> np.ndarray:
        if f.grid != self.grid or f.p != self.p:
            raise GridMismatchError("path incompatible with boundary functional")
        return self.apply_values(f.values)

    # ------------------------------------------------------------- presets

    @classmethod
    def zero(cls, grid: Grid, p: float) -> "BoundaryFunctional":
        return cls(GridFunction.zero(grid, p))

    @classmethod
    def uniform(cls, grid: Grid, p: float) -> "BoundaryFunctional":
        """Indicator of [-1, b]; K = (1+b)^(1/q) exactly."""
        vals = np.where(grid.points >= -1.0 - 1e-12, 1.0, 0.0)
        return cls(GridFunction(grid, vals, p))

    @classmethod
    def bump(cls, grid: Grid, p: float, strength: float = 1.0) -> "BoundaryFunctional":
        """Smooth bump filling (-1, b), rescaled so K equals strength."""
        s = grid.points
        center = 0.5 * (grid.b - 1.0)
        radius = 0.5 * (grid.b + 1.0)
        u = (s - center) / radius
        vals = np.zeros_like(s)
        inside = np.abs(u) < 1.0
        vals[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
        raw = cls(GridFunction(grid, vals, p))
        if raw.K == 0.0:
            raise ConfigError("bump kernel degenerated to zero on this grid")
        return cls(GridFunction(grid, vals * (strength / raw.K), p))

    @classmethod
    def preset(cls, name: str, grid: Grid, p: float) -> "BoundaryFunctional":
        table = {"zero": cls.zero, "uniform": cls.uniform, "bump": cls.bump}
        if name not in table:
            raise ConfigError(f"unknown kernel preset {name!r} (choose from {sorted(table)})")
        return table[name](grid, p)

    # ------------------------------------------------------------- file io

    def save_csv(self, csv_path: str | Path, meta_path: str | Path | None = None) -> None:
        csv_path = Path(csv_path)
        save_grid_function(self.kernel, csv_path, meta_path)
        # rewrite header: kernel rows are (sigma, value)
        lines = csv_path.read_text().splitlines()
        lines[0] = "sigma,value"
        csv_path.write_text("\n".join(lines) + "\n")

    @classmethod
    def load_csv(cls, csv_path: str | Path,
                 meta_path: str | Path | None = None) -> "BoundaryFunctional":
        csv_path = Path(csv_path)
        text = csv_path.read_text().splitlines()
        if text and text[0].strip() == "sigma,value":
            text[0] = "s,value"
            tmp = csv_path.with_suffix(".tmp.csv")
            tmp.write_text("\n".join(text) + "\n")
            try:
                kernel = load_grid_function(tmp, meta_path or csv_path.with_suffix(".json"))
            finally:
                tmp.unlink(missing_ok=True)
        else:
            kernel = load_grid_function(csv_path, meta_path)
        return cls(kernel)


def phi_apply(phi: BoundaryFunctional, x: GridFunction) -> float:
    """Evaluate the boundary functional on a state."""
    return phi(x)


# ------------------------------------------------------------- resolvent R

def resolvent_path(f: TimePath) -> TimePath:
    """(R f)(t) = integral_0^t T(t-s) f(s) ds for every frame time t.

    Requires f(0) = 0. Uses the exact shift recurrence
    R_{k+1} = T(h_t) R_k + (h_t/2) (T(h_t) f_k + f_{k+1}),
    which reproduces composite trapezoid in time at every frame.
    """
    if not f.starts_at_zero:
        raise DomainMembershipError("resolvent input must vanish at t = 0")
    sg = ShiftSemigroup(f.grid)
    m = multiple_of(f.h_t, f.grid.h, "h_t")
    out = np.zeros_like(f.values)
    half = 0.5 * f.h_t
    for k in range(f.n_frames - 1):
        out[k + 1] = (sg.shift_values(out[k], m)
                      + half * (sg.shift_values(f.values[k], m) + f.values[k + 1]))
    return f.with_values(out)


def resolvent_R(f: TimePath, t: float) -> GridFunction:
    """Single frame (R f)(t); t must be a frame time of f."""
    k = multiple_of(t, f.h_t, "resolvent time")
    if k >= f.n_frames:
        raise ConfigError(f"time {t!r} beyond the path horizon {f.t0!r}")
    return resolvent_path(f).frame(k)


# ------------------------------------------- closed forms of the one-step map

def _fine_trace(f: TimePath, phi: BoundaryFunctional, upto: float) -> np.ndarray:
    """tau -> phi(f(tau)) sampled every h_s on [0, upto].

    When h_t > h_s the coarse scalars are interpolated linearly in time,
    exact whenever the frames themselves are linear between samples.
    """
    n_fine = f.grid.steps(upto)
    tau = f.grid.h * np.arange(n_fine + 1)
    coarse = phi.apply_path(f)
    if multiple_of(f.h_t, f.grid.h) == 1:
        return coarse[: n_fine + 1].copy()
    return np.interp(tau, f.times, coarse)


def perturb_integral_h(f: TimePath, t0: float, phi: BoundaryFunctional) -> GridFunction:
    """The one-step perturbation form at horizon t0.

    Output sigma -> phi(f(t0 - b + sigma)) on [b - t0, b], zero below. Its
    p_n seminorm is bounded by t0^(1/p) K sup_t p_1(f(t)), exactly in the
    discrete inequalities.
    """
    grid = f.grid
    k_fine = grid.steps(t0)
    if not (0 < k_fine and t0 <= grid.b + 1e-12):
        raise ConfigError(f"horizon t0={t0!r} must lie in (0, b]")
    if t0 > f.t0 + 1e-12:
        raise ConfigError(f"path covers only [0, {f.t0!r}], requested t0={t0!r}")
    trace = _fine_trace(f, phi, t0)
    out = np.zeros(grid.n_points)
    out[grid.n_points - 1 - k_fine:] = trace
    return GridFunction(grid, out, f.p)


def g_primitive(f: TimePath, phi: BoundaryFunctional) -> GridFunction:
    """Primitive form: t -> integral_t^b phi(f(s)) ds on [0, b], constant below.

    Needs the path to cover [0, b]."""
    grid = f.grid
    if f.t0 < grid.b - 1e-12:
        raise ConfigError(f"path horizon {f.t0!r} shorter than b={grid.b!r}")
    trace = _fine_trace(f, phi, grid.b)
    h = grid.h
    cum = np.zeros_like(trace)
    np.cumsum(0.5 * h * (trace[1:] + trace[:-1]), out=cum[1:])
    total = cum[-1]
    out = np.empty(grid.n_points)
    iz = grid.index_of(0.0)
    out[:iz] = total
    out[iz:] = total - cum
    return GridFunction(grid, out, f.p)


def rbar_b(f: TimePath, phi: BoundaryFunctional) -> TimePath:
    """One series step: frame t carries phi(f(t + sigma - b)) on [b - t, b].

    Input must vanish at t = 0; then so does the output, and the step maps
    the path class into itself with sup-seminorm gain at most t0^(1/p) K.
    """
    if not f.starts_at_zero:
        raise DomainMembershipError("series step input must vanish at t = 0")
    grid = f.grid
    m = multiple_of(f.h_t, grid.h)
    trace = _fine_trace(f, phi, f.t0)
    out = np.zeros_like(f.values)
    last = grid.n_points - 1
    for k in range(f.n_frames):
        out[k, last - k * m:] = trace[: k * m + 1]
    return f.with_values(out)


# ------------------------------------------------------------ Neumann series

@dataclass(frozen=True)
class NeumannConfig:
    tol: float = 1e-10
    max_terms: int = 64
    tracked: tuple[int, ...] = (1, 2, 3)

    def __post_init__(self) -> None:
        if self.tol <= 0.0:
            raise ConfigError("tolerance must be positive")
        if self.max_terms < 1:
            raise ConfigError("max_terms must be at least 1")
        if not self.tracked:
            raise ConfigError("need at least one tracked seminorm index")


@dataclass
class NeumannResult:
    path: TimePath
    terms_used: int
    converged: bool
    k_eff: float
    increments: list[dict[int, float]]  # sup seminorms per term, per index
    base_sup: dict[int, float]          # sup seminorms of the plain resolvent
    tail_bound: dict[int, float]


def contraction_factor(phi: BoundaryFunctional, t0: float, p: float) -> float:
    return t0 ** (1.0 / p) * phi.K


def neumann_resolvent(f: TimePath, phi: BoundaryFunctional,
                      cfg: NeumannConfig | None = None) -> NeumannResult:
    """Perturbed resolvent as the geometric series of repeated series steps.

    Terms are added until every tracked sup seminorm of the increment drops
    below tol or max_terms is hit (then the result is flagged, not raised).
    Raises ContractionError when t0^(1/p) K >= 1.
    """
    cfg = cfg or NeumannConfig()
    k_eff = contraction_factor(phi, f.t0, f.p)
    if k_eff >= 1.0 - 1e-12:
        raise ContractionError(
            f"contraction factor t0^(1/p)*K = {k_eff:.6g} >= 1; "
            "shrink the horizon or weaken the kernel"
        )
    term = resolvent_path(f)
    base_sup = {n: sup_seminorm(term, n) for n in cfg.tracked}
    total = term.values.copy()
    increments = [dict(base_sup)]
    converged = False
    terms = 1
    while terms < cfg.max_terms:
        term = rbar_b(term, phi)
        total += term.values
        sups = {n: sup_seminorm(term, n) for n in cfg.tracked}
        increments.append(sups)
        terms += 1
        if all(v < cfg.tol for v in sups.values()):
            converged = True
            break
    last = terms - 1  # index of the last included power
    tail = {
        n: k_eff ** (last + 1) / (1.0 - k_eff) * base_sup[n]
        for n in cfg.tracked
    }
    return NeumannResult(f.with_values(total), terms, converged, k_eff,
                         increments, base_sup, tail)


def estimate_contraction(phi: BoundaryFunctional, t0: float,
                         samples: list[TimePath], n: int) -> float:
    """Worst observed p_n(one-step form) / sup_t p_1(f(t)) over the samples.

    Asserts the analytic bound t0^(1/p) K (with tiny floating slack); the
    discrete inequality chain is exact, so exceeding it means a bug.
    """
    worst = 0.0
    bound = None
    for f in samples:
        bound = contraction_factor(phi, t0, f.p)
        denom = sup_seminorm(f, 1)
        if denom == 0.0:
            continue
        ratio = seminorm(perturb_integral_h(f, t0, phi), n) / denom
        worst = max(worst, ratio)
    if bound is not None and worst > bound * (1.0 + 1e-9) + 1e-15:
        raise AssertionError(
            f"one-step form ratio {worst!r} exceeds analytic bound {bound!r}"
        )
    return worst


# ------------------------------------------------- time derivative and checks

def path_time_derivative(f: TimePath, zero_start: bool = True) -> TimePath:
    """Second-order time derivative of a path (centered, 3-point edges).

    With zero_start the t = 0 row is set to exact zero: admissible paths
    satisfy f'(0) = 0, and the stencil value there is pure discretization
    noise that would otherwise leak out of the path class.
    """
    if f.n_frames < 3:
        raise ConfigError("need at least 3 frames to differentiate a path")
    v = f.values
    h = f.h_t
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    if zero_start:
        d[0] = 0.0
    return f.with_values(d)


def dembart_check(resolvent, gen: GeneratorSpec, testfns: list[TimePath], n: int,
                  coefficient: float = 200.0, domain_rel_tol: float = 0.25) -> CheckReport:
    """Defining identities of the generalized resolvent, on test paths.

    For each path f with f(0) = 0, f'(0) = 0 and frames in the generator
    domain, checks (relative to sup p_n(f)):
      resolvent_identity   R(f' - A f) = f
      derivative_commutes  (R f)' = R f'
      generator_commutes   A (R f) = R (A f)
      bounded_by_l1        sup p_n(R f) <= 1 * l1 p_n(f)
    The first three are discretization residuals; their bound is
    coefficient * (h_t^2 + h_s). The space term enters at first power even
    with second-order stencils: resolvent frames carry a kink (a jump in
    the second space derivative at the inflow edge of the integration
    window), and differentiating across it costs an order. The fourth
    identity is exact for frames vanishing at b.

    The f'(0) = 0 gate compares the raw time stencil at t = 0 against the
    path's own derivative scale: on admissible paths that ratio is O(h_t^2),
    while a genuinely incompatible path scores O(1).
    """
    report = CheckReport("resolvent_identities", meta={
        "n": n, "paths": len(testfns), "stencil_order": gen.stencil_order,
    })
    if not testfns:
        return report
    tiny = np.finfo(float).tiny
    h_s = testfns[0].grid.h
    h_t = testfns[0].h_t
    disc = coefficient * (h_t ** 2 + h_s)
    worst = {"resolvent_identity": 0.0, "derivative_commutes": 0.0,
             "generator_commutes": 0.0, "bounded_by_l1": 0.0}
    for f in testfns:
        scale = max(sup_seminorm(f, n), tiny)
        if not f.starts_at_zero:
            raise DomainMembershipError("test path must vanish at t = 0")
        raw = path_time_derivative(f, zero_start=False)
        d0_ratio = seminorm(raw.frame(0), n) / max(sup_seminorm(raw, n), tiny)
        if d0_ratio > domain_rel_tol:
            raise DomainMembershipError(
                f"test path needs f'(0) = 0 (relative stencil value {d0_ratio:.3e})"
            )
        if gen.kind == "dirichlet":
            edge = np.abs(f.values[:, -1])
        else:
            edge = np.abs(f.values[:, -1] - gen.phi.apply_values(f.values))
        if float(edge.max()) > 1e-9 * max(1.0, scale):
            raise DomainMembershipError(
                f"some frame violates the generator domain (residual {edge.max():.3e})"
            )
        df_vals = raw.values.copy()
        df_vals[0] = 0.0
        df = f.with_values(df_vals)
        af = gen.apply_path(f)
        rf = resolvent(f)

        r1 = sup_seminorm(f.with_values(
            resolvent(f.with_values(df.values - af.values)).values - f.values), n)
        r2 = sup_seminorm(f.with_values(
            path_time_derivative(rf).values - resolvent(df).values), n)
        r3 = sup_seminorm(f.with_values(
            gen.apply_path(rf).values - resolvent(af).values), n)
        worst["resolvent_identity"] = max(worst["resolvent_identity"], r1 / scale)
        worst["derivative_commutes"] = max(worst["derivative_commutes"], r2 / scale)
        worst["generator_commutes"] = max(worst["generator_commutes"], r3 / scale)

        l1 = trapezoid(seminorm_profile(f, n), f.h_t)
        if l1 > 0.0:
            worst["bounded_by_l1"] = max(worst["bounded_by_l1"],
                                         sup_seminorm(rf, n) / l1)
    for name in ("resolvent_identity", "derivative_commutes", "generator_commutes"):
        report.add(name, worst[name], disc, n=n)
    report.add("bounded_by_l1", worst["bounded_by_l1"], 1.0 + 1e-12, n=n)
    return report
