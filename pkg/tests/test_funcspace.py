import math

import numpy as np
import pytest

from semipert.errors import AlignmentError, ConfigError, GridMismatchError
from semipert.funcspace import (
    Grid,
    GridFunction,
    TimePath,
    in_domain_dirichlet,
    in_domain_feedback,
    l1_seminorm,
    load_grid_function,
    load_time_path,
    save_grid_function,
    save_time_path,
    seminorm,
    seminorm_profile,
    sup_seminorm,
)
from semipert.perturbation import BoundaryFunctional
from semipert.sampling import rough_states, smooth_states


def test_grid_basic_indexing(grid):
    assert grid.n_points == 256 * 5 + 1
    assert grid.points[0] == -4.0
    assert grid.points[-1] == 1.0
    assert grid.index_of(1.0) == grid.n_points - 1
    assert grid.index_of(-4.0) == 0
    assert grid.steps(0.5) == 128
    assert grid.window_start(1.0) == grid.index_of(-1.0)


def test_grid_rejects_bad_shapes():
    with pytest.raises(ConfigError):
        Grid(1.0, 0.0, 1.0 / 32.0)
    with pytest.raises(ConfigError):
        Grid(1.0, 4.0, -0.1)
    # span not an integer number of cells
    with pytest.raises(ConfigError):
        Grid(1.0, 4.0, 0.3)


def test_offgrid_queries_raise(grid):
    with pytest.raises(AlignmentError):
        grid.index_of(0.123)
    with pytest.raises(AlignmentError):
        grid.steps(1.0 / 3.0)


def test_trapezoid_weights_sum(grid):
    start = grid.window_start(2.0)
    w = grid.trapezoid_weights(start)
    # weights integrate the constant 1 over [-2, b] exactly
    assert abs(w.sum() - 3.0) <= 1e-12
    assert w[0] == pytest.approx(grid.h / 2.0)
    assert w[-1] == pytest.approx(grid.h / 2.0)


def test_seminorm_constant_is_exact(grid):
    one = GridFunction.from_callable(grid, 2.0, lambda s: np.ones_like(s))
    # integral of 1 over [-1, 1] is 2, so the p = 2 seminorm is sqrt(2)
    assert seminorm(one, 1) == pytest.approx(math.sqrt(2.0), abs=1e-15)
    assert seminorm(one, 3) == pytest.approx(2.0, abs=1e-15)


def test_seminorm_quadratic_matches_trapezoid_error_formula(grid):
    # For x(s) = s and p = 2 the integrand s^2 has constant curvature, so
    # the composite trapezoid value is exactly 2/3 + h^2/3 on [-1, 1].
    x = GridFunction.from_callable(grid, 2.0, lambda s: s)
    h = grid.h
    expected = math.sqrt(2.0 / 3.0 + h * h / 3.0)
    assert seminorm(x, 1) == pytest.approx(expected, abs=1e-14)


def test_seminorm_refinement_oracle():
    # Trapezoid rule converges at second order toward a fine reference.
    closure = lambda s: np.sin(1.7 * (s - 1.0)) * np.exp(0.3 * s)
    vals = []
    for h in (1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0, 1.0 / 1024.0):
        g = Grid(1.0, 4.0, h)
        vals.append(seminorm(GridFunction.from_callable(g, 2.0, closure), 2))
    ref = vals[-1]
    errs = [abs(v - ref) for v in vals[:-1]]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.15)


def test_seminorm_monotone_in_window(grid, rng):
    for x in smooth_states(grid, 2.0, rng, 6) + rough_states(grid, 2.0, rng, 6):
        values = [seminorm(x, n) for n in (1, 2, 3, 4)]
        for a, b in zip(values, values[1:]):
            assert a <= b + 1e-15


def test_seminorm_scaling_and_triangle(grid, rng):
    for _ in range(20):
        a = GridFunction(grid, rng.standard_normal(grid.n_points), 2.0)
        b = GridFunction(grid, rng.standard_normal(grid.n_points), 2.0)
        c = float(rng.uniform(-3.0, 3.0))
        assert seminorm(a.with_values(c * a.values), 2) == pytest.approx(
            abs(c) * seminorm(a, 2), rel=1e-12)
        lhs = seminorm(a.with_values(a.values + b.values), 2)
        assert lhs <= seminorm(a, 2) + seminorm(b, 2) + 1e-12


def test_seminorm_general_exponent(grid):
    one = GridFunction.from_callable(grid, 1.5, lambda s: np.ones_like(s))
    assert seminorm(one, 1) == pytest.approx(2.0 ** (1.0 / 1.5), abs=1e-14)


def test_grid_function_validation(grid):
    with pytest.raises(GridMismatchError):
        GridFunction(grid, np.zeros(3), 2.0)
    with pytest.raises(ConfigError):
        GridFunction(grid, np.full(grid.n_points, np.nan), 2.0)
    with pytest.raises(ConfigError):
        GridFunction(grid, np.zeros(grid.n_points), 1.0)
    with pytest.raises(ConfigError):
        GridFunction(grid, np.zeros(grid.n_points), math.inf)


def test_time_path_lifts_on_constant_path(grid):
    x = GridFunction.from_callable(grid, 2.0, lambda s: np.cos(s))
    h_t = 1.0 / 32.0
    frames = np.tile(x.values, (9, 1))  # t0 = 0.25
    f = TimePath(grid, 2.0, h_t, frames)
    assert f.t0 == pytest.approx(0.25)
    base = seminorm(x, 2)
    assert sup_seminorm(f, 2) == pytest.approx(base, rel=1e-14)
    # time integral of a constant profile is exactly t0 * p_n(x)
    assert l1_seminorm(f, 2) == pytest.approx(0.25 * base, rel=1e-14)
    prof = seminorm_profile(f, 2)
    assert prof.shape == (9,)
    assert np.allclose(prof, base, rtol=1e-14)


def test_time_path_alignment_and_zero_start(grid):
    vals = np.zeros((3, grid.n_points))
    with pytest.raises(AlignmentError):
        TimePath(grid, 2.0, grid.h / 2.0, vals)  # h_t finer than h_s
    f = TimePath(grid, 2.0, grid.h, vals)
    assert f.starts_at_zero
    g = f.with_values(vals + 1.0)
    assert not g.starts_at_zero
    assert f.frame_at(2 * grid.h).values.shape == (grid.n_points,)


def test_domain_checks(grid, phi_uniform):
    hits_zero = GridFunction.from_callable(grid, 2.0, lambda s: s - 1.0)
    chk = in_domain_dirichlet(hits_zero)
    assert chk.member and chk.residual <= 1e-15

    one = GridFunction.from_callable(grid, 2.0, lambda s: np.ones_like(s))
    chk = in_domain_dirichlet(one)
    assert not chk.member
    assert chk.residual == pytest.approx(1.0)

    # phi_uniform(1) = 2, so a constant c has feedback residual |c - 2c| = |c|
    chk = in_domain_feedback(one, phi_uniform)
    assert not chk.member
    assert chk.residual == pytest.approx(1.0, rel=1e-12)
    zero = GridFunction.zero(grid, 2.0)
    assert in_domain_feedback(zero, phi_uniform).member


def test_grid_function_roundtrip(tmp_path, grid, rng):
    x = GridFunction(grid, rng.standard_normal(grid.n_points), 2.0)
    csv = tmp_path / "x.csv"
    save_grid_function(x, csv)
    y = load_grid_function(csv)
    assert y.grid == grid
    assert y.p == 2.0
    assert np.array_equal(y.values, x.values)


def test_time_path_roundtrip(tmp_path, grid, rng):
    vals = rng.standard_normal((5, grid.n_points))
    f = TimePath(grid, 2.0, 1.0 / 64.0, vals)
    csv = tmp_path / "f.csv"
    save_time_path(f, csv)
    g = load_time_path(csv)
    assert g.grid == grid
    assert g.h_t == pytest.approx(f.h_t)
    assert np.array_equal(g.values, f.values)


def test_load_rejects_malformed(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("s,value\n0.0,1.0\n")
    with pytest.raises(ConfigError):
        load_grid_function(bad)


def test_space_mismatch_raises(grid, coarse):
    a = GridFunction.zero(grid, 2.0)
    b = GridFunction.zero(coarse, 2.0)
    from semipert.funcspace import assert_same_space
    with pytest.raises(GridMismatchError):
        assert_same_space(a, b)
