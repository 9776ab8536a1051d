import numpy as np
import pytest

from semipert.errors import ContractionError, GridMismatchError
from semipert.evolve import (
    characteristics_oracle,
    compare_solutions,
    observed_orders,
    picard_semigroup,
    picard_stepper,
    resolvent_crosscheck,
    shift_stepper,
)
from semipert.funcspace import GridFunction, TimePath, seminorm
from semipert.perturbation import (
    BoundaryFunctional,
    NeumannConfig,
    contraction_factor,
)
from semipert.sampling import (
    draw_smooth,
    eval_smooth,
    feedback_domain_states,
    paths_starting_at_zero,
)
from semipert.semigroup import GeneratorSpec, ShiftSemigroup, generator_residual


def test_zero_kernel_collapses_to_shift(grid, rng):
    z = BoundaryFunctional.zero(grid, 2.0)
    x0 = eval_smooth(draw_smooth(rng), grid, 2.0)
    res = picard_semigroup(x0, z, 0.5, 1.0 / 64.0)
    assert res.converged
    sg = ShiftSemigroup(grid)
    for j, t in enumerate(res.path.times):
        ref = sg.apply(float(t), x0)
        assert np.allclose(res.path.values[j], ref.values, atol=1e-15)


def test_oracle_zero_kernel_is_shift(grid, rng):
    z = BoundaryFunctional.zero(grid, 2.0)
    x0 = eval_smooth(draw_smooth(rng), grid, 2.0)
    sol = characteristics_oracle(x0, z, 0.5, 1.0 / 64.0)
    sg = ShiftSemigroup(grid)
    for j, t in enumerate(sol.path.times):
        assert np.allclose(sol.path.values[j], sg.apply(float(t), x0).values,
                           atol=1e-15)
    assert sol.max_boundary_residual <= 1e-12


def test_transported_region_is_exact_relabeling(grid, rng):
    phi = BoundaryFunctional.uniform(grid, 2.0)
    x0 = eval_smooth(draw_smooth(rng), grid, 2.0)
    t_final = 0.25
    sol = characteristics_oracle(x0, phi, t_final, 1.0 / 64.0)
    k = grid.steps(t_final)
    # below the boundary cone the perturbation has not arrived yet
    assert np.array_equal(sol.path.values[-1][: grid.n_points - k],
                          x0.values[k:])


def test_picard_matches_oracle_at_fine_step(grid, rng):
    # with h_t = h_s both routes discretize the same fixed point, so they
    # agree to solver tolerance rather than discretization order
    phi = BoundaryFunctional.uniform(grid, 2.0)
    x0 = eval_smooth(draw_smooth(rng), grid, 2.0)
    res = picard_semigroup(x0, phi, 0.25, grid.h, tol=1e-12)
    sol = characteristics_oracle(x0, phi, 0.25, grid.h)
    assert res.converged
    rep = compare_solutions(res.path, sol.path, (1, 2, 3))
    assert rep.worst().residual <= 5e-11


def test_picard_windows_compose(grid, rng):
    # t_final far beyond one contraction window: driver must chain windows
    phi = BoundaryFunctional.uniform(grid, 2.0)
    x0 = eval_smooth(draw_smooth(rng), grid, 2.0)
    res = picard_semigroup(x0, phi, 0.75, 1.0 / 64.0)
    assert res.converged
    assert res.window * (1.0 / 64.0) <= 0.25 + 1e-12
    sol = characteristics_oracle(x0, phi, 0.75, 1.0 / 64.0)
    rep = compare_solutions(res.path, sol.path, (1, 2, 3))
    assert rep.worst().residual <= 2e-4


def test_boundary_trace_matches_path(grid, rng):
    phi = BoundaryFunctional.uniform(grid, 2.0)
    x0 = eval_smooth(draw_smooth(rng), grid, 2.0)
    sol = characteristics_oracle(x0, phi, 0.25, 1.0 / 64.0)
    trace = sol.boundary_trace  # one scalar per frame time
    assert trace.shape == (sol.path.n_frames,)
    assert trace[0] == pytest.approx(x0.boundary_value)
    assert np.allclose(sol.path.values[:, -1], trace, atol=1e-12)


def test_picard_refinement_halves_discrepancy(rng):
    # joint (h_s, h_t) halving with h_t = 4 h_s: first-order interface
    # handling should at least halve the gap to the oracle on each rung
    from semipert.funcspace import Grid
    spec = draw_smooth(rng)
    gaps = []
    for h_s in (1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0):
        g = Grid(1.0, 4.0, h_s)
        phi = BoundaryFunctional.bump(g, 2.0)
        x0 = eval_smooth(spec, g, 2.0)
        h_t = 4.0 * h_s
        res = picard_semigroup(x0, phi, 0.5, h_t)
        sol = characteristics_oracle(x0, phi, 0.5, h_t)
        rep = compare_solutions(res.path, sol.path, (2,))
        gaps.append(rep.worst().residual)
    assert gaps[1] <= gaps[0] / 1.8
    assert gaps[2] <= gaps[1] / 1.8


def test_picard_rejects_expanding_window(grid, rng):
    strong = BoundaryFunctional.bump(grid, 2.0, strength=40.0)
    # even a single time step has (h_t)^(1/2) K = 40/16 > 1
    x0 = eval_smooth(draw_smooth(rng), grid, 2.0)
    with pytest.raises(ContractionError):
        picard_semigroup(x0, strong, 0.25, grid.h)


def test_steppers_for_generator_consistency(grid, rng):
    phi = BoundaryFunctional.uniform(grid, 2.0)
    gen = GeneratorSpec(kind="feedback", phi=phi, stencil_order=1)
    states = feedback_domain_states(grid, 2.0, phi)
    step = picard_stepper(phi)
    for x in states:
        chk = gen.in_domain(x)
        assert chk.member, chk.residual
        res = generator_residual(step, gen, x, grid.h, 2)
        assert res <= 5.0 * grid.h * max(1.0, seminorm(x, 2))


def test_shift_stepper_is_semigroup_step(grid, rng):
    x = GridFunction(grid, rng.standard_normal(grid.n_points), 2.0)
    step = shift_stepper(grid)
    ref = ShiftSemigroup(grid).apply(0.25, x)
    assert np.array_equal(step(0.25, x).values, ref.values)


def test_observed_orders():
    orders = observed_orders([1.0, 0.25, 0.0625])
    assert orders == pytest.approx([2.0, 2.0])
    assert observed_orders([1.0]) == []
    # a vanished residual cannot produce a finite order
    assert observed_orders([1e-30, 0.0]) == [np.inf]


def test_compare_solutions_requires_same_layout(grid, rng):
    a = TimePath(grid, 2.0, grid.h, np.zeros((3, grid.n_points)))
    b = TimePath(grid, 2.0, 2 * grid.h, np.zeros((3, grid.n_points)))
    with pytest.raises(GridMismatchError):
        compare_solutions(a, b)


def test_resolvent_crosscheck_two_routes_agree(grid, rng):
    phi = BoundaryFunctional.uniform(grid, 2.0)
    f = paths_starting_at_zero(grid, 2.0, 1.0 / 16.0, 0.125, rng, 1)[0]
    rep = resolvent_crosscheck(f, phi, NeumannConfig(tracked=(1, 2)),
                               indices=(1, 2))
    assert rep.passed, rep.csv_text()
    assert contraction_factor(phi, f.t0, 2.0) < 1.0
