import numpy as np
import pytest

from toposhape.barrier import BarrierParams, evaluate_barrier
from toposhape.contour import extract_zero_set
from toposhape.errors import LengthMismatch, StuckInfeasible
from toposhape.functionals import (AreaConstraint, CostFunctional, boundary_gradient_U,
                                   evaluate_G, project_constraint)
from toposhape.grid import ScalarField, sample_points
from toposhape.optimizer import (OptimizerConfig, choose_step, curvature_step_limit,
                                 descent_direction, extend_velocity, initial_step, run, step)
from toposhape.shapes import preset
from toposhape.topology import analyze

from conftest import circle_level_set


def nearest_to(contour, p):
    return int(np.argmin(np.linalg.norm(contour.points - np.asarray(p), axis=1)))


class ListSink:
    def __init__(self):
        self.items = []

    def record(self, rec, phi, contour):
        self.items.append((rec, phi, contour))


def test_descent_direction_examples():
    n = 5
    u = descent_direction(np.full(n, 0.5), np.full(n, 2.0), np.full(n, -2.0), 0.2)
    np.testing.assert_allclose(u, -0.5)
    U = np.linspace(-1, 1, n)
    np.testing.assert_array_equal(descent_direction(U, np.ones(n), np.ones(n), 0.0), -U)
    with pytest.raises(LengthMismatch):
        descent_direction(np.ones(3), np.ones(4), np.ones(3), 0.2)


def test_descent_repels_close_holes():
    p = preset("two_holes(gap=0.85)")
    phi = p.initial_field()
    c = extract_zero_set(phi)
    ev = evaluate_barrier(phi, c, p.params)
    U = boundary_gradient_U(p.functional, phi, c)
    u = descent_direction(U, ev.U1, ev.U2, p.epsilon)
    k = nearest_to(c, (-0.425, 0.0))
    assert u[k] > 3.0


def test_extend_velocity_examples(circle_r2):
    c = extract_zero_set(circle_r2)
    zero = extend_velocity(np.zeros(len(c)), c, circle_r2)
    np.testing.assert_allclose(zero.values, circle_r2.values, atol=1e-12)
    ext = extend_velocity(np.full(len(c), 0.7), c, circle_r2)
    # on the contour the extension is the boundary value
    np.testing.assert_allclose(sample_points(ext, c.points), 0.7, atol=2e-2)
    assert sample_points(ext, np.array([[1.7, 0.0]]))[0] == pytest.approx(0.3 + 0.7, abs=3e-2)
    far = np.abs(circle_r2.values) >= circle_r2.band_width
    np.testing.assert_array_equal(ext.values[far], circle_r2.values[far])
    with pytest.raises(LengthMismatch):
        extend_velocity(np.zeros(len(c) + 1), c, circle_r2)


def test_initial_step_saturates_bound():
    params = BarrierParams(0.8, 0.8, 0.2, 0.25)
    a = initial_step(2.0, params)
    assert a == pytest.approx(0.1)
    assert a * 2.0 <= params.step_bound
    assert initial_step(2.0, params, alpha_max=0.03) == 0.03
    for m in (3.0, 7.0, 0.123456789, 1e-3):
        assert initial_step(m, params) * m <= params.step_bound


def test_curvature_step_limit():
    # without smoothing the explicit heat step limit is h^2 / 8
    assert curvature_step_limit(0.1, 0) == pytest.approx(0.01 / 8)
    assert curvature_step_limit(0.1, 13) == pytest.approx(0.0734, abs=1e-4)
    assert curvature_step_limit(0.1, 4) < curvature_step_limit(0.1, 8)


def test_circle_step_needs_no_halving(circle_r2):
    params = BarrierParams(0.5, 0.5, 0.2)
    c = extract_zero_set(circle_r2)
    u = np.full(len(c), 0.1)
    choice = choose_step(extend_velocity(u, c, circle_r2), u, circle_r2, params, OptimizerConfig())
    assert choice.halvings == 0
    assert choice.barrier.feasible


@pytest.mark.parametrize("gap", [1.05, 1.0])
def test_two_holes_pushed_into_contact_backtracks(gap):
    # a uniform shrink of phi grows both holes; at alpha0 the gap closes to 0.6 < d
    p = preset(f"two_holes(gap={gap})")
    phi = p.initial_field()
    u = np.ones(len(extract_zero_set(phi)))
    field = ScalarField(phi.spec, -np.ones(phi.spec.shape))
    choice = choose_step(field, u, phi, p.params, OptimizerConfig())
    assert choice.halvings in (1, 2)
    assert choice.barrier.feasible
    assert evaluate_barrier(choice.phi, extract_zero_set(choice.phi), p.params).feasible


def test_halving_limit_raises():
    p = preset("two_holes(gap=0.85)")
    phi = p.initial_field()
    u = np.ones(len(extract_zero_set(phi)))
    field = ScalarField(phi.spec, -np.ones(phi.spec.shape))
    with pytest.raises(StuckInfeasible, match="increase epsilon or decrease the grid size"):
        choose_step(field, u, phi, p.params, OptimizerConfig(halving_limit=1))


def test_step_record_invariants():
    p = preset("circle", h=0.1)
    phi = p.initial_field()
    _, rec = step(phi, p.functional, AreaConstraint(evaluate_G(phi)), p.params, p.optimizer_config())
    assert rec.alpha * rec.max_abs_u <= p.params.step_bound
    assert rec.F_eps == pytest.approx(rec.F + p.epsilon * rec.H, rel=1e-12)
    assert rec.components_pos == 1


def test_circle_step_is_nearly_stationary():
    p = preset("circle", h=0.1)
    phi = p.initial_field()
    c = extract_zero_set(phi)
    ev = evaluate_barrier(phi, c, p.params)
    U = boundary_gradient_U(p.functional, phi, c)
    u = project_constraint(descent_direction(U, ev.U1, ev.U2, p.epsilon), c)
    assert np.max(np.abs(u)) <= 0.15 * np.max(np.abs(U))
    new, rec = step(phi, p.functional, AreaConstraint(evaluate_G(phi)), p.params,
                    p.optimizer_config())
    band = np.abs(phi.values) < phi.band_width - 2 * phi.spec.h
    h = phi.spec.h
    assert np.max(np.abs(new.values - phi.values)[band]) <= 3 * h * rec.alpha * rec.max_abs_u + h * h


def test_two_holes_step_widens_gap():
    p = preset("two_holes(gap=0.85)")
    phi = p.initial_field()
    before = analyze(phi).min_hole_gap
    new, _ = step(phi, p.functional, None, p.params, p.optimizer_config())
    assert analyze(new).min_hole_gap > before


def test_circle_run_converges():
    p = preset("circle", h=0.1)
    phi0 = p.initial_field()
    sink = ListSink()
    _, history = run(phi0, p.functional, AreaConstraint(evaluate_G(phi0)), p.params,
                     p.optimizer_config(max_iters=200, convergence_tol=1e-3), sink)
    assert history[-1].iter <= 50
    assert [r for r, _, _ in sink.items] == history
    assert history[0].iter == 0 and history[0].alpha == 0.0
    for rec in history:
        assert rec.alpha * rec.max_abs_u <= p.params.step_bound
        assert rec.components_pos == 1


def test_barrier_dominated_run_may_increase_F():
    # inner probes far, outer probes near: the barrier inflates the circle
    phi = circle_level_set(1.5, 0.1, 1.9, span=4.0)
    params = BarrierParams(1.5, 0.5, 5.0)
    _, history = run(phi, CostFunctional.perimeter(8), None, params,
                     OptimizerConfig(max_iters=5, alpha_max=curvature_step_limit(0.1, 8)))
    F = [r.F for r in history]
    assert len(F) == 6
    assert any(b > a for a, b in zip(F, F[1:]))


def test_runs_are_deterministic():
    p = preset("example1", h=0.1)
    phi0 = p.initial_field()
    cfg = p.optimizer_config(max_iters=4)
    rows = []
    for _ in range(2):
        _, history = run(phi0, p.functional, AreaConstraint(evaluate_G(phi0)), p.params, cfg)
        rows.append([r.csv_row() for r in history])
    assert rows[0] == rows[1]


def test_infeasible_start_raises_with_guidance():
    p = preset("dumbbell(neck=0.6)")
    with pytest.raises(StuckInfeasible, match="increase epsilon"):
        run(p.initial_field(), p.functional, None, p.params, p.optimizer_config(max_iters=3))


@pytest.mark.parametrize("kw", [dict(max_iters=0), dict(halving_limit=0),
                                dict(convergence_window=1), dict(convergence_tol=0.0),
                                dict(smoothing_passes=-1), dict(velocity_smoothing_passes=-1),
                                dict(alpha_max=0.0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        OptimizerConfig(**kw)


def test_band_default():
    params = BarrierParams(0.8, 0.6, 0.2)
    assert OptimizerConfig().band(params, 0.1) == pytest.approx(1.2)
    assert OptimizerConfig(band_width=2.0).band(params, 0.1) == 2.0
