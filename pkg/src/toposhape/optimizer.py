"""Barrier-penalized steepest descent on level set functions.

One iteration:

1. extract the zero contour and evaluate the cost gradient ``U`` and the
   barrier gradients ``U1``, ``U2`` on it;
2. form ``u = -(U + eps*U1 + eps*U2)``, remove its boundary mean when the
   area is constrained, and extend it to the grid as ``phi + u(foot point)``;
3. smooth the extended velocity and take the largest step with
   ``alpha * max|u| <= K * min(d, l)``, halving it until the updated field,
   after smoothing, area correction and reinitialization, keeps every probe
   on the right side of the zero set.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Protocol

import numpy as np

from .barrier import BarrierEvaluation, BarrierParams, evaluate_barrier
from .contour import Contour, extract_zero_set, project_grid
from .errors import EmptyContour, LengthMismatch, NoBracket, OutOfBounds, StuckInfeasible
from .functionals import (AreaConstraint, CostFunctional, boundary_gradient_U, evaluate_F,
                          evaluate_G, project_constraint, restore_area)
from .grid import ScalarField, smooth
from .redistance import LevelSetFunction, eikonal_residual, reinitialize
from .topology import count_components

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 1000
    halving_limit: int = 20
    smoothing_passes: int = 1           # on phi after each update
    velocity_smoothing_passes: int = 0  # on the extended velocity before the update
    convergence_window: int = 10
    convergence_tol: float = 1e-4
    band_width: float | None = None     # None: max(d, l) + 4h
    alpha_max: float | None = None      # optional cap on the step, below the K bound

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.halving_limit < 1:
            raise ValueError("halving_limit must be >= 1")
        if self.convergence_window < 2:
            raise ValueError("convergence_window must be >= 2")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")
        if self.smoothing_passes < 0 or self.velocity_smoothing_passes < 0:
            raise ValueError("smoothing pass counts must be >= 0")
        if self.alpha_max is not None and not self.alpha_max > 0:
            raise ValueError("alpha_max must be positive")

    def band(self, params: BarrierParams, h: float) -> float:
        if self.band_width is not None:
            return self.band_width
        return max(params.d, params.l) + 4 * h


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    F: float
    H: float
    F_eps: float
    alpha: float
    area: float
    components_pos: int
    max_abs_u: float
    halvings: int
    eikonal_residual: float = 0.0

    CSV_FIELDS = ("iter", "F", "H", "F_eps", "alpha", "area", "components", "max_u", "halvings")

    def csv_row(self) -> str:
        vals = (self.iter, self.F, self.H, self.F_eps, self.alpha, self.area,
                self.components_pos, self.max_abs_u, self.halvings)
        return ",".join(repr(float(v)) if isinstance(v, float) else str(v) for v in vals)


class Sink(Protocol):
    """Receives every accepted state in iteration order (iteration 0 is the start)."""

    def record(self, rec: IterationRecord, phi: LevelSetFunction, contour: Contour) -> None: ...


@dataclass(frozen=True, eq=False)
class StepChoice:
    alpha: float
    halvings: int
    phi: LevelSetFunction
    contour: Contour
    barrier: BarrierEvaluation
    eikonal: float


def descent_direction(U, U1, U2, eps: float) -> np.ndarray:
    U, U1, U2 = (np.asarray(a, dtype=float) for a in (U, U1, U2))
    if not (U.shape == U1.shape == U2.shape):
        raise LengthMismatch(f"gradient lengths differ: {U.shape}, {U1.shape}, {U2.shape}")
    return -(U + eps * U1 + eps * U2)


def extend_velocity(u_boundary, contour: Contour, phi: LevelSetFunction) -> ScalarField:
    """``u(x) = phi(x) + u(x~)`` in the band, ``phi(x)`` outside it."""
    u_boundary = np.asarray(u_boundary, dtype=float)
    if u_boundary.shape != (len(contour),):
        raise LengthMismatch(f"got {u_boundary.size} values for {len(contour)} vertices")
    proj = project_grid(contour, phi.spec, phi.band_width)
    ub = proj.interpolate(contour, u_boundary)
    vals = np.where(proj.inside, phi.values + np.nan_to_num(ub), phi.values)
    return ScalarField(phi.spec, vals)


def initial_step(max_abs_u: float, params: BarrierParams, alpha_max: float | None = None) -> float:
    """Largest alpha with ``alpha * max_abs_u <= K * min(d, l)`` in floating point,
    capped at ``alpha_max`` when given."""
    bound = params.step_bound
    alpha = bound / max_abs_u
    while alpha * max_abs_u > bound:
        alpha = math.nextafter(alpha, 0.0)
    if alpha_max is not None:
        alpha = min(alpha, alpha_max)
    return alpha


def curvature_step_limit(h: float, passes: int) -> float:
    """Largest step for which an explicit curvature update, with ``passes``
    rounds of 5-point averaging, damps every grid Fourier mode without
    overshoot: ``alpha * lambda(k) * T(k) <= 1`` for the Laplacian symbol
    ``lambda`` and the smoothing transfer ``T``."""
    k = np.linspace(0.0, np.pi, 257)
    cx, cy = np.meshgrid(np.cos(k), np.cos(k))
    lam = (4.0 - 2.0 * cx - 2.0 * cy) / h**2
    transfer = (1.0 - 0.4 * (2.0 - cx - cy)) ** passes
    return float(1.0 / np.max(lam * transfer))


def _default_finish(band: float):
    def finish(trial: ScalarField):
        yield reinitialize(trial, band)
    return finish


def choose_step(u_field: ScalarField, u_boundary, phi: LevelSetFunction, params: BarrierParams,
                cfg: OptimizerConfig,
                finish: Callable[[ScalarField], Iterable[LevelSetFunction]] | None = None
                ) -> StepChoice:
    """Step-size rule with feasibility backtracking.

    ``finish`` maps the raw update ``phi + alpha*u`` to the candidate states
    that could be accepted, in order of preference (by default just its
    reinitialization).  Feasibility is checked on exactly those states.
    """
    m = float(np.max(np.abs(u_boundary)))
    if not m > 0:
        raise ValueError("descent direction vanishes on the boundary")
    finish = finish or _default_finish(phi.band_width)
    alpha = initial_step(m, params, cfg.alpha_max)
    worst_eik = 0.0
    for halvings in range(cfg.halving_limit + 1):
        trial = phi.field + alpha * u_field
        try:
            for cand in finish(trial):
                worst_eik = max(worst_eik, eikonal_residual(cand))
                contour = extract_zero_set(cand)
                ev = evaluate_barrier(cand, contour, params)
                if ev.feasible:
                    return StepChoice(alpha, halvings, cand, contour, ev, worst_eik)
            log.debug("trial alpha=%g infeasible", alpha)
        except (EmptyContour, NoBracket, OutOfBounds) as exc:
            log.debug("trial alpha=%g rejected: %s", alpha, exc)
        if halvings < cfg.halving_limit:
            alpha *= 0.5
    raise StuckInfeasible(f"barrier still undefined after {cfg.halving_limit} step halvings "
                          f"(alpha={alpha:.3g})")


def _finisher(constraint: AreaConstraint | None, band: float, passes: int = 0):
    """Smooth ``passes`` times, then offer the area-corrected reinitialization;
    if the constant area shift alone breaks feasibility, the uncorrected state
    is offered next and the drift is left for a later step."""
    def finish(trial: ScalarField):
        trial = smooth(trial, passes)
        if constraint is not None:
            shifted, c = restore_area(trial, constraint)
            yield reinitialize(shifted, band)
            if c == 0.0:
                return
        yield reinitialize(trial, band)
    return finish


@dataclass(eq=False)
class _State:
    phi: LevelSetFunction
    contour: Contour
    barrier: BarrierEvaluation


def _evaluate_state(phi: LevelSetFunction, params: BarrierParams) -> _State:
    contour = extract_zero_set(phi)
    return _State(phi, contour, evaluate_barrier(phi, contour, params))


def _record(it, state: _State, functional, params, alpha, max_u, halvings, eik) -> IterationRecord:
    F = evaluate_F(functional, state.phi, state.contour)
    H = state.barrier.H_value if state.barrier.feasible else math.inf
    return IterationRecord(it, F, H, F + params.epsilon * H, alpha, evaluate_G(state.phi),
                           count_components(state.phi), max_u, halvings, eik)


def _advance(state: _State, functional: CostFunctional, constraint: AreaConstraint | None,
             params: BarrierParams, cfg: OptimizerConfig, it: int) -> tuple[_State, IterationRecord]:
    phi = state.phi
    if not state.barrier.feasible:
        raise StuckInfeasible("current shape violates the barrier constraints")
    U = boundary_gradient_U(functional, phi, state.contour)
    u = descent_direction(U, state.barrier.U1, state.barrier.U2, params.epsilon)
    if constraint is not None:
        u = project_constraint(u, state.contour)
    max_u = float(np.max(np.abs(u)))
    if max_u == 0.0:
        return state, _record(it, state, functional, params, 0.0, 0.0, 0, eikonal_residual(phi))
    u_field = smooth(extend_velocity(u, state.contour, phi), cfg.velocity_smoothing_passes)
    finish = _finisher(constraint, phi.band_width, cfg.smoothing_passes)
    choice = choose_step(u_field, u, phi, params, cfg, finish)
    new = _State(choice.phi, choice.contour, choice.barrier)
    return new, _record(it, new, functional, params, choice.alpha, max_u, choice.halvings,
                        choice.eikonal)


def _prepare(phi0, params: BarrierParams, cfg: OptimizerConfig) -> LevelSetFunction:
    sf = getattr(phi0, "field", phi0)
    params.check_grid(sf.spec.h)
    band = cfg.band(params, sf.spec.h)
    if isinstance(phi0, LevelSetFunction) and phi0.is_reinitialized and phi0.band_width == band:
        return phi0
    return reinitialize(sf, band)


def step(phi: LevelSetFunction, functional: CostFunctional, constraint: AreaConstraint | None,
         params: BarrierParams, cfg: OptimizerConfig) -> tuple[LevelSetFunction, IterationRecord]:
    """One iteration; returns the updated level set and its record."""
    phi = _prepare(phi, params, cfg)
    new, rec = _advance(_evaluate_state(phi, params), functional, constraint, params, cfg, 1)
    return new.phi, rec


def _converged(history: list[IterationRecord], cfg: OptimizerConfig) -> bool:
    w = cfg.convergence_window
    if len(history) <= w:
        return False
    recent = [r.F for r in history[-1 - w:]]
    return max(recent) - min(recent) <= cfg.convergence_tol * max(abs(recent[-1]), 1e-300)


def run(phi0, functional: CostFunctional, constraint: AreaConstraint | None,
        params: BarrierParams, cfg: OptimizerConfig,
        sink: Sink | None = None) -> tuple[LevelSetFunction, list[IterationRecord]]:
    """Iterate until ``max_iters`` or until F stalls over the convergence window."""
    phi = _prepare(phi0, params, cfg)
    state = _evaluate_state(phi, params)
    if not state.barrier.feasible:
        raise StuckInfeasible("initial shape violates the barrier constraints "
                              "(some inner probe is outside the shape or outer probe inside)")
    history = [_record(0, state, functional, params, 0.0, 0.0, 0, eikonal_residual(phi))]

    def emit(rec, st):
        if sink is not None:
            sink.record(rec, st.phi, st.contour)

    emit(history[0], state)
    for it in range(1, cfg.max_iters + 1):
        state, rec = _advance(state, functional, constraint, params, cfg, it)
        history.append(rec)
        emit(rec, state)
        log.info("iter %d F=%.6g H=%.6g alpha=%.3g max|u|=%.3g halvings=%d components=%d",
                 rec.iter, rec.F, rec.H, rec.alpha, rec.max_abs_u, rec.halvings,
                 rec.components_pos)
        if rec.alpha == 0.0 or _converged(history, cfg):
            break
    return state.phi, history
