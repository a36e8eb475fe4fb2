"""Logarithmic barrier over the inner and outer probe sets.

For a boundary point ``x`` with unit gradient ``g = grad phi(x)`` the inner
probe sits at ``x + d*g`` (inside the shape, distance ``d``) and the outer
probe at ``x - l*g``.  The barrier is finite only while every inner probe is
strictly positive and every outer probe strictly negative; that is what keeps
components from merging, splitting or collapsing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contour import Contour, ContourVertex, line_integral
from .grid import gradient_points, nodal_gradient, sample_points


@dataclass(frozen=True)
class BarrierParams:
    d: float
    l: float
    epsilon: float
    K: float = 0.25

    def __post_init__(self):
        if not (self.d > 0 and self.l > 0):
            raise ValueError(f"probe distances must be positive (d={self.d}, l={self.l})")
        if not self.epsilon > 0:
            raise ValueError(f"barrier weight must be positive (epsilon={self.epsilon})")
        if not 0 < self.K <= 0.5:
            raise ValueError(f"step-safety constant must lie in (0, 1/2], got K={self.K}")

    @property
    def step_bound(self) -> float:
        """Largest allowed boundary displacement per step, ``K * min(d, l)``."""
        return self.K * min(self.d, self.l)

    def check_grid(self, h: float) -> None:
        if self.d < 2 * h or self.l < 2 * h:
            raise ValueError(f"probe distances d={self.d}, l={self.l} must be at least 2h = {2 * h}")


@dataclass(frozen=True, eq=False)
class BarrierEvaluation:
    H_value: float | None
    U1: np.ndarray
    U2: np.ndarray
    feasible: bool
    inner: np.ndarray
    outer: np.ndarray


def _field(phi):
    return getattr(phi, "field", phi)


def probe_points(contour: Contour, distance: float, inward: bool) -> np.ndarray:
    # grad phi = -outward normal
    sign = -1.0 if inward else 1.0
    return contour.points + sign * distance * contour.normals


def probe_inner(phi, v: ContourVertex, d: float) -> float:
    """phi at ``x + d grad phi(x)``."""
    p = np.asarray(v.position) - d * np.asarray(v.outward_normal)
    return float(sample_points(_field(phi), p))


def probe_outer(phi, v: ContourVertex, l: float) -> float:
    """phi at ``x - l grad phi(x)``."""
    p = np.asarray(v.position) + l * np.asarray(v.outward_normal)
    return float(sample_points(_field(phi), p))


def evaluate_barrier(phi, contour: Contour, params: BarrierParams) -> BarrierEvaluation:
    sf = _field(phi)
    grads = nodal_gradient(sf)
    p_in = probe_points(contour, params.d, inward=True)
    p_out = probe_points(contour, params.l, inward=False)
    phi_in = sample_points(sf, p_in)
    phi_out = sample_points(sf, p_out)
    g = -contour.normals
    num_in = np.sum(g * gradient_points(sf, p_in, grads), axis=1)
    num_out = np.sum(g * gradient_points(sf, p_out, grads), axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        U1 = num_in / phi_in
        U2 = num_out / phi_out
    feasible = bool(np.all(phi_in > 0) and np.all(phi_out < 0))
    H = None
    if feasible:
        H = line_integral(contour, -np.log(phi_in)) + line_integral(contour, -np.log(-phi_out))
    return BarrierEvaluation(H, U1, U2, feasible, phi_in, phi_out)
