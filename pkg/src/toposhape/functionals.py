"""Cost functionals, their boundary gradients, and the area constraint."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .contour import Contour, line_integral
from .errors import NoBracket
from .grid import ScalarField, laplacian, sample_points, smooth

Weight = Callable[[np.ndarray, np.ndarray], np.ndarray]


def polynomial_weight(terms: Sequence[Sequence[float]]) -> Weight:
    """``w(x, y) = sum(c * x**px * y**py)`` for ``terms = [(c, px, py), ...]``."""
    terms = [(float(c), int(px), int(py)) for c, px, py in terms]

    def w(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for c, px, py in terms:
            out = out + c * x ** px * y ** py
        return out

    return w


def second_moment(x, y):
    return np.asarray(x, dtype=float) ** 2 + np.asarray(y, dtype=float) ** 2


def zero_weight(x, y):
    return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)


@dataclass(frozen=True)
class CostFunctional:
    kind: str                        # "perimeter" or "domain_integral"
    weight: Weight | None = None
    name: str = ""
    smoothing_passes: int = 1        # pre-smoothing before the perimeter laplacian

    def __post_init__(self):
        if self.kind not in ("perimeter", "domain_integral"):
            raise ValueError(f"unknown functional kind {self.kind!r}")
        if self.kind == "domain_integral" and self.weight is None:
            raise ValueError("domain_integral functional needs a weight function")

    @classmethod
    def perimeter(cls, smoothing_passes: int = 1) -> CostFunctional:
        return cls("perimeter", name="perimeter", smoothing_passes=smoothing_passes)

    @classmethod
    def domain_integral(cls, weight: Weight, name: str = "domain_integral") -> CostFunctional:
        return cls("domain_integral", weight, name)

    @classmethod
    def second_moment(cls) -> CostFunctional:
        return cls("domain_integral", second_moment, "second_moment")

    @classmethod
    def zero(cls) -> CostFunctional:
        return cls("domain_integral", zero_weight, "zero")


@dataclass(frozen=True)
class AreaConstraint:
    target: float

    def __post_init__(self):
        if not self.target > 0:
            raise ValueError(f"area target must be positive, got {self.target}")


def _field(phi) -> ScalarField:
    return getattr(phi, "field", phi)


def smoothed_indicator(values: np.ndarray, h: float) -> np.ndarray:
    """Linear ramp from 0 at ``phi = -1.5h`` to 1 at ``phi = +1.5h``."""
    w = 1.5 * h
    return np.clip((values + w) / (2 * w), 0.0, 1.0)


def _domain_quadrature(sf: ScalarField, weight: Weight | None) -> float:
    h = sf.spec.h
    theta = smoothed_indicator(sf.values, h)
    if weight is None:
        return float(np.sum(theta) * h * h)
    X, Y = sf.spec.coordinates()
    return float(np.sum(weight(X, Y) * theta) * h * h)


def evaluate_F(functional: CostFunctional, phi, contour: Contour) -> float:
    if functional.kind == "perimeter":
        return contour.total_length
    return _domain_quadrature(_field(phi), functional.weight)


def boundary_gradient_U(functional: CostFunctional, phi, contour: Contour) -> np.ndarray:
    """Shape-gradient density ``U`` at each contour vertex.

    Perimeter: ``U = -laplacian(phi)`` (curvature for a signed distance), so the
    descent ``-U`` is the laplacian.  Domain integrals: ``U = w`` on the boundary.
    """
    sf = _field(phi)
    if functional.kind == "perimeter":
        lap = laplacian(smooth(sf, functional.smoothing_passes))
        return -sample_points(lap, contour.points)
    return np.asarray(functional.weight(contour.points[:, 0], contour.points[:, 1]), dtype=float)


def evaluate_G(phi) -> float:
    """Area of ``{phi > 0}`` by smoothed-indicator node quadrature."""
    return _domain_quadrature(_field(phi), None)


def project_constraint(u, contour: Contour) -> np.ndarray:
    """Remove the boundary mean so the area is unchanged to first order."""
    u = np.asarray(u, dtype=float)
    return u - line_integral(contour, u) / float(np.sum(contour.arc_weights))


def restore_area(phi, constraint: AreaConstraint, rtol: float = 1e-3, max_iter: int = 100):
    """Shift ``phi`` by a constant ``|c| <= h`` so the area is within ``rtol`` of the target.

    No shift is applied when the area is already within tolerance; otherwise
    the shift lands halfway between the violated tolerance edge and the
    target, which keeps corrections small.  Returns ``(shifted, c)``; the
    shifted object has the same type as ``phi`` (a level set comes back
    flagged as not reinitialized).
    """
    sf = _field(phi)
    h = sf.spec.h
    target = constraint.target

    def area(c):
        return _domain_quadrature(sf + c, None)

    def wrap(c):
        shifted = sf + c
        if hasattr(phi, "with_field"):
            return phi.with_field(shifted), c
        return shifted, c

    tol = rtol * target
    a0 = area(0.0)
    if abs(a0 - target) <= tol:
        return wrap(0.0)
    aim = target + 0.5 * tol * np.sign(a0 - target)
    lo, hi = (-h, 0.0) if a0 > target else (0.0, h)
    a_lo, a_hi = area(lo), area(hi)
    if not (a_lo <= aim <= a_hi):
        raise NoBracket(f"area target {target:.6g} outside [{area(-h):.6g}, {area(h):.6g}] "
                        f"reachable with shifts |c| <= h = {h}")
    c = 0.0
    for _ in range(max_iter):
        c = 0.5 * (lo + hi)
        a = area(c)
        if abs(a - aim) <= 1e-3 * tol:
            break
        if a < aim:
            lo = c
        else:
            hi = c
    return wrap(c)
