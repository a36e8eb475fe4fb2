"""Initial level set functions: ellipse unions and closed-form test fields."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .barrier import BarrierParams
from .contour import _point_segment
from .errors import ShapesOverlap, TooCloseToBorder, UnknownPreset
from .functionals import CostFunctional
from .optimizer import OptimizerConfig, curvature_step_limit
from .grid import GridSpec, ScalarField
from .redistance import LevelSetFunction, reinitialize

POLYLINE_SEGMENTS = 512


@dataclass(frozen=True)
class EllipseSpec:
    center: tuple[float, float]
    semi_axis_a: float
    semi_axis_b: float
    rotation: float = 0.0

    def __post_init__(self):
        if not self.semi_axis_a >= self.semi_axis_b > 0:
            raise ValueError(f"need a >= b > 0, got a={self.semi_axis_a}, b={self.semi_axis_b}")

    @property
    def area(self) -> float:
        return math.pi * self.semi_axis_a * self.semi_axis_b

    def polyline(self, n: int = POLYLINE_SEGMENTS) -> np.ndarray:
        t = 2 * np.pi * np.arange(n) / n
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        x = self.semi_axis_a * np.cos(t)
        y = self.semi_axis_b * np.sin(t)
        return np.column_stack([self.center[0] + c * x - s * y, self.center[1] + s * x + c * y])

    def inside(self, x, y) -> np.ndarray:
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        dx = np.asarray(x) - self.center[0]
        dy = np.asarray(y) - self.center[1]
        u = c * dx + s * dy
        v = -s * dx + c * dy
        return (u / self.semi_axis_a) ** 2 + (v / self.semi_axis_b) ** 2 < 1.0


def _polyline_distance(poly: np.ndarray, X: np.ndarray, Y: np.ndarray, chunk: int = 64) -> np.ndarray:
    A = poly
    B = np.roll(poly, -1, axis=0)
    best = np.full(X.shape, np.inf)
    for s in range(0, len(A), chunk):
        a, b = A[s:s + chunk], B[s:s + chunk]
        d, _ = _point_segment(X[..., None], Y[..., None], a[:, 0], a[:, 1], b[:, 0], b[:, 1])
        best = np.minimum(best, d.min(axis=-1))
    return best


def ellipse_sdf(shape: EllipseSpec, spec: GridSpec) -> np.ndarray:
    X, Y = spec.coordinates()
    dist = _polyline_distance(shape.polyline(), X, Y)
    return np.where(shape.inside(X, Y), dist, -dist)


def _check_layout(shapes: list[EllipseSpec], spec: GridSpec, margin: float):
    polys = [s.polyline() for s in shapes]
    for a in range(len(shapes)):
        for b in range(len(shapes)):
            if a != b and np.any(shapes[b].inside(polys[a][:, 0], polys[a][:, 1])):
                raise ShapesOverlap(f"ellipses {a} and {b} overlap")
    xmin, xmax, ymin, ymax = spec.bounds
    for k, p in enumerate(polys):
        clearance = min(p[:, 0].min() - xmin, xmax - p[:, 0].max(),
                        p[:, 1].min() - ymin, ymax - p[:, 1].max())
        if clearance < margin:
            raise TooCloseToBorder(f"ellipse {k} is {clearance:.3g} from the grid border, "
                                   f"needs {margin:.3g}")


def sdf_union(shapes: list[EllipseSpec], spec: GridSpec, band_width: float) -> LevelSetFunction:
    """Signed distance of a union of disjoint ellipses, reinitialized on the band."""
    if not shapes:
        raise ValueError("need at least one shape")
    _check_layout(shapes, spec, band_width + 2 * spec.h)
    field_ = ellipse_sdf(shapes[0], spec)
    for s in shapes[1:]:
        field_ = np.maximum(field_, ellipse_sdf(s, spec))
    return reinitialize(ScalarField(spec, field_), band_width)


def default_band_width(params: BarrierParams, h: float) -> float:
    return max(params.d, params.l) + 4 * h


# ---------------------------------------------------------------- presets

def seven_ellipses(spacing: float = 4.0, minor: float = 1.0, aspect: float = 1.3,
                   central_scale: float = 1.2) -> list[EllipseSpec]:
    """One enlarged central ellipse plus six at 60-degree steps, axes along x."""
    shapes = [EllipseSpec((0.0, 0.0), central_scale * aspect * minor, central_scale * minor)]
    for k in range(6):
        ang = k * math.pi / 3
        shapes.append(EllipseSpec((spacing * math.cos(ang), spacing * math.sin(ang)),
                                  aspect * minor, minor))
    return shapes


def _disk(cx, cy, r):
    return lambda x, y: r - np.hypot(x - cx, y - cy)


@dataclass
class Preset:
    """A ready-to-run problem: grid, initial field builder and parameters."""

    name: str
    grid: GridSpec
    params: BarrierParams
    functional: CostFunctional
    area_constraint: bool = True
    shapes: list[EllipseSpec] | None = None
    field_fn: Callable[[GridSpec, float], LevelSetFunction] | None = field(default=None, repr=False)
    smoothing_passes: int = 1            # on phi after each update
    velocity_smoothing_passes: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def alpha_max(self) -> float | None:
        """Step cap keeping the explicit curvature update stable (perimeter only)."""
        if self.functional.kind != "perimeter":
            return None
        return curvature_step_limit(self.grid.h,
                                    self.functional.smoothing_passes
                                    + self.velocity_smoothing_passes)

    def optimizer_config(self, **overrides) -> OptimizerConfig:
        """Optimizer settings matching this preset (smoothing and step cap)."""
        kw = dict(smoothing_passes=self.smoothing_passes,
                  velocity_smoothing_passes=self.velocity_smoothing_passes,
                  alpha_max=self.alpha_max)
        kw.update(overrides)
        return OptimizerConfig(**kw)

    @property
    def epsilon(self) -> float:
        return self.params.epsilon

    @property
    def band_width(self) -> float:
        return default_band_width(self.params, self.grid.h)

    def initial_field(self) -> LevelSetFunction:
        if self.shapes is not None:
            return sdf_union(self.shapes, self.grid, self.band_width)
        return self.field_fn(self.grid, self.band_width)

    def with_epsilon(self, epsilon: float) -> Preset:
        return replace(self, params=replace(self.params, epsilon=epsilon))


def _analytic(fn) -> Callable[[GridSpec, float], LevelSetFunction]:
    def build(spec: GridSpec, band: float) -> LevelSetFunction:
        return reinitialize(ScalarField.from_function(spec, fn), band)
    return build


def two_holes_field(gap: float, radius: float = 1.0):
    c = radius + gap / 2
    return lambda x, y: np.minimum(np.hypot(x - c, y) - radius, np.hypot(x + c, y) - radius)


def two_disks_field(gap: float, radius: float = 1.0):
    c = radius + gap / 2
    return lambda x, y: np.maximum(radius - np.hypot(x - c, y), radius - np.hypot(x + c, y))


def dumbbell_field(neck: float, spec: GridSpec, radius: float = 1.5, half_span: float = 3.0,
                   fillet: float = 1.0) -> ScalarField:
    """Two disks joined by a straight bar of width ``neck``, concave corners rounded.

    The rounding is a morphological closing by a disk of radius ``fillet``,
    computed with two exact re-distancing passes.
    """
    X, Y = spec.coordinates()
    disks = np.maximum(_disk(-half_span, 0, radius)(X, Y), _disk(half_span, 0, radius)(X, Y))
    bar = np.minimum(neck / 2 - np.abs(Y), half_span - np.abs(X))
    union = np.maximum(disks, bar)
    wide = fillet + 4 * spec.h
    dilated = reinitialize(ScalarField(spec, union + fillet), wide)
    return ScalarField(spec, reinitialize(dilated.field, wide).values - fillet)


_PRESET_RE = re.compile(r"^\s*(\w+)\s*(?:\((.*)\))?\s*$")


def _parse(name: str) -> tuple[str, dict]:
    m = _PRESET_RE.match(name)
    if not m:
        raise UnknownPreset(name)
    base, args = m.group(1), m.group(2)
    kwargs = {}
    if args:
        for k, part in enumerate(a.strip() for a in args.split(",") if a.strip()):
            key, _, val = part.rpartition("=")
            kwargs[key.strip() or ("gap" if base != "dumbbell" else "neck")] = float(val)
    return base, kwargs


def preset(name: str, h: float | None = None, **kwargs) -> Preset:
    """Named configurations.

    ``example1``/``example2`` are the seven-ellipse runs (perimeter and second
    moment), ``circle`` a stationary single disk, and ``two_disks(gap)``,
    ``two_holes(gap)``, ``dumbbell(neck)`` closed-form fields for the barrier
    and topology checks.  Arguments may be passed in the name, e.g.
    ``preset("two_holes(gap=0.85)")``.
    """
    base, parsed = _parse(name)
    parsed.update(kwargs)
    if base in ("example1", "example2"):
        h = 0.05 if h is None else h
        grid = GridSpec.covering(-8.0, 8.0, -8.0, 8.0, h)
        if base == "example1":
            return Preset("example1", grid, BarrierParams(0.8, 0.8, 0.2, 0.25),
                          CostFunctional.perimeter(smoothing_passes=8), True,
                          seven_ellipses(), velocity_smoothing_passes=5)
        return Preset("example2", grid, BarrierParams(0.8, 0.8, 0.4, 0.25),
                      CostFunctional.second_moment(), True, seven_ellipses(),
                      velocity_smoothing_passes=5)
    if base == "circle":
        h = 0.1 if h is None else h
        radius = parsed.get("radius", 2.0)
        span = radius + 2.5
        grid = GridSpec.covering(-span, span, -span, span, h)
        return Preset("circle", grid, BarrierParams(0.8, 0.8, 0.2, 0.25),
                      CostFunctional.perimeter(smoothing_passes=8), True,
                      [EllipseSpec((0.0, 0.0), radius, radius)], velocity_smoothing_passes=5)
    if base in ("two_holes", "two_disks"):
        h = 0.05 if h is None else h
        gap = parsed.get("gap", 0.85)
        d = parsed.get("d", 0.8)
        grid = GridSpec.covering(-4.5, 4.5, -3.0, 3.0, h)
        fn = two_holes_field(gap) if base == "two_holes" else two_disks_field(gap)
        return Preset(f"{base}({gap!r})", grid, BarrierParams(d, d, 0.2, 0.25),
                      CostFunctional.zero(), False, field_fn=_analytic(fn), meta={"gap": gap})
    if base == "dumbbell":
        h = 0.1 if h is None else h
        neck = parsed.get("neck", 0.6)
        grid = GridSpec.covering(-6.0, 6.0, -4.0, 4.0, h)

        def build(spec, band, neck=neck):
            return reinitialize(dumbbell_field(neck, spec), band)

        return Preset(f"dumbbell({neck!r})", grid, BarrierParams(0.8, 0.8, 0.2, 0.25),
                      CostFunctional.perimeter(smoothing_passes=8), True, field_fn=build,
                      velocity_smoothing_passes=5, meta={"neck": neck})
    raise UnknownPreset(f"unknown preset {name!r}; choose from example1, example2, circle, "
                        "two_disks(gap), two_holes(gap), dumbbell(neck)")
