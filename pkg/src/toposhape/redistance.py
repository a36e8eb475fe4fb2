"""Narrow-band reinitialization to the signed distance of the zero set."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contour import Contour, GridProjection, extract_zero_set, project_grid, _nudged
from .grid import ScalarField, nodal_gradient

# largest angle (radians) between exact gradient directions of neighbouring
# nodes for which the central-difference stencil resolves the field
MAX_DIRECTION_SPREAD = 0.5


@dataclass(frozen=True, eq=False)
class LevelSetFunction:
    field: ScalarField
    band_width: float
    is_reinitialized: bool = False
    projection: GridProjection | None = field(default=None, repr=False)
    source_contour: Contour | None = field(default=None, repr=False)

    @property
    def spec(self):
        return self.field.spec

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def with_field(self, f: ScalarField) -> LevelSetFunction:
        """New, not-yet-reinitialized level set on the same band."""
        return LevelSetFunction(f, self.band_width, False)


def as_level_set(f: ScalarField, band_width: float) -> LevelSetFunction:
    return LevelSetFunction(f, float(band_width), False)


def reinitialize(phi: LevelSetFunction | ScalarField, band_width: float | None = None,
                 contour: Contour | None = None) -> LevelSetFunction:
    """Replace ``phi`` by the signed distance to its own zero contour.

    Nodes within ``band_width`` of the contour get the exact distance to the
    polyline; everything else is clamped to ``sign * band_width``.
    """
    sf = getattr(phi, "field", phi)
    if band_width is None:
        band_width = phi.band_width
    if contour is None:
        contour = extract_zero_set(sf)
    proj = project_grid(contour, sf.spec, band_width)
    sign = np.where(_nudged(sf.values) > 0, 1.0, -1.0)
    dist = np.where(proj.inside, proj.distance, band_width)
    out = ScalarField(sf.spec, sign * dist)
    return LevelSetFunction(out, float(band_width), True, proj, contour)


def gradient_directions(phi: LevelSetFunction, proj: GridProjection, contour: Contour) -> np.ndarray:
    """Exact unit gradient of the signed distance at band nodes, from foot points."""
    spec = phi.spec
    X, Y = spec.coordinates()
    rel = np.stack([X, Y], axis=-1) - proj.foot
    sign = np.where(phi.values > 0, 1.0, -1.0)[..., None]
    dist = proj.distance[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        g = sign * rel / dist
    # on (or extremely near) the polyline use the segment's left normal
    close = proj.inside & (proj.distance <= 1e-9 * spec.h)
    if close.any():
        a, b = contour.segments()
        seg = proj.segment[close]
        tvec = contour.points[b[seg]] - contour.points[a[seg]]
        g[close] = np.column_stack([-tvec[:, 1], tvec[:, 0]]) / np.linalg.norm(tvec, axis=1)[:, None]
    return g


def regular_nodes(phi: LevelSetFunction) -> np.ndarray:
    """Band nodes where the signed distance is smooth on the stencil scale.

    Excludes nodes within 2h of the band edge or the grid border, and nodes
    whose neighbours' exact gradient directions differ by more than
    ``MAX_DIRECTION_SPREAD`` (medial axis, polyline corners).
    """
    spec = phi.spec
    proj, contour = phi.projection, phi.source_contour
    if proj is None or contour is None or proj.radius < phi.band_width:
        contour = extract_zero_set(phi.field)
        proj = project_grid(contour, spec, phi.band_width)
    h = spec.h
    mask = proj.inside & (np.abs(phi.values) <= phi.band_width - 2 * h)
    mask[:2, :] = mask[-2:, :] = False
    mask[:, :2] = mask[:, -2:] = False
    g = gradient_directions(phi, proj, contour)
    cos_limit = np.cos(MAX_DIRECTION_SPREAD)
    for axis in (0, 1):
        fwd = np.roll(g, -1, axis=axis)
        back = np.roll(g, 1, axis=axis)
        both_in = np.roll(proj.inside, -1, axis=axis) & np.roll(proj.inside, 1, axis=axis)
        # every pair of directions on the stencil line must agree
        for a, b in ((g, fwd), (g, back), (fwd, back)):
            mask &= np.sum(a * b, axis=-1) >= cos_limit
        mask &= both_in
    return mask


def eikonal_residual(phi: LevelSetFunction) -> float:
    """Max of ``| |grad phi| - 1 |`` over regular band nodes (0 if there are none)."""
    mask = regular_nodes(phi)
    if not mask.any():
        return 0.0
    gx, gy = nodal_gradient(phi.field)
    return float(np.max(np.abs(np.hypot(gx, gy)[mask] - 1.0)))
