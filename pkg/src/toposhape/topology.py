"""Grid-resolution topology and feature-size measurements.

These are verification oracles only: they look at the sign pattern of the
nodal values and never feed back into the optimizer.  Positive nodes are
4-connected, negative nodes 8-connected, which keeps the two complementary
labelings consistent on checkerboard patterns.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from matplotlib.path import Path
from scipy import ndimage

FOUR = ndimage.generate_binary_structure(2, 1)
EIGHT = ndimage.generate_binary_structure(2, 2)


@dataclass(frozen=True)
class TopologyReport:
    components_pos: int
    holes: int
    min_gap: float
    min_thickness: float
    min_hole_gap: float = math.inf
    thicknesses: tuple[float, ...] = field(default=(), repr=False)
    component_areas: tuple[float, ...] = field(default=(), repr=False)

    CSV_HEADER = "components_pos,holes,min_gap,min_thickness,min_hole_gap"

    def csv_row(self) -> str:
        return ",".join(repr(x) for x in (self.components_pos, self.holes, self.min_gap,
                                          self.min_thickness, self.min_hole_gap))


def _pairwise_min_gap(labels: np.ndarray, n: int, h: float) -> float:
    """Smallest distance between two labeled sets of nodes, less ``h``.

    Each set's true boundary lies between 0 and ``h`` beyond its outermost
    nodes, so the node-to-node distance overshoots the gap by 0 to ``2h``;
    subtracting ``h`` centers the error.  Distinct 4-connected sets are at
    least ``sqrt(2) h`` apart, so the result stays positive.
    """
    if n < 2:
        return math.inf
    best = math.inf
    for k in range(1, n):
        # distance from every node to the nearest node of component k
        dist = ndimage.distance_transform_edt(labels != k, sampling=h)
        others = labels > k
        if others.any():
            best = min(best, float(dist[others].min()))
    return best - h


def analyze(phi) -> TopologyReport:
    values = getattr(phi, "values", None)
    if values is None:
        values = phi.field.values
    spec = getattr(phi, "spec", None) or phi.field.spec
    h = spec.h
    pos = values > 0
    neg = ~pos

    lab_pos, n_pos = ndimage.label(pos, structure=FOUR)
    lab_neg, n_neg = ndimage.label(neg, structure=EIGHT)
    border = np.zeros_like(neg)
    border[0, :] = border[-1, :] = border[:, 0] = border[:, -1] = True
    outer = set(np.unique(lab_neg[border & neg]).tolist()) - {0}
    hole_ids = [k for k in range(1, n_neg + 1) if k not in outer]

    holes_lab = np.zeros_like(lab_neg)
    for new, k in enumerate(hole_ids, start=1):
        holes_lab[lab_neg == k] = new

    thicknesses = []
    areas = []
    if n_pos:
        depth = ndimage.distance_transform_edt(pos, sampling=h)
        idx = np.arange(1, n_pos + 1)
        thicknesses = [2.0 * float(x) for x in ndimage.maximum(depth, lab_pos, idx)]
        areas = [float(x) * h * h for x in ndimage.sum(pos, lab_pos, idx)]
    return TopologyReport(
        components_pos=int(n_pos),
        holes=len(hole_ids),
        min_gap=_pairwise_min_gap(lab_pos, n_pos, h),
        min_thickness=min(thicknesses) if thicknesses else math.inf,
        min_hole_gap=_pairwise_min_gap(holes_lab, len(hole_ids), h),
        thicknesses=tuple(thicknesses),
        component_areas=tuple(areas),
    )


def count_components(phi) -> int:
    values = getattr(phi, "values", None)
    if values is None:
        values = phi.field.values
    return int(ndimage.label(values > 0, structure=FOUR)[1])


def count_components_contour(contour) -> int:
    """Components of D from an oriented contour alone.

    Loops with D on their left enclose positive area.  A hole loop that sits
    outside every such loop means D also contains the whole grid border,
    which adds one more (frame) component.
    """
    outer, holes = [], []
    for k in range(contour.n_loops):
        p = contour.loop_points(k)
        q = np.roll(p, -1, axis=0)
        (outer if np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]) > 0 else holes).append(p)
    paths = [Path(p) for p in outer]
    frame = any(not any(path.contains_point(h[0]) for path in paths) for h in holes)
    return len(outer) + int(frame)
