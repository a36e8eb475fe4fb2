import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toposhape.contour import extract_zero_set
from toposhape.grid import GridSpec, ScalarField
from toposhape.shapes import preset
from toposhape.topology import analyze, count_components, count_components_contour


def field(fn, h=0.05, span=(-4.0, 4.0, -3.0, 3.0)):
    return ScalarField.from_function(GridSpec.covering(*span, h), fn)


def two_disks(x, y):
    return np.maximum(1 - np.hypot(x - 2, y), 1 - np.hypot(x + 2, y))


def annulus(x, y):
    r = np.hypot(x, y)
    return np.minimum(2.0 - r, r - 1.0)


@pytest.mark.parametrize("h", [0.2, 0.1, 0.05])
def test_two_disks_gap(h):
    r = analyze(field(two_disks, h))
    assert (r.components_pos, r.holes) == (2, 0)
    assert r.min_gap == pytest.approx(2.0, abs=2 * h)
    assert r.min_thickness == pytest.approx(2.0, abs=2 * h)
    assert r.min_hole_gap == math.inf
    assert sum(r.component_areas) == pytest.approx(2 * math.pi, rel=h)


def test_annulus():
    r = analyze(field(annulus))
    assert (r.components_pos, r.holes) == (1, 1)
    assert r.min_gap == math.inf
    assert r.min_thickness == pytest.approx(1.0, abs=0.1)


def test_two_holes_gap():
    p = preset("two_holes(gap=0.85)")
    r = analyze(p.initial_field())
    assert (r.components_pos, r.holes) == (1, 2)
    assert r.min_hole_gap == pytest.approx(0.85, abs=2 * p.grid.h)


def test_example1_has_seven_components():
    p = preset("example1", h=0.1)
    phi = p.initial_field()
    assert analyze(phi).components_pos == 7
    assert count_components(phi) == 7
    assert count_components_contour(extract_zero_set(phi)) == 7


def test_empty_and_full():
    spec = GridSpec.covering(-1, 1, -1, 1, 0.1)
    r = analyze(ScalarField(spec, -np.ones(spec.shape)))
    assert (r.components_pos, r.holes, r.min_thickness) == (0, 0, math.inf)
    assert analyze(ScalarField(spec, np.ones(spec.shape))).components_pos == 1


def test_checkerboard_labelings_are_consistent():
    spec = GridSpec.covering(0, 0.4, 0, 0.4, 0.1)
    v = np.where((np.indices(spec.shape).sum(axis=0) % 2) == 0, 1.0, -1.0)
    v[0, :] = v[-1, :] = v[:, 0] = v[:, -1] = -1.0
    r = analyze(ScalarField(spec, v))
    # positive nodes touch only diagonally: separate under 4-connectivity
    assert r.components_pos == 5 and r.holes == 0


def test_contour_count_with_frame_component():
    # D is everything except a disk: one component that reaches the border
    phi = field(lambda x, y: np.hypot(x, y) - 1.0)
    assert count_components_contour(extract_zero_set(phi)) == 1
    assert count_components_contour(extract_zero_set(field(annulus))) == 1
    assert count_components_contour(extract_zero_set(field(two_disks))) == 2


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_positive_scaling_leaves_report_unchanged(c):
    f = field(two_disks, 0.1)
    assert analyze(f * c) == analyze(f)
