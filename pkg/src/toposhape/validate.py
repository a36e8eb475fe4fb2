"""Analytic oracle suites behind the ``validate`` command.

Each suite compares a module against a closed-form answer and reports a
single pass/fail line; failures never raise.
"""
from __future__ import annotations

import math
from contextlib import contextmanager, nullcontext
from dataclasses import dataclass, replace
from typing import Callable
from unittest import mock

import numpy as np

from . import barrier as barrier_mod
from . import optimizer as optimizer_mod
from .barrier import BarrierParams, evaluate_barrier
from .contour import extract_zero_set
from .grid import GridSpec, ScalarField
from .optimizer import OptimizerConfig, step
from .redistance import eikonal_residual, reinitialize
from .shapes import preset, sdf_union
from .topology import analyze


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def circle_field(radius: float, h: float, band: float, margin: float = 1.5):
    span = radius + band + margin
    spec = GridSpec.covering(-span, span, -span, span, h)
    f = ScalarField.from_function(spec, lambda x, y: radius - np.hypot(x, y))
    return reinitialize(f, band)


def _circle_barrier(radius=2.0, h=0.05, d=0.5, l=0.5):
    params = BarrierParams(d, l, 0.2)
    phi = circle_field(radius, h, max(d, l) + 4 * h)
    contour = extract_zero_set(phi)
    return evaluate_barrier(phi, contour, params), params


def check_circle_H() -> CheckResult:
    ev, p = _circle_barrier()
    expected = -2 * math.pi * 2.0 * (math.log(p.d) + math.log(p.l))
    err = abs(ev.H_value - expected) / expected if ev.feasible else math.inf
    return CheckResult("circle_H", err <= 0.05,
                       f"H={ev.H_value!r} expected {expected:.4f} rel err {err:.2e} (tol 5%)")


def check_circle_U1U2() -> CheckResult:
    ev, p = _circle_barrier()
    ok1 = np.abs(ev.U1 - 1 / p.d) <= 0.05 / p.d
    ok2 = np.abs(ev.U2 + 1 / p.l) <= 0.05 / p.l
    frac = min(ok1.mean(), ok2.mean())
    return CheckResult("circle_U1U2", frac >= 0.95,
                       f"fraction within 5%: U1 {ok1.mean():.3f}, U2 {ok2.mean():.3f} (need 0.95)")


def _nearest_vertex(contour) -> int:
    """Vertex closest to the symmetry axis x = 0 (facing the other shape)."""
    return int(np.argmin(np.abs(contour.points[:, 0]) + 10 * np.abs(contour.points[:, 1])))


def _pair_barrier(name: str, gap_excess: float = 0.05, d: float = 0.8):
    p = preset(f"{name}(gap={d + gap_excess!r})")
    phi = p.initial_field()
    contour = extract_zero_set(phi)
    ev = evaluate_barrier(phi, contour, p.params)
    return p, phi, contour, ev


def check_two_hole_U1() -> CheckResult:
    _, _, contour, ev = _pair_barrier("two_holes")
    k = _nearest_vertex(contour)
    expected = -1 / 0.05
    err = abs(ev.U1[k] - expected) / abs(expected)
    return CheckResult("two_hole_U1", ev.feasible and err <= 0.15,
                       f"U1={ev.U1[k]:.3f} at {np.round(contour.points[k], 3).tolist()} "
                       f"expected {expected:.1f} (tol 15%)")


def check_two_disk_U2() -> CheckResult:
    _, _, contour, ev = _pair_barrier("two_disks")
    k = _nearest_vertex(contour)
    expected = 1 / 0.05
    err = abs(ev.U2[k] - expected) / abs(expected)
    return CheckResult("two_disk_U2", ev.feasible and err <= 0.15,
                       f"U2={ev.U2[k]:.3f} at {np.round(contour.points[k], 3).tolist()} "
                       f"expected {expected:.1f} (tol 15%)")


def _gap_after_step(name: str, attr: str) -> tuple[float, float]:
    p, phi, _, _ = _pair_barrier(name)
    before = getattr(analyze(phi), attr)
    new, _ = step(phi, p.functional, None, p.params, OptimizerConfig(max_iters=1))
    return before, getattr(analyze(new), attr)


def check_repulsion() -> CheckResult:
    details, ok = [], True
    for name, attr in (("two_holes", "min_hole_gap"), ("two_disks", "min_gap")):
        try:
            before, after = _gap_after_step(name, attr)
        except Exception as exc:   # a failed step is a failed check
            ok = False
            details.append(f"{name}: step failed ({type(exc).__name__})")
            continue
        ok &= after > before
        details.append(f"{name}: gap {before:.4f} -> {after:.4f}")
    return CheckResult("repulsion", ok, "; ".join(details))


def check_eikonal() -> CheckResult:
    fields = {
        "circle": circle_field(2.0, 0.05, 0.8 + 4 * 0.05),
        "circle_5x": reinitialize(ScalarField.from_function(
            GridSpec.covering(-4, 4, -4, 4, 0.05), lambda x, y: 5 * (2 - np.hypot(x, y))), 1.0),
    }
    p = preset("example1", h=0.1)
    fields["example1"] = sdf_union(p.shapes, p.grid, p.band_width)
    res = {k: eikonal_residual(v) for k, v in fields.items()}
    worst = max(res.values())
    return CheckResult("eikonal", worst <= 0.05,
                       ", ".join(f"{k} {v:.4f}" for k, v in res.items()) + " (tol 0.05)")


def check_contour_length() -> CheckResult:
    exact = 2 * math.pi * 2.0
    errs = []
    for h in (0.2, 0.1, 0.05):
        spec = GridSpec.covering(-3, 3, -3, 3, h)
        f = ScalarField.from_function(spec, lambda x, y: 2.0 - np.hypot(x - 0.013, y + 0.021))
        errs.append(abs(extract_zero_set(f).total_length - exact) / exact)
    ok = errs[-1] <= 1e-3 and errs[0] > errs[1] > errs[2]
    return CheckResult("contour_length", ok,
                       "rel err h=0.2/0.1/0.05: " + ", ".join(f"{e:.2e}" for e in errs))


SUITES: dict[str, Callable[[], CheckResult]] = {
    "circle_H": check_circle_H,
    "circle_U1U2": check_circle_U1U2,
    "two_hole_U1": check_two_hole_U1,
    "two_disk_U2": check_two_disk_U2,
    "repulsion": check_repulsion,
    "eikonal": check_eikonal,
    "contour_length": check_contour_length,
}


@contextmanager
def u1_sign_flip():
    """Test hook: every barrier evaluation reports -U1."""
    original = barrier_mod.evaluate_barrier

    def flipped(phi, contour, params):
        ev = original(phi, contour, params)
        return replace(ev, U1=-ev.U1)

    with mock.patch.object(optimizer_mod, "evaluate_barrier", flipped), \
            mock.patch.object(barrier_mod, "evaluate_barrier", flipped), \
            mock.patch(f"{__name__}.evaluate_barrier", flipped):
        yield


def run_suites(names=None, flip_u1: bool = False) -> list[CheckResult]:
    names = list(SUITES) if names is None else list(names)
    results = []
    with u1_sign_flip() if flip_u1 else nullcontext():
        for name in names:
            try:
                results.append(SUITES[name]())
            except Exception as exc:
                results.append(CheckResult(name, False, f"raised {type(exc).__name__}: {exc}"))
    return results


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    return "\n".join(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}"
                     for r in results)
