"""Run configuration read from TOML files.

A config either names a preset and overrides parts of it, or spells out the
whole problem.  Lengths are in the same units as the grid coordinates.

    preset = "example1"          # optional
    output = "runs/example1"
    snapshot_every = 10          # iterations, 0 disables snapshots
    verify_topology = true

    [grid]                       # with a preset only ``h`` may be given
    xmin = -8.0
    xmax = 8.0
    ymin = -8.0
    ymax = 8.0
    h = 0.1

    [barrier]
    d = 0.8                      # inner probe distance
    l = 0.8                      # outer probe distance
    epsilon = 0.2
    K = 0.25

    [optimizer]
    max_iters = 500
    smoothing_passes = 1         # on phi after each update
    velocity_smoothing_passes = 5
    alpha_max = 0.07             # optional step cap (perimeter presets set one)

    [functional]
    kind = "perimeter"           # perimeter | second_moment | zero | domain_integral
    smoothing_passes = 8         # perimeter only
    terms = [[1.0, 2, 0]]        # domain_integral only: c * x^px * y^py

    [constraint]
    area = "initial"             # "initial", a number, or false

    [[shapes]]
    center = [0.0, 0.0]
    a = 1.56
    b = 1.2
    rotation = 0.0               # radians
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .barrier import BarrierParams
from .errors import ConfigError, UnknownPreset
from .functionals import AreaConstraint, CostFunctional, polynomial_weight
from .grid import GridSpec
from .optimizer import OptimizerConfig
from .redistance import LevelSetFunction
from .shapes import EllipseSpec, Preset, preset as make_preset, sdf_union

TOP_KEYS = {"preset", "output", "snapshot_every", "verify_topology",
            "grid", "barrier", "optimizer", "functional", "constraint", "shapes"}
GRID_KEYS = {"xmin", "xmax", "ymin", "ymax", "h"}
BARRIER_KEYS = {"d", "l", "epsilon", "K"}
OPTIMIZER_KEYS = {"max_iters", "halving_limit", "smoothing_passes", "velocity_smoothing_passes",
                  "convergence_window", "convergence_tol", "band_width", "alpha_max"}
FUNCTIONAL_KEYS = {"kind", "smoothing_passes", "terms"}
CONSTRAINT_KEYS = {"area"}
SHAPE_KEYS = {"center", "a", "b", "rotation"}


@dataclass
class RunConfig:
    grid: GridSpec
    barrier: BarrierParams
    optimizer: OptimizerConfig
    functional: CostFunctional
    area: float | str | None = "initial"     # target, "initial", or None for unconstrained
    shapes: list[EllipseSpec] | None = None
    preset: Preset | None = field(default=None, repr=False)
    output: Path = Path("run")
    snapshot_every: int = 0
    verify_topology: bool = False

    def __post_init__(self):
        h = self.grid.h
        for name, value in (("d", self.barrier.d), ("l", self.barrier.l)):
            if value < 2 * h:
                raise ConfigError(f"barrier.{name} = {value} violates {name} >= 2*h = {2 * h} "
                                  f"(grid.h = {h})")
        if self.snapshot_every < 0:
            raise ConfigError("snapshot_every must be >= 0")
        if self.shapes is None and self.preset is None:
            raise ConfigError("config needs either a preset or [[shapes]]")

    @property
    def band_width(self) -> float:
        return self.optimizer.band(self.barrier, self.grid.h)

    def initial_field(self) -> LevelSetFunction:
        if self.shapes is not None:
            return sdf_union(self.shapes, self.grid, self.band_width)
        if self.preset.shapes is not None:
            return sdf_union(self.preset.shapes, self.grid, self.band_width)
        return self.preset.field_fn(self.grid, self.band_width)

    def constraint_for(self, area0: float) -> AreaConstraint | None:
        if self.area is None:
            return None
        return AreaConstraint(area0 if self.area == "initial" else float(self.area))


def _check_keys(table, allowed: set[str], where: str) -> dict:
    if not isinstance(table, dict):
        raise ConfigError(f"{where} must be a table")
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}; "
                          f"allowed: {', '.join(sorted(allowed))}")
    return table


def _num(table: dict, key: str, where: str, default=None, kind=float):
    if key not in table:
        if default is None:
            raise ConfigError(f"missing {where}.{key}")
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {v!r}")
    if kind is int and int(v) != v:
        raise ConfigError(f"{where}.{key} must be an integer, got {v!r}")
    return kind(v)


def _functional(table: dict, base: CostFunctional | None) -> CostFunctional:
    table = _check_keys(table, FUNCTIONAL_KEYS, "[functional]")
    kind = table.get("kind", base.name if base is not None else None)
    if kind is None:
        raise ConfigError("missing functional.kind")
    if kind == "perimeter":
        default = base.smoothing_passes if base is not None and base.kind == "perimeter" else 1
        return CostFunctional.perimeter(_num(table, "smoothing_passes", "functional", default, int))
    extra = set(table) - {"kind", "terms"}
    if extra:
        raise ConfigError(f"functional.{sorted(extra)[0]} only applies to kind = \"perimeter\"")
    if kind == "second_moment":
        return CostFunctional.second_moment()
    if kind == "zero":
        return CostFunctional.zero()
    if kind == "domain_integral":
        terms = table.get("terms")
        if not terms or not all(isinstance(t, list) and len(t) == 3 for t in terms):
            raise ConfigError("functional.terms must be a list of [coefficient, px, py]")
        return CostFunctional.domain_integral(polynomial_weight(terms))
    raise ConfigError(f"unknown functional.kind {kind!r}")


def _area(value) -> float | str | None:
    if value is False:
        return None
    if value == "initial":
        return "initial"
    if isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0:
        return float(value)
    raise ConfigError(f"constraint.area must be \"initial\", a positive number or false, got {value!r}")


def _shapes(items) -> list[EllipseSpec]:
    if not isinstance(items, list) or not items:
        raise ConfigError("[[shapes]] must be a non-empty array of tables")
    out = []
    for k, item in enumerate(items):
        where = f"shapes[{k}]"
        item = _check_keys(item, SHAPE_KEYS, where)
        center = item.get("center")
        if not (isinstance(center, list) and len(center) == 2):
            raise ConfigError(f"{where}.center must be [x, y]")
        try:
            out.append(EllipseSpec((float(center[0]), float(center[1])),
                                   _num(item, "a", where), _num(item, "b", where),
                                   _num(item, "rotation", where, 0.0)))
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    return out


def parse_config(data: dict, base_dir: Path | None = None) -> RunConfig:
    data = _check_keys(data, TOP_KEYS, "config")
    base: Preset | None = None
    if "preset" in data:
        if "shapes" in data:
            raise ConfigError("give either preset or [[shapes]], not both")
        h = None
        if "grid" in data:
            g = _check_keys(data["grid"], {"h"}, "[grid] (with a preset only h may be set)")
            h = _num(g, "h", "grid", None) if "h" in g else None
        try:
            base = make_preset(str(data["preset"]), h=h)
        except UnknownPreset as exc:
            raise ConfigError(str(exc.args[0] if exc.args else exc)) from None
        grid = base.grid
    else:
        g = _check_keys(data.get("grid", {}), GRID_KEYS, "[grid]")
        try:
            grid = GridSpec.covering(*(_num(g, k, "grid") for k in ("xmin", "xmax", "ymin", "ymax", "h")))
        except ValueError as exc:
            raise ConfigError(f"[grid]: {exc}") from None

    b = _check_keys(data.get("barrier", {}), BARRIER_KEYS, "[barrier]")
    bp = base.params if base is not None else None
    try:
        barrier = BarrierParams(
            _num(b, "d", "barrier", bp and bp.d), _num(b, "l", "barrier", bp and bp.l),
            _num(b, "epsilon", "barrier", bp and bp.epsilon), _num(b, "K", "barrier", 0.25))
    except ValueError as exc:
        raise ConfigError(f"[barrier]: {exc}") from None

    o = _check_keys(data.get("optimizer", {}), OPTIMIZER_KEYS, "[optimizer]")
    defaults = OptimizerConfig()
    smoothing_default = base.smoothing_passes if base is not None else defaults.smoothing_passes
    velocity_default = (base.velocity_smoothing_passes if base is not None
                        else defaults.velocity_smoothing_passes)
    try:
        optimizer = OptimizerConfig(
            max_iters=_num(o, "max_iters", "optimizer", defaults.max_iters, int),
            halving_limit=_num(o, "halving_limit", "optimizer", defaults.halving_limit, int),
            smoothing_passes=_num(o, "smoothing_passes", "optimizer", smoothing_default, int),
            velocity_smoothing_passes=_num(o, "velocity_smoothing_passes", "optimizer",
                                           velocity_default, int),
            convergence_window=_num(o, "convergence_window", "optimizer",
                                    defaults.convergence_window, int),
            convergence_tol=_num(o, "convergence_tol", "optimizer", defaults.convergence_tol),
            band_width=_num(o, "band_width", "optimizer", 0.0) or None,
            alpha_max=_num(o, "alpha_max", "optimizer", 0.0) or None,
        )
    except ValueError as exc:
        raise ConfigError(f"[optimizer]: {exc}") from None

    if "alpha_max" not in o and base is not None and base.alpha_max is not None:
        optimizer = replace(optimizer, alpha_max=base.alpha_max)

    base_functional = base.functional if base is not None else None
    if "functional" in data:
        functional = _functional(data["functional"], base_functional)
    elif base_functional is not None:
        functional = base_functional
    else:
        raise ConfigError("missing [functional] table")

    if "constraint" in data:
        c = _check_keys(data["constraint"], CONSTRAINT_KEYS, "[constraint]")
        area = _area(c.get("area", "initial"))
    else:
        area = "initial" if base is None or base.area_constraint else None

    output = Path(str(data.get("output", "run")))
    if base_dir is not None and not output.is_absolute():
        output = base_dir / output
    snapshot_every = _num(data, "snapshot_every", "config", 0, int)
    verify = data.get("verify_topology", False)
    if not isinstance(verify, bool):
        raise ConfigError("verify_topology must be true or false")

    return RunConfig(grid, barrier, optimizer, functional, area,
                     _shapes(data["shapes"]) if "shapes" in data else None,
                     base, output, snapshot_every, verify)


def load_config(path) -> RunConfig:
    """Read a TOML config; relative output paths resolve against the file's directory."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, path.parent)
