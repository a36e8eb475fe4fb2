"""Uniform square grids and nodal scalar fields.

Values are stored as a ``(ny, nx)`` array: ``values[j, i]`` is the value at
world point ``origin + (i*h, j*h)``.  Flattening that array in C order gives
the row-major node order used by the text file format.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import OutOfBounds

_EDGE_TOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    h: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"grid spacing must be positive, got h={self.h}")
        if self.nx < 3 or self.ny < 3:
            raise ValueError(f"need at least 3 nodes per axis, got {self.nx}x{self.ny}")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def covering(cls, xmin: float, xmax: float, ymin: float, ymax: float, h: float) -> GridSpec:
        """Smallest grid with spacing ``h`` anchored at ``(xmin, ymin)`` covering the box."""
        nx = int(np.ceil((xmax - xmin) / h - 1e-9)) + 1
        ny = int(np.ceil((ymax - ymin) / h - 1e-9)) + 1
        return cls(nx, ny, h, (xmin, ymin))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def extent(self) -> tuple[float, float]:
        return ((self.nx - 1) * self.h, (self.ny - 1) * self.h)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        x0, y0 = self.origin
        wx, wy = self.extent
        return (x0, x0 + wx, y0, y0 + wy)

    def node(self, i: int, j: int) -> tuple[float, float]:
        return (self.origin[0] + i * self.h, self.origin[1] + j * self.h)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinate arrays ``X, Y`` of shape ``(ny, nx)``."""
        x = self.origin[0] + self.h * np.arange(self.nx)
        y = self.origin[1] + self.h * np.arange(self.ny)
        return np.meshgrid(x, y)

    def to_index(self, points: np.ndarray) -> np.ndarray:
        """Fractional node coordinates ``(fi, fj)`` of world points."""
        p = np.asarray(points, dtype=float)
        return (p - np.asarray(self.origin)) / self.h

    def contains(self, points: np.ndarray, margin: float = 0.0) -> np.ndarray:
        """True where points lie at least ``margin`` cells inside the extent."""
        f = self.to_index(points)
        tol = _EDGE_TOL * max(self.nx, self.ny)
        lo = margin - tol
        return ((f[..., 0] >= lo) & (f[..., 0] <= self.nx - 1 - margin + tol)
                & (f[..., 1] >= lo) & (f[..., 1] <= self.ny - 1 - margin + tol))


@dataclass(frozen=True, eq=False)
class ScalarField:
    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size != self.spec.nx * self.spec.ny:
            raise ValueError(f"expected {self.spec.nx * self.spec.ny} values, got {v.size}")
        v = v.reshape(self.spec.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("scalar field contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, spec: GridSpec, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> ScalarField:
        X, Y = spec.coordinates()
        return cls(spec, np.broadcast_to(fn(X, Y), spec.shape).astype(float))

    def with_values(self, values: np.ndarray) -> ScalarField:
        return ScalarField(self.spec, values)

    def __add__(self, other):
        if isinstance(other, ScalarField):
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    def __mul__(self, c: float):
        return self.with_values(self.values * c)

    __rmul__ = __mul__


# ---------------------------------------------------------------- interpolation

def _check_inside(spec: GridSpec, p: np.ndarray, margin: float, what: str):
    inside = spec.contains(p, margin)
    if not np.all(inside):
        bad = np.asarray(p, dtype=float).reshape(-1, 2)[~np.atleast_1d(inside).reshape(-1)][0]
        raise OutOfBounds(f"{what} at ({bad[0]:.6g}, {bad[1]:.6g}) outside grid {spec.bounds}")


def _bilinear(values: np.ndarray, spec: GridSpec, points: np.ndarray) -> np.ndarray:
    f = spec.to_index(points)
    fi = np.clip(f[..., 0], 0.0, spec.nx - 1)
    fj = np.clip(f[..., 1], 0.0, spec.ny - 1)
    i = np.minimum(np.floor(fi).astype(int), spec.nx - 2)
    j = np.minimum(np.floor(fj).astype(int), spec.ny - 2)
    s = fi - i
    t = fj - j
    v00 = values[j, i]
    v10 = values[j, i + 1]
    v01 = values[j + 1, i]
    v11 = values[j + 1, i + 1]
    return (1 - t) * ((1 - s) * v00 + s * v10) + t * ((1 - s) * v01 + s * v11)


def sample_points(field: ScalarField, points: np.ndarray) -> np.ndarray:
    """Vectorized bilinear interpolation; points shaped ``(..., 2)``."""
    pts = np.asarray(points, dtype=float)
    _check_inside(field.spec, pts, 0.0, "sample point")
    return _bilinear(field.values, field.spec, pts)


def sample(field: ScalarField, p) -> float:
    """Bilinear interpolation of nodal values at world point ``p``."""
    return float(sample_points(field, np.asarray(p, dtype=float)))


def nodal_gradient(field: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Central differences in the interior, one-sided on the border."""
    gy, gx = np.gradient(field.values, field.spec.h, edge_order=1)
    return gx, gy


def gradient_points(field: ScalarField, points: np.ndarray, grads=None) -> np.ndarray:
    """Interpolated nodal gradients anywhere inside the extent (border included)."""
    pts = np.asarray(points, dtype=float)
    _check_inside(field.spec, pts, 0.0, "gradient point")
    gx, gy = grads if grads is not None else nodal_gradient(field)
    return np.stack([_bilinear(gx, field.spec, pts), _bilinear(gy, field.spec, pts)], axis=-1)


def gradient_at(field: ScalarField, p) -> np.ndarray:
    """Gradient at ``p``; requires ``p`` at least one cell away from the border."""
    pt = np.asarray(p, dtype=float)
    _check_inside(field.spec, pt, 1.0, "gradient point")
    return gradient_points(field, pt)


# ---------------------------------------------------------------- stencils

def laplacian(field: ScalarField) -> ScalarField:
    f = field.values
    out = np.empty_like(f)
    out[1:-1, 1:-1] = (f[1:-1, :-2] + f[1:-1, 2:] + f[:-2, 1:-1] + f[2:, 1:-1]
                       - 4.0 * f[1:-1, 1:-1]) / field.spec.h ** 2
    out[0, 1:-1] = out[1, 1:-1]
    out[-1, 1:-1] = out[-2, 1:-1]
    out[:, 0] = out[:, 1]
    out[:, -1] = out[:, -2]
    return field.with_values(out)


def _neighbor_counts(shape: tuple[int, int]) -> np.ndarray:
    count = np.full(shape, 5.0)
    count[0, :] -= 1
    count[-1, :] -= 1
    count[:, 0] -= 1
    count[:, -1] -= 1
    return count


def smooth(field: ScalarField, passes: int = 1) -> ScalarField:
    """Repeated five-point averaging of each node with its in-grid neighbours."""
    if passes < 0:
        raise ValueError("passes must be non-negative")
    f = np.array(field.values)
    if passes == 0:
        return field.with_values(f)
    count = _neighbor_counts(f.shape)
    for _ in range(passes):
        acc = f.copy()
        acc[1:, :] += f[:-1, :]
        acc[:-1, :] += f[1:, :]
        acc[:, 1:] += f[:, :-1]
        acc[:, :-1] += f[:, 1:]
        f = acc / count
    return field.with_values(f)


# ---------------------------------------------------------------- file I/O

def write_field(field: ScalarField, path) -> None:
    spec = field.spec
    lines = [f"{spec.nx} {spec.ny} {spec.h!r} {spec.origin[0]!r} {spec.origin[1]!r}"]
    lines.extend(repr(float(v)) for v in field.values.ravel())
    Path(path).write_text("\n".join(lines) + "\n")


def read_field(path) -> ScalarField:
    tokens = Path(path).read_text().split()
    if len(tokens) < 5:
        raise ValueError(f"{path}: truncated field header")
    nx, ny = int(tokens[0]), int(tokens[1])
    h, x0, y0 = (float(t) for t in tokens[2:5])
    spec = GridSpec(nx, ny, h, (x0, y0))
    body = tokens[5:]
    if len(body) != nx * ny:
        raise ValueError(f"{path}: expected {nx * ny} values, found {len(body)}")
    return ScalarField(spec, np.array([float(t) for t in body]))
