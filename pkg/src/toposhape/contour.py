"""Zero level set extraction on the triangulated grid and boundary quadrature.

Every grid cell is split along its lower-left to upper-right diagonal.  On each
triangle the linear interpolant of the nodal values has a straight zero
segment, so the zero set is a polyline whose vertices sit on triangle edges.
Loops are oriented with the positive region ``{phi > 0}`` on the left, i.e.
counter-clockwise around components and clockwise around holes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

from .errors import EmptyContour, LengthMismatch
from .grid import GridSpec, ScalarField, gradient_points, nodal_gradient

NUDGE = 1e-12


class ContourVertex(NamedTuple):
    position: np.ndarray
    outward_normal: np.ndarray
    arc_weight: float


@dataclass(frozen=True, eq=False)
class Contour:
    """Closed polylines stored as flat arrays.

    ``points[loop_offsets[k]:loop_offsets[k+1]]`` are the vertices of loop k.
    Segment ``s`` of a loop joins its vertex ``s`` to vertex ``s+1`` (cyclic).
    """

    points: np.ndarray
    normals: np.ndarray
    arc_weights: np.ndarray
    loop_offsets: np.ndarray
    on_border: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.on_border is None:
            object.__setattr__(self, "on_border", np.zeros(len(self.points), dtype=bool))

    def __len__(self):
        return len(self.points)

    @property
    def n_loops(self) -> int:
        return len(self.loop_offsets) - 1

    @property
    def total_length(self) -> float:
        return float(np.sum(self.segment_lengths()))

    @property
    def loops(self) -> list[list[ContourVertex]]:
        return [[ContourVertex(self.points[k], self.normals[k], float(self.arc_weights[k]))
                 for k in range(a, b)]
                for a, b in zip(self.loop_offsets[:-1], self.loop_offsets[1:])]

    def vertices(self) -> Iterator[ContourVertex]:
        for k in range(len(self.points)):
            yield ContourVertex(self.points[k], self.normals[k], float(self.arc_weights[k]))

    def loop_points(self, k: int) -> np.ndarray:
        return self.points[self.loop_offsets[k]:self.loop_offsets[k + 1]]

    def successor(self) -> np.ndarray:
        """Index of the next vertex along each loop."""
        nxt = np.arange(1, len(self.points) + 1)
        ends = self.loop_offsets[1:] - 1
        nxt[ends] = self.loop_offsets[:-1]
        return nxt

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Start and end vertex indices of every segment, in (loop, segment) order."""
        start = np.arange(len(self.points))
        return start, self.successor()

    def segment_lengths(self) -> np.ndarray:
        a, b = self.segments()
        return np.linalg.norm(self.points[b] - self.points[a], axis=1)

    def signed_area(self) -> float:
        """Shoelace area enclosed by the loops (holes count negative)."""
        a, b = self.segments()
        p, q = self.points[a], self.points[b]
        return 0.5 * float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))


# ---------------------------------------------------------------- extraction

def _edge_layout(nx: int, ny: int):
    n_h = ny * (nx - 1)
    n_v = (ny - 1) * nx
    n_d = (ny - 1) * (nx - 1)
    return n_h, n_v, n_d


def _nudged(values: np.ndarray) -> np.ndarray:
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    if scale == 0.0:
        return values
    v = np.array(values, dtype=float)
    v[np.abs(v) < NUDGE * scale] = NUDGE * scale
    return v


def _crossings(v: np.ndarray, spec: GridSpec):
    """Zero crossing point for every triangulation edge (NaN where no crossing)."""
    ny, nx = v.shape
    X, Y = spec.coordinates()
    pos = v > 0

    def lerp(va, vb, xa, ya, xb, yb, mask):
        with np.errstate(divide="ignore", invalid="ignore"):
            t = va / (va - vb)
            px = np.where(mask, xa + t * (xb - xa), np.nan)
            py = np.where(mask, ya + t * (yb - ya), np.nan)
        return np.stack([px.ravel(), py.ravel()], axis=1)

    hz = lerp(v[:, :-1], v[:, 1:], X[:, :-1], Y[:, :-1], X[:, 1:], Y[:, 1:], pos[:, :-1] != pos[:, 1:])
    vt = lerp(v[:-1, :], v[1:, :], X[:-1, :], Y[:-1, :], X[1:, :], Y[1:, :], pos[:-1, :] != pos[1:, :])
    dg = lerp(v[:-1, :-1], v[1:, 1:], X[:-1, :-1], Y[:-1, :-1], X[1:, 1:], Y[1:, 1:],
              pos[:-1, :-1] != pos[1:, 1:])
    return np.concatenate([hz, vt, dg]), pos


def _triangle_links(pos: np.ndarray):
    """Directed links exit-crossing -> entry-crossing, one per mixed triangle."""
    ny, nx = pos.shape
    n_h, n_v, _ = _edge_layout(nx, ny)
    jj, ii = np.meshgrid(np.arange(ny - 1), np.arange(nx - 1), indexing="ij")
    h_id = lambda j, i: j * (nx - 1) + i
    v_id = lambda j, i: n_h + j * nx + i
    d_id = lambda j, i: n_h + n_v + j * (nx - 1) + i

    s00 = pos[:-1, :-1]
    s10 = pos[:-1, 1:]
    s11 = pos[1:, 1:]
    s01 = pos[1:, :-1]
    tris = [
        ((s00, s10, s11), (h_id(jj, ii), v_id(jj, ii + 1), d_id(jj, ii))),
        ((s00, s11, s01), (d_id(jj, ii), h_id(jj + 1, ii), v_id(jj, ii))),
    ]
    src, dst = [], []
    for signs, edges in tris:
        s = np.stack([x.ravel() for x in signs])
        e = np.stack([x.ravel() for x in edges])
        s_next = np.roll(s, -1, axis=0)
        exit_ = s & ~s_next
        entry = ~s & s_next
        mixed = exit_.any(axis=0)
        cols = np.nonzero(mixed)[0]
        src.append(e[np.argmax(exit_[:, cols], axis=0), cols])
        dst.append(e[np.argmax(entry[:, cols], axis=0), cols])
    return np.concatenate(src), np.concatenate(dst)


def _border_param(p: np.ndarray, spec: GridSpec) -> float:
    """Counter-clockwise arc-length position of a border point, from the lower-left corner."""
    xmin, xmax, ymin, ymax = spec.bounds
    w, hgt = xmax - xmin, ymax - ymin
    x, y = p
    tol = 1e-9 * max(w, hgt)
    if abs(y - ymin) <= tol:
        return x - xmin
    if abs(x - xmax) <= tol:
        return w + (y - ymin)
    if abs(y - ymax) <= tol:
        return w + hgt + (xmax - x)
    return 2 * w + hgt + (ymax - y)


def _close_chains(chains: list[list[int]], pts: np.ndarray, spec: GridSpec):
    """Join open chains into loops by walking counter-clockwise along the border."""
    xmin, xmax, ymin, ymax = spec.bounds
    w, hgt = xmax - xmin, ymax - ymin
    perim = 2 * (w + hgt)
    corners = [(0.0, (xmin, ymin)), (w, (xmax, ymin)), (w + hgt, (xmax, ymax)),
               (2 * w + hgt, (xmin, ymax))]
    starts = [_border_param(pts[c[0]], spec) for c in chains]
    ends = [_border_param(pts[c[-1]], spec) for c in chains]
    used = [False] * len(chains)
    loops = []
    for first in range(len(chains)):
        if used[first]:
            continue
        loop: list = []
        k = first
        while not used[k]:
            used[k] = True
            loop.extend(chains[k])
            pe = ends[k]
            gaps = [((starts[m] - pe) % perim, m) for m in range(len(chains))
                    if not used[m] or m == first]
            gap, k = min(gaps)
            for cp, cxy in sorted(corners, key=lambda c: (c[0] - pe) % perim):
                if 0 < (cp - pe) % perim < gap:
                    loop.append(np.array(cxy, dtype=float))
        loops.append(loop)
    return loops


def _outward_border_normal(p: np.ndarray, spec: GridSpec) -> np.ndarray:
    xmin, xmax, ymin, ymax = spec.bounds
    tol = 1e-9 * max(xmax - xmin, ymax - ymin)
    n = np.array([float(abs(p[0] - xmax) <= tol) - float(abs(p[0] - xmin) <= tol),
                  float(abs(p[1] - ymax) <= tol) - float(abs(p[1] - ymin) <= tol)])
    return n / np.linalg.norm(n)


def extract_zero_set(phi) -> Contour:
    """Closed polylines tracing ``{phi = 0}``.

    ``phi`` may be a :class:`ScalarField` or anything with a ``field`` attribute.
    """
    sf: ScalarField = getattr(phi, "field", phi)
    spec = sf.spec
    v = _nudged(sf.values)
    if np.all(v > 0) or np.all(v < 0):
        raise EmptyContour("level set function has uniform sign; the zero set is empty")
    cross, pos = _crossings(v, spec)
    src, dst = _triangle_links(pos)
    n_edges = len(cross)
    nxt = np.full(n_edges, -1)
    prv = np.full(n_edges, -1)
    nxt[src] = dst
    prv[dst] = src

    visited = np.zeros(n_edges, dtype=bool)
    chains = []
    for s in np.sort(src[prv[src] < 0]):
        chain = [int(s)]
        visited[s] = True
        while nxt[chain[-1]] >= 0:
            chain.append(int(nxt[chain[-1]]))
            visited[chain[-1]] = True
        chains.append(chain)
    loops: list[list] = []
    for s in np.sort(src):
        if visited[s]:
            continue
        loop = [int(s)]
        visited[s] = True
        e = nxt[s]
        while e != s:
            loop.append(int(e))
            visited[e] = True
            e = nxt[e]
        loops.append(loop)
    if chains:
        loops.extend(_close_chains(chains, cross, spec))

    grads = nodal_gradient(sf)
    points, normals, border, offsets = [], [], [], [0]
    for loop in loops:
        lp = np.array([cross[item] if isinstance(item, int) else item for item in loop])
        is_corner = np.array([not isinstance(item, int) for item in loop])
        g = gradient_points(sf, lp, grads)
        gn = np.linalg.norm(g, axis=1)
        nrm = np.zeros_like(lp)
        ok = (gn > 0) & ~is_corner
        nrm[ok] = -g[ok] / gn[ok, None]
        for k in np.nonzero(~ok)[0]:
            if is_corner[k]:
                nrm[k] = _outward_border_normal(lp[k], spec)
            else:
                # flat gradient: fall back to the polyline normal (right of the tangent)
                t = lp[(k + 1) % len(lp)] - lp[k - 1]
                nrm[k] = np.array([t[1], -t[0]]) / np.linalg.norm(t)
        points.append(lp)
        normals.append(nrm)
        border.append(is_corner)
        offsets.append(offsets[-1] + len(lp))
    pts = np.concatenate(points)
    contour = Contour(pts, np.concatenate(normals), np.zeros(len(pts)), np.array(offsets),
                      np.concatenate(border))
    seg = contour.segment_lengths()
    a, b = contour.segments()
    weights = np.zeros(len(pts))
    np.add.at(weights, a, 0.5 * seg)
    np.add.at(weights, b, 0.5 * seg)
    object.__setattr__(contour, "arc_weights", weights)
    return contour


def interpolate_linear(field: ScalarField, points: np.ndarray) -> np.ndarray:
    """Piecewise-linear interpolant on the triangulation used for extraction."""
    spec = field.spec
    f = spec.to_index(np.asarray(points, dtype=float))
    fi = np.clip(f[..., 0], 0.0, spec.nx - 1)
    fj = np.clip(f[..., 1], 0.0, spec.ny - 1)
    i = np.minimum(np.floor(fi).astype(int), spec.nx - 2)
    j = np.minimum(np.floor(fj).astype(int), spec.ny - 2)
    s, t = fi - i, fj - j
    v = field.values
    v00, v10, v01, v11 = v[j, i], v[j, i + 1], v[j + 1, i], v[j + 1, i + 1]
    lower = v00 + s * (v10 - v00) + t * (v11 - v10)
    upper = v00 + t * (v01 - v00) + s * (v11 - v01)
    return np.where(t <= s, lower, upper)


# ---------------------------------------------------------------- quadrature

def line_integral(contour: Contour, f) -> float:
    """Trapezoidal approximation of the boundary integral of per-vertex data."""
    f = np.asarray(f, dtype=float)
    if f.shape != contour.arc_weights.shape:
        raise LengthMismatch(f"got {f.size} values for {len(contour)} contour vertices")
    return float(np.dot(f, contour.arc_weights))


# ---------------------------------------------------------------- closest points

def _point_segment(px, py, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    L2 = dx * dx + dy * dy
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ((px - ax) * dx + (py - ay) * dy) / L2
    t = np.where(L2 > 0, np.clip(t, 0.0, 1.0), 0.0)
    qx = ax + t * dx
    qy = ay + t * dy
    ex = px - qx
    ey = py - qy
    return np.sqrt(ex * ex + ey * ey), t


class NearestPoint(NamedTuple):
    point: np.ndarray
    distance: float
    segment: int          # global segment index (equal to its start vertex index)
    end_vertex: int
    t: float              # barycentric weight of the end vertex

    def interpolate(self, values) -> float:
        values = np.asarray(values, dtype=float)
        return float((1.0 - self.t) * values[self.segment] + self.t * values[self.end_vertex])


def nearest_contour_point(contour: Contour, p) -> NearestPoint:
    """Closest point on the polyline; ties go to the lowest (loop, segment) index."""
    p = np.asarray(p, dtype=float)
    a, b = contour.segments()
    A, B = contour.points[a], contour.points[b]
    dist, t = _point_segment(p[0], p[1], A[:, 0], A[:, 1], B[:, 0], B[:, 1])
    k = int(np.argmin(dist))
    q = A[k] + t[k] * (B[k] - A[k])
    return NearestPoint(q, float(dist[k]), k, int(b[k]), float(t[k]))


@dataclass(frozen=True, eq=False)
class GridProjection:
    """Per-node closest contour point for nodes within ``radius`` of the contour.

    Arrays are ``(ny, nx)``; ``distance`` is ``inf`` and ``segment`` is -1
    outside the radius.
    """

    distance: np.ndarray
    segment: np.ndarray
    t: np.ndarray
    foot: np.ndarray
    radius: float

    @property
    def inside(self) -> np.ndarray:
        return self.segment >= 0

    def interpolate(self, contour: Contour, values) -> np.ndarray:
        """Per-vertex data interpolated at each node's foot point (NaN outside)."""
        values = np.asarray(values, dtype=float)
        out = np.full(self.distance.shape, np.nan)
        m = self.inside
        seg = self.segment[m]
        nxt = contour.successor()[seg]
        out[m] = (1.0 - self.t[m]) * values[seg] + self.t[m] * values[nxt]
        return out


_BATCH_PAIRS = 2_000_000


def project_grid(contour: Contour, spec: GridSpec, radius: float) -> GridProjection:
    """Closest contour point for every node within ``radius``.

    Short segments (all interior ones: they live inside a single cell) are
    processed with a fixed node window per segment; long border-closure
    segments fall back to a bounding-box scan.  The arithmetic is the same as
    :func:`nearest_contour_point`, so results agree exactly.
    """
    h = spec.h
    nx, ny = spec.nx, spec.ny
    a, b = contour.segments()
    A, B = contour.points[a], contour.points[b]
    fa, fb = spec.to_index(A), spec.to_index(B)
    lo = np.floor(np.minimum(fa, fb) + 1e-9).astype(int)
    span = np.maximum(fa, fb) - lo
    short = np.all(span <= 1.0 + 1e-9, axis=1)
    r = int(np.ceil(radius / h)) + 1

    nodes, dists, segs, ts = [], [], [], []

    def collect(ni, nj, k):
        inb = (ni >= 0) & (ni < nx) & (nj >= 0) & (nj < ny)
        ni, nj, k = ni[inb], nj[inb], k[inb]
        px = spec.origin[0] + ni * h
        py = spec.origin[1] + nj * h
        d, t = _point_segment(px, py, A[k, 0], A[k, 1], B[k, 0], B[k, 1])
        keep = d <= radius
        nodes.append(nj[keep] * nx + ni[keep])
        dists.append(d[keep])
        segs.append(k[keep])
        ts.append(t[keep])

    off = np.arange(-r, r + 2)
    oi, oj = np.meshgrid(off, off)
    oi, oj = oi.ravel(), oj.ravel()
    idx_short = np.nonzero(short)[0]
    batch = max(1, _BATCH_PAIRS // oi.size)
    for s in range(0, len(idx_short), batch):
        k = idx_short[s:s + batch]
        ni = (lo[k, 0][:, None] + oi[None, :]).ravel()
        nj = (lo[k, 1][:, None] + oj[None, :]).ravel()
        collect(ni, nj, np.repeat(k, oi.size))
    for k in np.nonzero(~short)[0]:
        i0, j0 = lo[k] - r
        i1, j1 = np.ceil(np.maximum(fa[k], fb[k])).astype(int) + r
        gi, gj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1))
        collect(gi.ravel(), gj.ravel(), np.full(gi.size, k))

    node = np.concatenate(nodes)
    dist = np.concatenate(dists)
    seg = np.concatenate(segs)
    tt = np.concatenate(ts)
    n = nx * ny
    best = np.full(n, np.inf)
    np.minimum.at(best, node, dist)
    tie = dist == best[node]
    best_seg = np.full(n, np.iinfo(np.int64).max)
    np.minimum.at(best_seg, node[tie], seg[tie])
    win = tie & (seg == best_seg[node])
    t_out = np.zeros(n)
    t_out[node[win]] = tt[win]
    best_seg[~np.isfinite(best)] = -1

    segment = best_seg.reshape(ny, nx)
    tgrid = t_out.reshape(ny, nx)
    foot = np.full((ny, nx, 2), np.nan)
    m = segment >= 0
    sk = segment[m]
    foot[m] = A[sk] + tgrid[m][:, None] * (B[sk] - A[sk])
    return GridProjection(best.reshape(ny, nx), segment, tgrid, foot, float(radius))


# ---------------------------------------------------------------- snapshot I/O

def write_contour(contour: Contour, path) -> None:
    blocks = []
    for k in range(contour.n_loops):
        sl = slice(contour.loop_offsets[k], contour.loop_offsets[k + 1])
        rows = np.column_stack([contour.points[sl], contour.normals[sl], contour.arc_weights[sl]])
        blocks.append("\n".join(" ".join(repr(float(x)) for x in row) for row in rows))
    Path(path).write_text("\n\n".join(blocks) + "\n")


def read_contour(path) -> Contour:
    text = Path(path).read_text().strip()
    loops = [b for b in text.split("\n\n") if b.strip()]
    rows, offsets = [], [0]
    for block in loops:
        arr = np.array([[float(x) for x in line.split()] for line in block.strip().splitlines()])
        rows.append(arr)
        offsets.append(offsets[-1] + len(arr))
    data = np.concatenate(rows)
    return Contour(data[:, :2], data[:, 2:4], data[:, 4], np.array(offsets))
