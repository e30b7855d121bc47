"""Planar compact sets at grid resolution.

A :class:`GridSet` is a finite union of closed grid boxes plus finitely many
isolated points. Box ``(n, m)`` at resolution ``eps`` is the half-open square
``(eps*n - eps/2, eps*n + eps/2] x (eps*m - eps/2, eps*m + eps/2]`` for
membership purposes; the represented set uses its closure.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy import ndimage

_EIGHT_WAY = np.ones((3, 3), dtype=int)
_FOUR_WAY = ndimage.generate_binary_structure(2, 1)


class GridBox(NamedTuple):
    n: int
    m: int

    def center(self, eps: float) -> complex:
        return complex(eps * self.n, eps * self.m)

    def bounds(self, eps: float) -> tuple[float, float, float, float]:
        """Closed bounds ``(x0, x1, y0, y1)``."""
        h = eps / 2
        return (eps * self.n - h, eps * self.n + h, eps * self.m - h, eps * self.m + h)


class IsolatedPoint(NamedTuple):
    value: complex
    is_cluster_point: bool = False


def box_index(z: complex, eps: float) -> GridBox:
    """Index of the half-open box containing ``z``."""
    return GridBox(math.ceil(z.real / eps - 0.5), math.ceil(z.imag / eps - 0.5))


def _in_closed_box(z: complex, box: GridBox, eps: float) -> bool:
    x0, x1, y0, y1 = box.bounds(eps)
    return x0 <= z.real <= x1 and y0 <= z.imag <= y1


def _point_key(p: IsolatedPoint) -> tuple[float, float]:
    return (p.value.real, p.value.imag)


@dataclass(frozen=True)
class GridSet:
    resolution: float
    boxes: frozenset = field(default_factory=frozenset)
    isolated_points: tuple = ()

    def __post_init__(self) -> None:
        if not self.resolution > 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        boxes = frozenset(GridBox(int(b[0]), int(b[1])) for b in self.boxes)
        pts = []
        for p in self.isolated_points:
            if not isinstance(p, IsolatedPoint):
                p = IsolatedPoint(complex(p)) if not isinstance(p, tuple) else IsolatedPoint(complex(p[0]), bool(p[1]))
            pts.append(IsolatedPoint(complex(p.value), bool(p.is_cluster_point)))
        pts.sort(key=_point_key)
        values = [p.value for p in pts]
        if len(set(values)) != len(values):
            raise ValueError("isolated points must be pairwise distinct")
        for p in pts:
            if not (math.isfinite(p.value.real) and math.isfinite(p.value.imag)):
                raise ValueError("isolated points must be finite")
            b = box_index(p.value, self.resolution)
            near = (GridBox(b.n + i, b.m + j) for i in (-1, 0, 1) for j in (-1, 0, 1))
            if any(q in boxes and _in_closed_box(p.value, q, self.resolution) for q in near):
                raise ValueError(f"isolated point {p.value} lies inside a box")
        object.__setattr__(self, "boxes", boxes)
        object.__setattr__(self, "isolated_points", tuple(pts))

    @property
    def is_empty(self) -> bool:
        return not self.boxes and not self.isolated_points

    def sorted_boxes(self) -> list[GridBox]:
        return sorted(self.boxes)

    def contains_point(self, z: complex) -> bool:
        """Membership of ``z`` in the represented (closed) set."""
        b = box_index(z, self.resolution)
        for i in (-1, 0, 1):
            for j in (-1, 0, 1):
                q = GridBox(b.n + i, b.m + j)
                if q in self.boxes and _in_closed_box(z, q, self.resolution):
                    return True
        return any(p.value == z for p in self.isolated_points)

    def contains(self, other: "GridSet") -> bool:
        """Represented-set inclusion ``other`` subset of ``self`` (same resolution)."""
        _check_same_resolution(self, other)
        if not other.boxes <= self.boxes:
            return False
        return all(self.contains_point(p.value) for p in other.isolated_points)

    def union(self, other: "GridSet") -> "GridSet":
        _check_same_resolution(self, other)
        boxes = self.boxes | other.boxes
        merged: dict[complex, bool] = {}
        for p in self.isolated_points + other.isolated_points:
            merged[p.value] = merged.get(p.value, False) or p.is_cluster_point
        probe = GridSet(self.resolution, boxes)
        pts = [IsolatedPoint(v, c) for v, c in merged.items() if not probe.contains_point(v)]
        return GridSet(self.resolution, boxes, tuple(pts))

    @cached_property
    def _rects(self) -> np.ndarray:
        """Closed box bounds as an ``(k, 4)`` array of ``x0, x1, y0, y1``."""
        if not self.boxes:
            return np.empty((0, 4))
        return np.array([b.bounds(self.resolution) for b in self.sorted_boxes()])

    @cached_property
    def _points(self) -> np.ndarray:
        return np.array([p.value for p in self.isolated_points], dtype=complex)

    def atoms(self) -> list[complex]:
        """Box centres then isolated point values, in canonical order."""
        return [b.center(self.resolution) for b in self.sorted_boxes()] + [p.value for p in self.isolated_points]

    def distance_to(self, z) -> np.ndarray:
        """Exact Euclidean distance from each point of ``z`` to the represented set."""
        if self.is_empty:
            raise ValueError("empty spectrum")
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.full(z.shape, np.inf)
        rects = self._rects
        x, y = z.real.ravel(), z.imag.ravel()
        flat = out.ravel()
        chunk = max(1, 2_000_000 // max(1, len(rects) + len(self._points)))
        for s in range(0, len(x), chunk):
            xs, ys = x[s : s + chunk, None], y[s : s + chunk, None]
            best = np.full(len(xs), np.inf)
            if len(rects):
                dx = np.maximum(np.maximum(rects[:, 0] - xs, xs - rects[:, 1]), 0.0)
                dy = np.maximum(np.maximum(rects[:, 2] - ys, ys - rects[:, 3]), 0.0)
                best = np.minimum(best, np.hypot(dx, dy).min(axis=1))
            if len(self._points):
                best = np.minimum(best, np.abs((xs + 1j * ys) - self._points).min(axis=1))
            flat[s : s + chunk] = best
        return flat.reshape(z.shape)


def _check_same_resolution(a: GridSet, b: GridSet) -> None:
    if a.resolution != b.resolution:
        raise ValueError(f"resolution mismatch: {a.resolution} vs {b.resolution}")


def rasterize(points: Iterable[complex], resolution: float, dense: bool = True) -> GridSet:
    """Grid set of the boxes met by ``points``.

    With ``dense=False`` the (deduplicated) points are kept as isolated points
    instead of being widened to boxes.
    """
    if not resolution > 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    pts = list(dict.fromkeys(complex(p) for p in points))
    if not pts:
        raise ValueError("empty spectrum")
    if dense:
        return GridSet(resolution, frozenset(box_index(p, resolution) for p in pts))
    return GridSet(resolution, frozenset(), tuple(IsolatedPoint(p) for p in pts))


@dataclass(frozen=True)
class Component:
    id: int
    kind: str  # "region" or "singleton"
    boxes: frozenset = frozenset()
    point: IsolatedPoint | None = None

    def as_gridset(self, resolution: float) -> GridSet:
        if self.kind == "region":
            return GridSet(resolution, self.boxes)
        return GridSet(resolution, frozenset(), (self.point,))


def _label_boxes(cells: Iterable[GridBox], structure: np.ndarray) -> list[list[GridBox]]:
    cells = list(cells)
    if not cells:
        return []
    ns = np.array([c.n for c in cells])
    ms = np.array([c.m for c in cells])
    n0, m0 = ns.min(), ms.min()
    grid = np.zeros((ns.max() - n0 + 1, ms.max() - m0 + 1), dtype=bool)
    grid[ns - n0, ms - m0] = True
    labels, count = ndimage.label(grid, structure=structure)
    groups: list[list[GridBox]] = [[] for _ in range(count)]
    for c, lab in zip(cells, labels[ns - n0, ms - m0]):
        groups[lab - 1].append(c)
    return [sorted(g) for g in groups]


def connected_components(g: GridSet) -> list[Component]:
    """8-way region components, then one singleton per isolated point."""
    regions = sorted(_label_boxes(g.boxes, _EIGHT_WAY), key=lambda grp: grp[0])
    comps = [Component(i, "region", frozenset(grp)) for i, grp in enumerate(regions)]
    for p in g.isolated_points:
        comps.append(Component(len(comps), "singleton", point=p))
    return comps


@dataclass(frozen=True)
class Hole:
    id: int
    boxes: frozenset
    representative: complex


@dataclass(frozen=True)
class ComplementComponents:
    holes: tuple
    unbounded: frozenset
    frame: tuple  # (n0, n1, m0, m1) inclusive box-index bounds

    def locate(self, box: GridBox) -> int | None:
        """Hole id containing ``box``; ``None`` for the unbounded component."""
        for h in self.holes:
            if box in h.boxes:
                return h.id
        if box in self.unbounded:
            return None
        n0, n1, m0, m1 = self.frame
        if not (n0 <= box.n <= n1 and m0 <= box.m <= m1):
            return None
        raise KeyError(f"box {tuple(box)} is not in the complement")


def complement_components(g: GridSet, frame_margin: float | None = None, frame: tuple | None = None) -> ComplementComponents:
    """Bounded and unbounded components of the complement, 4-way connected.

    The frame is the bounding box of ``g`` widened by ``frame_margin`` (at
    least one grid cell); ``frame`` forces explicit index bounds instead.
    """
    eps = g.resolution
    margin = 2 * eps if frame_margin is None else frame_margin
    k = max(1, math.ceil(margin / eps - 1e-12))
    if frame is None:
        idx = [(b.n, b.m) for b in g.boxes] + [tuple(box_index(p.value, eps)) for p in g.isolated_points]
        if not idx:
            idx = [(0, 0)]
        ns, ms = zip(*idx)
        frame = (min(ns) - k, max(ns) + k, min(ms) - k, max(ms) + k)
    n0, n1, m0, m1 = frame
    free = np.ones((n1 - n0 + 1, m1 - m0 + 1), dtype=bool)
    for b in g.boxes:
        if n0 <= b.n <= n1 and m0 <= b.m <= m1:
            free[b.n - n0, b.m - m0] = False
    labels, count = ndimage.label(free, structure=_FOUR_WAY)
    edge = set(np.unique(np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]]))) - {0}
    groups: dict[int, list[GridBox]] = {}
    for (i, j) in zip(*np.nonzero(labels)):
        groups.setdefault(int(labels[i, j]), []).append(GridBox(int(i) + n0, int(j) + m0))
    unbounded: set[GridBox] = set()
    bounded = []
    for lab, cells in groups.items():
        if lab in edge:
            unbounded.update(cells)
        else:
            bounded.append(sorted(cells))
    bounded.sort(key=lambda c: c[0])
    holes = tuple(Hole(i, frozenset(c), c[0].center(eps)) for i, c in enumerate(bounded))
    return ComplementComponents(holes, frozenset(unbounded), frame)


# ---------------------------------------------------------------------------
# Exact Hausdorff distance
# ---------------------------------------------------------------------------


def point_hausdorff(a: Sequence[complex], b: Sequence[complex]) -> float:
    """Hausdorff distance between two finite point sets."""
    a = np.asarray(list(a), dtype=complex)
    b = np.asarray(list(b), dtype=complex)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty spectrum")
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


# A primitive is a distance-like function valid on one cell:
#   ("lin", ax, ay, c)  ->  ax*x + ay*y + c
#   ("cone", px, py)    ->  |(x, y) - (px, py)|
#   ("zero",)           ->  0


def _site_primitive(site, x0, x1, y0, y1):
    if site[0] == "pt":
        return ("cone", site[1], site[2])
    _, a0, a1, b0, b1 = site
    # the cell lies in one of the nine zones of the site box
    if x0 >= a1:
        xr = 1
    elif x1 <= a0:
        xr = -1
    else:
        xr = 0
    if y0 >= b1:
        yr = 1
    elif y1 <= b0:
        yr = -1
    else:
        yr = 0
    if xr == 0 and yr == 0:
        return ("zero",)
    if yr == 0:
        return ("lin", 1.0, 0.0, -a1) if xr == 1 else ("lin", -1.0, 0.0, a0)
    if xr == 0:
        return ("lin", 0.0, 1.0, -b1) if yr == 1 else ("lin", 0.0, -1.0, b0)
    return ("cone", a1 if xr == 1 else a0, b1 if yr == 1 else b0)


def _prim_eval(prim, x, y):
    if prim[0] == "lin":
        return prim[1] * x + prim[2] * y + prim[3]
    if prim[0] == "cone":
        return np.hypot(x - prim[1], y - prim[2])
    return np.zeros_like(np.asarray(x, dtype=float))


def _prim_range(prim, x0, x1, y0, y1):
    """Exact (min, max) of a primitive over a rectangle."""
    cx = np.array([x0, x1, x0, x1])
    cy = np.array([y0, y0, y1, y1])
    vals = _prim_eval(prim, cx, cy)
    hi = float(vals.max())
    if prim[0] == "cone":
        dx = max(x0 - prim[1], prim[1] - x1, 0.0)
        dy = max(y0 - prim[2], prim[2] - y1, 0.0)
        return math.hypot(dx, dy), hi
    return float(vals.min()), hi


def _site_range(site, x0, x1, y0, y1):
    cx = np.array([x0, x1, x0, x1])
    cy = np.array([y0, y0, y1, y1])
    if site[0] == "pt":
        d = np.hypot(cx - site[1], cy - site[2])
        lo = math.hypot(max(x0 - site[1], site[1] - x1, 0.0), max(y0 - site[2], site[2] - y1, 0.0))
        return lo, float(d.max())
    _, a0, a1, b0, b1 = site
    dx = np.maximum(np.maximum(a0 - cx, cx - a1), 0.0)
    dy = np.maximum(np.maximum(b0 - cy, cy - b1), 0.0)
    lo = math.hypot(max(a0 - x1, x0 - a1, 0.0), max(b0 - y1, y0 - b1, 0.0))
    return lo, float(np.hypot(dx, dy).max())


def _squared_on_segment(prim, p0, d):
    """Coefficients (c0, c1, c2) of prim(p0 + t d)**2 as a polynomial in t."""
    if prim[0] == "lin":
        a = prim[1] * p0[0] + prim[2] * p0[1] + prim[3]
        b = prim[1] * d[0] + prim[2] * d[1]
        return np.array([a * a, 2 * a * b, b * b])
    ux, uy = p0[0] - prim[1], p0[1] - prim[2]
    return np.array([ux * ux + uy * uy, 2 * (ux * d[0] + uy * d[1]), d[0] ** 2 + d[1] ** 2])


def _roots01(c):
    c0, c1, c2 = c
    scale = max(abs(c0), abs(c1), abs(c2), 1e-300)
    if abs(c2) <= 1e-13 * scale:
        if abs(c1) <= 1e-13 * scale:
            return []
        return [-c0 / c1]
    disc = c1 * c1 - 4 * c2 * c0
    if disc < -1e-12 * scale * scale:
        return []
    s = math.sqrt(max(disc, 0.0))
    return [(-c1 - s) / (2 * c2), (-c1 + s) / (2 * c2)]


def _triple_points(prims):
    """Points equidistant (in primitive value) from three primitives."""
    lin_rows = []
    cones = [p for p in prims if p[0] == "cone"]
    for p in prims:
        if p[0] == "lin":
            # ax x + ay y - t = -c
            lin_rows.append(([p[1], p[2], -1.0], -p[3]))
    c0 = cones[0] if cones else None
    for p in cones[1:]:
        # |z-p|^2 - |z-c0|^2 = 0  ->  -2(p-c0).z + |p|^2 - |c0|^2 = 0
        lin_rows.append(([-2 * (p[1] - c0[1]), -2 * (p[2] - c0[2]), 0.0], -(p[1] ** 2 + p[2] ** 2 - c0[1] ** 2 - c0[2] ** 2)))
    A = np.array([r[0] for r in lin_rows])
    b = np.array([r[1] for r in lin_rows])
    if c0 is None:
        if abs(np.linalg.det(A)) < 1e-12:
            return []
        sol = np.linalg.solve(A, b)
        return [(sol[0], sol[1], sol[2])]
    # two linear rows in (x, y, t) plus the cone equation
    if np.linalg.matrix_rank(A, tol=1e-12) < 2:
        return []
    part, *_ = np.linalg.lstsq(A, b, rcond=None)
    null = np.linalg.svd(A)[2][-1]
    # (x - px)^2 + (y - py)^2 - t^2 = 0 along part + s * null
    qx, qy, qt = part[0] - c0[1], part[1] - c0[2], part[2]
    nx, ny, nt = null
    coeffs = (qx * qx + qy * qy - qt * qt, 2 * (qx * nx + qy * ny - qt * nt), nx * nx + ny * ny - nt * nt)
    out = []
    for s in _roots01(coeffs):
        out.append((part[0] + s * nx, part[1] + s * ny, part[2] + s * nt))
    return out


def _cell_max(prims, x0, x1, y0, y1, floor):
    """Exact max over the rectangle of the minimum of ``prims``."""
    ranges = [_prim_range(p, x0, x1, y0, y1) for p in prims]
    upper = min(r[1] for r in ranges)
    if upper <= floor:
        return -math.inf
    prims = [p for p, r in zip(prims, ranges) if r[0] <= upper]
    cand_x = [x0, x1, x0, x1]
    cand_y = [y0, y0, y1, y1]
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    squared = None
    for k in range(4):
        p0 = corners[k]
        p1 = corners[(k + 1) % 4]
        d = (p1[0] - p0[0], p1[1] - p0[1])
        squared = [_squared_on_segment(p, p0, d) for p in prims]
        for i, j in itertools.combinations(range(len(prims)), 2):
            for t in _roots01(squared[i] - squared[j]):
                if -1e-9 <= t <= 1 + 1e-9:
                    t = min(max(t, 0.0), 1.0)
                    cand_x.append(p0[0] + t * d[0])
                    cand_y.append(p0[1] + t * d[1])
    if len(prims) >= 3:
        for trio in itertools.combinations(prims, 3):
            for (x, y, t) in _triple_points(trio):
                if t >= -1e-12 and x0 - 1e-9 <= x <= x1 + 1e-9 and y0 - 1e-9 <= y <= y1 + 1e-9:
                    cand_x.append(min(max(x, x0), x1))
                    cand_y.append(min(max(y, y0), y1))
    cx = np.array(cand_x)
    cy = np.array(cand_y)
    vals = np.min([_prim_eval(p, cx, cy) for p in prims], axis=0)
    return float(vals.max())


def _sites(g: GridSet) -> list[tuple]:
    sites = [("box", *r) for r in g._rects[:, [0, 1, 2, 3]].tolist()]
    sites += [("pt", p.value.real, p.value.imag) for p in g.isolated_points]
    return sites


def _box_max_distance(rect, sites, floor):
    x0, x1, y0, y1 = rect
    ranges = [_site_range(s, x0, x1, y0, y1) for s in sites]
    upper = min(r[1] for r in ranges)
    if upper <= floor:
        return -math.inf
    live = [s for s, r in zip(sites, ranges) if r[0] <= upper]
    xs = {x0, x1}
    ys = {y0, y1}
    for s in live:
        if s[0] == "box":
            xs.update(v for v in (s[1], s[2]) if x0 < v < x1)
            ys.update(v for v in (s[3], s[4]) if y0 < v < y1)
    xs = sorted(xs)
    ys = sorted(ys)
    best = -math.inf
    for xa, xb in zip(xs, xs[1:]):
        for ya, yb in zip(ys, ys[1:]):
            prims = [_site_primitive(s, xa, xb, ya, yb) for s in live]
            if any(p[0] == "zero" for p in prims):
                continue
            best = max(best, _cell_max(prims, xa, xb, ya, yb, max(floor, best)))
    return best


def directed_hausdorff(x: GridSet, y: GridSet) -> float:
    """``sup_{a in X} dist(a, Y)`` over the represented sets, exactly."""
    if x.is_empty or y.is_empty:
        raise ValueError("empty spectrum")
    best = 0.0
    if x.isolated_points:
        best = float(y.distance_to(x._points).max())
    rects = x._rects
    if not len(rects):
        return best
    corners = np.concatenate(
        [rects[:, 0] + 1j * rects[:, 2], rects[:, 1] + 1j * rects[:, 2], rects[:, 0] + 1j * rects[:, 3], rects[:, 1] + 1j * rects[:, 3]]
    )
    best = max(best, float(y.distance_to(corners).max()))
    sites = _sites(y)
    # coarse upper bound per box: distance of its centre plus half diagonal
    centres = (rects[:, 0] + rects[:, 1]) / 2 + 1j * (rects[:, 2] + rects[:, 3]) / 2
    half_diag = np.hypot(rects[:, 1] - rects[:, 0], rects[:, 3] - rects[:, 2]) / 2
    upper = y.distance_to(centres) + half_diag
    for i in np.argsort(-upper):
        if upper[i] <= best:
            break
        best = max(best, _box_max_distance(tuple(rects[i]), sites, best))
    return best


def hausdorff_distance(x: GridSet, y: GridSet) -> float:
    """Hausdorff distance between the represented sets."""
    if x.is_empty or y.is_empty:
        raise ValueError("empty spectrum")
    return max(directed_hausdorff(x, y), directed_hausdorff(y, x))


def min_distance(x: GridSet, y: GridSet) -> float:
    """``inf |a - b|`` over the two represented sets."""
    if x.is_empty or y.is_empty:
        raise ValueError("empty spectrum")
    best = math.inf
    if y.isolated_points:
        best = float(x.distance_to(y._points).min())
    for b in y.sorted_boxes():
        x0, x1, y0, y1 = b.bounds(y.resolution)
        for s in _sites(x):
            best = min(best, _site_range(s, x0, x1, y0, y1)[0])
            if best == 0.0:
                return 0.0
    return best
