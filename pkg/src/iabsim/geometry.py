"""Spatial primitives: disk regions, Poisson point processes, wall blockage
fields, segment intersection / line-of-sight tests and deterministic layouts.

All lengths are in meters; densities are per square kilometer. Every sampling
routine takes an explicit numpy Generator, so results are reproducible and
safe to parallelize with independent streams.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def _njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap

M2_PER_KM2 = 1e6

# Ring capacity bound for hexagonal layouts: rings 0..50 hold 7651 points.
MAX_HEX_RING = 50


@dataclass(frozen=True)
class Point2D:
    """A planar position in meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates ({self.x}, {self.y})")

    def distance_to(self, other: "Point2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class WallSegment:
    """A wall blocker: a segment given by midpoint, length and orientation."""

    midpoint: Point2D
    length: float
    orientation: float  # radians in [0, 2*pi)

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError(f"wall length must be positive, got {self.length}")
        if not 0.0 <= self.orientation < 2 * math.pi:
            raise ValueError(f"orientation must lie in [0, 2*pi), got {self.orientation}")

    @property
    def endpoints(self) -> tuple[Point2D, Point2D]:
        dx = 0.5 * self.length * math.cos(self.orientation)
        dy = 0.5 * self.length * math.sin(self.orientation)
        return (
            Point2D(self.midpoint.x - dx, self.midpoint.y - dy),
            Point2D(self.midpoint.x + dx, self.midpoint.y + dy),
        )


@dataclass(frozen=True)
class DiskRegion:
    """A closed disk; doubles as the network area and as a forbidden zone."""

    center: Point2D
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"disk radius must be positive, got {self.radius}")

    @property
    def area_km2(self) -> float:
        return math.pi * self.radius**2 / M2_PER_KM2

    def contains(self, p: Point2D, tol: float = 1e-9) -> bool:
        return p.distance_to(self.center) <= self.radius + tol

    def strictly_contains(self, p: Point2D) -> bool:
        return p.distance_to(self.center) < self.radius


@dataclass(frozen=True)
class BlockageField:
    """A set of wall segments with the density that generated them."""

    walls: list[WallSegment] = field(default_factory=list)
    density: float = 0.0  # walls per km^2

    def __post_init__(self):
        if self.density < 0:
            raise ValueError("blockage density must be non-negative")

    def __len__(self) -> int:
        return len(self.walls)

    @cached_property
    def endpoint_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Both wall endpoints as (n, 2) arrays, for vectorized tests."""
        n = len(self.walls)
        if n == 0:
            empty = np.empty((0, 2))
            return empty, empty
        mid = np.array([(w.midpoint.x, w.midpoint.y) for w in self.walls])
        length = np.array([w.length for w in self.walls])
        theta = np.array([w.orientation for w in self.walls])
        half = 0.5 * length[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
        return mid - half, mid + half


def points_to_array(points) -> np.ndarray:
    """Stack Point2D instances into an (n, 2) float array."""
    if len(points) == 0:
        return np.empty((0, 2))
    return np.array([(p.x, p.y) for p in points], dtype=float)


def array_to_points(xy: np.ndarray) -> list[Point2D]:
    return [Point2D(float(x), float(y)) for x, y in np.asarray(xy).reshape(-1, 2)]


# ---------------------------------------------------------------------------
# Random point processes
# ---------------------------------------------------------------------------

def uniform_in_disk(n: int, region: DiskRegion, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. uniform points on the disk, as an (n, 2) array."""
    r = region.radius * np.sqrt(rng.uniform(size=n))
    theta = rng.uniform(0.0, 2 * math.pi, size=n)
    return np.column_stack(
        [region.center.x + r * np.cos(theta), region.center.y + r * np.sin(theta)]
    )


def sample_fhppp(region: DiskRegion, density: float, rng: np.random.Generator) -> list[Point2D]:
    """Draw a finite homogeneous Poisson point process on a disk.

    The point count is Poisson(density * area) and positions are i.i.d.
    uniform on the region. density is per km^2; density 0 yields an empty
    list.
    """
    if density < 0:
        raise ValueError(f"density must be non-negative, got {density}")
    n = int(rng.poisson(density * region.area_km2))
    return array_to_points(uniform_in_disk(n, region, rng))


def generate_blockages(
    region: DiskRegion,
    density: float,
    wall_length: float,
    rng: np.random.Generator,
) -> BlockageField:
    """Drop random walls: Poisson midpoints, i.i.d. uniform orientations."""
    if wall_length <= 0:
        raise ValueError(f"wall_length must be positive, got {wall_length}")
    midpoints = sample_fhppp(region, density, rng)
    orientations = rng.uniform(0.0, 2 * math.pi, size=len(midpoints))
    walls = [
        WallSegment(mid, wall_length, float(theta))
        for mid, theta in zip(midpoints, orientations)
    ]
    return BlockageField(walls=walls, density=density)


# ---------------------------------------------------------------------------
# Segment intersection and line of sight
# ---------------------------------------------------------------------------

def _orient(ax, ay, bx, by, cx, cy) -> float:
    """Twice the signed area of triangle abc."""
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _within(lo, hi, v) -> bool:
    return min(lo, hi) <= v <= max(lo, hi)


def segments_intersect(a: tuple, b: tuple) -> bool:
    """True iff the closed segments a and b share at least one point.

    Each argument is an endpoint pair ((x1, y1), (x2, y2)). Collinear
    overlap counts as intersecting.
    """
    (p1x, p1y), (p2x, p2y) = (a[0][0], a[0][1]), (a[1][0], a[1][1])
    (q1x, q1y), (q2x, q2y) = (b[0][0], b[0][1]), (b[1][0], b[1][1])
    d1 = _orient(q1x, q1y, q2x, q2y, p1x, p1y)
    d2 = _orient(q1x, q1y, q2x, q2y, p2x, p2y)
    d3 = _orient(p1x, p1y, p2x, p2y, q1x, q1y)
    d4 = _orient(p1x, p1y, p2x, p2y, q2x, q2y)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    # Touching or collinear cases: an endpoint of one segment lying on the other.
    if d1 == 0 and _within(q1x, q2x, p1x) and _within(q1y, q2y, p1y):
        return True
    if d2 == 0 and _within(q1x, q2x, p2x) and _within(q1y, q2y, p2y):
        return True
    if d3 == 0 and _within(p1x, p2x, q1x) and _within(p1y, p2y, q1y):
        return True
    if d4 == 0 and _within(p1x, p2x, q2x) and _within(p1y, p2y, q2y):
        return True
    return False


def blocked_mask(
    a_xy: np.ndarray,
    b_xy: np.ndarray,
    wall_p: np.ndarray,
    wall_q: np.ndarray,
    chunk: int = 4096,
) -> np.ndarray:
    """Which of the links a_xy[i] -> b_xy[i] cross any wall.

    Links are treated as open segments (a wall meeting a link exactly at one
    of the link's endpoints does not block); walls are closed. Inputs are
    (L, 2) link endpoint arrays and (W, 2) wall endpoint arrays; the result
    is a boolean (L,) array, True where the link is blocked.
    """
    a_xy = np.asarray(a_xy, float)
    b_xy = np.asarray(b_xy, float)
    n_links = a_xy.shape[0]
    if n_links == 0 or wall_p.shape[0] == 0:
        return np.zeros(n_links, dtype=bool)
    s = wall_q - wall_p  # (W, 2)
    out = np.empty(n_links, dtype=bool)
    for lo in range(0, n_links, chunk):
        hi = min(lo + chunk, n_links)
        out[lo:hi] = _blocked_chunk(a_xy[lo:hi], b_xy[lo:hi], wall_p, s)
    return out


def _blocked_chunk(a, b, wp, s):
    r = b - a  # (L, 2)
    qp0 = wp[None, :, 0] - a[:, None, 0]  # (L, W)
    qp1 = wp[None, :, 1] - a[:, None, 1]
    rxs = r[:, None, 0] * s[None, :, 1] - r[:, None, 1] * s[None, :, 0]
    qpxr = qp0 * r[:, None, 1] - qp1 * r[:, None, 0]
    qpxs = qp0 * s[None, :, 1] - qp1 * s[None, :, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = qpxs / rxs
        u = qpxr / rxs
    crossing = (rxs != 0) & (t > 0) & (t < 1) & (u >= 0) & (u <= 1)
    hit = crossing.any(axis=1)
    collinear = (rxs == 0) & (qpxr == 0)
    if collinear.any():
        rr = (r * r).sum(axis=1)  # (L,)
        with np.errstate(divide="ignore", invalid="ignore"):
            t0 = (qp0 * r[:, None, 0] + qp1 * r[:, None, 1]) / rr[:, None]
            ds = (s[None, :, 0] * r[:, None, 0] + s[None, :, 1] * r[:, None, 1]) / rr[:, None]
        t1 = t0 + ds
        lo = np.maximum(np.minimum(t0, t1), 0.0)
        hi = np.minimum(np.maximum(t0, t1), 1.0)
        # Overlap must reach into the open interior of the link.
        hit |= (collinear & (hi >= lo) & (hi > 0) & (lo < 1)).any(axis=1)
    return hit


def is_los(tx: Point2D, rx: Point2D, blockage: BlockageField) -> bool:
    """True iff the open segment tx-rx crosses no wall in the field."""
    if tx == rx:
        raise ValueError("tx and rx coincide; line of sight is undefined")
    wall_p, wall_q = blockage.endpoint_arrays
    a = np.array([[tx.x, tx.y]])
    b = np.array([[rx.x, rx.y]])
    return not bool(blocked_mask(a, b, wall_p, wall_q)[0])


# ---------------------------------------------------------------------------
# Grid-accelerated blocking queries
# ---------------------------------------------------------------------------

# Walls are registered with every grid cell their slightly inflated bounding
# box overlaps, so a crossing attributed to a neighboring cell by float
# roundoff still finds its wall.
_GRID_PAD = 1e-6


@_njit(cache=True)
def _seg_blocks_scalar(ax, ay, bx, by, px, py, qx, qy):
    """Same semantics as the vectorized kernel: open link, closed wall."""
    rx = bx - ax
    ry = by - ay
    sx = qx - px
    sy = qy - py
    rxs = rx * sy - ry * sx
    qpx = px - ax
    qpy = py - ay
    qpxr = qpx * ry - qpy * rx
    if rxs != 0.0:
        t = (qpx * sy - qpy * sx) / rxs
        u = qpxr / rxs
        return 0.0 < t < 1.0 and 0.0 <= u <= 1.0
    if qpxr != 0.0:
        return False
    rr = rx * rx + ry * ry
    if rr == 0.0:
        return False
    t0 = (qpx * rx + qpy * ry) / rr
    t1 = t0 + (sx * rx + sy * ry) / rr
    lo = min(t0, t1)
    hi = max(t0, t1)
    if lo < 0.0:
        lo = 0.0
    if hi > 1.0:
        hi = 1.0
    return hi >= lo and hi > 0.0 and lo < 1.0


@_njit(cache=True)
def _grid_build(wall_p, wall_q, x0, y0, inv_cell, nx, ny):
    n = wall_p.shape[0]
    ncell = nx * ny
    start = np.zeros(ncell + 1, np.int64)
    ix_lo = np.empty(n, np.int64)
    ix_hi = np.empty(n, np.int64)
    iy_lo = np.empty(n, np.int64)
    iy_hi = np.empty(n, np.int64)
    for w in range(n):
        lox = min(wall_p[w, 0], wall_q[w, 0]) - _GRID_PAD
        hix = max(wall_p[w, 0], wall_q[w, 0]) + _GRID_PAD
        loy = min(wall_p[w, 1], wall_q[w, 1]) - _GRID_PAD
        hiy = max(wall_p[w, 1], wall_q[w, 1]) + _GRID_PAD
        ix_lo[w] = min(max(int(math.floor((lox - x0) * inv_cell)), 0), nx - 1)
        ix_hi[w] = min(max(int(math.floor((hix - x0) * inv_cell)), 0), nx - 1)
        iy_lo[w] = min(max(int(math.floor((loy - y0) * inv_cell)), 0), ny - 1)
        iy_hi[w] = min(max(int(math.floor((hiy - y0) * inv_cell)), 0), ny - 1)
        for iy in range(iy_lo[w], iy_hi[w] + 1):
            for ix in range(ix_lo[w], ix_hi[w] + 1):
                start[iy * nx + ix + 1] += 1
    for i in range(ncell):
        start[i + 1] += start[i]
    items = np.empty(start[ncell], np.int64)
    fill = start[:ncell].copy()
    for w in range(n):
        for iy in range(iy_lo[w], iy_hi[w] + 1):
            for ix in range(ix_lo[w], ix_hi[w] + 1):
                c = iy * nx + ix
                items[fill[c]] = w
                fill[c] += 1
    return start, items


@_njit(cache=True)
def _grid_link_blocked(
    ax, ay, bx, by, x0, y0, cell, inv_cell, nx, ny, start, items, wall_p, wall_q
):
    ix = min(max(int(math.floor((ax - x0) * inv_cell)), 0), nx - 1)
    iy = min(max(int(math.floor((ay - y0) * inv_cell)), 0), ny - 1)
    ixe = min(max(int(math.floor((bx - x0) * inv_cell)), 0), nx - 1)
    iye = min(max(int(math.floor((by - y0) * inv_cell)), 0), ny - 1)
    dx = bx - ax
    dy = by - ay
    step_x = 0
    t_max_x = math.inf
    t_delta_x = math.inf
    if dx > 0.0:
        step_x = 1
        t_max_x = (x0 + (ix + 1) * cell - ax) / dx
        t_delta_x = cell / dx
    elif dx < 0.0:
        step_x = -1
        t_max_x = (x0 + ix * cell - ax) / dx
        t_delta_x = -cell / dx
    step_y = 0
    t_max_y = math.inf
    t_delta_y = math.inf
    if dy > 0.0:
        step_y = 1
        t_max_y = (y0 + (iy + 1) * cell - ay) / dy
        t_delta_y = cell / dy
    elif dy < 0.0:
        step_y = -1
        t_max_y = (y0 + iy * cell - ay) / dy
        t_delta_y = -cell / dy
    max_steps = nx + ny + 4
    for _ in range(max_steps):
        c = iy * nx + ix
        for k in range(start[c], start[c + 1]):
            w = items[k]
            if _seg_blocks_scalar(
                ax, ay, bx, by, wall_p[w, 0], wall_p[w, 1], wall_q[w, 0], wall_q[w, 1]
            ):
                return True
        if ix == ixe and iy == iye:
            return False
        if t_max_x < t_max_y:
            t_max_x += t_delta_x
            ix += step_x
        else:
            t_max_y += t_delta_y
            iy += step_y
        if ix < 0 or ix >= nx or iy < 0 or iy >= ny:
            return False
    # Traversal overran (degenerate geometry): brute-force this link.
    for w in range(wall_p.shape[0]):
        if _seg_blocks_scalar(
            ax, ay, bx, by, wall_p[w, 0], wall_p[w, 1], wall_q[w, 0], wall_q[w, 1]
        ):
            return True
    return False


@_njit(cache=True)
def _grid_query(a_xy, b_xy, x0, y0, cell, inv_cell, nx, ny, start, items, wall_p, wall_q):
    n = a_xy.shape[0]
    out = np.empty(n, np.bool_)
    for i in range(n):
        out[i] = _grid_link_blocked(
            a_xy[i, 0],
            a_xy[i, 1],
            b_xy[i, 0],
            b_xy[i, 1],
            x0,
            y0,
            cell,
            inv_cell,
            nx,
            ny,
            start,
            items,
            wall_p,
            wall_q,
        )
    return out


class WallIndex:
    """Uniform-grid spatial index over walls for batched blocking queries.

    Graded drop-in for blocked_mask: results are identical, queries touch
    only the walls near each link's traversed cells. Built per blockage
    field; bounds must cover every query endpoint, otherwise the query
    falls back to the full scan. Without numba the fallback is always used.
    """

    def __init__(
        self,
        wall_p: np.ndarray,
        wall_q: np.ndarray,
        bounds: tuple[float, float, float, float],
        cell_size: float = 25.0,
    ):
        if cell_size <= 0:
            raise ValueError("cell_size must be positive")
        self.wall_p = np.ascontiguousarray(wall_p, float)
        self.wall_q = np.ascontiguousarray(wall_q, float)
        x0, y0, x1, y1 = bounds
        if not (x1 > x0 and y1 > y0):
            raise ValueError("bounds must span a positive area")
        pad = cell_size
        self.x0, self.y0 = x0 - pad, y0 - pad
        self.x1, self.y1 = x1 + pad, y1 + pad
        self.cell = float(cell_size)
        self.nx = max(1, int(math.ceil((self.x1 - self.x0) / self.cell)))
        self.ny = max(1, int(math.ceil((self.y1 - self.y0) / self.cell)))
        self.accelerated = HAVE_NUMBA and self.wall_p.shape[0] > 0
        if self.accelerated:
            self._start, self._items = _grid_build(
                self.wall_p, self.wall_q, self.x0, self.y0, 1.0 / self.cell, self.nx, self.ny
            )

    @classmethod
    def for_region(cls, blockage: BlockageField, region: DiskRegion, cell_size: float = 25.0):
        wall_p, wall_q = blockage.endpoint_arrays
        r = region.radius
        margin = max((w.length for w in blockage.walls), default=0.0)
        return cls(
            wall_p,
            wall_q,
            bounds=(
                region.center.x - r - margin,
                region.center.y - r - margin,
                region.center.x + r + margin,
                region.center.y + r + margin,
            ),
            cell_size=cell_size,
        )

    def _in_bounds(self, xy: np.ndarray) -> bool:
        if xy.size == 0:
            return True
        return bool(
            (xy[:, 0] >= self.x0).all()
            and (xy[:, 0] <= self.x1).all()
            and (xy[:, 1] >= self.y0).all()
            and (xy[:, 1] <= self.y1).all()
        )

    def blocked(self, a_xy: np.ndarray, b_xy: np.ndarray) -> np.ndarray:
        a_xy = np.ascontiguousarray(a_xy, float)
        b_xy = np.ascontiguousarray(b_xy, float)
        if (
            not self.accelerated
            or not self._in_bounds(a_xy)
            or not self._in_bounds(b_xy)
        ):
            return blocked_mask(a_xy, b_xy, self.wall_p, self.wall_q)
        return _grid_query(
            a_xy,
            b_xy,
            self.x0,
            self.y0,
            self.cell,
            1.0 / self.cell,
            self.nx,
            self.ny,
            self._start,
            self._items,
            self.wall_p,
            self.wall_q,
        )


# ---------------------------------------------------------------------------
# Deterministic layouts and distances
# ---------------------------------------------------------------------------

def _hex_ring_offsets(k: int) -> list[tuple[float, float]]:
    """Lattice offsets of ring k (unit pitch), counterclockwise from angle 0."""
    if k == 0:
        return [(0.0, 0.0)]
    corners = [
        (k * math.cos(i * math.pi / 3), k * math.sin(i * math.pi / 3)) for i in range(6)
    ]
    offsets = []
    for i in range(6):
        cx, cy = corners[i]
        nx, ny = corners[(i + 1) % 6]
        offsets.append((cx, cy))
        for j in range(1, k):
            f = j / k
            offsets.append((cx + f * (nx - cx), cy + f * (ny - cy)))
    return offsets


def hex_ring_capacity(max_ring: int) -> int:
    """Number of lattice points in rings 0..max_ring."""
    return 1 + 3 * max_ring * (max_ring + 1)


def hexagonal_layout(count: int, region: DiskRegion) -> list[Point2D]:
    """Place count points on a triangular lattice centered on the region.

    Rings are filled outward (1, 6, 12, ... points); the pitch is chosen so
    the outermost used ring touches the region boundary, hence all points
    lie inside the closed disk.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if count > hex_ring_capacity(MAX_HEX_RING):
        raise ValueError(
            f"count {count} exceeds capacity {hex_ring_capacity(MAX_HEX_RING)} "
            f"of {MAX_HEX_RING} lattice rings"
        )
    if count == 1:
        return [region.center]
    # Outermost ring index for this count.
    k_max = 1
    while hex_ring_capacity(k_max) < count:
        k_max += 1
    pitch = region.radius / k_max
    cx, cy = region.center.x, region.center.y
    points: list[Point2D] = []
    for k in range(k_max + 1):
        for ox, oy in _hex_ring_offsets(k):
            if len(points) == count:
                return points
            points.append(Point2D(cx + pitch * ox, cy + pitch * oy))
    return points


def min_pairwise_distance(points) -> float:
    """Minimum Euclidean distance over all unordered pairs."""
    xy = points if isinstance(points, np.ndarray) else points_to_array(points)
    n = xy.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 points, got {n}")
    diff = xy[:, None, :] - xy[None, :, :]
    d2 = (diff * diff).sum(axis=2)
    d2[np.diag_indices(n)] = np.inf
    return float(math.sqrt(d2.min()))
