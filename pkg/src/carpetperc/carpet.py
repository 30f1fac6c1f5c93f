"""Construction of the pre-carpet lattices, sponge windows, and locality queries.

The vertex rule used everywhere: an integer point is a vertex iff it is a
corner of at least one retained unit cell; edges join vertices at Euclidean
distance 1.  Retention of a cell is a base-L digit test on its coordinates,
with negative coordinates mirrored (the full lattice is the union of the four
reflected quadrant copies).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CapacityError,
    GeometryError,
    InvalidAddressError,
    LevelError,
    NotAVertexError,
)

DEFAULT_MAX_LEVEL = 7


def _max_cells() -> int:
    return int(os.environ.get("CARPET_PERC_MAX_CELLS", 30_000_000))


@dataclass(frozen=True)
class GeneratorSet:
    """The cell set defining the fractal: base L and the retained sub-cells."""

    base: int = 3
    cells: frozenset = frozenset((i, j) for i in range(3) for j in range(3)) - {(1, 1)}

    def __post_init__(self):
        if self.base < 2:
            raise InvalidAddressError("generator base must be >= 2")
        cells = frozenset((int(i), int(j)) for i, j in self.cells)
        if not cells:
            raise InvalidAddressError("generator cell set must be nonempty")
        for i, j in cells:
            if not (0 <= i < self.base and 0 <= j < self.base):
                raise InvalidAddressError(f"cell {(i, j)} outside base {self.base}")
        object.__setattr__(self, "cells", cells)

    @property
    def mask(self) -> np.ndarray:
        """Boolean retention mask, indexed mask[j, i] for cell (i, j)."""
        m = np.zeros((self.base, self.base), dtype=bool)
        for i, j in self.cells:
            m[j, i] = True
        return m

    def has_origin_cell(self) -> bool:
        return (0, 0) in self.cells


CARPET3 = GeneratorSet()

FULL_GRID3 = GeneratorSet(3, frozenset((i, j) for i in range(3) for j in range(3)))


@dataclass(frozen=True)
class CellAddress:
    """A level-n cell address, digit pairs listed coarsest scale first."""

    digits: tuple

    @property
    def level(self) -> int:
        return len(self.digits)


def retained_cell(addr: CellAddress, T: GeneratorSet = CARPET3) -> bool:
    """True iff every digit pair of the address belongs to the generator set."""
    for i, j in addr.digits:
        if not (0 <= i < T.base and 0 <= j < T.base):
            raise InvalidAddressError(f"digit {(i, j)} out of range for base {T.base}")
    return all((i, j) in T.cells for i, j in addr.digits)


# ---------------------------------------------------------------------------
# cell retention predicates (vectorized)

def cells_retained_local(cx, cy, n: int, T: GeneratorSet = CARPET3):
    """Digit test at exactly n scales on cell coords in [0, L^n)^2 (sponge rule)."""
    cx = np.asarray(cx, dtype=np.int64).copy()
    cy = np.asarray(cy, dtype=np.int64).copy()
    ok = np.ones(np.broadcast(cx, cy).shape, dtype=bool)
    mask = T.mask
    L = T.base
    for _ in range(n):
        ok &= mask[cy % L, cx % L]
        cx //= L
        cy //= L
    return ok


def cells_retained_global(cx, cy, T: GeneratorSet = CARPET3):
    """Digit test on all scales, with negative coordinates mirrored (full-lattice rule)."""
    cx = np.asarray(cx, dtype=np.int64)
    cy = np.asarray(cy, dtype=np.int64)
    cx = np.where(cx < 0, -cx - 1, cx).astype(np.int64)
    cy = np.where(cy < 0, -cy - 1, cy).astype(np.int64)
    ok = np.ones(np.broadcast(cx, cy).shape, dtype=bool)
    mask = T.mask
    L = T.base
    while True:
        ok &= mask[cy % L, cx % L]
        cx = cx // L
        cy = cy // L
        if not np.any(cx) and not np.any(cy):
            break
    return ok


def _require_origin_cell(T: GeneratorSet):
    if not T.has_origin_cell():
        raise InvalidAddressError(
            "full-lattice queries need cell (0,0) in the generator set"
        )


# ---------------------------------------------------------------------------
# graphs

@dataclass(frozen=True)
class Rect:
    """Integer axis-aligned rectangle [x0, x1] x [y0, y1] (vertex coordinates)."""

    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    def contains(self, other: "Rect") -> bool:
        return (self.x0 <= other.x0 and self.y0 <= other.y0
                and self.x1 >= other.x1 and self.y1 >= other.y1)

    def shifted(self, dx: int, dy: int) -> "Rect":
        return Rect(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)

    def short_direction(self) -> str:
        """Crossing direction that joins the two shorter sides."""
        return "LR" if self.width >= self.height else "UD"


class SpongeGraph:
    """A finite window of the carpet lattice.

    vertices: (V, 2) int64 array, row-major order (sorted by (y, x));
    edges: (E, 2) int32 vertex-id pairs, canonically sorted;
    cell_mask: boolean retention mask over the window's unit cells,
    indexed [cy - y0, cx - x0].
    """

    def __init__(self, rect: Rect, cell_mask: np.ndarray, generator: GeneratorSet,
                 level: int = 0, cols: int = 1, rows: int = 1, origin=(0, 0),
                 kind: str = "window"):
        self.rect = rect
        self.cell_mask = cell_mask
        self.generator = generator
        self.level = level
        self.cols = cols
        self.rows = rows
        self.origin = tuple(origin)
        self.kind = kind
        self._build_from_mask()
        self._cache = {}

    def _build_from_mask(self):
        m = self.cell_mask
        H, W = m.shape
        vm = np.zeros((H + 1, W + 1), dtype=bool)
        vm[:-1, :-1] |= m
        vm[:-1, 1:] |= m
        vm[1:, :-1] |= m
        vm[1:, 1:] |= m
        self.vertex_mask = vm
        ys, xs = np.nonzero(vm)  # row-major: y outer, x inner
        self.vertices = np.column_stack(
            [xs + self.rect.x0, ys + self.rect.y0]).astype(np.int64)
        vid = np.full(vm.shape, -1, dtype=np.int64)
        vid[ys, xs] = np.arange(len(ys))
        self._vid_grid = vid
        # horizontal then vertical unit edges, re-sorted canonically
        eh = vm[:, :-1] & vm[:, 1:]
        ev = vm[:-1, :] & vm[1:, :]
        hy, hx = np.nonzero(eh)
        vy, vx = np.nonzero(ev)
        u = np.concatenate([vid[hy, hx], vid[vy, vx]])
        v = np.concatenate([vid[hy, hx + 1], vid[vy + 1, vx]])
        lo = np.minimum(u, v)
        hi = np.maximum(u, v)
        order = np.lexsort((hi, lo))
        self.edges = np.column_stack([lo[order], hi[order]]).astype(np.int64)

    # -- lookups ------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def vertex_id(self, x: int, y: int) -> int:
        ix, iy = x - self.rect.x0, y - self.rect.y0
        vm = self.vertex_mask
        if not (0 <= ix < vm.shape[1] and 0 <= iy < vm.shape[0]) or not vm[iy, ix]:
            raise NotAVertexError(f"({x}, {y}) is not a vertex of this window")
        return int(self._vid_grid[iy, ix])

    def has_vertex(self, x: int, y: int) -> bool:
        ix, iy = x - self.rect.x0, y - self.rect.y0
        vm = self.vertex_mask
        return (0 <= ix < vm.shape[1] and 0 <= iy < vm.shape[0]) and bool(vm[iy, ix])

    def vertex_ids_in(self, rect: Rect) -> np.ndarray:
        v = self.vertices
        sel = ((v[:, 0] >= rect.x0) & (v[:, 0] <= rect.x1)
               & (v[:, 1] >= rect.y0) & (v[:, 1] <= rect.y1))
        return np.nonzero(sel)[0]

    def boundary_line_ids(self, side: str) -> np.ndarray:
        """Vertex ids on one window boundary line (coordinate extreme of the rect)."""
        v, r = self.vertices, self.rect
        sel = {"left": v[:, 0] == r.x0, "right": v[:, 0] == r.x1,
               "bottom": v[:, 1] == r.y0, "top": v[:, 1] == r.y1}[side]
        return np.nonzero(sel)[0]

    def edge_index(self) -> dict:
        idx = self._cache.get("edge_index")
        if idx is None:
            idx = {(int(a), int(b)): i for i, (a, b) in enumerate(self.edges)}
            self._cache["edge_index"] = idx
        return idx

    def edge_id(self, u: int, v: int) -> int:
        a, b = (u, v) if u < v else (v, u)
        return self.edge_index()[(a, b)]

    def edge_midpoints(self) -> np.ndarray:
        """(E, 2) float midpoints of edges in lattice coordinates."""
        mp = self._cache.get("edge_midpoints")
        if mp is None:
            p = self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]]
            mp = p / 2.0
            self._cache["edge_midpoints"] = mp
        return mp

    def __repr__(self):
        r = self.rect
        return (f"SpongeGraph({self.kind}, level={self.level}, "
                f"rect=[{r.x0},{r.x1}]x[{r.y0},{r.y1}], "
                f"V={self.n_vertices}, E={self.n_edges})")


def _guard(n: int, n_cells: int, max_level: int | None):
    limit = DEFAULT_MAX_LEVEL if max_level is None else max_level
    if n < 0:
        raise LevelError("level must be nonnegative")
    if n > limit:
        raise CapacityError(f"level {n} exceeds the guard ({limit}); raise max_level")
    if n_cells > _max_cells():
        raise CapacityError(
            f"{n_cells} cells exceed CARPET_PERC_MAX_CELLS={_max_cells()}")


def build_sponge(n: int, cols: int, rows: int, T: GeneratorSet = CARPET3,
                 max_level: int | None = None) -> SpongeGraph:
    """The union of cols x rows shifted copies of the level-n pre-carpet box.

    Cell retention uses the local n-digit rule on each copy, so the result is
    the sponge pattern even where it disagrees with the full lattice.
    """
    if cols < 1 or rows < 1:
        raise GeometryError("cols and rows must be >= 1")
    side = T.base ** n
    W, H = cols * side, rows * side
    _guard(n, W * H, max_level)
    cx, cy = np.meshgrid(np.arange(W), np.arange(H))
    mask = cells_retained_local(cx % side, cy % side, n, T)
    return SpongeGraph(Rect(0, 0, W, H), mask, T, level=n, cols=cols, rows=rows,
                       kind="sponge")


def window_graph(rect: Rect, T: GeneratorSet = CARPET3,
                 max_level: int | None = None) -> SpongeGraph:
    """The full-lattice restriction to an arbitrary integer rectangle."""
    _require_origin_cell(T)
    n_cells = rect.width * rect.height
    if n_cells <= 0:
        raise GeometryError("window rectangle must have positive area")
    if n_cells > _max_cells():
        raise CapacityError(
            f"{n_cells} cells exceed CARPET_PERC_MAX_CELLS={_max_cells()}")
    cx, cy = np.meshgrid(np.arange(rect.x0, rect.x1), np.arange(rect.y0, rect.y1))
    mask = cells_retained_global(cx, cy, T)
    return SpongeGraph(rect, mask, T, level=0, cols=1, rows=1, kind="window")


def build_full_window(n: int, T: GeneratorSet = CARPET3,
                      max_level: int | None = None) -> SpongeGraph:
    """The full lattice on [-L^n, L^n]^2: four reflected copies of the level-n box."""
    side = T.base ** n
    _guard(n, 4 * side * side, max_level)
    g = window_graph(Rect(-side, -side, side, side), T)
    g.level = n
    g.kind = "full"
    return g


# ---------------------------------------------------------------------------
# transforms

_ROT = np.array([[0, -1], [1, 0]], dtype=np.int64)  # quarter turn, CCW


@dataclass(frozen=True)
class RegionTransform:
    """Lattice isometry: reflections, then quarter turns, then a shift."""

    quarter_turns: int = 0
    reflect_x1: bool = False  # across the x1-axis: (x, y) -> (x, -y)
    reflect_x2: bool = False  # across the x2-axis: (x, y) -> (-x, y)
    shift: tuple = (0, 0)
    matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = np.eye(2, dtype=np.int64)
        if self.reflect_x2:
            m = np.diag([-1, 1]).astype(np.int64) @ m
        if self.reflect_x1:
            m = np.diag([1, -1]).astype(np.int64) @ m
        for _ in range(self.quarter_turns % 4):
            m = _ROT @ m
        object.__setattr__(self, "matrix", m)

    @staticmethod
    def shift_by(dx: int, dy: int) -> "RegionTransform":
        return RegionTransform(shift=(dx, dy))

    @staticmethod
    def from_matrix(m: np.ndarray, shift=(0, 0)) -> "RegionTransform":
        tr = RegionTransform(shift=tuple(int(s) for s in shift))
        object.__setattr__(tr, "matrix", np.asarray(m, dtype=np.int64))
        return tr

    @staticmethod
    def diagonal_reflection() -> "RegionTransform":
        """(x, y) -> (y, x); not expressible by the constructor flags alone."""
        return RegionTransform.from_matrix(np.array([[0, 1], [1, 0]]))

    def apply_points(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.int64)
        return pts @ self.matrix.T + np.asarray(self.shift, dtype=np.int64)

    def apply_point(self, p) -> tuple:
        q = self.apply_points(np.asarray([p]))[0]
        return (int(q[0]), int(q[1]))

    def apply_rect(self, r: Rect) -> Rect:
        c = self.apply_points(np.array([[r.x0, r.y0], [r.x1, r.y1]]))
        return Rect(int(c[:, 0].min()), int(c[:, 1].min()),
                    int(c[:, 0].max()), int(c[:, 1].max()))

    def compose(self, other: "RegionTransform") -> "RegionTransform":
        """self after other: x -> self(other(x))."""
        m = self.matrix @ other.matrix
        s = self.matrix @ np.asarray(other.shift, dtype=np.int64) + np.asarray(
            self.shift, dtype=np.int64)
        return RegionTransform.from_matrix(m, (int(s[0]), int(s[1])))

    def inverse(self) -> "RegionTransform":
        mi = np.linalg.inv(self.matrix).astype(np.int64)
        s = -(mi @ np.asarray(self.shift, dtype=np.int64))
        return RegionTransform.from_matrix(mi, (int(s[0]), int(s[1])))

    def swaps_axes(self) -> bool:
        return self.matrix[0, 0] == 0


def apply_transform(g: SpongeGraph, tr: RegionTransform) -> SpongeGraph:
    """Map a window graph pointwise through a lattice isometry."""
    new_rect = tr.apply_rect(g.rect)
    m = g.cell_mask
    # transform the cell mask: cells live at half-integer centers, so the same
    # matrix acts on the mask with flips/rotations of the array
    mat = tr.matrix
    out = m
    if np.array_equal(mat, np.eye(2, dtype=np.int64)):
        pass
    else:
        # enumerate cell centers and rebuild the mask in image coordinates
        cy, cx = np.nonzero(m)
        centers = np.column_stack([cx + g.rect.x0, cy + g.rect.y0]).astype(np.int64)
        img = (2 * centers + 1) @ mat.T + 2 * np.asarray(tr.shift, dtype=np.int64)
        icx = (img[:, 0] - 1) // 2 - new_rect.x0
        icy = (img[:, 1] - 1) // 2 - new_rect.y0
        out = np.zeros((new_rect.height, new_rect.width), dtype=bool)
        out[icy, icx] = True
    gg = SpongeGraph(new_rect, out, g.generator, level=g.level, cols=g.cols,
                     rows=g.rows, origin=tr.apply_point(g.origin), kind="transformed")
    return gg


# ---------------------------------------------------------------------------
# locality queries on the full lattice

def _adjacent_retained_cells(x: int, y: int, T: GeneratorSet,
                             quadrant_only: bool = True):
    """Retained cells having (x, y) as a corner; optionally first-quadrant only."""
    _require_origin_cell(T)
    out = []
    for cx in (x - 1, x):
        for cy in (y - 1, y):
            if quadrant_only and (cx < 0 or cy < 0):
                continue
            if cells_retained_global(cx, cy, T):
                out.append((cx, cy))
    return out


def is_carpet_vertex(x: int, y: int, T: GeneratorSet = CARPET3,
                     full_lattice: bool = False) -> bool:
    return bool(_adjacent_retained_cells(x, y, T, quadrant_only=not full_lattice))


def level_of(x, T: GeneratorSet = CARPET3) -> int:
    """Minimal n such that the point lies in the level-n box at the origin."""
    px, py = int(x[0]), int(x[1])
    if px < 0 or py < 0:
        raise NotAVertexError(f"({px}, {py}) is outside the first-quadrant lattice")
    cells = _adjacent_retained_cells(px, py, T)
    if not cells:
        raise NotAVertexError(f"({px}, {py}) is not a carpet vertex")
    L = T.base
    best = None
    for cx, cy in cells:
        n = 0
        while L ** n < max(cx + 1, cy + 1):
            n += 1
        best = n if best is None else min(best, n)
    return best


def _boxes_containing(x, n: int, T: GeneratorSet):
    """Grid coordinates (a, b) of the level-n boxes of the lattice containing x."""
    px, py = int(x[0]), int(x[1])
    side = T.base ** n
    cells = _adjacent_retained_cells(px, py, T)
    if not cells:
        raise NotAVertexError(f"({px}, {py}) is not a carpet vertex")
    boxes = set()
    for cx, cy in cells:
        a, b = cx // side, cy // side
        if cells_retained_global(a, b, T):
            boxes.add((a, b))
    return boxes


def nth_box(x, n: int, T: GeneratorSet = CARPET3):
    """Shift vector w such that the level-n box [0, L^n]^2 + w contains x.

    Among all candidate boxes, the one whose center is nearest to the origin
    wins; remaining ties break lexicographically on the shift.
    """
    if n < 0:
        raise LevelError("box level must be nonnegative")
    side = T.base ** n
    boxes = _boxes_containing(x, n, T)
    if not boxes:
        raise NotAVertexError(f"{tuple(x)} lies in no retained level-{n} box")

    def center_d2(ab):
        a, b = ab
        return (2 * a + 1) ** 2 + (2 * b + 1) ** 2  # scaled squared center norm

    a, b = min(boxes, key=lambda ab: (center_d2(ab), ab))
    return (a * side, b * side)


def separation_scale(x, y, T: GeneratorSet = CARPET3) -> int:
    """Largest n at which the level-n boxes of x and y are at positive distance.

    Returns 0 when |x - y| <= 6*sqrt(2); the result n always satisfies
    |x - y| <= 6*sqrt(2) * 3^n.
    """
    px, py = int(x[0]), int(x[1])
    qx, qy = int(y[0]), int(y[1])
    sx, sy = (1 if px >= 0 else -1), (1 if py >= 0 else -1)
    tx, ty = (1 if qx >= 0 else -1), (1 if qy >= 0 else -1)
    d2 = (px - qx) ** 2 + (py - qy) ** 2
    if d2 <= 72:  # (6*sqrt(2))^2
        # still validate vertexhood
        _boxes_containing((abs(px), abs(py)), 0, T)
        _boxes_containing((abs(qx), abs(qy)), 0, T)
        return 0
    L = T.base
    n = 0
    while L ** n < max(abs(px), abs(py), abs(qx), abs(qy), 1):
        n += 1
    for m in range(n + 1, -1, -1):
        side = L ** m
        wx = nth_box((abs(px), abs(py)), m, T)
        wy = nth_box((abs(qx), abs(qy)), m, T)
        # mirror the boxes back into their quadrants
        bx = _quadrant_rect(wx, side, sx, sy)
        by = _quadrant_rect(wy, side, tx, ty)
        if _rect_distance(bx, by) > 0:
            return m
    raise GeometryError(f"no separating scale for {tuple(x)}, {tuple(y)}")


def _quadrant_rect(w, side, sx, sy) -> Rect:
    x0, y0 = w
    r = Rect(x0, y0, x0 + side, y0 + side)
    xs = sorted((sx * r.x0, sx * r.x1))
    ys = sorted((sy * r.y0, sy * r.y1))
    return Rect(xs[0], ys[0], xs[1], ys[1])


def _rect_distance(a: Rect, b: Rect) -> float:
    dx = max(a.x0 - b.x1, b.x0 - a.x1, 0)
    dy = max(a.y0 - b.y1, b.y0 - a.y1, 0)
    return float(np.hypot(dx, dy))


# ---------------------------------------------------------------------------
# generator diagnostics

@dataclass(frozen=True)
class GeneratorReport:
    connected: bool
    symmetric: bool
    full_left_column: bool

    @property
    def all_hold(self) -> bool:
        return self.connected and self.symmetric and self.full_left_column


def check_generator_conditions(T: GeneratorSet) -> GeneratorReport:
    """Connectivity (shared-edge cell adjacency), symmetry closure, full left column."""
    cells = T.cells
    # 1: edge-adjacency connectivity of the retained level-1 cells
    start = next(iter(cells))
    seen = {start}
    stack = [start]
    while stack:
        i, j = stack.pop()
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nb = (i + di, j + dj)
            if nb in cells and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    connected = len(seen) == len(cells)
    # 2: (i, j) in T implies (j, i) in T and (i, L-1-j) in T
    symmetric = all((j, i) in cells and (i, T.base - 1 - j) in cells
                    for i, j in cells)
    # 3: full left column
    full_left = all((0, j) in cells for j in range(T.base))
    return GeneratorReport(connected, symmetric, full_left)
