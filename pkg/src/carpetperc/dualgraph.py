"""Face-contracted planar dual of a window graph.

One dual vertex per retained unit cell, one per maximal 4-connected block of
removed cells, and four boundary sectors (left, right, bottom, top) splitting
the infinite face at the window corners.  Every primal edge has exactly one
dual edge crossing it (same index).  Removed blocks that touch the window
boundary along segments carrying no primal edge get unconditionally
traversable "free" dual edges into the adjacent sector.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .carpet import Rect, SpongeGraph
from .errors import GeometryError, PairingError

_DIRS = {"E": (1, 0), "N": (0, 1), "W": (-1, 0), "S": (0, -1)}


def _cell_left(ax, ay, d):
    if d == "E":
        return (ax, ay)
    if d == "N":
        return (ax - 1, ay)
    if d == "W":
        return (ax - 1, ay - 1)
    return (ax, ay - 1)  # S


def _cell_right(ax, ay, d):
    if d == "E":
        return (ax, ay - 1)
    if d == "N":
        return (ax, ay)
    if d == "W":
        return (ax - 1, ay)
    return (ax - 1, ay - 1)  # S


_CW = {"E": "S", "S": "W", "W": "N", "N": "E"}
_CCW = {v: k for k, v in _CW.items()}


class DualGraph:
    def __init__(self, g: SpongeGraph):
        self.graph = g
        r = g.rect
        H, W = g.cell_mask.shape
        mask = g.cell_mask

        # finite faces: retained cells row-major, then removed blocks
        cell_ids = np.full((H, W), -1, dtype=np.int64)
        ys, xs = np.nonzero(mask)
        cell_ids[ys, xs] = np.arange(len(ys))
        self.n_cells = int(len(ys))
        blocks, n_blocks = ndimage.label(~mask)
        self.n_blocks = int(n_blocks)
        self.n_faces = self.n_cells + self.n_blocks
        face_grid = np.where(mask, cell_ids, self.n_cells + blocks - 1)
        self.face_grid = face_grid.astype(np.int64)
        self._block_grid = blocks

        self.LEFT = self.n_faces
        self.RIGHT = self.n_faces + 1
        self.BOTTOM = self.n_faces + 2
        self.TOP = self.n_faces + 3
        self.n_nodes = self.n_faces + 4

        # flanking faces of every primal edge
        v = g.vertices
        e = g.edges
        p = v[e[:, 0]]
        q = v[e[:, 1]]
        horiz = p[:, 1] == q[:, 1]
        lo = np.minimum(p, q)  # lower-left endpoint of the edge
        cx = lo[:, 0]
        cy = lo[:, 1]
        f1 = np.where(horiz, self._face_at(cx, cy - 1), self._face_at(cx - 1, cy))
        f2 = self._face_at(cx, cy)
        self.tagged_u = f1.astype(np.int64)
        self.tagged_v = f2.astype(np.int64)

        # free adjacencies: boundary segments with no primal edge, removed inside
        fu, fv, fseg = [], [], []
        vm = g.vertex_mask
        for side, seg_iter in self._boundary_segments(r, H, W):
            for ax, ay, d, icx, icy in seg_iter:
                bx, by = ax + _DIRS[d][0], ay + _DIRS[d][1]
                a_ok = vm[ay - r.y0, ax - r.x0]
                b_ok = vm[by - r.y0, bx - r.x0]
                if a_ok and b_ok:
                    continue  # a primal edge crosses here; already tagged
                if mask[icy, icx]:
                    continue  # cannot happen: retained cells have full corners
                fu.append(int(face_grid[icy, icx]))
                fv.append(self._sector_id(side))
                fseg.append((min((ax, ay), (bx, by)), d in ("E", "W")))
        self.free_u = np.asarray(fu, dtype=np.int64)
        self.free_v = np.asarray(fv, dtype=np.int64)
        self._free_segments = {s: i for i, s in enumerate(fseg)}

        self.n_tagged = len(e)
        self.n_dual_edges = self.n_tagged + len(fu)
        self.dual_u = np.concatenate([self.tagged_u, self.free_u]).astype(np.int64)
        self.dual_v = np.concatenate([self.tagged_v, self.free_v]).astype(np.int64)
        self.gate = np.concatenate([
            np.arange(self.n_tagged, dtype=np.int64),
            np.full(len(fu), -1, dtype=np.int64),
        ])
        self._rotations = None

    # -- construction helpers ------------------------------------------------

    def _face_at(self, cx, cy):
        """Face id for cell coordinates (arrays ok); outside cells map to sectors."""
        r = self.graph.rect
        cx = np.asarray(cx)
        cy = np.asarray(cy)
        ix = cx - r.x0
        iy = cy - r.y0
        H, W = self.graph.cell_mask.shape
        inside = (ix >= 0) & (ix < W) & (iy >= 0) & (iy < H)
        out = np.where(cx < r.x0, self.LEFT,
                       np.where(cx >= r.x1, self.RIGHT,
                                np.where(cy < r.y0, self.BOTTOM, self.TOP)))
        res = out.astype(np.int64)
        if np.any(inside):
            res = np.where(inside, self.face_grid[np.clip(iy, 0, H - 1),
                                                  np.clip(ix, 0, W - 1)], res)
        return res

    def _sector_id(self, side: str) -> int:
        return {"left": self.LEFT, "right": self.RIGHT,
                "bottom": self.BOTTOM, "top": self.TOP}[side]

    @staticmethod
    def _boundary_segments(r: Rect, H, W):
        """Per side: directed unit segments along the window boundary and the
        inside cell index each segment flanks."""
        def bottom():
            for x in range(r.x0, r.x1):
                yield (x, r.y0, "E", x - r.x0, 0)

        def top():
            for x in range(r.x0, r.x1):
                yield (x, r.y1, "E", x - r.x0, H - 1)

        def left():
            for y in range(r.y0, r.y1):
                yield (r.x0, y, "N", 0, y - r.y0)

        def right():
            for y in range(r.y0, r.y1):
                yield (r.x1, y, "N", W - 1, y - r.y0)

        return [("bottom", bottom()), ("top", top()),
                ("left", left()), ("right", right())]

    # -- lookups ---------------------------------------------------------------

    def face_of_cell(self, cx: int, cy: int) -> int:
        r = self.graph.rect
        if not (r.x0 <= cx < r.x1 and r.y0 <= cy < r.y1):
            raise GeometryError(f"cell ({cx}, {cy}) outside the window")
        return int(self.face_grid[cy - r.y0, cx - r.x0])

    def face_kind(self, fid: int) -> str:
        if fid < self.n_cells:
            return "cell"
        if fid < self.n_faces:
            return "hole"
        return "sector"

    def sector(self, side: str) -> int:
        return self._sector_id(side)

    def dual_edge_of(self, e: int) -> int:
        if not (0 <= e < self.n_tagged):
            raise IndexError(f"edge id {e} out of range")
        return int(e)

    def primal_of(self, d: int):
        if not (0 <= d < self.n_dual_edges):
            raise IndexError(f"dual edge id {d} out of range")
        return int(d) if d < self.n_tagged else None

    def segment_dual_edge(self, a, b):
        """Dual edge crossing the unit segment between lattice points a and b."""
        g = self.graph
        if g.has_vertex(*a) and g.has_vertex(*b):
            return g.edge_id(g.vertex_id(*a), g.vertex_id(*b))
        key = (min(tuple(a), tuple(b)), a[1] == b[1])
        i = self._free_segments.get(key)
        if i is None:
            return None
        return self.n_tagged + i

    def check_pairing(self, config):
        if config.graph is not self.graph:
            raise PairingError("configuration and dual built from different graphs")

    # -- rotation system (for interface walks) ---------------------------------

    def rotations(self):
        """Per finite face: cycles of dual-edge ids in CCW boundary order."""
        if self._rotations is not None:
            return self._rotations
        rot = {}
        for fid in range(self.n_faces):
            rot[fid] = self._face_cycles(fid)
        self._rotations = rot
        return rot

    def _face_cells(self, fid: int):
        r = self.graph.rect
        if fid < self.n_cells:
            ys, xs = np.nonzero(self.face_grid == fid)
        else:
            ys, xs = np.nonzero(self._block_grid == fid - self.n_cells + 1)
        return set(zip((xs + r.x0).tolist(), (ys + r.y0).tolist()))

    def _face_cycles(self, fid: int):
        cells = self._face_cells(fid)
        segs = set()  # directed boundary segments, face on the left
        for cx, cy in cells:
            for d, (sx, sy) in (("E", (cx, cy)), ("N", (cx + 1, cy)),
                                ("W", (cx + 1, cy + 1)), ("S", (cx, cy + 1))):
                if _cell_left(sx, sy, d) in cells and _cell_right(sx, sy, d) not in cells:
                    segs.add((sx, sy, d))
        cycles = []
        remaining = set(segs)
        while remaining:
            start = min(remaining)
            cyc = []
            cur = start
            while True:
                remaining.discard(cur)
                ax, ay, d = cur
                bx, by = ax + _DIRS[d][0], ay + _DIRS[d][1]
                de = self.segment_dual_edge((ax, ay), (bx, by))
                cyc.append(de)
                nxt = None
                for d2 in (_CW[d], d, _CCW[d]):
                    cand = (bx, by, d2)
                    if cand in segs:
                        nxt = cand
                        break
                if nxt is None or nxt == start:
                    break
                cur = nxt
            cycles.append(cyc)
        return cycles


def build_dual(g: SpongeGraph) -> DualGraph:
    """Build the face-contracted dual with boundary sectors."""
    return DualGraph(g)
