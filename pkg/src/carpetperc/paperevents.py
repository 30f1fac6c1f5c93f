"""Composite event detectors: extremal crossings, pivotal edges, frame and
corner hook-up events, and the annulus pivotal scan."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .carpet import Rect, level_of, nth_box
from .dualgraph import DualGraph, build_dual
from .errors import ArgumentError, DomainError, GeometryError
from .percolation import (
    BondConfiguration,
    CrossingTester,
    crossing_tester,
    dual_crossing_tester,
    flip_edge,
    open_component_labels,
    subwindow,
)

# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True)
class LatticePath:
    """An ordered path of open primal edges, or of closed dual edges.

    For the closed-dual context, edge_ids lists the ambient primal edge ids of
    the primal-tagged dual steps (free contraction steps carry no edge state
    and are omitted); vertices lists the dual node sequence.
    """

    edge_ids: tuple
    vertices: tuple
    context: str  # "open-primal" | "closed-dual"

    def __len__(self):
        return len(self.edge_ids)


_DIRVEC = {"E": (1, 0), "N": (0, 1), "W": (-1, 0), "S": (0, -1)}
_CW = {"E": "S", "S": "W", "W": "N", "N": "E"}
_CCW = {v: k for k, v in _CW.items()}


def _cell_left(ax, ay, d):
    return {"E": (ax, ay), "N": (ax - 1, ay),
            "W": (ax - 1, ay - 1), "S": (ax, ay - 1)}[d]


def _cell_right(ax, ay, d):
    return {"E": (ax, ay - 1), "N": (ax, ay),
            "W": (ax - 1, ay), "S": (ax - 1, ay - 1)}[d]


# ---------------------------------------------------------------------------
# dual floods


def _dual_adjacency(sw):
    """Adjacency lists over the subwindow's dual nodes, entries (node, dual id)."""
    adj = sw.graph._cache.get("dual_adj")
    if adj is None:
        d = sw.dual
        adj = [[] for _ in range(d.n_nodes)]
        for i in range(d.n_dual_edges):
            u, v = int(d.dual_u[i]), int(d.dual_v[i])
            adj[u].append((v, i))
            adj[v].append((u, i))
        sw.graph._cache["dual_adj"] = adj
    return adj


def _below_region(sw, bits):
    """Dual faces closed-dual-reachable from the bottom sector, left/right
    sectors removed; None when the flood reaches the top sector (then no open
    left-right crossing exists)."""
    d = sw.dual
    local = sw.local_bits(bits)
    adj = _dual_adjacency(sw)
    seen = {d.BOTTOM}
    stack = [d.BOTTOM]
    while stack:
        f = stack.pop()
        for g, de in adj[f]:
            if g in seen or g == d.LEFT or g == d.RIGHT:
                continue
            pe = d.gate[de]
            if pe >= 0 and local[pe]:
                continue  # open primal edge blocks the dual step
            if g == d.TOP:
                return None
            seen.add(g)
            stack.append(g)
    return seen


def _geometric_flood(sw, blocked_primal_local, sources, banned):
    """Face flood across all dual adjacencies regardless of edge state, blocked
    only at the given (local) primal edges."""
    d = sw.dual
    adj = _dual_adjacency(sw)
    seen = set(sources)
    stack = list(sources)
    while stack:
        f = stack.pop()
        for g, de in adj[f]:
            if g in seen or g in banned:
                continue
            pe = d.gate[de]
            if pe >= 0 and pe in blocked_primal_local:
                continue
            seen.add(g)
            stack.append(g)
    return seen


def _loop_erase(verts, edges):
    pos = {verts[0]: 0}
    out_v = [verts[0]]
    out_e = []
    for i in range(1, len(verts)):
        vv = verts[i]
        if vv in pos:
            k = pos[vv]
            for dead in out_v[k + 1:]:
                del pos[dead]
            del out_v[k + 1:]
            del out_e[k:]
        else:
            out_e.append(edges[i - 1])
            out_v.append(vv)
            pos[vv] = len(out_v) - 1
    return out_v, out_e


def lowest_crossing(config: BondConfiguration, rect: Rect | None = None):
    """The minimal open left-right crossing of the window, or None.

    The crossing is read off the outer boundary of the closed-dual region
    attached to the bottom sector: walking that boundary from the bottom-left
    to the bottom-right corner traverses the lowest crossing; loop erasure
    removes pinch-point excursions.
    """
    g = config.graph
    rect = rect or g.rect
    sw = subwindow(g, rect)
    region = _below_region(sw, config.bits)
    if region is None:
        return None
    d = sw.dual
    fg = d.face_grid

    def face_at(cx, cy):
        if cx < rect.x0:
            return d.LEFT
        if cx >= rect.x1:
            return d.RIGHT
        if cy < rect.y0:
            return d.BOTTOM
        if cy >= rect.y1:
            return d.TOP
        return int(fg[cy - rect.y0, cx - rect.x0])

    def in_region(cell):
        return face_at(*cell) in region

    gsub = sw.graph
    local = sw.local_bits(config.bits)
    eidx = gsub.edge_index()

    w = (rect.x0, rect.y0)
    stop = (rect.x1, rect.y0)
    heading = "N"  # virtual approach up the left sector boundary
    steps = []
    guard = 4 * d.n_dual_edges + 8 * (rect.width + rect.height) + 64
    while w != stop:
        nxt = None
        for dd in (_CW[heading], heading, _CCW[heading], _CW[_CW[heading]]):
            if in_region(_cell_right(*w, dd)) and not in_region(_cell_left(*w, dd)):
                nxt = dd
                break
        if nxt is None:
            raise ArgumentError("interface walk stuck; inconsistent region")
        dx, dy = _DIRVEC[nxt]
        w2 = (w[0] + dx, w[1] + dy)
        steps.append((w, w2))
        w, heading = w2, nxt
        guard -= 1
        if guard < 0:
            raise ArgumentError("interface walk did not terminate")

    b_idx = next(i for i, (_, bb) in enumerate(steps) if bb[0] == rect.x1)
    a_idx = max(i for i, (aa, _) in enumerate(steps)
                if i <= b_idx and aa[0] == rect.x0)
    verts = [steps[a_idx][0]]
    edges = []
    for aa, bb in steps[a_idx:b_idx + 1]:
        ia = gsub.vertex_id(*aa)
        ib = gsub.vertex_id(*bb)
        e = eidx[(min(ia, ib), max(ia, ib))]
        if not local[e]:
            raise ArgumentError("interface boundary crossed a closed segment")
        edges.append(e)
        verts.append(bb)
    out_v, out_e = _loop_erase(verts, edges)
    amb_e = tuple(int(sw.edge_ids[e]) for e in out_e)
    amb_v = tuple(int(g.vertex_id(*vv)) for vv in out_v)
    return LatticePath(amb_e, amb_v, "open-primal")


# ---------------------------------------------------------------------------
# leftmost closed dual path from the top sector down to a crossing


def leftmost_closed_dual_path(config: BondConfiguration, dual: DualGraph,
                              r: LatticePath, strip: Rect | None = None):
    """Leftmost path of closed dual edges from the top sector to a dual edge
    crossing an edge of r, inside the given strip (default: whole window).

    Returns (path, e_psi) where e_psi is the ambient id of the r-edge whose
    dual edge terminates the path, or (None, None) when no such path exists.
    Depth-first search trying exits in counterclockwise rotation order after
    the entry edge explores leftmost descents first.
    """
    dual.check_pairing(config)
    if r.context != "open-primal":
        raise ArgumentError("r must be an open primal crossing path")
    g = config.graph
    rect = strip or g.rect
    sw = subwindow(g, rect)
    d = sw.dual
    local = sw.local_bits(config.bits)
    amb_to_local = sw.graph._cache.get("amb_edge_map")
    if amb_to_local is None:
        amb_to_local = {int(e): i for i, e in enumerate(sw.edge_ids)}
        sw.graph._cache["amb_edge_map"] = amb_to_local
    r_local = {amb_to_local[e] for e in r.edge_ids if e in amb_to_local}
    if not r_local:
        return None, None
    rot = d.rotations()
    target_edges = defaultdict(list)
    for e in sorted(r_local):
        target_edges[int(d.tagged_u[e])].append(e)
        target_edges[int(d.tagged_v[e])].append(e)

    mids = sw.graph.edge_midpoints()
    free_pos = {v: k for k, v in d._free_segments.items()}

    def dual_pos(i):
        if i < d.n_tagged:
            return float(mids[i][0])
        seg, horiz = free_pos[i - d.n_tagged]
        return float(seg[0]) + (0.5 if horiz else 0.0)

    top_in = sorted(
        ((i, int(d.dual_v[i]) if int(d.dual_u[i]) == d.TOP else int(d.dual_u[i]))
         for i in range(d.n_dual_edges)
         if d.TOP in (int(d.dual_u[i]), int(d.dual_v[i]))),
        key=lambda t: dual_pos(t[0]))
    banned = {d.LEFT, d.RIGHT, d.BOTTOM, d.TOP}

    def closed_ok(de):
        pe = d.gate[de]
        return pe < 0 or not local[pe]

    def exits_after(face, entry):
        for cyc in rot.get(face, []):
            if entry in cyc:
                k = cyc.index(entry)
                return cyc[k + 1:] + cyc[:k]
        return []

    def first_target(face, entry):
        hits = target_edges.get(face)
        if not hits:
            return None
        for cyc in rot.get(face, []):
            if entry in cyc:
                k = cyc.index(entry)
                for de in cyc[k + 1:] + cyc[:k + 1]:
                    if de in hits:
                        return de
        return min(hits)

    for start_edge, start_face in top_in:
        if start_face in banned or not closed_ok(start_edge):
            continue
        visited = {start_face}
        parent = {start_face: (None, start_edge)}
        stack = [start_face]
        found = None
        while stack:
            f = stack.pop()
            entry = parent[f][1]
            t = first_target(f, entry)
            if t is not None:
                found = (f, t)
                break
            for de in reversed(exits_after(f, entry)):
                if not closed_ok(de):
                    continue
                u, v = int(d.dual_u[de]), int(d.dual_v[de])
                nb = v if u == f else u
                if nb in visited or nb in banned:
                    continue
                visited.add(nb)
                parent[nb] = (f, de)
                stack.append(nb)
        if found is None:
            continue
        f, t = found
        nodes = [f]
        dedges = []
        while parent[nodes[-1]][0] is not None:
            pf, pe = parent[nodes[-1]]
            dedges.append(pe)
            nodes.append(pf)
        dedges.append(parent[nodes[-1]][1])
        nodes.append(d.TOP)
        nodes.reverse()
        dedges.reverse()
        amb = tuple(int(sw.edge_ids[de]) for de in dedges if de < d.n_tagged)
        e_psi = int(sw.edge_ids[t])
        return LatticePath(amb, tuple(int(x) for x in nodes), "closed-dual"), e_psi
    return None, None


# ---------------------------------------------------------------------------
# pivotal edges


class EventSpec:
    """An evaluable event: indicator(config) -> bool."""

    name = "event"

    def indicator(self, config: BondConfiguration) -> bool:
        raise NotImplementedError


class CrossingEvent(EventSpec):
    def __init__(self, direction: str = "LR", rect: Rect | None = None):
        self.direction = direction
        self.rect = rect
        self.name = f"crossing-{direction.lower()}"

    def indicator(self, config):
        return crossing_tester(config.graph, self.direction, self.rect).one(
            config.bits)


def pivotal_edges(config: BondConfiguration, event: EventSpec) -> np.ndarray:
    """Exactly the edges whose single flip changes the event indicator.

    Plain crossing events use a labels/bridge computation; any other event
    falls back to brute-force flips.
    """
    if isinstance(event, CrossingEvent):
        return _pivotal_crossing(config, event)
    base = event.indicator(config)
    out = [e for e in range(config.graph.n_edges)
           if event.indicator(flip_edge(config, e)) != base]
    return np.asarray(out, dtype=np.int64)


def _bridges(pairs):
    """Bridge edge indices of the undirected multigraph given as (u, v) pairs,
    with the tree-side endpoints (index, parent, child)."""
    adj = defaultdict(list)
    for i, (u, v) in enumerate(pairs):
        adj[u].append((v, i))
        adj[v].append((u, i))
    disc, low = {}, {}
    out = []
    counter = [0]
    for root in list(adj):
        if root in disc:
            continue
        disc[root] = low[root] = counter[0]
        counter[0] += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            u, pe, it = stack[-1]
            advanced = False
            for v, ei in it:
                if ei == pe:
                    continue
                if v not in disc:
                    disc[v] = low[v] = counter[0]
                    counter[0] += 1
                    stack.append((v, ei, iter(adj[v])))
                    advanced = True
                    break
                if disc[v] < low[u]:
                    low[u] = disc[v]
            if advanced:
                continue
            stack.pop()
            if stack:
                pu = stack[-1][0]
                if low[u] < low[pu]:
                    low[pu] = low[u]
                if low[u] > disc[pu]:
                    out.append((pe, pu, u))
    return out


def _pivotal_crossing(config, event: CrossingEvent) -> np.ndarray:
    g = config.graph
    rect = event.rect or g.rect
    sw = subwindow(g, rect)
    gsub = sw.graph
    bits = sw.local_bits(config.bits)
    if event.direction == "LR":
        a_ids = gsub.boundary_line_ids("left")
        b_ids = gsub.boundary_line_ids("right")
    else:
        a_ids = gsub.boundary_line_ids("bottom")
        b_ids = gsub.boundary_line_ids("top")
    n = gsub.n_vertices
    _, labels = open_component_labels(n, gsub.edges, bits)
    a_labs = set(labels[a_ids].tolist())
    b_labs = set(labels[b_ids].tolist())
    out = []
    if not (a_labs & b_labs):
        # not occurring: a closed edge is pivotal iff opening it joins an
        # a-side component to a b-side component
        for i in np.nonzero(bits == 0)[0]:
            u, v = gsub.edges[i]
            lu, lv = int(labels[u]), int(labels[v])
            if ((lu in a_labs and lv in b_labs)
                    or (lv in a_labs and lu in b_labs)):
                out.append(int(sw.edge_ids[i]))
        return np.asarray(sorted(out), dtype=np.int64)
    # occurring: pivotal open edges are bridges separating the virtual sides
    src, dst = n, n + 1
    pairs = [(int(gsub.edges[i, 0]), int(gsub.edges[i, 1]))
             for i in np.nonzero(bits)[0]]
    open_ids = np.nonzero(bits)[0]
    m = len(pairs)
    pairs += [(src, int(a)) for a in a_ids]
    pairs += [(dst, int(b)) for b in b_ids]
    bridges = _bridges(pairs)
    if not bridges:
        return np.asarray([], dtype=np.int64)
    bridge_set = {ei for ei, _, _ in bridges}
    # contract non-bridge edges, then walk the bridge tree from src to dst
    uf = {}

    def find(x):
        while uf.get(x, x) != x:
            uf[x] = uf.get(uf[x], uf[x])
            x = uf[x]
        return x

    for i, (u, v) in enumerate(pairs):
        if i not in bridge_set:
            ru, rv = find(u), find(v)
            if ru != rv:
                uf[ru] = rv
    tree = defaultdict(list)
    for ei, u, v in bridges:
        tree[find(u)].append((find(v), ei))
        tree[find(v)].append((find(u), ei))
    s, t = find(src), find(dst)
    prev = {s: (None, None)}
    stack = [s]
    while stack:
        u = stack.pop()
        if u == t:
            break
        for v, ei in tree[u]:
            if v not in prev:
                prev[v] = (u, ei)
                stack.append(v)
    cur = t
    while prev[cur][0] is not None:
        ei = prev[cur][1]
        if ei < m:
            out.append(int(sw.edge_ids[open_ids[ei]]))
        cur = prev[cur][0]
    return np.asarray(sorted(out), dtype=np.int64)


# ---------------------------------------------------------------------------
# frame events


def _frame_rects(base, n, shift):
    s = base ** n
    t = s // base
    dx, dy = shift
    return [
        (Rect(dx, dy, dx + s, dy + t), "LR"),
        (Rect(dx, dy, dx + t, dy + s), "UD"),
        (Rect(dx, dy + s - t, dx + s, dy + s), "LR"),
        (Rect(dx + s - t, dy, dx + s, dy + s), "UD"),
    ]


def detect_delta(config: BondConfiguration, n: int, shift=(0, 0)) -> bool:
    """Four strip crossings framing the level-n box at the given shift: open
    left-right crossings of the bottom and top thirds, and up-down crossings
    of the left and right thirds."""
    if n < 1:
        raise GeometryError("frame event needs n >= 1")
    g = config.graph
    for rect, direction in _frame_rects(g.generator.base, n, shift):
        if not g.rect.contains(rect):
            raise GeometryError(f"window does not contain {rect}")
        if not crossing_tester(g, direction, rect).one(config.bits):
            return False
    return True


def _strip_crossing_components(config, rect, direction):
    """Per crossing component of the strip: the ambient vertex ids it contains."""
    sw = subwindow(config.graph, rect)
    gsub = sw.graph
    _, labels = sw.labels(config.bits)
    if direction == "LR":
        a = gsub.boundary_line_ids("left")
        b = gsub.boundary_line_ids("right")
    else:
        a = gsub.boundary_line_ids("bottom")
        b = gsub.boundary_line_ids("top")
    good = sorted(set(labels[a].tolist()) & set(labels[b].tolist()))
    return [sw.vertex_ids[labels == lab] for lab in good]


def spanning_cluster(config: BondConfiguration, n: int, shift=(0, 0)):
    """Ambient open-cluster label containing all four frame crossings, or None."""
    if not detect_delta(config, n, shift):
        return None
    g = config.graph
    _, amb = open_component_labels(g.n_vertices, g.edges, config.bits)
    common = None
    for rect, direction in _frame_rects(g.generator.base, n, shift):
        labs = set()
        for vids in _strip_crossing_components(config, rect, direction):
            labs.update(amb[vids].tolist())
        common = labs if common is None else (common & labs)
    if not common:
        return None
    return int(min(common))


def detect_delta_chain(config: BondConfiguration, x, m0: int) -> bool:
    """Nested frame events at the origin's and at x's boxes for every scale from
    m0+1 up to x's level, with both scale-m0 boxes fully open."""
    if m0 < 1:
        raise GeometryError("chain needs m0 >= 1")
    g = config.graph
    T = g.generator
    lx = level_of(x, T)
    for n in range(m0 + 1, lx + 1):
        if not detect_delta(config, n, (0, 0)):
            return False
        if not detect_delta(config, n, nth_box(x, n, T)):
            return False
    s = T.base ** m0
    for dx, dy in {(0, 0), nth_box(x, m0, T)}:
        rect = Rect(dx, dy, dx + s, dy + s)
        if not g.rect.contains(rect):
            raise GeometryError(f"window does not contain {rect}")
        sw = subwindow(g, rect)
        if not config.bits[sw.edge_ids].all():
            return False
    return True


def detect_surrounding_dual(config: BondConfiguration, x, n: int) -> bool:
    """Closed-dual crossings, each joining the shorter sides of one of the four
    rectangles framing x's level-n box."""
    g = config.graph
    s = g.generator.base ** n
    wx, wy = nth_box(x, n, g.generator)
    rects = [
        Rect(wx - s, wy + s, wx + 2 * s, wy + 2 * s),
        Rect(wx - s, wy - s, wx + 2 * s, wy),
        Rect(wx + s, wy - s, wx + 2 * s, wy + 2 * s),
        Rect(wx - s, wy - s, wx, wy + 2 * s),
    ]
    for rect in rects:
        if not g.rect.contains(rect):
            raise GeometryError(f"window does not contain {rect}")
        if not dual_crossing_tester(g, rect.short_direction(), rect).one(
                config.bits):
            return False
    return True


def detect_E(config: BondConfiguration, n: int, shift=(0, 0)) -> bool:
    """Open connection along the top edge of the level-n box's bottom strip,
    joining the left and right thirds of the line while avoiding the open
    middle segment."""
    if n < 1:
        raise GeometryError("needs n >= 1")
    g = config.graph
    s = g.generator.base ** n
    t = s // g.generator.base
    dx, dy = shift
    rect = Rect(dx, dy, dx + s, dy + t)
    if not g.rect.contains(rect):
        raise GeometryError(f"window does not contain {rect}")
    key = ("detectE", n, (dx, dy))
    tester = g._cache.get(key)
    if tester is None:
        sw = subwindow(g, rect)
        v = sw.graph.vertices
        on_line = v[:, 1] == dy + t
        side_a = np.nonzero(on_line & (v[:, 0] <= dx + t))[0]
        side_b = np.nonzero(on_line & (v[:, 0] >= dx + 2 * t))[0]
        forbidden = np.nonzero(on_line & (v[:, 0] > dx + t)
                               & (v[:, 0] < dx + 2 * t))[0]
        tester = CrossingTester(sw, side_a, side_b, forbidden)
        g._cache[key] = tester
    return tester.one(config.bits)


# ---------------------------------------------------------------------------
# corner hook-up events


def _c_geometry(n: int, corner: str, shift, base: int):
    """Rectangles and vertex segments of the corner event, ambient coordinates."""
    s = base ** n
    box = base ** (n + 2)
    geo = {
        "rect1": Rect(-3 * s, 2 * s, 3 * s, 4 * s),
        "rect2": Rect(2 * s, 0, 4 * s, 3 * s),
        "u1": Rect(0, 2 * s, 3 * s, 4 * s),
        "u2": Rect(2 * s, 0, 4 * s, 3 * s),
        "side1": ("x", -3 * s, 2 * s, 4 * s),  # axis, value, lo, hi
        "seg1": ("x", 3 * s, 3 * s, 4 * s),
        "side2": ("y", 0, 2 * s, 4 * s),
        "seg2": ("y", 3 * s, 3 * s, 4 * s),
    }
    fx = corner in ("br", "tr")
    fy = corner in ("tl", "tr")

    def trect(r: Rect) -> Rect:
        x0, x1 = (box - r.x1, box - r.x0) if fx else (r.x0, r.x1)
        y0, y1 = (box - r.y1, box - r.y0) if fy else (r.y0, r.y1)
        return Rect(x0 + shift[0], y0 + shift[1], x1 + shift[0], y1 + shift[1])

    def tseg(seg):
        axis, val, lo, hi = seg
        if axis == "x":
            nv = (box - val if fx else val) + shift[0]
            nlo, nhi = ((box - hi, box - lo) if fy else (lo, hi))
            return ("x", nv, nlo + shift[1], nhi + shift[1])
        nv = (box - val if fy else val) + shift[1]
        nlo, nhi = ((box - hi, box - lo) if fx else (lo, hi))
        return ("y", nv, nlo + shift[0], nhi + shift[0])

    return {k: (trect(v) if isinstance(v, Rect) else tseg(v))
            for k, v in geo.items()}


def _seg_vertex_ids(gsub, seg):
    v = gsub.vertices
    axis, val, lo, hi = seg
    if axis == "x":
        sel = (v[:, 0] == val) & (v[:, 1] >= lo) & (v[:, 1] <= hi)
    else:
        sel = (v[:, 1] == val) & (v[:, 0] >= lo) & (v[:, 0] <= hi)
    return np.nonzero(sel)[0]


def _reaching_endpoints(config, rect, side, seg):
    """Ambient ids of seg-vertices open-connected to the side within the rect."""
    g = config.graph
    if not g.rect.contains(rect):
        raise GeometryError(f"window does not contain {rect}")
    sw = subwindow(g, rect)
    _, labels = sw.labels(config.bits)
    side_ids = _seg_vertex_ids(sw.graph, side)
    seg_ids = _seg_vertex_ids(sw.graph, seg)
    side_labs = np.unique(labels[side_ids])
    hits = seg_ids[np.isin(labels[seg_ids], side_labs)]
    return sw.vertex_ids[hits]


def detect_C(config: BondConfiguration, n: int, corner: str = "bl",
             shift=(0, 0)) -> bool:
    """Corner hook-up near the central hole of the level-(n+2) box: a long
    horizontal crossing reaching the hole's facing wall, a vertical crossing
    reaching the hole's other wall, and an open connection between two such
    crossing endpoints inside the clipped union of the two rectangles."""
    if corner not in ("bl", "br", "tl", "tr"):
        raise DomainError(f"unknown corner {corner!r}")
    g = config.graph
    geo = _c_geometry(n, corner, shift, g.generator.base)
    s1 = _reaching_endpoints(config, geo["rect1"], geo["side1"], geo["seg1"])
    if len(s1) == 0:
        return False
    s2 = _reaching_endpoints(config, geo["rect2"], geo["side2"], geo["seg2"])
    if len(s2) == 0:
        return False
    sel = np.zeros(g.n_edges, dtype=bool)
    for rect in (geo["u1"], geo["u2"]):
        sel[subwindow(g, rect).edge_ids] = True
    _, labels = open_component_labels(g.n_vertices, g.edges[sel],
                                      config.bits[sel])
    return bool(np.intersect1d(labels[s1], labels[s2]).size)


def detect_C_composite(config: BondConfiguration, n: int, which: str = "all",
                       shift=(0, 0)) -> bool:
    corners = {"bottom": ("bl", "br"), "top": ("tl", "tr"),
               "all": ("bl", "br", "tl", "tr")}[which]
    return all(detect_C(config, n, c, shift) for c in corners)


def check_d_implication(config: BondConfiguration, n: int) -> bool:
    """Per-configuration implication: if either corner/crossing conjunction
    holds, the level-(n+2) box has an open left-right crossing."""
    if n < 1:
        raise GeometryError("needs n >= 1")
    g = config.graph
    base = g.generator.base
    s1 = base ** (n + 1)
    up = (s1, 2 * s1)
    lo = (s1, 0)

    def box_crossing(m, shift):
        side = base ** m
        rect = Rect(shift[0], shift[1], shift[0] + side, shift[1] + side)
        return crossing_tester(g, "LR", rect).one(config.bits)

    left = ((detect_C_composite(config, n, "top")
             and detect_C_composite(config, n - 1, "all", up)
             and box_crossing(n + 1, up))
            or (detect_C_composite(config, n, "bottom")
                and detect_C_composite(config, n - 1, "all", lo)
                and box_crossing(n + 1, lo)))
    if not left:
        return True
    return box_crossing(n + 2, (0, 0))


# ---------------------------------------------------------------------------
# annulus pivotal scan


def build_dual_cached(g) -> DualGraph:
    d = g._cache.get("dual")
    if d is None:
        d = build_dual(g)
        g._cache["dual"] = d
    return d


def _edges_in_annulus(g, outer: Rect, inner: Rect):
    v = g.vertices
    mp = g.edge_midpoints()
    e = g.edges
    p, q = v[e[:, 0]], v[e[:, 1]]
    in_outer = ((np.minimum(p[:, 0], q[:, 0]) >= outer.x0)
                & (np.maximum(p[:, 0], q[:, 0]) <= outer.x1)
                & (np.minimum(p[:, 1], q[:, 1]) >= outer.y0)
                & (np.maximum(p[:, 1], q[:, 1]) <= outer.y1))
    in_inner = ((mp[:, 0] > inner.x0) & (mp[:, 0] < inner.x1)
                & (mp[:, 1] > inner.y0) & (mp[:, 1] < inner.y1))
    return np.nonzero(in_outer & ~in_inner)[0]


def annulus_pivotal_scan(config: BondConfiguration, scales,
                         strip: Rect | None = None) -> dict:
    """Locate the lowest crossing r and the leftmost closed dual path from the
    top side of the strip; then per scale report whether a closed-dual hook
    from the path back to r exists inside that scale's annulus, and whether
    the annulus contains a pivotal edge for the crossing event.
    """
    g = config.graph
    base = g.generator.base
    scales = sorted(int(s) for s in scales)
    r = lowest_crossing(config)
    if r is None:
        raise ArgumentError("configuration has no open left-right crossing")
    n_k = scales[-1]
    if strip is None:
        strip = Rect(g.rect.x0, g.rect.y0, g.rect.x0 + base ** n_k, g.rect.y1)
    d_amb = build_dual_cached(g)
    psi, e_psi = leftmost_closed_dual_path(config, d_amb, r, strip)
    report = {"r": r, "psi": psi, "e_psi": e_psi, "per_scale": []}
    if psi is None:
        return report
    piv = set(pivotal_edges(config, CrossingEvent("LR")).tolist())
    mid = g.edge_midpoints()[e_psi]
    sw_full = subwindow(g, g.rect)
    d = sw_full.dual
    full_map = sw_full.edge_ids
    inv_full = np.empty_like(full_map)
    inv_full[full_map] = np.arange(len(full_map))
    r_local = {int(inv_full[e]) for e in r.edge_ids}
    psi_local = {int(inv_full[e]) for e in psi.edge_ids}
    above = _geometric_flood(sw_full, r_local, [d.TOP],
                             {d.LEFT, d.RIGHT, d.BOTTOM})
    psi_faces = set()
    for e in psi_local:
        psi_faces.add(int(d.tagged_u[e]))
        psi_faces.add(int(d.tagged_v[e]))
    # the descent's right region is bounded below by r and must not leak
    # through the descent's own faces
    right_of_psi = _geometric_flood(sw_full, psi_local | r_local, [d.RIGHT],
                                    {d.LEFT, d.TOP, d.BOTTOM} | psi_faces)
    allowed = (right_of_psi | psi_faces) & above
    for n_j in scales[:-1]:
        S = base ** (n_j + 2)
        bx = int(np.floor(mid[0] / S)) * S
        by = int(np.floor(mid[1] / S)) * S
        po, pi = base ** (n_j + 1), 2 * base ** n_j
        outer = Rect(max(bx - po, g.rect.x0), max(by - po, g.rect.y0),
                     min(bx + S + po, g.rect.x1), min(by + S + po, g.rect.y1))
        inner = Rect(bx - pi, by - pi, bx + S + pi, by + S + pi)
        ann = set(int(inv_full[e])
                  for e in _edges_in_annulus(g, outer, inner).tolist())
        cj = _detect_cj(config, sw_full, r_local, psi_local, ann, allowed)
        has_piv = bool(piv & {int(full_map[e]) for e in ann})
        report["per_scale"].append({
            "scale": n_j, "c_j": cj, "pivotal_in_annulus": has_piv,
            "implication_ok": (not cj) or has_piv,
        })
    return report


def _detect_cj(config, sw_full, r_local, psi_local, ann_local, allowed):
    """Closed-dual path inside the annulus, weakly right of the dual descent and
    above r, from a face on the descent to a face flanking an annulus r-edge."""
    d = sw_full.dual
    local_bits = sw_full.local_bits(config.bits)
    targets = set()
    for e in (r_local & ann_local):
        for f in (int(d.tagged_u[e]), int(d.tagged_v[e])):
            if f in allowed:
                targets.add(f)
    if not targets:
        return False
    sources = set()
    for e in (psi_local & ann_local):
        for f in (int(d.tagged_u[e]), int(d.tagged_v[e])):
            if f in allowed:
                sources.add(f)
    if not sources:
        return False
    if sources & targets:
        return True
    adj = _dual_adjacency(sw_full)
    seen = set(sources)
    stack = list(sources)
    while stack:
        f = stack.pop()
        for gnode, de in adj[f]:
            if gnode in seen or gnode not in allowed:
                continue
            pe = d.gate[de]
            if pe >= 0 and (local_bits[pe] or pe not in ann_local):
                continue
            if gnode in targets:
                return True
            seen.add(gnode)
            stack.append(gnode)
    return False
