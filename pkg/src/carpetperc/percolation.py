"""Bond configurations, reproducible sampling, connectivity, and the basic
crossing/circuit detectors."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ._kernels import pair_connected_many
from .carpet import Rect, SpongeGraph, window_graph
from .dualgraph import DualGraph, build_dual
from .errors import DomainError, GeometryError, NotAVertexError

# ---------------------------------------------------------------------------
# reproducible RNG: a Philox stream per (seed, tag, replica)


def _tag64(tag: str) -> int:
    return int.from_bytes(hashlib.blake2s(tag.encode()).digest()[:8], "little")


def replica_rng(seed: int, tag: str, replica: int) -> np.random.Generator:
    key = np.array([np.uint64(seed & (2**64 - 1)),
                    np.uint64(_tag64(tag) ^ (replica & (2**64 - 1)))],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def replica_uniforms(seed: int, tag: str, replica: int, n: int) -> np.ndarray:
    return replica_rng(seed, tag, replica).random(n)


# ---------------------------------------------------------------------------
# configurations


@dataclass(frozen=True)
class BondConfiguration:
    """Open/closed state per edge id of a window graph."""

    graph: SpongeGraph
    bits: np.ndarray  # (E,) uint8, 1 = open
    p: float | None = None
    seed: int | None = None
    replica: int | None = None

    def __post_init__(self):
        if len(self.bits) != self.graph.n_edges:
            raise DomainError("bit vector length must equal the edge count")

    def open_fraction(self) -> float:
        return float(self.bits.mean()) if len(self.bits) else 0.0


@dataclass(frozen=True)
class UniformField:
    """One uniform per edge; thresholding yields monotone-coupled configurations."""

    graph: SpongeGraph
    u: np.ndarray
    seed: int | None = None
    replica: int | None = None


def _check_p(p):
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"p={p} outside [0, 1]")


def sample_field(g: SpongeGraph, seed: int, replica: int = 0,
                 tag: str = "field") -> UniformField:
    u = replica_uniforms(seed, tag, replica, g.n_edges)
    return UniformField(g, u, seed=seed, replica=replica)


def sample_config(g: SpongeGraph, p: float, seed: int, replica: int = 0,
                  tag: str = "sample") -> BondConfiguration:
    """I.i.d. Bernoulli(p) edge states, reproducible for fixed (seed, replica)."""
    _check_p(p)
    u = replica_uniforms(seed, tag, replica, g.n_edges)
    bits = (u < p).astype(np.uint8)
    return BondConfiguration(g, bits, p=p, seed=seed, replica=replica)


def threshold_config(f: UniformField, p: float) -> BondConfiguration:
    _check_p(p)
    return BondConfiguration(f.graph, (f.u < p).astype(np.uint8), p=p,
                             seed=f.seed, replica=f.replica)


def flip_edge(config: BondConfiguration, e: int) -> BondConfiguration:
    if not (0 <= e < len(config.bits)):
        raise IndexError(f"edge id {e} out of range")
    bits = config.bits.copy()
    bits[e] ^= 1
    return replace(config, bits=bits)


# ---------------------------------------------------------------------------
# clusters


class UnionFind:
    """Disjoint sets over integer ids with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, x: int, y: int) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]
        return True

    def same(self, x: int, y: int) -> bool:
        return self.find(x) == self.find(y)


class ClusterPartition:
    """Open clusters of a configuration, with per-cluster coordinate extents."""

    def __init__(self, config: BondConfiguration):
        g = config.graph
        n = g.n_vertices
        _, labels = open_component_labels(g.n_vertices, g.edges, config.bits)
        self.labels = labels
        self.config = config
        v = g.vertices
        self.n_clusters = int(labels.max()) + 1 if n else 0
        self.extents = {}
        for lab in range(self.n_clusters):
            pts = v[labels == lab]
            self.extents[lab] = (pts[:, 0].min(), pts[:, 1].min(),
                                 pts[:, 0].max(), pts[:, 1].max())

    def label_of(self, vid: int) -> int:
        return int(self.labels[vid])

    def same(self, u: int, v: int) -> bool:
        return self.labels[u] == self.labels[v]


def open_component_labels(n_nodes: int, edges: np.ndarray, bits: np.ndarray):
    """Component labels of the open subgraph (scipy connected_components)."""
    sel = bits.astype(bool)
    e = edges[sel]
    m = coo_matrix((np.ones(len(e), dtype=np.int8), (e[:, 0], e[:, 1])),
                   shape=(n_nodes, n_nodes))
    return connected_components(m, directed=False)


def clusters(config: BondConfiguration) -> ClusterPartition:
    return ClusterPartition(config)


def connected(config: BondConfiguration, x, y) -> bool:
    """Are lattice points x and y in one open cluster?"""
    g = config.graph
    u = g.vertex_id(*x)
    v = g.vertex_id(*y)
    if u == v:
        return True
    _, labels = open_component_labels(g.n_vertices, g.edges, config.bits)
    return bool(labels[u] == labels[v])


# ---------------------------------------------------------------------------
# subwindows: restriction of a configuration to a rectangle


class SubWindow:
    """A rectangle inside a window graph, with edge ids mapped to the parent."""

    def __init__(self, parent: SpongeGraph, rect: Rect):
        if not parent.rect.contains(rect):
            raise GeometryError(f"{rect} not contained in the ambient window")
        self.parent = parent
        self.rect = rect
        sl = (slice(rect.y0 - parent.rect.y0, rect.y1 - parent.rect.y0),
              slice(rect.x0 - parent.rect.x0, rect.x1 - parent.rect.x0))
        mask = parent.cell_mask[sl]
        self.graph = SpongeGraph(rect, mask.copy(), parent.generator,
                                 kind="subwindow")
        g = self.graph
        # map local vertices and edges to parent ids
        pv = parent._vid_grid
        vx = g.vertices[:, 0] - parent.rect.x0
        vy = g.vertices[:, 1] - parent.rect.y0
        self.vertex_ids = pv[vy, vx]
        eidx = parent.edge_index()
        pu = self.vertex_ids[g.edges[:, 0]]
        pw = self.vertex_ids[g.edges[:, 1]]
        self.edge_ids = np.fromiter(
            (eidx[(int(a), int(b))] if a < b else eidx[(int(b), int(a))]
             for a, b in zip(pu, pw)),
            dtype=np.int64, count=g.n_edges)
        self._dual = None

    @property
    def dual(self) -> DualGraph:
        if self._dual is None:
            self._dual = build_dual(self.graph)
        return self._dual

    def local_bits(self, bits: np.ndarray) -> np.ndarray:
        return bits[self.edge_ids]

    def labels(self, bits: np.ndarray):
        g = self.graph
        return open_component_labels(g.n_vertices, g.edges, self.local_bits(bits))


def subwindow(parent: SpongeGraph, rect: Rect) -> SubWindow:
    key = ("sub", rect)
    sw = parent._cache.get(key)
    if sw is None:
        sw = SubWindow(parent, rect)
        parent._cache[key] = sw
    return sw


# ---------------------------------------------------------------------------
# crossing testers (kernel-backed, reusable across samples)


class CrossingTester:
    """Open crossing between two vertex sets of a subwindow, evaluated on bits
    indexed by the *ambient* graph's edge ids."""

    def __init__(self, sw: SubWindow, side_a: np.ndarray, side_b: np.ndarray,
                 forbidden: np.ndarray | None = None):
        g = sw.graph
        n = g.n_vertices
        keep = np.ones(g.n_edges, dtype=bool)
        if forbidden is not None and len(forbidden):
            bad = np.zeros(n, dtype=bool)
            bad[forbidden] = True
            keep = ~(bad[g.edges[:, 0]] | bad[g.edges[:, 1]])
            amask = np.zeros(n, dtype=bool)
            amask[side_a] = True
            side_a = np.nonzero(amask & ~bad)[0]
            bmask = np.zeros(n, dtype=bool)
            bmask[side_b] = True
            side_b = np.nonzero(bmask & ~bad)[0]
        src, dst = n, n + 1
        u = np.concatenate([g.edges[keep, 0],
                            side_a, np.full(len(side_b), dst, dtype=np.int64)])
        v = np.concatenate([g.edges[keep, 1],
                            np.full(len(side_a), src, dtype=np.int64), side_b])
        gate = np.concatenate([sw.edge_ids[keep],
                               np.full(len(side_a) + len(side_b), -1,
                                       dtype=np.int64)])
        self.u = u.astype(np.int64)
        self.v = v.astype(np.int64)
        self.gate = gate
        self.src, self.dst = src, dst
        self.n_nodes = n + 2
        self.empty = len(side_a) == 0 or len(side_b) == 0

    def many(self, bits2d: np.ndarray) -> np.ndarray:
        if self.empty:
            return np.zeros(len(bits2d), dtype=np.uint8)
        return pair_connected_many(np.ascontiguousarray(bits2d, dtype=np.uint8),
                                   self.u, self.v, self.gate, False,
                                   self.src, self.dst, self.n_nodes)

    def one(self, bits: np.ndarray) -> bool:
        return bool(self.many(bits[None, :])[0])


class DualCrossingTester:
    """Closed-dual crossing between two opposite sectors of a subwindow's dual,
    with the other two sectors removed."""

    def __init__(self, sw: SubWindow, direction: str):
        d = sw.dual
        if direction == "LR":
            src, dst = d.LEFT, d.RIGHT
            excl = (d.BOTTOM, d.TOP)
        elif direction == "UD":
            src, dst = d.TOP, d.BOTTOM
            excl = (d.LEFT, d.RIGHT)
        else:
            raise DomainError(f"direction must be LR or UD, got {direction}")
        keep = ~(np.isin(d.dual_u, excl) | np.isin(d.dual_v, excl))
        self.u = d.dual_u[keep]
        self.v = d.dual_v[keep]
        gate = d.gate[keep]
        # gates refer to the subwindow's edges; lift to ambient edge ids
        lift = np.where(gate >= 0, sw.edge_ids[np.clip(gate, 0, None)], -1)
        self.gate = lift.astype(np.int64)
        self.src, self.dst = src, dst
        self.n_nodes = d.n_nodes

    def many(self, bits2d: np.ndarray) -> np.ndarray:
        return pair_connected_many(np.ascontiguousarray(bits2d, dtype=np.uint8),
                                   self.u, self.v, self.gate, True,
                                   self.src, self.dst, self.n_nodes)

    def one(self, bits: np.ndarray) -> bool:
        return bool(self.many(bits[None, :])[0])


def crossing_tester(graph: SpongeGraph, direction: str, rect: Rect | None = None,
                    side_a: np.ndarray | None = None,
                    side_b: np.ndarray | None = None,
                    forbidden: np.ndarray | None = None) -> CrossingTester:
    """Tester for an open crossing of `rect` (default: the whole window).

    LR joins the left/right boundary vertex lines, UD the bottom/top ones;
    side_a/side_b override the endpoint sets (local subwindow vertex ids).
    """
    rect = rect or graph.rect
    key = ("crossing", rect, direction,
           None if side_a is None else side_a.tobytes(),
           None if side_b is None else side_b.tobytes(),
           None if forbidden is None else forbidden.tobytes())
    t = graph._cache.get(key)
    if t is not None:
        return t
    sw = subwindow(graph, rect)
    if side_a is None or side_b is None:
        if direction == "LR":
            a = sw.graph.boundary_line_ids("left")
            b = sw.graph.boundary_line_ids("right")
        elif direction == "UD":
            a = sw.graph.boundary_line_ids("bottom")
            b = sw.graph.boundary_line_ids("top")
        else:
            raise DomainError(f"direction must be LR or UD, got {direction}")
        side_a = a if side_a is None else side_a
        side_b = b if side_b is None else side_b
    t = CrossingTester(sw, side_a, side_b, forbidden)
    graph._cache[key] = t
    return t


def dual_crossing_tester(graph: SpongeGraph, direction: str,
                         rect: Rect | None = None) -> DualCrossingTester:
    rect = rect or graph.rect
    key = ("dualcrossing", rect, direction)
    t = graph._cache.get(key)
    if t is None:
        t = DualCrossingTester(subwindow(graph, rect), direction)
        graph._cache[key] = t
    return t


def has_crossing(config: BondConfiguration, direction: str = "LR",
                 rect: Rect | None = None) -> bool:
    """Open path joining the two opposite boundary vertex lines of the window."""
    return crossing_tester(config.graph, direction, rect).one(config.bits)


def has_dual_crossing(config: BondConfiguration, dual: DualGraph,
                      direction: str = "UD") -> bool:
    """Closed-dual path joining two opposite boundary sectors.

    Traversable dual edges: those whose primal edge is closed, plus the
    unconditional hole/sector free adjacencies.
    """
    dual.check_pairing(config)
    return dual_crossing_tester(config.graph, direction).one(config.bits)


# ---------------------------------------------------------------------------
# circuits by planar separation


def has_circuit_around(config: BondConfiguration, n: int,
                       mode: str = "open") -> bool:
    """Circuit detection at scale n, by complementary reachability.

    mode="open": an open circuit in the level-n box surrounds its central hole
    iff no closed-dual path joins the hole face to a boundary sector.
    mode="dual-closed": a closed-dual circuit in [-3^n, 3^n]^2 surrounds the
    center square [-3^(n-2), 3^(n-2)]^2 iff no open path joins the center
    region to the window boundary.
    """
    g = config.graph
    L = g.generator.base
    if mode == "open":
        if n < 1:
            raise GeometryError("open-circuit detection needs n >= 1")
        side = L ** n
        rect = Rect(0, 0, side, side)
        if not g.rect.contains(rect):
            raise GeometryError("window does not contain the level-n box")
        key = ("circuit-open", n)
        t = g._cache.get(key)
        if t is None:
            sw = subwindow(g, rect)
            d = sw.dual
            hole_cell = (side // L, side // L)
            fid = d.face_of_cell(*hole_cell)
            if d.face_kind(fid) != "hole":
                raise GeometryError("no central hole at this scale")
            virt = d.n_nodes
            u = np.concatenate([d.dual_u, np.array([d.LEFT, d.RIGHT, d.BOTTOM,
                                                    d.TOP], dtype=np.int64)])
            v = np.concatenate([d.dual_v, np.full(4, virt, dtype=np.int64)])
            gate = np.concatenate([
                np.where(d.gate >= 0, sw.edge_ids[np.clip(d.gate, 0, None)], -1),
                np.full(4, -1, dtype=np.int64)])
            t = (u.astype(np.int64), v.astype(np.int64), gate.astype(np.int64),
                 fid, virt, d.n_nodes + 1)
            g._cache[key] = t
        u, v, gate, fid, virt, nn = t
        reach = pair_connected_many(config.bits[None, :].astype(np.uint8),
                                    u, v, gate, True, fid, virt, nn)
        return not bool(reach[0])
    if mode == "dual-closed":
        if n < 2:
            raise GeometryError("dual-circuit detection needs n >= 2")
        side = L ** n
        inner = L ** (n - 2)
        rect = Rect(-side, -side, side, side)
        if not g.rect.contains(rect):
            raise GeometryError("window does not contain [-3^n, 3^n]^2")
        sw = subwindow(g, rect)
        center = sw.graph.vertex_ids_in(Rect(-inner, -inner, inner, inner))
        gsub = sw.graph
        boundary = np.unique(np.concatenate(
            [gsub.boundary_line_ids(s) for s in ("left", "right", "bottom", "top")]))
        t = crossing_tester(g, "LR", rect, side_a=center, side_b=boundary)
        return not t.one(config.bits)
    raise DomainError(f"unknown circuit mode {mode!r}")


def full_window_for_circuit(n: int, generator=None) -> SpongeGraph:
    """Convenience ambient for has_circuit_around: the full window at level n."""
    from .carpet import CARPET3
    T = generator or CARPET3
    side = T.base ** n
    return window_graph(Rect(-side, -side, side, side), T)
