"""Binary-tree box geometry: the zig-zag family of crossing boxes climbing
toward the diagonal, their traversing events, the induced site field on the
tree, and the connection squares used to join the two mirror families."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .carpet import GeneratorSet, CARPET3, Rect, cells_retained_global
from .errors import DomainError, GeometryError, LevelError
from .percolation import crossing_tester

# ---------------------------------------------------------------------------
# tree bookkeeping


@dataclass(frozen=True)
class TreeIndex:
    """A node of the rooted binary tree; digits over {1, 2}, root = ()."""

    digits: tuple = ()

    def __post_init__(self):
        if any(d not in (1, 2) for d in self.digits):
            raise DomainError("tree digits must be 1 or 2")

    @property
    def depth(self) -> int:
        return len(self.digits)

    @property
    def parent(self) -> "TreeIndex":
        if not self.digits:
            raise DomainError("the root has no parent")
        return TreeIndex(self.digits[:-1])

    def child(self, d: int) -> "TreeIndex":
        return TreeIndex(self.digits + (d,))

    def label(self) -> str:
        return "".join(str(d) for d in self.digits) or "root"


def tree_nodes(max_depth: int):
    out = [TreeIndex()]
    frontier = [TreeIndex()]
    for _ in range(max_depth):
        frontier = [t.child(d) for t in frontier for d in (1, 2)]
        out.extend(frontier)
    return out


def tree_distance(a: TreeIndex, b: TreeIndex) -> int:
    k = 0
    for x, y in zip(a.digits, b.digits):
        if x != y:
            break
        k += 1
    return (a.depth - k) + (b.depth - k)


@dataclass(frozen=True)
class TreeStats:
    depth: int
    n2: int
    eps: int
    taus: tuple  # 1-indexed positions of digit 2, in increasing order


def tree_stats(j: TreeIndex) -> TreeStats:
    taus = tuple(i + 1 for i, d in enumerate(j.digits) if d == 2)
    n2 = len(taus)
    return TreeStats(j.depth, n2, n2 % 2, taus)


def ell_offsets(j: TreeIndex, N: int, base: int = 3):
    """Accumulated vertical/horizontal displacements of the node's anchor.

    Each tree step at depth a contributes 2*base^(N-a+1), to the vertical sum
    while the count of 2-digits so far is even and to the horizontal sum while
    it is odd.
    """
    st = tree_stats(j)
    n = st.depth
    if n > N - 1 and n > 0:
        raise LevelError(f"depth {n} too large for N={N}")
    taus = (0,) + st.taus  # tau_0 = 0
    INF = n + 1

    def tau(v):
        return taus[v] if v < len(taus) else INF

    lv = 0
    for mu in range(st.n2 // 2 + 1):
        hi = min(tau(2 * mu + 1) - 1, n)
        for a in range(tau(2 * mu), hi + 1):
            lv += 2 * base ** (N - a + 1)
    lh = 0
    for mu in range(1, (st.n2 + 1) // 2 + 1):
        hi = min(tau(2 * mu) - 1, n)
        for a in range(tau(2 * mu - 1), hi + 1):
            lh += 2 * base ** (N - a + 1)
    return lv, lh


def _deltas(j: TreeIndex, N: int, base: int = 3):
    if j.depth == 0:
        return 0, base ** N
    e = tree_stats(j).eps
    return base ** (N - j.depth) * e, base ** (N - j.depth) * (1 - e)


def anchor(j: TreeIndex, N: int, base: int = 3):
    """Anchor point of a non-root box: the parent's accumulated offsets, with
    the branching child stepping inward by the parent's delta."""
    if j.depth == 0:
        raise DomainError("the root box is placed explicitly, not by anchor")
    p = j.parent
    lv, lh = ell_offsets(p, N, base)
    dv, dh = _deltas(p, N, base)
    if j.digits[-1] == 1:
        return (base ** (N + 2) - lh, lv)
    return (base ** (N + 2) - lh - dh, lv + dv)


def mirror_anchor(j: TreeIndex, N: int, base: int = 3):
    x = anchor(j, N, base)
    return (x[1], x[0])


# ---------------------------------------------------------------------------
# box shapes


def _v_rects(N: int, k: int, base: int = 3):
    a = base ** (N - k)          # half width of the trunk
    b = base ** (N - 1 - k)      # pad half width
    top = 2 * base ** (N + 1 - k)
    return [
        ("V", Rect(-a, -a, a, top + b), "UD"),
        ("J", Rect(-a - b, top - b, a + b, top + b), "LR"),
        ("Jl", Rect(-a - b, top - b, -a + b, top + b), "UD"),
        ("Jr", Rect(a - b, top - b, a + b, top + b), "UD"),
    ]


def _lambda_rects(N: int, k: int, base: int = 3):
    a = base ** (N - k)
    b = base ** (N - 1 - k)
    left = -base ** (N + 1 - k)
    return [
        ("L", Rect(left - b, -a, a, a), "LR"),
        ("I", Rect(left - b, -a - b, left + b, a + b), "UD"),
        ("It", Rect(left - b, a - b, left + b, a + b), "LR"),
        ("Ib", Rect(left - b, -a - b, left + b, -a + b), "LR"),
    ]


def _rot_rect(r: Rect, q: int) -> Rect:
    corners = [(r.x0, r.y0), (r.x1, r.y1)]
    for _ in range(q % 4):
        corners = [(-y, x) for x, y in corners]
    xs = sorted(c[0] for c in corners)
    ys = sorted(c[1] for c in corners)
    return Rect(xs[0], ys[0], xs[1], ys[1])


def _swap_dir(d):
    return "UD" if d == "LR" else "LR"


@dataclass(frozen=True)
class BoxSpec:
    """A placed crossing box: named rectangles with traversing directions."""

    kind: str            # "V" | "L"
    index: TreeIndex
    N: int
    mirrored: bool
    rects: tuple         # of (name, Rect, direction)

    @property
    def bounding(self) -> Rect:
        rs = [r for _, r, _ in self.rects]
        return Rect(min(r.x0 for r in rs), min(r.y0 for r in rs),
                    max(r.x1 for r in rs), max(r.y1 for r in rs))

    def edge_count_rect(self):
        return self.bounding


def _quarter_turns(j: TreeIndex) -> int:
    """Rotation exponent: +eps(parent) for straight children, -eps(parent) for
    branching children, 0 at the root."""
    if j.depth == 0:
        return 0
    e = tree_stats(j.parent).eps
    return e if j.digits[-1] == 1 else (-e) % 4


def build_box(j: TreeIndex, N: int, base: int = 3,
              max_depth_check: bool = True) -> BoxSpec:
    """The node's crossing box: rotated mother shape translated to its anchor."""
    k = j.depth
    if max_depth_check and k > N - 1:
        raise LevelError(f"depth {k} needs N > {k}")
    if k == 0:
        shape = _v_rects(N, 0, base)
        shift = (base ** (N + 2), 0)
        q = 0
        kind = "V"
    else:
        if j.digits[-1] == 1:
            shape = _v_rects(N, k, base)
            kind = "V"
        else:
            shape = _lambda_rects(N, k, base)
            kind = "L"
        q = _quarter_turns(j)
        shift = anchor(j, N, base)
    rects = []
    for name, r, direction in shape:
        rr = _rot_rect(r, q).shifted(*shift)
        dd = _swap_dir(direction) if q % 2 else direction
        rects.append((name, rr, dd))
    return BoxSpec(kind, j, N, False, tuple(rects))


def mirror_box(box: BoxSpec) -> BoxSpec:
    """Reflection across the diagonal x1 = x2 (coordinates swapped)."""
    rects = []
    for name, r, d in box.rects:
        rects.append((name, Rect(r.y0, r.x0, r.y1, r.x1), _swap_dir(d)))
    return BoxSpec(box.kind, box.index, box.N, not box.mirrored, tuple(rects))


def ambient_rect(N: int, m: int, base: int = 3, pad: int = 0) -> Rect:
    """Bounding rectangle of every box and mirror box with depth <= N - m."""
    rs = []
    for j in tree_nodes(N - m):
        b = build_box(j, N, base)
        rs.append(b.bounding)
        rs.append(mirror_box(b).bounding)
    out = Rect(min(r.x0 for r in rs) - pad, min(r.y0 for r in rs) - pad,
               max(r.x1 for r in rs) + pad, max(r.y1 for r in rs) + pad)
    return out


# ---------------------------------------------------------------------------
# events on configurations


def detect_box_event(config, box: BoxSpec) -> int:
    """Indicator of the conjunction of shorter-side traversings of the box's
    rectangles."""
    g = config.graph
    for _, rect, direction in box.rects:
        if not g.rect.contains(rect):
            raise GeometryError(f"window does not contain {rect}")
        if not crossing_tester(g, direction, rect).one(config.bits):
            return 0
    return 1


def detect_mirror_event(config, j: TreeIndex, N: int) -> int:
    return detect_box_event(config, mirror_box(build_box(j, N)))


def z_value(config, j: TreeIndex, N: int) -> int:
    b = build_box(j, N)
    return detect_box_event(config, b) * detect_box_event(config, mirror_box(b))


@dataclass
class TreeField:
    N: int
    m: int
    x: dict       # TreeIndex -> 0/1
    x_mirror: dict
    z: dict

    def nodes(self):
        return tree_nodes(self.N - self.m)


def z_field(config, N: int, m: int) -> TreeField:
    """Evaluate the site field on every tree node of depth <= N - m."""
    if m < 1:
        raise LevelError("m must be >= 1")
    xs, xds, zs = {}, {}, {}
    for j in tree_nodes(N - m):
        b = build_box(j, N)
        xs[j] = detect_box_event(config, b)
        xds[j] = detect_box_event(config, mirror_box(b))
        zs[j] = xs[j] * xds[j]
    return TreeField(N, m, xs, xds, zs)


def tree_cluster(field: TreeField):
    """Root cluster of the z-field (a node is kept iff its value is 1 and its
    parent is kept) and the per-generation counts."""
    kept = set()
    root = TreeIndex()
    counts = [0] * (field.N - field.m + 1)
    if field.z.get(root, 0):
        kept.add(root)
        counts[0] = 1
        frontier = [root]
        while frontier:
            nxt = []
            for t in frontier:
                for d in (1, 2):
                    c = t.child(d)
                    if c in field.z and field.z[c]:
                        kept.add(c)
                        counts[c.depth] += 1
                        nxt.append(c)
            frontier = nxt
    return kept, counts


# ---------------------------------------------------------------------------
# connection squares


def q_center(j: TreeIndex, N: int, base: int = 3):
    st = tree_stats(j)
    lv, lh = ell_offsets(j.parent, N, base)
    if st.eps == 0:
        c = base ** (N + 2) - lh
    else:
        c = lv
    return (c, c)


def q_square(j: TreeIndex, N: int, m: int, base: int = 3) -> Rect:
    """Open connection square around the node's diagonal meeting point."""
    if j.depth != N - m:
        raise LevelError("connection squares live at depth N - m")
    s = base ** (m + 1)
    cx, cy = q_center(j, N, base)
    return Rect(cx - s, cy - s, cx + s, cy + s)


def connection_cost(m: int, base: int = 3) -> int:
    """Edge budget sufficient to wire a connection inside one square."""
    return 8 * base ** (m + 1)


def audit_q_disjoint(N: int, m: int, base: int = 3) -> bool:
    leaves = [j for j in tree_nodes(N - m) if j.depth == N - m]
    side = 2 * base ** (m + 1)
    centers = [q_center(j, N, base) for j in leaves]
    for i in range(len(centers)):
        for k in range(i + 1, len(centers)):
            dx = abs(centers[i][0] - centers[k][0])
            dy = abs(centers[i][1] - centers[k][1])
            if max(dx, dy) < side:
                return False
    return True


# ---------------------------------------------------------------------------
# geometry audit


def _rect_blocks_ok(rect: Rect, scale: int, T: GeneratorSet) -> bool:
    """No removed block of the given scale (or larger) meets the rectangle:
    every scale-aligned block overlapping it is a retained cell address.
    The box then carries exactly the sponge hole pattern below that scale,
    never a foreign larger-scale hole."""
    bx0 = rect.x0 // scale
    bx1 = (rect.x1 - 1) // scale + 1
    by0 = rect.y0 // scale
    by1 = (rect.y1 - 1) // scale + 1
    bx, by = np.meshgrid(np.arange(bx0, bx1), np.arange(by0, by1))
    return bool(cells_retained_global(bx, by, T).all())


def _rect_segments(rect: Rect):
    """Unit segments inside a rectangle, encoded as int64 keys."""
    xs = np.arange(rect.x0, rect.x1)
    ys = np.arange(rect.y0, rect.y1 + 1)
    hx, hy = np.meshgrid(xs, ys)
    h = ((hx.ravel() + 4096) * 16384 + (hy.ravel() + 4096)) * 2
    xs = np.arange(rect.x0, rect.x1 + 1)
    ys = np.arange(rect.y0, rect.y1)
    vx, vy = np.meshgrid(xs, ys)
    v = ((vx.ravel() + 4096) * 16384 + (vy.ravel() + 4096)) * 2 + 1
    return np.concatenate([h, v])


def geometry_audit(N: int, m: int, T: GeneratorSet = CARPET3) -> dict:
    """Checks that every box lies inside retained cells, that boxes of nodes at
    tree distance > 1 share no unit segment, and that the connection squares at
    depth N - m are pairwise disjoint."""
    violations = []
    nodes = tree_nodes(N - m)
    segs = {}
    for j in nodes:
        b = build_box(j, N, T.base)
        parts = list(b.rects) + list(mirror_box(b).rects)
        for name, rect, _ in parts:
            # trunks carry the sponge pattern at the box scale; connectors and
            # end pads live one scale down
            exp = N - j.depth if name in ("V", "L") else N - 1 - j.depth
            scale = T.base ** exp
            if not _rect_blocks_ok(rect, scale, T):
                violations.append(
                    f"box {j.label()} rect {name} meets a hole of scale "
                    f">= {scale}")
        segs[j] = np.unique(np.concatenate(
            [_rect_segments(rect) for _, rect, _ in parts]))
    for i, a in enumerate(nodes):
        for b_ in nodes[i + 1:]:
            if tree_distance(a, b_) <= 1:
                continue
            if np.intersect1d(segs[a], segs[b_], assume_unique=True).size:
                violations.append(
                    f"boxes {a.label()} and {b_.label()} share segments")
    if not audit_q_disjoint(N, m, T.base):
        violations.append("connection squares overlap")
    return {"ok": not violations, "violations": violations,
            "n_nodes": len(nodes)}
