import numpy as np
import pytest

from carpetperc import (
    CARPET3,
    CellAddress,
    GeneratorSet,
    NotAVertexError,
    Rect,
    RegionTransform,
    apply_transform,
    build_full_window,
    build_sponge,
    check_generator_conditions,
    level_of,
    nth_box,
    retained_cell,
    separation_scale,
    window_graph,
)
from carpetperc.carpet import cells_retained_global

from conftest import mask_counts


def test_retained_cell_examples():
    assert retained_cell(CellAddress(((1, 1),))) is False
    assert retained_cell(CellAddress(((0, 0), (2, 2)))) is True
    # count of retained level-2 cells by full enumeration
    count = sum(retained_cell(CellAddress(((i1, j1), (i2, j2))))
                for i1 in range(3) for j1 in range(3)
                for i2 in range(3) for j2 in range(3))
    assert count == 64


def test_retained_cell_bad_digit():
    from carpetperc import InvalidAddressError
    with pytest.raises(InvalidAddressError):
        retained_cell(CellAddress(((3, 0),)))


def test_sponge_counts():
    g1 = build_sponge(1, 1, 1)
    assert (g1.n_vertices, g1.n_edges) == (16, 24)
    g2 = build_sponge(2, 1, 1)
    assert (g2.n_vertices, g2.n_edges) == (96, 168)
    g01 = build_sponge(0, 2, 1)
    assert (g01.n_vertices, g01.n_edges) == (6, 7)


def test_sponge_vs_kron_oracle(kron_oracle):
    for n in range(5):
        g = build_sponge(n, 1, 1)
        V, E, vm = mask_counts(kron_oracle(n))
        assert (g.n_vertices, g.n_edges) == (V, E)
        ys, xs = np.nonzero(vm)
        oracle_verts = np.column_stack([xs, ys])
        assert np.array_equal(g.vertices, oracle_verts)


def test_full_window():
    f0 = build_full_window(0)
    assert (f0.n_vertices, f0.n_edges) == (9, 12)
    f1 = build_full_window(1)
    assert (f1.n_vertices, f1.n_edges) == (49, 84)
    # the first-quadrant box is a subgraph of the full window
    g1 = build_sponge(1, 1, 1)
    fset = {tuple(v) for v in f1.vertices.tolist()}
    assert all(tuple(v) in fset for v in g1.vertices.tolist())


def test_transforms():
    g = build_sponge(1, 1, 1)
    ident = RegionTransform()
    gi = apply_transform(g, ident)
    assert np.array_equal(gi.vertices, g.vertices)
    assert np.array_equal(gi.edges, g.edges)
    refl = RegionTransform(reflect_x1=True)
    g2 = apply_transform(apply_transform(g, refl), refl)
    assert np.array_equal(g2.vertices, g.vertices)
    # shift by (3, 0) matches the right copy inside the 2-column sponge
    sh = RegionTransform.shift_by(3, 0)
    gs = apply_transform(g, sh)
    big = build_sponge(1, 2, 1)
    bset = {tuple(v) for v in big.vertices.tolist()}
    right = {tuple(v) for v in gs.vertices.tolist()}
    assert right <= bset
    assert right == {(x, y) for x, y in bset if x >= 3}


def test_transform_group_properties():
    rng = np.random.default_rng(0)
    pts = rng.integers(-20, 20, size=(50, 2))
    trs = [RegionTransform(q, rx, ry, (int(sx), int(sy)))
           for q in range(4) for rx in (False, True) for ry in (False, True)
           for sx, sy in [(0, 0), (3, -2)]]
    for a in trs[:8]:
        for b in trs[8:16]:
            ab = a.compose(b)
            assert np.array_equal(ab.apply_points(pts),
                                  a.apply_points(b.apply_points(pts)))
    for a in trs:
        inv = a.inverse()
        assert np.array_equal(inv.apply_points(a.apply_points(pts)), pts)


def test_transform_count_preservation():
    g = build_sponge(2, 1, 1)
    for tr in (RegionTransform(1), RegionTransform(2, reflect_x2=True),
               RegionTransform.diagonal_reflection(),
               RegionTransform(3, shift=(5, -7))):
        gt = apply_transform(g, tr)
        assert gt.n_vertices == g.n_vertices
        assert gt.n_edges == g.n_edges


def test_level_of():
    assert level_of((0, 0)) == 0
    assert level_of((4, 0)) == 2
    with pytest.raises(NotAVertexError):
        level_of((4, 4))


def test_nth_box():
    for n in range(4):
        assert nth_box((0, 0), n) == (0, 0)
    assert nth_box((4, 0), 2) == (0, 0)
    assert nth_box((9, 0), 2) == (0, 0)  # boundary tie: nearest to origin
    assert nth_box((10, 0), 2) == (9, 0)
    # below the point's level the box still exists (used by the chain event)
    assert nth_box((4, 0), 1) == (3, 0)


def test_nth_box_is_carpet_box():
    # the box at the returned shift is retained at all coarser scales
    rng = np.random.default_rng(3)
    pts = [(4, 0), (9, 0), (22, 9), (13, 26), (9, 12)]
    for x in pts:
        for n in range(0, 4):
            w = nth_box(x, n, CARPET3)
            s = 3 ** n
            assert w[0] % s == 0 and w[1] % s == 0
            assert bool(cells_retained_global(w[0] // s, w[1] // s))
            # x inside the closed box
            assert w[0] <= x[0] <= w[0] + s and w[1] <= x[1] <= w[1] + s


def _sep_oracle(x, y, T=CARPET3):
    d2 = (x[0] - y[0]) ** 2 + (x[1] - y[1]) ** 2
    if d2 <= 72:
        return 0
    n = 0
    while 3 ** n < max(abs(c) for c in (*x, *y)):
        n += 1
    for m in range(n + 1, -1, -1):
        wx = nth_box(x, m, T)
        wy = nth_box(x=y, n=m, T=T)
        s = 3 ** m
        dx = max(wx[0] - (wy[0] + s), wy[0] - (wx[0] + s), 0)
        dy = max(wx[1] - (wy[1] + s), wy[1] - (wx[1] + s), 0)
        if dx > 0 or dy > 0:
            return m
    raise AssertionError


def test_separation_scale():
    assert separation_scale((0, 0), (4, 0)) == 0
    n = separation_scale((0, 0), (100, 0))
    assert n == _sep_oracle((0, 0), (100, 0))
    rng = np.random.default_rng(7)
    pts = [(0, 0), (4, 0), (9, 0), (22, 9), (13, 26), (80, 1)]
    for x in pts:
        for y in pts:
            n = separation_scale(x, y)
            assert ((x[0] - y[0]) ** 2 + (x[1] - y[1]) ** 2
                    <= 72 * 9 ** n)
            if n > 0:
                assert n == _sep_oracle(x, y)


def test_generator_conditions():
    rep = check_generator_conditions(CARPET3)
    assert rep.connected and rep.symmetric and rep.full_left_column
    no_left = GeneratorSet(3, CARPET3.cells - {(0, 1)})
    assert not check_generator_conditions(no_left).full_left_column
    diag = GeneratorSet(3, frozenset({(0, 0), (1, 1), (2, 2)}))
    assert not check_generator_conditions(diag).connected


def test_sponge_count_formula():
    # inclusion-exclusion over shared boundary lines (full for the default T)
    for n in range(0, 4):
        v1 = build_sponge(n, 1, 1).n_vertices
        line = 3 ** n + 1
        for cols in (1, 2, 3):
            for rows in (1, 2, 3):
                g = build_sponge(n, cols, rows)
                expect = (cols * rows * v1
                          - (cols - 1) * rows * line
                          - cols * (rows - 1) * line
                          + (cols - 1) * (rows - 1))
                assert g.n_vertices == expect


def test_edge_count_diagonal_symmetry(transposed_generator):
    for n in range(0, 5):
        a = build_sponge(n, 1, 1)
        b = build_sponge(n, 1, 1, transposed_generator)
        assert a.n_edges == b.n_edges
        assert a.n_vertices == b.n_vertices


def test_capacity_guard():
    from carpetperc import CapacityError, LevelError
    with pytest.raises(CapacityError):
        build_sponge(8, 1, 1)
    build_sponge(5, 1, 1, max_level=8)  # override works
    with pytest.raises(LevelError):
        build_sponge(-1, 1, 1)


def test_window_graph_matches_sponge_inside_quadrant():
    # inside a retained coarse box the lattice restriction is the sponge
    g = window_graph(Rect(0, 0, 9, 3))
    s = build_sponge(1, 3, 1)
    assert np.array_equal(g.vertices, s.vertices)
    assert np.array_equal(g.edges, s.edges)
