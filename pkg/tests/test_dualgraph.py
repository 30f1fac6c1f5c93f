import numpy as np
import pytest

from carpetperc import (
    BondConfiguration,
    FULL_GRID3,
    PairingError,
    build_dual,
    build_sponge,
    has_crossing,
    has_dual_crossing,
    sample_config,
)


def test_unit_square_dual():
    g = build_sponge(0, 1, 1)
    d = build_dual(g)
    assert d.n_faces == 1
    assert d.n_dual_edges == 4
    sectors = {int(d.tagged_u[i]) if d.tagged_u[i] >= d.n_faces
               else int(d.tagged_v[i]) for i in range(4)}
    assert sectors == {d.LEFT, d.RIGHT, d.BOTTOM, d.TOP}


def test_face_counts_level2():
    # 64 retained cells plus 9 removed blocks (the central hole and the eight
    # level-2 sub-holes), verified against scipy labeling of the mask oracle
    g = build_sponge(2, 1, 1)
    d = build_dual(g)
    assert d.n_cells == 64
    assert d.n_blocks == 9
    assert d.n_faces == 73


def test_bijection_roundtrip():
    g = build_sponge(2, 1, 1)
    d = build_dual(g)
    for e in (0, 17, g.n_edges - 1):
        de = d.dual_edge_of(e)
        assert d.primal_of(de) == e
    with pytest.raises(IndexError):
        d.dual_edge_of(g.n_edges)
    # free dual edges map back to None
    assert all(d.primal_of(i) == i for i in range(d.n_tagged))


def test_boundary_and_interior_dual_edges():
    g = build_sponge(1, 1, 1)
    d = build_dual(g)
    # bottom edge of a boundary cell points into the bottom sector
    e = g.edge_id(g.vertex_id(0, 0), g.vertex_id(1, 0))
    assert d.BOTTOM in (int(d.tagged_u[e]), int(d.tagged_v[e]))
    # interior edge between two retained cells joins their face vertices
    e = g.edge_id(g.vertex_id(1, 0), g.vertex_id(1, 1))
    u, v = int(d.tagged_u[e]), int(d.tagged_v[e])
    assert d.face_kind(u) == "cell" and d.face_kind(v) == "cell"
    # an edge on the hole boundary joins a cell face to the hole face
    e = g.edge_id(g.vertex_id(1, 1), g.vertex_id(1, 2))
    kinds = {d.face_kind(int(d.tagged_u[e])), d.face_kind(int(d.tagged_v[e]))}
    assert kinds == {"cell", "hole"}


def test_sectors_mutually_nonadjacent():
    for g in (build_sponge(1, 1, 1), build_sponge(2, 2, 1)):
        d = build_dual(g)
        sec = {d.LEFT, d.RIGHT, d.BOTTOM, d.TOP}
        for i in range(d.n_dual_edges):
            assert not (int(d.dual_u[i]) in sec and int(d.dual_v[i]) in sec)


def test_degree_sum_identity():
    # over face vertices, tagged degree = 2 * interior edges + boundary edges
    for g in (build_sponge(1, 1, 1), build_sponge(2, 1, 1),
              build_sponge(1, 3, 2)):
        d = build_dual(g)
        deg = np.zeros(d.n_nodes, dtype=int)
        for arr in (d.tagged_u, d.tagged_v):
            np.add.at(deg, arr, 1)
        face_deg = deg[:d.n_faces].sum()
        boundary = sum(1 for i in range(d.n_tagged)
                       if max(int(d.tagged_u[i]), int(d.tagged_v[i]))
                       >= d.n_faces)
        interior = d.n_tagged - boundary
        assert face_deg == 2 * interior + boundary


def _enumerate_complementation(g, d):
    E = g.n_edges
    for m in range(1 << E):
        bits = np.array([(m >> i) & 1 for i in range(E)], dtype=np.uint8)
        c = BondConfiguration(g, bits)
        assert has_crossing(c, "LR") + has_dual_crossing(c, d, "UD") == 1
        assert has_crossing(c, "UD") + has_dual_crossing(c, d, "LR") == 1


def test_complementation_exhaustive_small():
    # 1x1 and 2x1 full-grid cell windows, every configuration
    for cols, rows in ((1, 1), (2, 1), (1, 2)):
        g = build_sponge(0, cols, rows, FULL_GRID3)
        _enumerate_complementation(g, build_dual(g))


def test_complementation_exhaustive_2x2():
    g = build_sponge(0, 2, 2, FULL_GRID3)  # 12 edges, 4096 configurations
    _enumerate_complementation(g, build_dual(g))


def test_complementation_sampled_carpet():
    # hole contraction keeps the identity exact on carpet windows
    for n in (1, 2):
        g = build_sponge(n, 2, 2)
        d = build_dual(g)
        for i in range(300):
            c = sample_config(g, 0.5, seed=100 + n, replica=i)
            assert has_crossing(c, "LR") + has_dual_crossing(c, d, "UD") == 1


def test_pairing_error():
    g1 = build_sponge(1, 1, 1)
    g2 = build_sponge(1, 1, 1)
    d2 = build_dual(g2)
    c = sample_config(g1, 0.5, seed=1)
    with pytest.raises(PairingError):
        has_dual_crossing(c, d2, "UD")


def test_free_edges_on_cut_windows():
    # a window slicing through a hole gets free hole-sector adjacencies
    from carpetperc import Rect, window_graph
    g = window_graph(Rect(4, 0, 8, 9))  # cuts through the central hole [3,6]^2
    d = build_dual(g)
    assert d.n_dual_edges > d.n_tagged  # free adjacencies exist
    # all closed: the left sector reaches the right sector only through
    # closed dual edges and holes; all open blocks it
    c0 = BondConfiguration(g, np.zeros(g.n_edges, np.uint8))
    c1 = BondConfiguration(g, np.ones(g.n_edges, np.uint8))
    assert has_dual_crossing(c0, d, "LR")
    assert not has_dual_crossing(c1, d, "LR")
