import math

import numpy as np
import pytest

from carpetperc import (
    BondConfiguration,
    DomainError,
    FULL_GRID3,
    Rect,
    build_dual,
    build_full_window,
    build_sponge,
    clusters,
    connected,
    estimate_crossing,
    flip_edge,
    has_circuit_around,
    has_crossing,
    has_dual_crossing,
    sample_config,
    sample_field,
    threshold_config,
    window_graph,
)
from carpetperc.paperevents import CrossingEvent, pivotal_edges


def test_sample_config_endpoints():
    g = build_sponge(1, 1, 1)
    assert sample_config(g, 1.0, 0).bits.all()
    assert not sample_config(g, 0.0, 0).bits.any()
    with pytest.raises(DomainError):
        sample_config(g, 1.5, 0)


def test_sample_binomial():
    g = build_sponge(3, 2, 2)  # > 10^3 edges
    c = sample_config(g, 0.5, seed=5)
    E = g.n_edges
    assert abs(c.bits.sum() - 0.5 * E) <= 4 * math.sqrt(E * 0.25)


def test_sample_reproducible():
    g = build_sponge(1, 1, 1)
    a = sample_config(g, 0.37, seed=9, replica=4)
    b = sample_config(g, 0.37, seed=9, replica=4)
    assert np.array_equal(a.bits, b.bits)
    c = sample_config(g, 0.37, seed=9, replica=5)
    assert not np.array_equal(a.bits, c.bits)


def test_threshold_nesting():
    g = build_sponge(2, 1, 1)
    f = sample_field(g, seed=3)
    assert not threshold_config(f, 0.0).bits.any()
    assert threshold_config(f, 1.0).bits.all()
    prev = threshold_config(f, 0.1)
    for p in np.arange(0.2, 1.0, 0.1):
        cur = threshold_config(f, p)
        assert np.all(prev.bits <= cur.bits)
        prev = cur


def test_flip_edge():
    g = build_sponge(1, 1, 1)
    c = sample_config(g, 0.5, seed=1)
    c2 = flip_edge(flip_edge(c, 3), 3)
    assert np.array_equal(c.bits, c2.bits)
    allopen = BondConfiguration(g, np.ones(g.n_edges, np.uint8))
    f = flip_edge(allopen, 7)
    assert f.bits.sum() == g.n_edges - 1
    assert allopen.bits.all()  # original unchanged


def test_flip_changes_crossing_only_if_pivotal():
    g = build_sponge(1, 2, 2)
    ev = CrossingEvent("LR")
    for i in range(40):
        c = sample_config(g, 0.5, seed=21, replica=i)
        piv = set(pivotal_edges(c, ev).tolist())
        base = has_crossing(c, "LR")
        for e in range(g.n_edges):
            changed = has_crossing(flip_edge(c, e), "LR") != base
            assert changed == (e in piv)


def _bfs_partition(g, bits):
    adj = [[] for _ in range(g.n_vertices)]
    for i, (a, b) in enumerate(g.edges):
        if bits[i]:
            adj[a].append(b)
            adj[b].append(a)
    lab = [-1] * g.n_vertices
    nxt = 0
    for s in range(g.n_vertices):
        if lab[s] >= 0:
            continue
        lab[s] = nxt
        stack = [s]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if lab[v] < 0:
                    lab[v] = nxt
                    stack.append(v)
        nxt += 1
    return lab


def test_clusters_vs_bfs_oracle():
    g = build_sponge(1, 2, 1)
    allopen = BondConfiguration(g, np.ones(g.n_edges, np.uint8))
    assert clusters(allopen).n_clusters == 1
    allclosed = BondConfiguration(g, np.zeros(g.n_edges, np.uint8))
    assert clusters(allclosed).n_clusters == g.n_vertices
    for i in range(50):
        c = sample_config(g, 0.45, seed=31, replica=i)
        cp = clusters(c)
        oracle = _bfs_partition(g, c.bits)
        # same partition up to label names
        pairs = {(int(a), int(b)) for a, b in zip(cp.labels, oracle)}
        assert len({a for a, _ in pairs}) == len(pairs)
        assert len({b for _, b in pairs}) == len(pairs)


def test_connected():
    g = build_sponge(1, 1, 1)
    allopen = BondConfiguration(g, np.ones(g.n_edges, np.uint8))
    allclosed = BondConfiguration(g, np.zeros(g.n_edges, np.uint8))
    assert connected(allopen, (0, 0), (3, 3))
    assert not connected(allclosed, (0, 0), (3, 3))
    assert connected(allclosed, (1, 1), (1, 1))
    for i in range(50):
        c = sample_config(g, 0.5, seed=41, replica=i)
        oracle = _bfs_partition(g, c.bits)
        u, v = g.vertex_id(0, 0), g.vertex_id(3, 3)
        assert connected(c, (0, 0), (3, 3)) == (oracle[u] == oracle[v])


def test_has_crossing_unit_square():
    g = build_sponge(0, 1, 1)
    top = g.edge_id(g.vertex_id(0, 1), g.vertex_id(1, 1))
    bits = np.zeros(4, np.uint8)
    bits[top] = 1
    assert has_crossing(BondConfiguration(g, bits), "LR")
    assert not has_crossing(BondConfiguration(g, bits), "UD")


def test_dual_crossing_exhaustive_small_windows():
    for cols, rows in ((1, 1), (2, 1), (2, 2)):
        g = build_sponge(0, cols, rows, FULL_GRID3)
        d = build_dual(g)
        for m in range(1 << g.n_edges):
            bits = np.array([(m >> i) & 1 for i in range(g.n_edges)],
                            dtype=np.uint8)
            c = BondConfiguration(g, bits)
            assert has_dual_crossing(c, d, "UD") == (not has_crossing(c, "LR"))


def test_circuit_examples():
    g = build_sponge(2, 1, 1)
    one = BondConfiguration(g, np.ones(g.n_edges, np.uint8))
    zero = BondConfiguration(g, np.zeros(g.n_edges, np.uint8))
    assert has_circuit_around(one, 2, "open")
    assert not has_circuit_around(zero, 2, "open")
    # hand-built ring along the hole perimeter
    bits = np.zeros(g.n_edges, np.uint8)
    for k, (a, b) in enumerate(g.edges):
        xa, ya = g.vertices[a]
        xb, yb = g.vertices[b]
        on = lambda x, y: ((x in (3, 6) and 3 <= y <= 6)
                           or (y in (3, 6) and 3 <= x <= 6))
        if on(xa, ya) and on(xb, yb):
            if (xa == xb and xa in (3, 6)) or (ya == yb and ya in (3, 6)):
                bits[k] = 1
    assert has_circuit_around(BondConfiguration(g, bits), 2, "open")


def test_dual_circuit_mode():
    f = build_full_window(2)
    zero = BondConfiguration(f, np.zeros(f.n_edges, np.uint8))
    one = BondConfiguration(f, np.ones(f.n_edges, np.uint8))
    assert has_circuit_around(zero, 2, "dual-closed")
    assert not has_circuit_around(one, 2, "dual-closed")


def test_monotone_coupling_of_events():
    g = build_sponge(2, 1, 1)
    d = build_dual(g)
    for r in range(20):
        f = sample_field(g, seed=51, replica=r)
        prev = None
        for p in np.linspace(0.1, 0.9, 9):
            c = threshold_config(f, p)
            ind = (has_crossing(c, "LR"), has_crossing(c, "UD"),
                   connected(c, (0, 0), (9, 9)))
            if prev is not None:
                assert all(a >= b for a, b in zip(ind, prev))
            prev = ind


def test_fkg_spot_check():
    # increasing events are positively correlated: joint >= product - 3 sigma
    from carpetperc.estimator import WindowSampler, bind_event, _eval_events
    for n in (1, 2, 3):
        for p in (0.5, 0.6):
            g = build_sponge(n, 1, 1)
            ev = [bind_event("lr", g), bind_event("ud", g),
                  bind_event("joint-lr-ud", g)]
            s = WindowSampler(g, seed=61)
            N = 4000
            ca, cb, cab = (int(x) for x in _eval_events(s, ev, p, N))
            pa, pb, pab = ca / N, cb / N, cab / N
            se = math.sqrt(pab * (1 - pab) / N) + pb * math.sqrt(
                pa * (1 - pa) / N) + pa * math.sqrt(pb * (1 - pb) / N)
            assert pab >= pa * pb - 3 * se


def test_comparison_inequality_dual_strips():
    # closed-dual crossings of the same rectangle get easier one scale up
    for p in (0.5,):
        a = estimate_crossing(1, 6, 2, p, 4000, seed=71, dual=True)
        b = estimate_crossing(2, 2, 1, p, 4000, seed=72, dual=True)
        se = math.hypot(a.stderr, b.stderr)
        assert a.mean <= b.mean + 3 * se


def test_circuit_geometry_errors():
    from carpetperc import GeometryError
    g = build_sponge(1, 1, 1)
    c = sample_config(g, 0.5, seed=1)
    with pytest.raises(GeometryError):
        has_circuit_around(c, 2, "open")  # window too small
    with pytest.raises(GeometryError):
        has_circuit_around(c, 1, "dual-closed")  # needs n >= 2
