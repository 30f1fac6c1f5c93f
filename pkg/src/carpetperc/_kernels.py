"""Batched union-find connectivity kernels (numba)."""

import numba as nb
import numpy as np


@nb.njit(cache=True, nogil=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@nb.njit(cache=True, nogil=True)
def pair_connected_many(bits, u, v, gate, invert, src, dst, n_nodes):
    """For each sample row of `bits`, union the admissible edges and test
    whether `src` and `dst` end up in one component.

    An edge k is admissible when gate[k] < 0 (unconditional) or when
    bits[s, gate[k]] xor invert is 1.
    """
    S = bits.shape[0]
    m = u.shape[0]
    out = np.zeros(S, dtype=np.uint8)
    parent = np.empty(n_nodes, dtype=np.int64)
    for s in range(S):
        for i in range(n_nodes):
            parent[i] = i
        row = bits[s]
        for k in range(m):
            g = gate[k]
            if g >= 0:
                b = row[g]
                if invert:
                    b = 1 - b
                if b == 0:
                    continue
            ra = _find(parent, u[k])
            rb = _find(parent, v[k])
            if ra != rb:
                parent[ra] = rb
        if _find(parent, src) == _find(parent, dst):
            out[s] = 1
    return out


@nb.njit(cache=True, nogil=True)
def count_components(u, v, active, n_nodes):
    parent = np.empty(n_nodes, dtype=np.int64)
    for i in range(n_nodes):
        parent[i] = i
    for k in range(u.shape[0]):
        if active[k] == 0:
            continue
        ra = _find(parent, u[k])
        rb = _find(parent, v[k])
        if ra != rb:
            parent[ra] = rb
    n = 0
    for i in range(n_nodes):
        if _find(parent, i) == i:
            n += 1
    return n
