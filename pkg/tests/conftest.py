import numpy as np
import pytest

from carpetperc import GeneratorSet


@pytest.fixture(scope="session")
def kron_oracle():
    """Independent carpet construction: Kronecker-power cell masks."""
    def make(n, T=None):
        if T is None:
            t = np.ones((3, 3), dtype=bool)
            t[1, 1] = False
        else:
            t = T.mask
        m = np.ones((1, 1), dtype=bool)
        for _ in range(n):
            m = np.kron(t, m)
        return m
    return make


def mask_counts(mask):
    """Vertex and edge counts from a cell mask (corner rule, unit edges)."""
    H, W = mask.shape
    vm = np.zeros((H + 1, W + 1), dtype=bool)
    vm[:-1, :-1] |= mask
    vm[:-1, 1:] |= mask
    vm[1:, :-1] |= mask
    vm[1:, 1:] |= mask
    eh = (vm[:, :-1] & vm[:, 1:]).sum()
    ev = (vm[:-1, :] & vm[1:, :]).sum()
    return int(vm.sum()), int(eh + ev), vm


@pytest.fixture(scope="session")
def transposed_generator():
    return GeneratorSet(3, frozenset((j, i) for i, j in
                                     GeneratorSet().cells))
