import numpy as np
import pytest

from quasilump import chain_gen as gen
from quasilump import lumpability as lump


def random_chain(rng, n):
    return gen.random_stochastic_matrix(n, rng)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def example_three_state():
    P = np.array([[0.5, 0.5, 0.0], [0.3, 0.2, 0.5], [0.0, 0.5, 0.5]])
    Q = lump.StatePartition([[0, 1], [2]], 3)
    return P, Q


@pytest.fixture(scope="session")
def section_four_chain():
    spec = gen.TwoBlockSpec(n=100, a_size=50, p0=0.25, q0=0.25, epsilon=0.1, seed=7)
    return gen.generate_two_block_chain(spec)


def brute_block_masses(P, Q):
    """p(x, A_j) by explicit double loop; independent of the matrix-product path."""
    n = P.shape[0]
    out = np.zeros((n, Q.m))
    for x in range(n):
        for j, block in enumerate(Q.blocks):
            s = 0.0
            for y in block:
                s += P[x, y]
            out[x, j] = s
    return out


def lower_matrix_for(p0, q0, eps):
    return np.array([[1 - p0 - eps, p0], [q0, 1 - q0 - eps]])


def upper_matrix_for(p0, q0, eps):
    return np.array([[1 - p0, p0 + eps], [q0 + eps, 1 - q0]])
