import numpy as np
import pytest

from ngdlab.model import init_network, one_hot


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_problem(rng, sizes, head="gaussian", m=5, activation="tanh", seed=None):
    """Random network plus a batch of inputs and valid targets."""
    net = init_network(sizes, activation, head, rng if seed is None else seed)
    X = rng.standard_normal((sizes[0], m))
    if head == "gaussian":
        Y = rng.standard_normal((sizes[-1], m))
    else:
        Y = one_hot(rng.integers(0, sizes[-1], size=m), sizes[-1])
    return net, X, Y


def random_sizes(rng, max_layers=3, max_width=8, min_out=1):
    depth = int(rng.integers(1, max_layers + 1))
    sizes = [int(v) for v in rng.integers(1, max_width + 1, size=depth + 1)]
    sizes[-1] = max(sizes[-1], min_out)
    return sizes
