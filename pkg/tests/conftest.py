import numpy as np
import pytest

from rglasso.groups import make_partition
from rglasso.kkt import QuadraticData


def random_sizes(rng, p, max_size=5):
    sizes, left = [], p
    while left:
        s = int(rng.integers(1, min(max_size, left) + 1))
        sizes.append(s)
        left -= s
    return sizes


def random_partition(rng, p, max_size=5, shuffle=False):
    sizes = random_sizes(rng, p, max_size)
    if not shuffle:
        return make_partition(p, sizes)
    perm = rng.permutation(p)
    edges = np.cumsum([0] + sizes)
    return make_partition(p, groups=[perm[a:b].tolist() for a, b in zip(edges[:-1], edges[1:])])


def random_data(rng, p, n=None, lam=None, sparse=3, noise=0.1, delta=1e-2):
    """Quadratic data from ``n`` regression samples of a sparse model."""
    n = 2 * p if n is None else n
    X = rng.standard_normal((n, p))
    w = np.zeros(p)
    w[rng.choice(p, min(sparse, p), replace=False)] = rng.standard_normal(min(sparse, p))
    y = X @ w + noise * rng.standard_normal(n)
    lam = float(rng.uniform(0.05, 2.0)) if lam is None else lam
    return QuadraticData(X.T @ X + delta * np.eye(p), X.T @ y, lam)


def sample_stream(rng, p, n, sparse=3, noise=0.1):
    w = np.zeros(p)
    w[rng.choice(p, min(sparse, p), replace=False)] = rng.standard_normal(min(sparse, p))
    X = rng.standard_normal((n, p))
    return X, X @ w + noise * rng.standard_normal(n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
