import numpy as np
import pytest


def rand_orthogonal(rng, n):
    """Haar-ish orthogonal matrix from the QR of a Gaussian draw."""
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def rand_col_stochastic(rng, n):
    a = rng.uniform(0.05, 1.0, size=(n, n))
    return a / a.sum(axis=0)


def rand_antisymmetric(rng, r, scale=1.0):
    a = rng.normal(scale=scale, size=(r, r))
    return a - a.T


@pytest.fixture
def rng():
    return np.random.default_rng(20260817)
