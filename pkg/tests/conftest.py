import numpy as np
import pytest

from matshrink.model import rng_stream


def random_spd(rng, p, cond=10.0):
    """SPD matrix with eigenvalues spread over ``[1, cond]``."""
    O, _ = np.linalg.qr(rng.standard_normal((p, p)))
    return (O * np.geomspace(1.0, cond, p)) @ O.T


def random_pair(rng, m, p, n):
    """A generic (X, S) draw with S ~ W_p(n, I)."""
    X = rng.standard_normal((m, p))
    Z = rng.standard_normal((n, p))
    return X, Z.T @ Z


def relerr(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)


@pytest.fixture
def rng():
    return rng_stream(20240611)


# one dims triple per case, plus boundary shapes
CASE_DIMS = [(3, 6, 12), (6, 3, 12), (4, 5, 9), (4, 4, 8)]
