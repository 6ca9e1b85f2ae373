"""Small batched linear-algebra helpers; all functions act on the last two axes."""

import numpy as np

from .errors import CholeskyFailure


def mT(a):
    return np.swapaxes(a, -1, -2)


def sym(a):
    return 0.5 * (a + mT(a))


def eye_like(a, k):
    return np.broadcast_to(np.eye(k), a.shape[:-2] + (k, k))


def cholesky(a, what="matrix"):
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailure(f"{what} is not symmetric positive definite") from exc


def logdet_spd(a, what="matrix"):
    L = cholesky(a, what)
    return 2.0 * np.sum(np.log(np.diagonal(L, axis1=-2, axis2=-1)), axis=-1)


def solve(a, b):
    return np.linalg.solve(a, b)


def relative_error(a, b):
    """Frobenius-norm relative error of ``a`` against reference ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(np.linalg.norm(b), np.finfo(float).tiny)
    return float(np.linalg.norm(a - b) / scale)
