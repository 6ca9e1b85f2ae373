"""Spectral decompositions of the data pair and the Woodbury-type identity.

Two coordinate systems are used, matching the two cases of the model:

* p > m: ``X S^{-1} X^T = R F R^T`` with R orthogonal (m x m);
* m >= p: ``Q^T S Q = I_p`` and ``Q^T X^T X Q = F`` with Q nonsingular (p x p).

In both cases F holds the ell = min(m, p) nonzero eigenvalues of
``S^{-1} X^T X`` in descending order.  All functions broadcast over leading
batch axes.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ._linalg import cholesky, eye_like, mT, solve, sym
from .errors import CaseError, RankError

RANK_TOL = 1e-12


class EigenPair(NamedTuple):
    R: np.ndarray
    F: np.ndarray

    @property
    def rank_deficient(self) -> bool:
        F = np.asarray(self.F)
        top = np.max(F, axis=-1, initial=0.0)
        return bool(np.any(F[..., -1] <= RANK_TOL * top) or np.any(top == 0))


class SimulPair(NamedTuple):
    Q: np.ndarray
    F: np.ndarray


def _descending(w, V):
    order = np.argsort(-w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    V = np.take_along_axis(V, order[..., None, :], axis=-1)
    return w, V


def eigen_xsx(X, S) -> EigenPair:
    """Eigendecomposition of ``X S^{-1} X^T`` with eigenvalues descending.

    For p > m this is the full m x m decomposition.  For m >= p only the
    leading ell = p eigenpairs are returned (R is m x p); the remaining m - p
    eigenvalues are zero.
    """
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    cholesky(S, "S")
    m, p = X.shape[-2:]
    M = sym(X @ solve(S, mT(X)))
    w, V = _descending(*np.linalg.eigh(M))
    ell = min(m, p)
    w = np.clip(w[..., :ell], 0.0, None)
    return EigenPair(V[..., :ell], w)


def simul_diag(X, S) -> SimulPair:
    """Simultaneous diagonalization ``Q^T S Q = I``, ``Q^T X^T X Q = diag(F)``.

    ``Q = S^{-1/2} O`` with the symmetric square root of S and O the
    eigenvectors of ``S^{-1/2} X^T X S^{-1/2}``.
    """
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    m, p = X.shape[-2:]
    if m < p:
        raise CaseError(f"simultaneous diagonalization needs m >= p, got m={m}, p={p}")
    cholesky(S, "S")
    ws, Vs = np.linalg.eigh(S)
    S_isqrt = (Vs / np.sqrt(ws)[..., None, :]) @ mT(Vs)
    inner = sym(S_isqrt @ mT(X) @ X @ S_isqrt)
    F, O = _descending(*np.linalg.eigh(inner))
    if np.any(F[..., -1] <= RANK_TOL * np.max(np.abs(F), axis=-1)):
        raise RankError("X^T X is rank deficient")
    return SimulPair(S_isqrt @ O, F)


def eigenvalues(X, S) -> np.ndarray:
    """The ell nonzero eigenvalues of ``S^{-1} X^T X``, descending.

    Uses whichever of the m x m / p x p symmetric forms is smaller.
    """
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    m, p = X.shape[-2:]
    if p > m:
        M = X @ solve(S, mT(X))
    else:
        L = cholesky(S, "S")
        Y = solve(L, mT(X))  # L^{-1} X^T, p x m
        M = Y @ mT(Y)
    w = np.linalg.eigvalsh(sym(M))[..., ::-1]
    return np.clip(w, 0.0, None)


def woodbury_inv(X, S, beta: float):
    """``(I_m + beta X S^{-1} X^T)^{-1}`` via ``I - beta X (S + beta X^T X)^{-1} X^T``."""
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    m = X.shape[-2]
    I = eye_like(X, m)
    if beta == 0:
        return np.array(I)
    inner = S + beta * mT(X) @ X
    return sym(I - beta * X @ solve(inner, mT(X)))
