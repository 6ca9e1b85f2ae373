"""Monte Carlo evaluation of ``E[Lambda | F]`` for general ``b`` and the
integral-form generalized Bayes estimators built from it.

The posterior of ``Lambda`` (0 < Lambda < I, ell x ell) is proportional to

    |Lambda|^{nu1/2 - (ell+1)/2} |I - Lambda|^{nu2/2 - (ell+1)/2}
        * |I - F (I + F)^{-1} Lambda|^{(b - a - ell + n)/2}

with ``nu1 = a - c + ell + p - 1`` and ``nu2 = c + m + 1``.  The first two
factors are a matrix beta density, which serves as the importance-sampling
proposal; the last factor is the weight.  When ``b = a + ell - n`` the
weight is identically one and ``E[Lambda | F] = k0 I``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._linalg import cholesky, mT, solve, sym
from .decomp import eigen_xsx, simul_diag
from .errors import DegreesOfFreedomError, IllConditionedWeights, ParameterError
from .estimators import PriorHyper
from .model import ModelDims, sample_wishart_fractional

N_BATCHES = 32
DRAW_CHUNK = 1 << 14


@dataclass(frozen=True)
class MatrixBetaParams:
    dim: int
    nu1: float
    nu2: float

    def __post_init__(self):
        if not (self.nu1 > self.dim - 1 and self.nu2 > self.dim - 1):
            raise DegreesOfFreedomError(
                f"matrix beta needs nu1, nu2 > dim - 1 = {self.dim - 1}, got {self.nu1}, {self.nu2}"
            )

    @classmethod
    def for_posterior(cls, hyper: PriorHyper, dims: ModelDims) -> "MatrixBetaParams":
        ell = dims.ell
        return cls(ell, hyper.a - hyper.c + ell + dims.p - 1, hyper.c + dims.m + 1)

    @property
    def mean_scale(self) -> float:
        return self.nu1 / (self.nu1 + self.nu2)


def sample_matrix_beta(params: MatrixBetaParams, rng: np.random.Generator, size=None):
    """``Lambda = C^{-1} W1 C^{-T}`` with ``W_i ~ W(nu_i, I)`` and ``C C^T = W1 + W2``."""
    I = np.eye(params.dim)
    W1 = sample_wishart_fractional(params.nu1, I, rng, size)
    W2 = sample_wishart_fractional(params.nu2, I, rng, size)
    C = cholesky(W1 + W2, "W1 + W2")
    Y = solve(C, W1)
    return sym(mT(solve(C, mT(Y))))


def weight_exponent(hyper: PriorHyper, dims: ModelDims) -> float:
    return (hyper.b - hyper.a - dims.ell + dims.n) / 2.0


def log_weights(Lambda, F, hyper: PriorHyper, dims: ModelDims):
    """``e * log|I - F (I+F)^{-1} Lambda|`` with ``e = (b - a - ell + n)/2``."""
    F = np.asarray(F, dtype=float)
    e = weight_exponent(hyper, dims)
    if e == 0:
        return np.zeros(np.shape(Lambda)[:-2])
    r = np.sqrt(F / (1.0 + F))
    M = np.eye(F.size) - r[:, None] * Lambda * r[None, :]
    _, logdet = np.linalg.slogdet(M)
    return e * logdet


class OracleEstimate(NamedTuple):
    lambda_mean: np.ndarray
    se: np.ndarray
    ess: float
    n_samples: int

    @property
    def diagonal(self) -> np.ndarray:
        """Diagonal of the estimate (off-diagonals vanish in expectation)."""
        return np.diag(self.lambda_mean).copy()


def posterior_lambda_mean(F, hyper: PriorHyper, dims: ModelDims, n_samples: int,
                          rng: np.random.Generator) -> OracleEstimate:
    """Self-normalized importance-sampling estimate of ``E[Lambda | F]``.

    Standard errors come from 32 nonoverlapping batch means of the ratio
    estimator.  Warns with :class:`IllConditionedWeights` when the effective
    sample size is below 1% of ``n_samples``.
    """
    F = np.asarray(F, dtype=float)
    if F.shape != (dims.ell,):
        raise ParameterError(f"F must have length ell = {dims.ell}")
    if n_samples < 1000:
        raise ParameterError("n_samples must be at least 1000")
    hyper.validate(dims, closed_form=False)
    params = MatrixBetaParams.for_posterior(hyper, dims)
    e = weight_exponent(hyper, dims)
    # log|I - D Lambda| >= sum log(1 - d_i), so this shift keeps weights <= 1
    shift = e * np.sum(np.log1p(-F / (1.0 + F))) if e < 0 else 0.0

    ell = dims.ell
    sw = np.zeros(N_BATCHES)
    sw2 = 0.0
    swl = np.zeros((N_BATCHES, ell, ell))
    batch_of = (np.arange(n_samples) * N_BATCHES) // n_samples
    for start in range(0, n_samples, DRAW_CHUNK):
        stop = min(start + DRAW_CHUNK, n_samples)
        Lam = sample_matrix_beta(params, rng, size=stop - start)
        w = np.exp(log_weights(Lam, F, hyper, dims) - shift)
        b = batch_of[start:stop]
        np.add.at(sw, b, w)
        np.add.at(swl, b, w[:, None, None] * Lam)
        sw2 += float(np.sum(w * w))
    total = sw.sum()
    mean = sym(swl.sum(axis=0) / total)
    batch_means = swl / sw[:, None, None]
    se = np.std(batch_means, axis=0, ddof=1) / np.sqrt(N_BATCHES)
    ess = total * total / sw2
    if ess < 0.01 * n_samples:
        warnings.warn(
            f"effective sample size {ess:.1f} is below 1% of {n_samples} draws",
            IllConditionedWeights, stacklevel=2,
        )
    return OracleEstimate(mean, se, float(ess), n_samples)


# -- integral-form estimators -------------------------------------------------

class GeneralEstimate(NamedTuple):
    estimate: np.ndarray
    se: np.ndarray
    oracle: OracleEstimate | None


def shrinkage_from_expectation(F, e):
    """Per-eigenvalue shrinkage ``e_i / (1 + f_i (1 - e_i))`` implied by a
    diagonal ``E[Lambda | F] = diag(e)``, and its derivative in ``e_i``."""
    F = np.asarray(F, dtype=float)
    e = np.asarray(e, dtype=float)
    den = 1.0 + F * (1.0 - e)
    return e / den, (1.0 + F) / den**2


def _decompose(X, S):
    m, p = X.shape
    if p > m:
        R, F = eigen_xsx(X, S)
        return "left", R, F
    Q, F = simul_diag(X, S)
    return "right", Q, F


def _resolve_expectation(F, hyper, dims, n_samples, rng, expectation):
    if expectation is not None:
        e = np.broadcast_to(np.asarray(expectation, dtype=float), F.shape).copy()
        return e, np.zeros_like(e), None
    oracle = posterior_lambda_mean(F, hyper, dims, n_samples, rng)
    return oracle.diagonal, np.diag(oracle.se).copy(), oracle


def gb_mean_general(X, S, n: int, hyper: PriorHyper, n_samples: int = 100_000,
                    rng: np.random.Generator | None = None, expectation=None) -> GeneralEstimate:
    """Generalized Bayes mean estimate for arbitrary admissible ``b``.

    p > m: ``X - R F^{-1} E {F^{-1}(I+F) - E}^{-1} R^T X``;
    m >= p: ``X - X Q F^{-1} E {F^{-1}(I+F) - E}^{-1} Q^{-1}``, where ``E`` is
    the (diagonalized) oracle estimate of ``E[Lambda | F]``.  ``expectation``
    bypasses the oracle with a fixed diagonal.  ``se`` propagates the oracle's
    standard errors to each entry of the estimate.
    """
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    m, p = X.shape
    dims = ModelDims(m, p, n)
    side, V, F = _decompose(X, S)
    e, e_se, oracle = _resolve_expectation(F, hyper, dims, n_samples, rng, expectation)
    phi, dphi = shrinkage_from_expectation(F, e)
    if side == "left":
        RtX = V.T @ X
        est = X - V @ (phi[:, None] * RtX)
        # entry (k, l) depends on e_i through R[k, i] (R^T X)[i, l]
        terms = V[:, :, None] * RtX[None, :, :] * (dphi * e_se)[None, :, None]
    else:
        Q_inv = V.T @ S
        XQ = X @ V
        est = X - (XQ * phi) @ Q_inv
        terms = XQ[:, :, None] * Q_inv[None, :, :] * (dphi * e_se)[None, :, None]
    se = np.sqrt(np.sum(terms**2, axis=1))
    return GeneralEstimate(est, se, oracle)


def gb_cov_general(X, S, n: int, hyper: PriorHyper, n_samples: int = 100_000,
                   rng: np.random.Generator | None = None, expectation=None) -> GeneralEstimate:
    """Generalized Bayes covariance estimate for arbitrary admissible ``b``.

    p > m: ``[S + X^T R {(I+F) E^{-1} - F}^{-1} R^T X] / (b+m+n+p)``;
    m >= p: ``[S + Q^{-T} {(F^{-1}+I) E^{-1} - I}^{-1} Q^{-1}] / (b+m+n+p)``.
    """
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    m, p = X.shape
    dims = ModelDims(m, p, n)
    scale = hyper.b + m + n + p
    if scale <= 0:
        raise ParameterError(f"b + m + n + p must be positive, got {scale}")
    side, V, F = _decompose(X, S)
    e, e_se, oracle = _resolve_expectation(F, hyper, dims, n_samples, rng, expectation)
    phi, dphi = shrinkage_from_expectation(F, e)
    if side == "left":
        B = V.T @ X  # R^T X, rows indexed by eigenvalue
        coef, dcoef = phi, dphi
    else:
        B = V.T @ S  # Q^{-1}
        coef, dcoef = F * phi, F * dphi
    est = sym(S + B.T @ (coef[:, None] * B)) / scale
    outer = np.einsum("ik,il->ikl", B, B)
    se = np.sqrt(np.einsum("ikl,i->kl", outer**2, (dcoef * e_se) ** 2)) / scale
    return GeneralEstimate(est, se, oracle)
