"""Closed-form shrinkage estimators of the mean matrix and covariance matrix.

Every estimator takes the data as arrays ``X`` (m x p) and ``S`` (p x p) and
broadcasts over leading batch axes, so a stack of replications can be
processed in one call.  Inverses of the form ``(I + beta S^{-1} X^T X)^{-1}``
are never formed; the identity

    X (I + beta S^{-1} X^T X)^{-1} = X (S + beta X^T X)^{-1} S

reduces them to one p x p solve, which stays well defined for rank-deficient X.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._linalg import cholesky, eye_like, mT, solve, sym
from .decomp import RANK_TOL, eigen_xsx, simul_diag
from .errors import CaseError, DomainError, ParameterError
from .model import ModelDims


# -- parameter types ----------------------------------------------------------

@dataclass(frozen=True)
class PriorHyper:
    """Hyperparameters ``(a, b, c)`` of the hierarchical prior.

    The prior on the latent scale matrix is ``|I + Omega|^{-a/2-m} |Omega|^{c/2}``
    and ``b`` is the exponent parameter of the prior on ``Sigma^{-1}``.
    """

    a: float
    b: float
    c: float

    @classmethod
    def closed_form(cls, a: float, c: float, dims: ModelDims) -> "PriorHyper":
        """Hyperparameters with ``b = a + ell - n`` (the closed-form case)."""
        return cls(a, a + dims.ell - dims.n, c)

    def is_closed_form(self, dims: ModelDims, tol: float = 1e-12) -> bool:
        return abs(self.b - (self.a + dims.ell - dims.n)) <= tol * max(1.0, abs(self.b))

    def violations(self, dims: ModelDims, closed_form: bool | None = None) -> list[str]:
        """Human-readable list of violated range conditions (empty if valid)."""
        a, b, c = self.a, self.b, self.c
        m, p, n = dims.m, dims.p, dims.n
        out = []
        lo = -2.0 if dims.p_gt_m else p - m - 2.0
        if not lo < c < a + p:
            out.append(f"need {lo:g} < c < a + p = {a + p:g}, got c = {c:g}")
        if not b > -n - m - 1:
            out.append(f"need b > -n - m - 1 = {-n - m - 1}, got b = {b:g}")
        if closed_form is None:
            closed_form = self.is_closed_form(dims)
        if closed_form:
            if not self.is_closed_form(dims):
                out.append(f"closed form needs b = a + ell - n = {a + dims.ell - n:g}, got b = {b:g}")
            if dims.p_gt_m and not a > -2 * m - 1:
                out.append(f"need a > -2m - 1 = {-2 * m - 1}, got a = {a:g}")
        return out

    def validate(self, dims: ModelDims, closed_form: bool | None = None) -> "PriorHyper":
        bad = self.violations(dims, closed_form)
        if bad:
            raise ParameterError("; ".join(bad))
        return self


@dataclass(frozen=True)
class GParams:
    """Constants ``(alpha, beta)`` of the rational shrinkage families."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha >= 0 and self.beta >= 0):
            raise ParameterError(f"alpha and beta must be nonnegative, got {self.alpha}, {self.beta}")


@dataclass(frozen=True)
class ShrinkageFunction:
    """Diagonal shrinkage ``F -> (phi_1(F), ..., phi_ell(F))`` and ``d phi_i / d f_i``.

    ``dphi`` may be omitted, in which case central finite differences with
    step ``1e-6 * f_i`` are used (roughly six correct digits).
    """

    phi: Callable[[np.ndarray], np.ndarray]
    dphi: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, F):
        return np.asarray(self.phi(np.asarray(F, dtype=float)), dtype=float)

    def derivative(self, F):
        F = np.asarray(F, dtype=float)
        if self.dphi is not None:
            return np.asarray(self.dphi(F), dtype=float)
        return finite_difference(self.phi, F)


def finite_difference(phi, F, rel_step: float = 1e-6):
    F = np.asarray(F, dtype=float)
    out = np.empty_like(F)
    for i in range(F.shape[-1]):
        h = rel_step * np.maximum(np.abs(F[..., i]), 1e-300)
        up = F.copy()
        dn = F.copy()
        up[..., i] += h
        dn[..., i] -= h
        out[..., i] = (np.asarray(phi(up))[..., i] - np.asarray(phi(dn))[..., i]) / (2 * h)
    return out


def rational(alpha: float, beta: float) -> ShrinkageFunction:
    """``alpha / (1 + beta f)``: the mean family and the m >= p covariance family."""
    return ShrinkageFunction(
        lambda F: alpha / (1.0 + beta * F),
        lambda F: -alpha * beta / (1.0 + beta * F) ** 2,
    )


def rational_expanding(alpha: float, beta: float) -> ShrinkageFunction:
    """``-alpha f / (1 + beta f)``: the p > m covariance family (adds to S/n)."""
    return ShrinkageFunction(
        lambda F: -alpha * F / (1.0 + beta * F),
        lambda F: -alpha / (1.0 + beta * F) ** 2,
    )


def inverse(coef: float) -> ShrinkageFunction:
    """``coef / f``: the Efron-Morris shrinkage."""
    return ShrinkageFunction(lambda F: coef / F, lambda F: -coef / F**2)


def zero() -> ShrinkageFunction:
    return ShrinkageFunction(np.zeros_like, np.zeros_like)


# -- constants ----------------------------------------------------------------

def k0(a: float, c: float, dims: ModelDims) -> float:
    """Shrinkage constant ``(a - c + p + ell - 1) / (a + m + p + ell)``."""
    den = a + dims.m + dims.p + dims.ell
    if den == 0:
        raise ParameterError("a + m + p + ell must be nonzero")
    return (a - c + dims.p + dims.ell - 1) / den


def c_em(dims: ModelDims) -> float:
    """Efron-Morris coefficient ``(|m-p| - 1) / (min(n-p+2m, n+p) + 1)``, clamped at 0."""
    m, p, n = dims.m, dims.p, dims.n
    return max(abs(m - p) - 1, 0) / (min(n - p + 2 * m, n + p) + 1)


def _check_k0(k):
    if not 0 <= k < 1:
        raise ParameterError(f"k0 must lie in [0, 1), got {k}")


# -- mean estimators ----------------------------------------------------------

def _x_resolvent(X, S, beta):
    """``X (I_p + beta S^{-1} X^T X)^{-1}``."""
    M = S + beta * mT(X) @ X
    return mT(S @ solve(M, mT(X)))


def g_mean(X, S, alpha: float, beta: float):
    """``X - alpha X (I + beta S^{-1} X^T X)^{-1}``."""
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    cholesky(S, "S")
    if alpha == 0:
        return X.copy()
    return X - alpha * _x_resolvent(X, S, beta)


def gb_mean(X, S, k0: float, form: str = "right"):
    """Closed-form generalized Bayes estimator of the mean matrix.

    ``form="right"`` evaluates ``X - k0 X {I_p + (1-k0) S^{-1} X^T X}^{-1}``;
    ``form="left"`` evaluates ``X - k0 {I_m + (1-k0) X S^{-1} X^T}^{-1} X``.
    The two are algebraically identical in both cases.
    """
    _check_k0(k0)
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    if form == "right":
        return g_mean(X, S, k0, 1.0 - k0)
    if form == "left":
        cholesky(S, "S")
        m = X.shape[-2]
        A = eye_like(X, m) + (1.0 - k0) * X @ solve(S, mT(X))
        return X - k0 * solve(A, X)
    raise ValueError(f"unknown form {form!r}")


def em_mean(X, S, n: int):
    """Efron-Morris estimator ``X - c_EM R F^{-1} R^T X``.

    R holds the ell leading eigenvectors of ``X S^{-1} X^T``.
    """
    X = np.asarray(X, dtype=float)
    m, p = X.shape[-2:]
    c = c_em(ModelDims(m, p, n))
    if c == 0:
        return X.copy()
    R, F = eigen_xsx(X, S)
    _reject_small(F)
    return X - c * (R / F[..., None, :]) @ mT(R) @ X


def _reject_small(F):
    top = np.max(F, axis=-1, keepdims=True)
    if np.any(F <= RANK_TOL * top) or np.any(top <= 0):
        raise DomainError("shrinkage with 1/f_i terms needs f_i > 1e-12 * max(F)")


def sh_mean(X, S, phi: ShrinkageFunction):
    """General diagonal shrinkage of the mean.

    p > m: ``(I_m - R Phi(F) R^T) X``;  m >= p: ``X (I_p - Q Phi(F) Q^{-1})``.
    """
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    m, p = X.shape[-2:]
    if p > m:
        R, F = eigen_xsx(X, S)
        return X - (R * phi(F)[..., None, :]) @ mT(R) @ X
    Q, F = simul_diag(X, S)
    Q_inv = mT(Q) @ S
    return X - X @ (Q * phi(F)[..., None, :]) @ Q_inv


# -- covariance estimators ----------------------------------------------------

def gb_cov(X, S, hyper: PriorHyper, form: str = "right"):
    """Closed-form generalized Bayes estimator of the covariance matrix.

    ``form="right"``: ``St - k0 St {I + (1-k0) S^{-1} X^T X}^{-1}`` with
    ``St = S / (m + c + 1)``.  ``form="left"``: for p > m
    ``[S + k0 X^T {I_m + (1-k0) X S^{-1} X^T}^{-1} X] / (a + 2m + p)`` and for
    m >= p ``[S + k0 {(X^T X)^{-1} + (1-k0) S^{-1}}^{-1}] / (a + m + 2p)``.
    """
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    m, p = X.shape[-2:]
    dims_mp = ModelDims(m, p, max(p, 1))
    scale = m + hyper.c + 1
    if scale <= 0:
        raise ParameterError(f"m + c + 1 must be positive, got {scale}")
    k = k0(hyper.a, hyper.c, dims_mp)
    _check_k0(k)
    cholesky(S, "S")
    beta = 1.0 - k
    if form == "right":
        M = S + beta * mT(X) @ X
        return sym(S - k * S @ solve(M, S)) / scale
    if form == "left":
        den = hyper.a + m + p + min(m, p)
        if p > m:
            A = eye_like(X, m) + beta * X @ solve(S, mT(X))
            return sym(S + k * mT(X) @ solve(A, X)) / den
        Ip = eye_like(S, p)
        inner = solve(mT(X) @ X, Ip) + beta * solve(S, Ip)
        return sym(S + k * solve(inner, Ip)) / den
    raise ValueError(f"unknown form {form!r}")


def g1_cov(X, S, n: int, alpha: float, beta: float):
    """``S/n + (alpha/n) X^T (I_m + beta X S^{-1} X^T)^{-1} X`` (p > m only)."""
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    m, p = X.shape[-2:]
    if not p > m:
        raise CaseError(f"g1_cov is defined for p > m, got m={m}, p={p}")
    cholesky(S, "S")
    A = eye_like(X, m) + beta * X @ solve(S, mT(X))
    return sym(S + alpha * mT(X) @ solve(A, X)) / n


def g2_cov(X, S, n: int, alpha: float, beta: float):
    """``(S/n) {I - alpha (I + beta S^{-1} X^T X)^{-1}}`` (m >= p, alpha < 1)."""
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    m, p = X.shape[-2:]
    if p > m:
        raise CaseError(f"g2_cov is defined for m >= p, got m={m}, p={p}")
    if not 0 <= alpha < 1:
        raise ParameterError(f"g2_cov needs 0 <= alpha < 1, got {alpha}")
    cholesky(S, "S")
    M = S + beta * mT(X) @ X
    return sym(S - alpha * S @ solve(M, S)) / n


def sh_cov(X, S, n: int, psi: ShrinkageFunction):
    """General diagonal shrinkage of ``S/n``.

    p > m: ``S/n - n^{-1} X^T R F^{-1} Psi(F) R^T X``;
    m >= p: ``S/n - n^{-1} Q^{-T} Psi(F) Q^{-1}``.
    """
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    m, p = X.shape[-2:]
    if p > m:
        R, F = eigen_xsx(X, S)
        _reject_small(F)
        RtX = mT(R) @ X
        corr = mT(RtX) @ (RtX * (psi(F) / F)[..., :, None])
    else:
        Q, F = simul_diag(X, S)
        Q_inv = mT(Q) @ S
        corr = mT(Q_inv) @ (Q_inv * psi(F)[..., :, None])
    return sym(S - corr) / n
