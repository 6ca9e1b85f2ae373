"""Loss functions, unbiased risk estimators and the percentage relative
improvement in risk (PRIR).

The unbiased risk estimators are functions of the eigenvalues ``F`` only
(descending, length ell) and of a diagonal shrinkage function with its
derivative.  Every divided difference that appears in them is a divided
difference of a single function of one eigenvalue:

* mean: ``h(f) = f phi(f)``,
* covariance: ``psi(f)``.

With ``ties="raise"`` (the default) near-equal eigenvalues raise
:class:`TieError`.  With ``ties="derivative"`` a tied pair's divided
difference is replaced by the mean of the two derivatives, which is its limit
when ``phi_i`` depends on ``f_i`` alone (true for every family in
:mod:`matshrink.estimators`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import logdet_spd, mT, solve
from .errors import DomainError, TieError
from .estimators import ShrinkageFunction
from .model import ModelDims

TIE_RTOL = 1e-9


# -- losses -------------------------------------------------------------------

def loss_matrix_quad(est, Theta, Sigma):
    """``(est - Theta) Sigma^{-1} (est - Theta)^T``."""
    D = np.asarray(est, dtype=float) - np.asarray(Theta, dtype=float)
    L = D @ solve(np.asarray(Sigma, dtype=float), mT(D))
    return 0.5 * (L + mT(L))


def loss_scalar_quad(est, Theta, Sigma):
    """``tr{(est - Theta) Sigma^{-1} (est - Theta)^T}``."""
    D = np.asarray(est, dtype=float) - np.asarray(Theta, dtype=float)
    return np.sum(D * mT(solve(np.asarray(Sigma, dtype=float), mT(D))), axis=(-2, -1))


def loss_stein(est_cov, Sigma):
    """``tr(est Sigma^{-1}) - log|est Sigma^{-1}| - p``; log-determinants via Cholesky."""
    est_cov = np.asarray(est_cov, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    p = Sigma.shape[-1]
    tr = np.trace(solve(Sigma, est_cov), axis1=-2, axis2=-1)
    logdet = logdet_spd(est_cov, "estimate") - logdet_spd(Sigma, "Sigma")
    return tr - logdet - p


def loss_kl(est_mean, est_cov, Theta, Sigma):
    """KL divergence ``(m/2) L_S + (1/2) L_Q`` between the fitted and true
    matrix-normal densities."""
    m = np.shape(Theta)[-2]
    return 0.5 * m * loss_stein(est_cov, Sigma) + 0.5 * loss_scalar_quad(est_mean, Theta, Sigma)


@dataclass(frozen=True)
class LossBundle:
    l_matrix: np.ndarray
    l_scalar: float
    l_stein: float
    l_kl: float


def loss_bundle(est_mean, est_cov, Theta, Sigma) -> LossBundle:
    lm = loss_matrix_quad(est_mean, Theta, Sigma)
    lq = np.trace(lm, axis1=-2, axis2=-1)
    ls = loss_stein(est_cov, Sigma)
    m = np.shape(Theta)[-2]
    return LossBundle(lm, lq, ls, 0.5 * m * ls + 0.5 * lq)


# -- unbiased risk estimation -------------------------------------------------

@dataclass(frozen=True)
class UreReport:
    """Unbiased risk estimation summary.

    ``phi_star`` is only available in the p > m case (matrix loss).
    ``risk_scalar = mp + tr_phi_star`` estimates the scalar quadratic risk and
    ``delta_cov`` / ``delta_kl`` estimate risk differences against ``S/n`` and
    ``(X, S/n)``.
    """

    phi_star: np.ndarray | None
    tr_phi_star: np.ndarray | float
    d: np.ndarray
    risk_scalar: np.ndarray | float
    delta_cov: np.ndarray | float | None = None
    delta_kl: np.ndarray | float | None = None

    def risk_matrix(self, R, p: int):
        """Unbiased estimate ``p I_m + R Phi* R^T`` of the matrix-loss risk."""
        if self.phi_star is None:
            raise DomainError("matrix-loss risk estimate is only defined for p > m")
        m = R.shape[-2]
        return p * np.eye(m) + (R * self.phi_star[..., None, :]) @ mT(R)


def _divided_differences(F, g, dg, ties):
    """Matrix of ``(g_i - g_j) / (f_i - f_j)`` (zero on the diagonal)."""
    diff = F[..., :, None] - F[..., None, :]
    scale = np.max(np.abs(F), axis=-1)[..., None, None]
    off = ~np.eye(F.shape[-1], dtype=bool)
    tied = off & (np.abs(diff) <= TIE_RTOL * scale)
    if np.any(tied):
        if ties == "raise":
            raise TieError("tied eigenvalues: unbiased risk estimate contains 1/(f_i - f_j)")
        if ties != "derivative":
            raise ValueError(f"unknown ties mode {ties!r}")
    safe = np.where(tied | ~off, 1.0, diff)
    dd = (g[..., :, None] - g[..., None, :]) / safe
    limit = 0.5 * (dg[..., :, None] + dg[..., None, :])
    return np.where(off, np.where(tied, limit, dd), 0.0)


def _check_F(F, dims):
    F = np.asarray(F, dtype=float)
    if F.shape[-1] != dims.ell:
        raise DomainError(f"F must have length ell = {dims.ell}, got {F.shape[-1]}")
    return F


def _mean_parts(F, phi: ShrinkageFunction, dims: ModelDims, ties):
    ph = phi(F)
    dph = phi.derivative(F)
    h = F * ph
    dd = _divided_differences(F, h, ph + F * dph, ties)
    A = dims.n - dims.p + 2 * dims.ell - 3
    diag_terms = lambda B: A * F * ph**2 - 2 * B * ph - 4 * F**2 * ph * dph - 4 * F * dph
    return ph, h, dd, diag_terms


def ure_mean_components(F, phi: ShrinkageFunction, dims: ModelDims, ties="raise"):
    """Per-eigenvalue terms ``phi*_i`` of the matrix-loss URE (p > m only)."""
    F = _check_F(F, dims)
    if not dims.p_gt_m:
        raise DomainError("per-component (matrix loss) URE requires p > m")
    _, h, dd, diag_terms = _mean_parts(F, phi, dims, ties)
    B = dims.p - dims.m + 1
    return diag_terms(B) - 2 * (h + 1) * np.sum(dd, axis=-1)


def ure_trace(F, phi: ShrinkageFunction, dims: ModelDims, ties="raise"):
    """``tr(Phi*)``: the scalar-loss URE is ``mp + tr(Phi*)`` in both cases."""
    F = _check_F(F, dims)
    _, h, dd, diag_terms = _mean_parts(F, phi, dims, ties)
    B = abs(dims.p - dims.m) + 1
    # sum_{i<j} [DD(h^2) + 2 DD(h)] with DD(h^2)_ij = (h_i + h_j) DD(h)_ij
    pair = (h[..., :, None] + h[..., None, :] + 2.0) * dd
    upper = np.triu(np.ones(pair.shape[-2:], dtype=bool), k=1)
    return np.sum(diag_terms(B), axis=-1) - 2 * np.sum(np.where(upper, pair, 0.0), axis=(-2, -1))


def _cov_raw(F, psi: ShrinkageFunction, dims: ModelDims, ties):
    """``sum_i {-d_i psi_i + 2 f_i psi_i' + 2 sum_{j>i} DD(psi)_ij f_j - n log(1 - psi_i)}``."""
    F = _check_F(F, dims)
    ps = psi(F)
    if np.any(ps >= 1):
        raise DomainError("psi_i must be < 1 for log(1 - psi_i)")
    dps = psi.derivative(F)
    d = cov_d(dims)
    dd = _divided_differences(F, ps, dps, ties)
    upper = np.triu(np.ones(dd.shape[-2:], dtype=bool), k=1)
    cross = np.sum(np.where(upper, dd * F[..., None, :], 0.0), axis=-1)
    terms = -d * ps + 2 * F * dps + 2 * cross - dims.n * np.log1p(-ps)
    return np.sum(terms, axis=-1)


def cov_d(dims: ModelDims) -> np.ndarray:
    """``d_i = n - p + 2i - 1`` for i = 1..ell."""
    return dims.n - dims.p + 2 * np.arange(1, dims.ell + 1) - 1.0


def ure_cov_delta(F, psi: ShrinkageFunction, dims: ModelDims, ties="raise"):
    """Unbiased estimate of the Stein-risk difference against ``S/n``."""
    return _cov_raw(F, psi, dims, ties) / dims.n


def ure_kl_delta(F, phi: ShrinkageFunction, psi: ShrinkageFunction, dims: ModelDims, ties="raise"):
    """Unbiased estimate of the KL-risk difference against ``(X, S/n)``.

    Evaluates ``2 Delta = tr(Phi*) + (m/n) * [covariance sum]`` term by term.
    """
    two_delta = ure_trace(F, phi, dims, ties) + dims.m / dims.n * _cov_raw(F, psi, dims, ties)
    return 0.5 * two_delta


def ure_mean(F, phi: ShrinkageFunction, dims: ModelDims, ties="raise") -> UreReport:
    tr = ure_trace(F, phi, dims, ties)
    comps = ure_mean_components(F, phi, dims, ties) if dims.p_gt_m else None
    return UreReport(comps, tr, cov_d(dims), dims.m * dims.p + tr)


def ure_report(F, phi, psi, dims: ModelDims, ties="raise") -> UreReport:
    base = ure_mean(F, phi, dims, ties)
    dcov = ure_cov_delta(F, psi, dims, ties)
    return UreReport(
        base.phi_star, base.tr_phi_star, base.d, base.risk_scalar,
        dcov, 0.5 * base.tr_phi_star + 0.5 * dims.m * dcov,
    )


# -- PRIR ---------------------------------------------------------------------

def prir(risk_base, risk_est):
    """``100 (risk_base - risk_est) / risk_base``."""
    if np.any(np.asarray(risk_base) <= 0):
        raise DomainError("baseline risk must be positive")
    return 100.0 * (risk_base - risk_est) / risk_base


def prir_with_se(loss_base, loss_est):
    """PRIR from paired per-replication losses with a delta-method standard error.

    Returns ``(prir, se)``; ``se`` is that of ``100 (1 - mean(est) / mean(base))``
    using the paired covariance of the two loss samples.
    """
    b = np.asarray(loss_base, dtype=float)
    e = np.asarray(loss_est, dtype=float)
    N = b.size
    mb, me = b.mean(), e.mean()
    value = float(prir(mb, me))
    if N < 2:
        return value, float("nan")
    vb, ve = b.var(ddof=1), e.var(ddof=1)
    cov = np.cov(b, e, ddof=1)[0, 1]
    r = me / mb
    var_r = (ve - 2 * r * cov + r * r * vb) / (mb * mb * N)
    return value, float(100.0 * np.sqrt(max(var_r, 0.0)))
