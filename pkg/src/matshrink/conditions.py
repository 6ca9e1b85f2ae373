"""Dominance and minimaxity conditions, the constants ``c_low`` / ``a_upp`` and
the recommended default configurations of the four compared estimators.

All conditions are closed inequalities; comparisons allow a relative slack
of 1e-12 so that configurations placed exactly on a boundary pass.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import NotApplicable
from .estimators import GParams, PriorHyper, c_em, k0
from .model import ModelDims

SLACK = 1e-12


def _le(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + SLACK * max(abs(lhs), abs(rhs), 1.0)


def _require(cond: bool, why: str):
    if not cond:
        raise NotApplicable(why)


@dataclass(frozen=True)
class Verdict:
    """Outcome of one condition check: ``value <= bound`` passes."""

    name: str
    value: float
    bound: float
    passed: bool
    note: str = ""


# -- mean matrix --------------------------------------------------------------

def mean_matrix_bound(dims: ModelDims) -> float:
    """Largest ``alpha / beta`` for matrix-loss dominance over X."""
    _require(dims.p > dims.m + 1, "matrix-loss condition needs p > m + 1")
    return 2 * (dims.p - dims.m - 1) / (dims.n - dims.p + 2 * dims.m + 1)


def mean_scalar_bound(dims: ModelDims) -> float:
    """Largest ``alpha / beta`` for scalar-loss dominance over X."""
    _require(abs(dims.p - dims.m) > 1, "scalar-loss condition needs |p - m| > 1")
    return 2 * (abs(dims.p - dims.m) - 1) / (dims.n - dims.p + 2 * dims.ell + 1)


def check_mean_matrix(dims: ModelDims, g: GParams) -> bool:
    """``alpha <= 2(p-m-1) beta / (n-p+2m+1)``."""
    return _le(g.alpha, mean_matrix_bound(dims) * g.beta)


def check_mean_scalar(dims: ModelDims, g: GParams) -> bool:
    """``alpha <= 2(|p-m|-1) beta / (n-p+2 ell+1)``."""
    return _le(g.alpha, mean_scalar_bound(dims) * g.beta)


# -- covariance ---------------------------------------------------------------

def cov_pgtm_bound(dims: ModelDims) -> float:
    _require(dims.p > dims.m, "Stein-loss condition for the expanding family needs p > m")
    return 2 * (dims.p - dims.m) / (dims.n - dims.p + dims.m)


def check_cov_pgtm(dims: ModelDims, g: GParams) -> bool:
    """``alpha / beta <= 2(p-m) / (n-p+m)``, written without the division."""
    return _le(g.alpha, cov_pgtm_bound(dims) * g.beta)


def cov_mgep_limit(dims: ModelDims, alpha: float) -> float:
    """Limit of the covariance URE as all eigenvalues tend to 0, for the m >= p
    family ``alpha / (1 + beta f)``: ``p [(1-alpha) - log(1-alpha) - 1]``.

    Positive for every ``alpha > 0``, so no member of that family has a
    nonpositive risk-difference estimate everywhere.
    """
    return dims.p * ((1 - alpha) - math.log1p(-alpha) - 1)


# -- Kullback-Leibler ---------------------------------------------------------

def kl_pgtm_bound(dims: ModelDims) -> float:
    _require(dims.p > dims.m + 1, "KL condition for p > m needs p > m + 1")
    return 2 * (dims.p - dims.m - 1) / (dims.n - dims.p + 2 * dims.m + 1)


def check_kl_pgtm(dims: ModelDims, g: GParams) -> bool:
    """``alpha / beta <= 2(p-m-1) / (n-p+2m+1)``."""
    return _le(g.alpha, kl_pgtm_bound(dims) * g.beta)


def kl_mgep_sides(dims: ModelDims, g: GParams) -> tuple[float, float]:
    """Left and right sides of the m >= p KL condition."""
    _require(dims.m >= dims.p, "KL condition for m >= p needs m >= p")
    m, p, n = dims.m, dims.p, dims.n
    a, b = g.alpha, g.beta
    lhs = (n + p + 1) * a + (m * a * b / (2 * (1 - a)) if a < 1 else float("inf"))
    rhs = 2 * (m - p - 1) * b + 2 * (m / n) * b
    return lhs, rhs


def check_kl_mgep(dims: ModelDims, g: GParams) -> bool:
    """``alpha < 1`` and ``(n+p+1) alpha + m alpha beta / (2(1-alpha)) <= 2(m-p-1) beta + 2 (m/n) beta``."""
    lhs, rhs = kl_mgep_sides(dims, g)
    return g.alpha < 1 and _le(lhs, rhs)


def c_low(dims: ModelDims) -> float:
    """Smallest ``c`` for which the p > m generalized Bayes pair dominates under KL."""
    _require(dims.p > dims.m + 1, "c_low is defined for p > m + 1")
    return _c_low_value(dims)


def _c_low_value(dims):
    m, p, n = dims.m, dims.p, dims.n
    return (n * n - (p - m) * n - (p - 1) * (m + 1)) / (n + p - 1)


def c_low_exists(dims: ModelDims) -> bool:
    """Whether some ``c`` in ``[c_low, n - 2m)`` (and above -2) exists."""
    m, p, n = dims.m, dims.p, dims.n
    if not (p > (3 * m + 1) / 2):
        return False
    return n > (p - 1) * (m - 1) / (2 * p - 3 * m - 1)


def a_upp(dims: ModelDims) -> float:
    """Largest ``a`` for which the m >= p generalized Bayes pair dominates under KL."""
    _require(dims.m >= dims.p, "a_upp is defined for m >= p")
    m, p, n = dims.m, dims.p, dims.n
    return -m - 2 * p + n * (1 + 2 * (m - p - 1 + m / n) / (n + m / 2 + p + 1))


def a_low(dims: ModelDims) -> float:
    """Strict lower bound ``n - m - p - 1`` paired with :func:`a_upp`."""
    return dims.n - dims.m - dims.p - 1.0


def a_upp_exists(dims: ModelDims) -> bool:
    m, p, n = dims.m, dims.p, dims.n
    if not (m > (3 * p + 1) / 2):
        return False
    return n > (2 * p * p + m * p - 5 * m - 1) / (2 * (2 * m - 3 * p - 1))


# -- generalized Bayes corollaries --------------------------------------------

def gb_matrix_mean_bound(dims: ModelDims) -> float:
    _require(dims.p > dims.m + 1, "matrix-loss condition needs p > m + 1")
    return 2 * (dims.p - dims.m - 1) / (dims.n + dims.p - 1)


def gb_scalar_mean_bound(dims: ModelDims) -> float:
    """k0 bound for scalar-loss minimaxity, denominator ``n-p+2 ell+2|p-m|-1``.

    Equals the alpha/beta condition rewritten for ``alpha = k0, beta = 1 - k0``.
    """
    _require(abs(dims.p - dims.m) > 1, "scalar-loss condition needs |p - m| > 1")
    d = abs(dims.p - dims.m)
    return 2 * (d - 1) / (dims.n - dims.p + 2 * dims.ell + 2 * d - 1)


def check_gb_matrix_mean(dims: ModelDims, hyper: PriorHyper) -> bool:
    """Matrix-loss minimaxity of the closed-form generalized Bayes mean (p > m + 1)."""
    bound = gb_matrix_mean_bound(dims)
    if hyper.violations(dims, closed_form=True):
        return False
    return _le(k0(hyper.a, hyper.c, dims), bound)


def check_gb_scalar_mean(dims: ModelDims, hyper: PriorHyper) -> bool:
    bound = gb_scalar_mean_bound(dims)
    m, p = dims.m, dims.p
    ell = dims.ell
    a, c = hyper.a, hyper.c
    if not hyper.is_closed_form(dims):
        return False
    if not (a > -m - ell - 1 and ell - m - 2 < c < a + p):
        return False
    return _le(k0(a, c, dims), bound)


# -- default configurations ---------------------------------------------------

class Label(str, enum.Enum):
    GB = "GB"
    G1 = "G1"
    G2 = "G2"
    EM = "EM"


@dataclass(frozen=True)
class EstimatorConfig:
    """Parameters of one compared estimator pair (mean, covariance).

    ``mean_params`` is ``k0`` (GB), ``c_EM`` (EM) or :class:`GParams`;
    ``cov_params`` is :class:`PriorHyper` (GB), :class:`GParams` or ``None``
    (EM pairs with ``S/n``).
    """

    label: Label
    mean_params: float | GParams
    cov_params: PriorHyper | GParams | None
    extras: dict = field(default_factory=dict, compare=False)


def default_config(dims: ModelDims, label: Label | str) -> EstimatorConfig:
    """Recommended parameter choice for ``label`` at ``dims``.

    Raises
    ------
    NotApplicable
        If the label has no default for these dimensions (G1 needs |p - m| > 1).
    """
    label = Label(label)
    m, p, n = dims.m, dims.p, dims.n
    if label is Label.GB:
        if dims.p_gt_m:
            a = n - 2 * m - p
            # p = m + 1 reuses the same formula outside its stated range
            c = _c_low_value(dims)
        else:
            a = a_upp(dims)
            c = n - m - 1
        hyper = PriorHyper.closed_form(a, c, dims)
        k = k0(a, c, dims)
        return EstimatorConfig(label, k, hyper, {"a": a, "c": c, "b": hyper.b, "k0": k})
    if label is Label.G1:
        if p > m + 1:
            g = GParams(p - m - 1, n - p + 2 * m + 1)
        elif m > p + 1:
            g = GParams((m - p - 1) / (n + m), (n + p + 1) / (n + m))
        else:
            raise NotApplicable("G1 defaults need |p - m| > 1")
        return EstimatorConfig(label, g, g, {"alpha": g.alpha, "beta": g.beta})
    if label is Label.G2:
        if dims.p_gt_m:
            g = GParams(p - m, n - p + m)
        else:
            g = GParams((m - p) / (n + m - p), n / (n + m - p))
        return EstimatorConfig(label, g, g, {"alpha": g.alpha, "beta": g.beta})
    c = c_em(dims)
    return EstimatorConfig(label, c, None, {"c_em": c})


def config_checks(dims: ModelDims, config: EstimatorConfig) -> list[Verdict]:
    """Evaluate every applicable condition for a configuration."""
    if config.label is Label.EM:
        return []
    if config.label is Label.GB:
        k = float(config.mean_params)
        g = GParams(k, 1 - k)
    else:
        g = config.mean_params
    ratio = g.alpha / g.beta if g.beta > 0 else float("inf")
    out = []

    def add(name, bound_fn, check_fn, value=ratio, note=""):
        try:
            bound = bound_fn(dims)
        except NotApplicable as exc:
            out.append(Verdict(name, value, float("nan"), False, f"not applicable: {exc}"))
            return
        out.append(Verdict(name, value, bound, check_fn(dims, g), note))

    add("mean/matrix-loss alpha/beta", mean_matrix_bound, check_mean_matrix)
    add("mean/scalar-loss alpha/beta", mean_scalar_bound, check_mean_scalar)
    if dims.p_gt_m:
        add("cov/Stein-loss alpha/beta", cov_pgtm_bound, check_cov_pgtm)
        add("KL alpha/beta", kl_pgtm_bound, check_kl_pgtm)
    else:
        lhs, rhs = kl_mgep_sides(dims, g)
        out.append(Verdict("KL (m>=p) lhs<=rhs", lhs, rhs, check_kl_mgep(dims, g)))
        if g.alpha > 0:
            out.append(Verdict(
                "cov/Stein-loss (m>=p)", cov_mgep_limit(dims, g.alpha), 0.0, False,
                "no Stein-loss dominance possible: URE limit as F -> 0 is positive for alpha > 0",
            ))
    return out


def design_condition(dims: ModelDims, config: EstimatorConfig) -> Verdict:
    """The condition a default configuration was chosen to satisfy.

    GB: ``c >= c_low`` (p > m) or ``a_low < a <= a_upp`` (m >= p).
    G1: the scalar-loss mean bound, plus ``0 < alpha < 1`` when m > p + 1.
    G2: the Stein-loss covariance bound (p > m) or ``0 <= alpha < 1`` (m >= p).
    EM has no condition here and raises :class:`NotApplicable`.
    """
    label = config.label
    if label is Label.GB:
        h = config.cov_params
        if dims.p_gt_m:
            lo = _c_low_value(dims)
            ok = _le(lo, h.c) and -2 < h.c and (dims.p == dims.m + 1 or h.c < dims.n - 2 * dims.m)
            return Verdict("GB KL c >= c_low", h.c, lo, ok)
        hi = a_upp(dims)
        return Verdict("GB KL a <= a_upp", h.a, hi, a_low(dims) < h.a and _le(h.a, hi))
    g = config.mean_params
    if label is Label.G1:
        ok = check_mean_scalar(dims, g) and (dims.p_gt_m or 0 < g.alpha < 1)
        return Verdict("G1 mean/scalar-loss alpha/beta", g.alpha / g.beta, mean_scalar_bound(dims), ok)
    if label is Label.G2:
        if dims.p_gt_m:
            return Verdict("G2 cov/Stein-loss alpha/beta", g.alpha / g.beta, cov_pgtm_bound(dims),
                           check_cov_pgtm(dims, g))
        return Verdict("G2 0 <= alpha < 1", g.alpha, 1.0, 0 <= g.alpha < 1)
    raise NotApplicable("EM has no design condition")
