import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from matshrink.errors import CaseError, CholeskyFailure, DomainError, ParameterError
from matshrink.estimators import (
    GParams, PriorHyper, ShrinkageFunction, c_em, em_mean, finite_difference, g1_cov, g2_cov,
    g_mean, gb_cov, gb_mean, inverse, k0, rational, rational_expanding, sh_cov, sh_mean, zero,
)
from matshrink.model import ModelDims, rng_stream

from conftest import CASE_DIMS, random_pair, relerr


def test_scalar_fixture():
    # X = 2, S = 2, k0 = 1/2: 2 - 0.5 * 2 / (1 + 0.5 * 2) = 1.5
    assert np.isclose(gb_mean(np.array([[2.0]]), np.array([[2.0]]), 0.5)[0, 0], 1.5)


def test_zero_x_gives_zero_mean(rng):
    S = random_pair(rng, 1, 4, 8)[1]
    assert np.all(gb_mean(np.zeros((3, 4)), S, 0.4) == 0)


def test_k0_value_and_range():
    d = ModelDims(5, 10, 25)
    assert np.isclose(k0(5, 13.117647058823529, d), 0.235294117647, atol=1e-10)
    with pytest.raises(ParameterError):
        gb_mean(np.ones((1, 1)), np.eye(1), 1.0)
    with pytest.raises(ParameterError):
        gb_mean(np.ones((1, 1)), np.eye(1), -0.1)


def test_c_em():
    assert np.isclose(c_em(ModelDims(5, 10, 10)), 4 / 11)
    assert c_em(ModelDims(4, 4, 8)) == 0


@pytest.mark.parametrize("m,p,n", CASE_DIMS)
def test_gb_mean_dual_forms(rng, m, p, n):
    for _ in range(20):
        X, S = random_pair(rng, m, p, n)
        assert relerr(gb_mean(X, S, 0.3, "left"), gb_mean(X, S, 0.3, "right")) < 1e-10


@pytest.mark.parametrize("m,p,n", CASE_DIMS)
def test_gb_cov_dual_forms(rng, m, p, n):
    d = ModelDims(m, p, n)
    a = n - 2 * m - p if p > m else n - m - p - 0.5
    c = (a + p + max(-2.0, p - m - 2.0)) / 2
    hyper = PriorHyper.closed_form(a, c, d)
    assert 0 <= k0(a, c, d) < 1
    for _ in range(20):
        X, S = random_pair(rng, m, p, n)
        assert relerr(gb_cov(X, S, hyper, "left"), gb_cov(X, S, hyper, "right")) < 1e-10


def test_gb_cov_scale_normalization(rng):
    # left denominators coincide with m + c + 1 only through k0; check one case by hand
    m, p, n = 3, 6, 12
    X, S = random_pair(rng, m, p, n)
    hyper = PriorHyper(1.0, 1.0 + 3 - 12, 2.0)
    k = k0(1.0, 2.0, ModelDims(m, p, n))
    A = np.eye(m) + (1 - k) * X @ np.linalg.solve(S, X.T)
    ref = (S + k * X.T @ np.linalg.solve(A, X)) / (1.0 + 2 * m + p)
    assert relerr(gb_cov(X, S, hyper), ref) < 1e-12


@pytest.mark.parametrize("m,p,n", [(3, 6, 12), (4, 5, 9)])
def test_sh_specializations_pgtm(rng, m, p, n):
    X, S = random_pair(rng, m, p, n)
    assert relerr(sh_mean(X, S, rational(0.7, 1.3)), g_mean(X, S, 0.7, 1.3)) < 1e-10
    assert relerr(sh_cov(X, S, n, rational_expanding(0.7, 1.3)), g1_cov(X, S, n, 0.7, 1.3)) < 1e-10
    assert relerr(sh_mean(X, S, inverse(c_em(ModelDims(m, p, n)))), em_mean(X, S, n)) < 1e-10


@pytest.mark.parametrize("m,p,n", [(6, 3, 12), (4, 4, 8)])
def test_sh_specializations_mgep(rng, m, p, n):
    X, S = random_pair(rng, m, p, n)
    assert relerr(sh_mean(X, S, rational(0.4, 0.9)), g_mean(X, S, 0.4, 0.9)) < 1e-10
    assert relerr(sh_cov(X, S, n, rational(0.4, 0.9)), g2_cov(X, S, n, 0.4, 0.9)) < 1e-10
    assert relerr(sh_mean(X, S, inverse(c_em(ModelDims(m, p, n)))), em_mean(X, S, n)) < 1e-10


def test_em_direct_formula(rng):
    m, p, n = 3, 7, 10
    X, S = random_pair(rng, m, p, n)
    M = X @ np.linalg.solve(S, X.T)
    ref = X - c_em(ModelDims(m, p, n)) * np.linalg.solve(M, X)
    assert relerr(em_mean(X, S, n), ref) < 1e-10


def test_zero_shrinkage_is_identity(rng):
    X, S = random_pair(rng, 3, 5, 9)
    assert np.array_equal(g_mean(X, S, 0.0, 2.0), X)
    assert relerr(sh_mean(X, S, zero()), X) < 1e-14
    assert relerr(sh_cov(X, S, 9, zero()), S / 9) < 1e-14


def test_case_guards(rng):
    X, S = random_pair(rng, 3, 5, 9)
    with pytest.raises(CaseError):
        g2_cov(X, S, 9, 0.3, 1.0)
    X2, S2 = random_pair(rng, 6, 3, 9)
    with pytest.raises(CaseError):
        g1_cov(X2, S2, 9, 0.3, 1.0)
    with pytest.raises(ParameterError):
        g2_cov(X2, S2, 9, 1.0, 1.0)
    with pytest.raises(CholeskyFailure):
        g_mean(X, -S, 0.3, 1.0)
    with pytest.raises(DomainError):
        em_mean(np.zeros((3, 5)), S, 9)


def test_batched_equals_loop(rng):
    X = rng.standard_normal((5, 3, 6))
    Z = rng.standard_normal((5, 12, 6))
    S = np.swapaxes(Z, -1, -2) @ Z
    hyper = PriorHyper.closed_form(1.0, 2.0, ModelDims(3, 6, 12))
    for fn in (lambda x, s: g_mean(x, s, 0.5, 1.2), lambda x, s: gb_cov(x, s, hyper),
               lambda x, s: em_mean(x, s, 12), lambda x, s: g1_cov(x, s, 12, 2.0, 13.0)):
        batch = fn(X, S)
        for k in range(5):
            assert relerr(batch[k], fn(X[k], S[k])) < 1e-12


@given(st.integers(0, 10_000), st.sampled_from(CASE_DIMS))
@settings(max_examples=40, deadline=None)
def test_right_equivariance(seed, dims):
    # Theta_hat(X A, A^T S A) = Theta_hat(X, S) A for nonsingular A
    m, p, n = dims
    rng = rng_stream(seed)
    X, S = random_pair(rng, m, p, n)
    A = rng.standard_normal((p, p)) + 3 * np.eye(p)
    lhs = g_mean(X @ A, A.T @ S @ A, 0.6, 0.8)
    assert relerr(lhs, g_mean(X, S, 0.6, 0.8) @ A) < 1e-8
    if m >= p:
        lhs = g2_cov(X @ A, A.T @ S @ A, n, 0.3, 0.8)
        assert relerr(lhs, A.T @ g2_cov(X, S, n, 0.3, 0.8) @ A) < 1e-8


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_shrinkage_reduces_norm(seed):
    # 0 <= alpha <= 1 pulls every singular direction toward zero
    rng = rng_stream(seed)
    X, S = random_pair(rng, 3, 6, 12)
    est = g_mean(X, S, 0.8, 0.5)
    assert np.linalg.norm(est @ np.linalg.inv(np.linalg.cholesky(S)).T) <= \
        np.linalg.norm(X @ np.linalg.inv(np.linalg.cholesky(S)).T) + 1e-12


def test_covariance_estimates_are_spd(rng):
    m, p, n = 6, 3, 12
    X, S = random_pair(rng, m, p, n)
    for C in (g2_cov(X, S, n, 0.5, 1.0), gb_cov(X, S, PriorHyper.closed_form(2.0, 1.0, ModelDims(m, p, n)))):
        assert np.all(np.linalg.eigvalsh(C) > 0)


def test_shrinkage_function_derivatives():
    F = np.array([3.0, 1.0, 0.25])
    for fn in (rational(0.7, 1.1), rational_expanding(0.7, 1.1), inverse(0.3)):
        assert np.allclose(fn.derivative(F), finite_difference(fn.phi, F), rtol=1e-6)
    no_d = ShrinkageFunction(lambda f: f**2)
    assert np.allclose(no_d.derivative(F), 2 * F, rtol=1e-6)


def test_gparams_validation():
    with pytest.raises(ParameterError):
        GParams(-1.0, 1.0)


def test_prior_hyper_violations():
    d = ModelDims(5, 10, 25)
    assert PriorHyper.closed_form(5, 13.1, d).violations(d) == []
    assert PriorHyper(5, 0.0, 13.1).violations(d, closed_form=True)
    with pytest.raises(ParameterError):
        PriorHyper(5, -15, 40).validate(d)
