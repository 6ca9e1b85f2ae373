"""Domain types, seeded sampling of the matrix-variate normal/Wishart model and
construction of the simulation scenarios."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._linalg import cholesky, mT
from .errors import CholeskyFailure, DegreesOfFreedomError, DimensionError, ParameterError


@dataclass(frozen=True)
class ModelDims:
    """Dimensions of the model: ``X`` is m x p, ``S`` is p x p Wishart with n d.o.f."""

    m: int
    p: int
    n: int

    def __post_init__(self):
        for name in ("m", "p", "n"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DimensionError(f"{name} must be a positive integer, got {v!r}")
        if self.n < self.p:
            raise DimensionError(f"need n >= p for a nonsingular Wishart, got n={self.n}, p={self.p}")

    @property
    def ell(self) -> int:
        return min(self.m, self.p)

    @property
    def p_gt_m(self) -> bool:
        """True in the p > m case; p == m is handled by the m >= p branch."""
        return self.p > self.m

    @property
    def case(self) -> str:
        return "p>m" if self.p_gt_m else "m>=p"


def check_spd(S, what="S", rtol=1e-12):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"{what} must be square, got shape {S.shape}")
    scale = max(np.max(np.abs(S)), np.finfo(float).tiny)
    if np.max(np.abs(S - S.T)) > rtol * scale:
        raise CholeskyFailure(f"{what} is not symmetric")
    cholesky(S, what)
    return S


@dataclass(frozen=True)
class DataPair:
    """Observed pair ``(X, S)``; validated on construction."""

    X: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        S = check_spd(np.atleast_2d(np.asarray(self.S, dtype=float)))
        if X.ndim != 2 or X.shape[1] != S.shape[0]:
            raise DimensionError(f"X has shape {X.shape} but S is {S.shape}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "S", S)

    def dims(self, n: int) -> ModelDims:
        m, p = self.X.shape
        return ModelDims(m, p, n)


@dataclass(frozen=True)
class Parameters:
    Theta: np.ndarray
    Sigma: np.ndarray

    def __post_init__(self):
        Sigma = check_spd(self.Sigma, "Sigma")
        Theta = np.atleast_2d(np.asarray(self.Theta, dtype=float))
        if Theta.shape[1] != Sigma.shape[0]:
            raise DimensionError(f"Theta has shape {Theta.shape} but Sigma is {Sigma.shape}")
        object.__setattr__(self, "Theta", Theta)
        object.__setattr__(self, "Sigma", Sigma)


class CovKind(str, enum.Enum):
    EQUICORR = "EQUICORR"  # sigma_kl = 0.9 + 0.1 delta_kl
    AR = "AR"  # sigma_kl = 0.5 ** |k - l|


class ThetaMode(str, enum.Enum):
    FIXED_PER_SCENARIO = "FIXED_PER_SCENARIO"
    PER_REPLICATION = "PER_REPLICATION"


@dataclass(frozen=True)
class ScenarioSpec:
    dims: ModelDims
    s0: float
    q: float
    cov_kind: CovKind = CovKind.EQUICORR
    seed: int = 0

    def __post_init__(self):
        if not self.s0 >= 0:
            raise ParameterError(f"s0 must be nonnegative, got {self.s0}")
        object.__setattr__(self, "cov_kind", CovKind(self.cov_kind))


# -- random streams -----------------------------------------------------------

def rng_stream(seed: int, *index: int) -> np.random.Generator:
    """Deterministic generator addressed by ``(seed, *index)``.

    Streams with different index tuples are independent (``SeedSequence``
    spawn keys), and the same address always reproduces the same draws.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.PCG64(ss))


def sample_matrix_normal(Theta, Sigma, rng: np.random.Generator, size=None):
    """Draw ``X ~ N_{m x p}(Theta, I_m (x) Sigma)`` as ``Theta + Z L^T``."""
    Theta = np.asarray(Theta, dtype=float)
    L = cholesky(np.asarray(Sigma, dtype=float), "Sigma")
    shape = Theta.shape if size is None else (size,) + Theta.shape
    Z = rng.standard_normal(shape)
    return Theta + Z @ L.T


def _bartlett_factor(df: float, p: int, rng: np.random.Generator, size=None):
    # diagonal: sqrt(chi2(df - i)), i = 0..p-1; strictly lower part: N(0, 1)
    if not df > p - 1:
        raise DegreesOfFreedomError(f"degrees of freedom {df} must exceed p - 1 = {p - 1}")
    batch = () if size is None else (size,)
    A = np.zeros(batch + (p, p))
    shapes = np.broadcast_to((df - np.arange(p)) / 2.0, batch + (p,))
    A[..., np.arange(p), np.arange(p)] = np.sqrt(2.0 * rng.standard_gamma(shapes))
    rows, cols = np.tril_indices(p, k=-1)
    A[..., rows, cols] = rng.standard_normal(batch + (rows.size,))
    return A


def sample_wishart_fractional(df: float, Sigma, rng: np.random.Generator, size=None):
    """Wishart draw allowing real ``df > p - 1`` (used for matrix-beta proposals)."""
    Sigma = np.asarray(Sigma, dtype=float)
    p = Sigma.shape[0]
    L = cholesky(Sigma, "Sigma")
    LA = L @ _bartlett_factor(df, p, rng, size)
    W = LA @ mT(LA)
    return 0.5 * (W + mT(W))


def sample_wishart(n: int, Sigma, rng: np.random.Generator, size=None):
    """Draw ``S ~ W_p(n, Sigma)`` by the Bartlett construction ``L A A^T L^T``.

    Raises
    ------
    DegreesOfFreedomError
        If ``n < p``.
    """
    Sigma = np.asarray(Sigma, dtype=float)
    p = Sigma.shape[0]
    if n < p:
        raise DegreesOfFreedomError(f"need n >= p for a nonsingular Wishart, got n={n}, p={p}")
    return sample_wishart_fractional(float(n), Sigma, rng, size)


# -- scenarios ----------------------------------------------------------------

def covariance_matrix(kind: CovKind | str, p: int) -> np.ndarray:
    kind = CovKind(kind)
    k = np.arange(p)
    if kind is CovKind.EQUICORR:
        return 0.9 + 0.1 * np.eye(p)
    return 0.5 ** np.abs(k[:, None] - k[None, :])


def leading_count(p: int) -> int:
    """Number of arithmetic-progression singular values: floor(p/5), at least 2."""
    return max(p // 5, 2)


def singular_values(dims: ModelDims, s0: float, q: float) -> np.ndarray:
    """The ell singular values of Theta.

    The first ``min(K, ell)`` follow ``s0 + s0 (i-1)/(K-1)`` with
    ``K = max(floor(p/5), 2)``; the rest equal ``s0 / 10**q``.
    """
    K = leading_count(dims.p)
    s = np.full(dims.ell, s0 / 10.0**q)
    k = min(K, dims.ell)
    i = np.arange(1, k + 1)
    s[:k] = s0 + s0 * (i - 1) / (K - 1)
    return s


def random_orthonormal(k: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """First ``cols`` columns of the Q factor of a k x k standard normal matrix,
    with R's diagonal made nonnegative."""
    Q, R = np.linalg.qr(rng.standard_normal((k, k)))
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return (Q * signs)[:, :cols]


def build_theta(dims: ModelDims, s0: float, q: float, rng: np.random.Generator) -> np.ndarray:
    U = random_orthonormal(dims.m, dims.ell, rng)
    V = random_orthonormal(dims.p, dims.ell, rng)
    return (U * singular_values(dims, s0, q)) @ V.T


def build_scenario(spec: ScenarioSpec, rng: np.random.Generator | None = None) -> Parameters:
    """Mean and covariance parameters for one simulation scenario.

    Singular vectors are always drawn (so the stream position does not depend
    on ``s0``); ``s0 = 0`` gives ``Theta = 0`` exactly.
    """
    if rng is None:
        rng = rng_stream(spec.seed)
    Theta = build_theta(spec.dims, spec.s0, spec.q, rng)
    return Parameters(Theta, covariance_matrix(spec.cov_kind, spec.dims.p))


# -- matrix CSV ---------------------------------------------------------------

def read_matrix(path, spd: bool = False) -> np.ndarray:
    """Load a header-less comma-separated matrix; optionally validate SPD."""
    try:
        A = np.loadtxt(Path(path), delimiter=",", ndmin=2, dtype=float)
    except ValueError as exc:
        raise DimensionError(f"{path}: malformed matrix CSV ({exc})") from exc
    if not np.all(np.isfinite(A)):
        raise DimensionError(f"{path}: non-finite entries")
    if spd:
        check_spd(A, str(path))
    return A


def format_matrix(A) -> str:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in A)


def write_matrix(path, A) -> None:
    Path(path).write_text(format_matrix(A))
