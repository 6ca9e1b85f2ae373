"""Exception and warning types raised across the toolkit."""

import numpy as np


class ShrinkageError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(ShrinkageError, ValueError):
    """A hyperparameter or tuning constant lies outside its admissible range."""


class DimensionError(ShrinkageError, ValueError):
    """Matrix shapes are inconsistent with the model dimensions."""


class CholeskyFailure(ShrinkageError, np.linalg.LinAlgError):
    """A matrix required to be symmetric positive definite is not."""


class DegreesOfFreedomError(ParameterError):
    """Wishart or matrix-beta degrees of freedom are too small."""


class RankError(ShrinkageError, np.linalg.LinAlgError):
    """A Gram matrix required to have full rank is singular."""


class CaseError(ParameterError):
    """An operation defined for one of the (p > m, m >= p) cases was applied to the other."""


class TieError(ShrinkageError, ValueError):
    """Eigenvalues are tied where a divided difference 1/(f_i - f_j) is needed."""


class DomainError(ShrinkageError, ValueError):
    """Argument outside the mathematical domain of a formula (e.g. log of a non-positive value)."""


class NotApplicable(ShrinkageError, ValueError):
    """A dominance condition is not defined for the given dimensions."""


class IllConditionedWeights(UserWarning):
    """Importance weights collapsed: effective sample size below 1% of draws."""
