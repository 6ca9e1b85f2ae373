"""Closed-form generalized Bayes shrinkage for normal mean and covariance matrices."""

__version__ = "0.1.0"
