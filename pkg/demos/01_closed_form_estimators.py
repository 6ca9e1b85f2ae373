"""Shrinking a matrix-normal mean and its covariance in closed form.

One draw of (X, S) from a low-rank mean, then the four estimator pairs
side by side.  Losses are relative to the true (Theta, Sigma).
"""

import numpy as np

from matshrink.conditions import default_config
from matshrink.model import CovKind, ModelDims, ScenarioSpec, build_scenario, rng_stream
from matshrink.model import sample_matrix_normal, sample_wishart
from matshrink.risk import loss_kl, loss_scalar_quad, loss_stein
from matshrink.simulation import apply_config

np.set_printoptions(precision=4, suppress=True)

# p > m: 5 rows of 10 correlated variables, 25 degrees of freedom for S
dims = ModelDims(m=5, p=10, n=25)
truth = build_scenario(ScenarioSpec(dims, s0=1.0, q=1.0, cov_kind=CovKind.EQUICORR, seed=1))
print("singular values of Theta:", np.linalg.svd(truth.Theta, compute_uv=False))

rng = rng_stream(2)
X = sample_matrix_normal(truth.Theta, truth.Sigma, rng)
S = sample_wishart(dims.n, truth.Sigma, rng)

print(f"\n{'':4}{'L_Q':>10}{'L_S':>10}{'KL':>10}")
lq0 = loss_scalar_quad(X, truth.Theta, truth.Sigma)
ls0 = loss_stein(S / dims.n, truth.Sigma)
print(f"{'X':4}{lq0:10.3f}{ls0:10.3f}{loss_kl(X, S / dims.n, truth.Theta, truth.Sigma):10.3f}")
for label in ("EM", "G1", "G2", "GB"):
    config = default_config(dims, label)
    mean, cov = apply_config(config, X, S, dims.n)
    print(f"{label:4}{loss_scalar_quad(mean, truth.Theta, truth.Sigma):10.3f}"
          f"{loss_stein(cov, truth.Sigma):10.3f}{loss_kl(mean, cov, truth.Theta, truth.Sigma):10.3f}")

# the generalized Bayes pair with the recommended hyperparameters
gb = default_config(dims, "GB")
print("\nGB hyperparameters:", {k: round(v, 6) for k, v in gb.extras.items()})

# one draw says little; the harness averages thousands (see 05_table_row.py)
