"""The posterior mean of Lambda, by importance sampling.

When b = a + ell - n the posterior is a matrix beta and E[Lambda | F] = k0 I,
which gives the closed-form estimators.  Other b values need the oracle.
"""

import numpy as np

from matshrink.estimators import PriorHyper, gb_mean, k0
from matshrink.model import ModelDims, rng_stream
from matshrink.posterior import gb_mean_general, posterior_lambda_mean

np.set_printoptions(precision=4, suppress=True)

dims = ModelDims(3, 6, 12)
F = np.array([5.0, 2.0, 0.5])
a, c = 2.0, 1.0
closed = PriorHyper.closed_form(a, c, dims)
print("k0 =", round(k0(a, c, dims), 6))

for b in (closed.b, closed.b + 5, closed.b + 20):
    est = posterior_lambda_mean(F, PriorHyper(a, b, c), dims, 100_000, rng_stream(1))
    print(f"\nb = {b:g}: ESS {est.ess:.0f}")
    print(est.lambda_mean)
    print("se diag:", np.diag(est.se))

# larger b pulls E[Lambda | F] down, most where f_i is large: less shrinkage of strong signal

rng = rng_stream(2)
X = rng.standard_normal((3, 6))
Z = rng.standard_normal((12, 6))
S = Z.T @ Z
general = gb_mean_general(X, S, 12, closed, 100_000, rng)
print("\nmax |general - closed form| =", np.max(np.abs(general.estimate - gb_mean(X, S, k0(a, c, dims)))),
      " max propagated se =", general.se.max())
