"""Which parameter choices provably improve on the unbiased estimators?

Prints the recommended parameters at the simulated shapes together with
every condition they are checked against.
"""

from matshrink import conditions as cond
from matshrink.errors import NotApplicable
from matshrink.model import ModelDims

shapes = [ModelDims(5, 10, 10), ModelDims(25, 10, 10), ModelDims(5, 10, 25),
          ModelDims(20, 10, 25), ModelDims(30, 10, 25)]

for dims in shapes:
    print(f"\n(p, n, m) = ({dims.p}, {dims.n}, {dims.m})  [{dims.case}]")
    for label in ("GB", "G1", "G2"):
        try:
            config = cond.default_config(dims, label)
        except NotApplicable as exc:
            print(f"  {label}: {exc}")
            continue
        params = ", ".join(f"{k}={v:.4f}" for k, v in config.extras.items())
        own = cond.design_condition(dims, config)
        print(f"  {label}: {params}")
        print(f"      design condition {own.name}: {'PASS' if own.passed else 'FAIL'}")
        for v in cond.config_checks(dims, config):
            state = "n/a" if v.note.startswith("not applicable") else ("PASS" if v.passed else "FAIL")
            print(f"      {v.name:<32} {state}")

# the two constants behind the generalized Bayes defaults
print("\nc_low at (10, 25, 5):", round(cond.c_low(ModelDims(5, 10, 25)), 7))
print("a_upp at (10, 25, 20):", round(cond.a_upp(ModelDims(20, 10, 25)), 7))
