"""First row of the simulation table, at Theta = 0.

Uses the bundled config; 5000 replications take a few seconds.
Run the full grid with `matshrink simulate src/matshrink/configs/table1_full.yaml --out t1.csv`.
"""

from pathlib import Path

from matshrink.simulation import load_grid, run_experiment

import matshrink

config = Path(matshrink.__file__).parent / "configs" / "table1_row1.yaml"
reports = run_experiment(load_grid(config))

print(f"{'':4}{'PRIR_Theta':>16}{'PRIR_Sigma':>16}{'PRIR_KL':>16}")
for r in reports:
    cells = []
    for v, se in ((r.prir_theta, r.se_theta), (r.prir_sigma, r.se_sigma), (r.prir_kl, r.se_kl)):
        cells.append("-" if v != v else f"{v:7.2f} ({se:.2f})")
    print(f"{r.estimator.value:4}" + "".join(f"{c:>16}" for c in cells))
