"""Risk of the time-average kernel estimator across horizons.

Run ``python demos/rate_demo.py [model_id] [n_rep]``; prints the risk table
and the fitted log-log slope (about -1 in dimension 1).
"""

import sys

import numpy as np

from jumpkde.experiments import rate_study
from jumpkde.model import get_model


def main(model_id="ou_cpois_d1", n_rep=50):
    spec = get_model(model_id)
    grid = [250, 500, 1000, 2000] if spec.dim == 1 else [500, 1000, 2000, 4000]
    rep = rate_study(spec, grid, np.zeros(spec.dim), n_rep=n_rep, seed=1)
    print(f"{spec.description}\nreference mu(0) = {rep.reference:.6f}")
    print(f"{'T':>6} {'h':>8} {'mse':>10} {'T*Var':>8} {'mse*T/logT':>11}")
    for T, h, m, tv, c in zip(rep.T_grid, rep.bandwidth, rep.mse, rep.T_var, rep.compensated):
        print(f"{T:6.0f} {h:8.4f} {m:10.3e} {tv:8.4f} {c:11.4f}")
    print(f"fitted slope {rep.fitted_slope:.3f} +- {rep.slope_se:.3f}")


if __name__ == "__main__":
    main(*(sys.argv[1:2] or ["ou_cpois_d1"]), *(int(a) for a in sys.argv[2:3]))
