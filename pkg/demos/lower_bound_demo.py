"""KL budget of the two-dimensional hypothesis family at several horizons."""

import math

import numpy as np

from jumpkde.hypotheses import build_f0, build_family_d2, kl_table, amplitude_cap
from jumpkde.model import LevyMeasure


def main():
    base = build_f0(0.25, 2, np.eye(2))
    v = amplitude_cap(base, 0.5) / math.sqrt(2)
    jumps = LevyMeasure.gaussian_compound_poisson(1.0, 1.0, dim=2)
    print(f"c_eta = {base.c_eta:.5f}, v = {v:.3e}")
    for T in (1e4, 1e5):
        H = math.sqrt(math.log(T) / T)
        fam = build_family_d2(base, None, H, H, v, T)
        reps = kl_table(fam, np.eye(2), np.eye(2), jumps)
        gir = max(r.girsanov for r in reps)
        print(f"T={T:.0e} H={H:.4f} |J_T|={fam.size:3d} max Girsanov {gir:.3e} "
              f"(bound {reps[0].prop_bound:.3e}) mean KL/log|J_T| {np.mean([r.ratio_to_log_JT for r in reps]):.2e}")


if __name__ == "__main__":
    main()
