# Solve one instance exactly and verify the solution is really optimal.
#
# Max-min power allocation equalizes every user's SINR: any user above the
# common target could donate power to someone below it. The bisection
# solver certifies a feasible/infeasible target bracket; for K <= 3 a
# brute-force grid search provides an independent check.

import numpy as np

from cfpower import NetworkConfig, brute_force_maxmin, epa, fpa
from cfpower.pipeline import sample_coeffs, solve_sample, spectral_efficiencies

cfg = NetworkConfig(n_antennas=2)
coeffs = sample_coeffs(cfg, k=3, l=9, sample_seed=42, n_mc=500)

ul, dl = solve_sample(coeffs, cfg)
print("uplink powers (mW):  ", np.round(ul.p, 3), f" cap {cfg.p_ul_max:.0f}")
print("downlink powers (mW):", np.round(dl.p, 2),
      f" budget {cfg.dl_budget(coeffs.l):.0f}")
print("\nequalized SINRs:")
print("  UL", np.array2string(ul.sinr, precision=6))
print("  DL", np.array2string(dl.sinr, precision=6))
print(f"  bracket width UL: {(ul.t_upper - ul.t_lower) / ul.t_lower:.2e} relative")

# Independent grid search over the saturated faces of the power box.
grid_ul = brute_force_maxmin("ul", coeffs.ul, coeffs.sigma2, cfg.p_ul_max)
grid_dl = brute_force_maxmin("dl", coeffs.dl, coeffs.sigma2, cfg.dl_budget(coeffs.l))
print(f"\ngrid oracle UL min-SINR {grid_ul.t:.6f} vs bisection {ul.t:.6f}")
print(f"grid oracle DL min-SINR {grid_dl.t:.6f} vs bisection {dl.t:.6f}")

# Simple baselines for contrast.
for name, (pu, pd) in {
    "optimal": (ul.p, dl.p),
    "equal power": (epa("ul", 3, 9, cfg), epa("dl", 3, 9, cfg)),
    "fractional": (fpa("ul", coeffs.table.beta, cfg), fpa("dl", coeffs.table.beta, cfg)),
}.items():
    se_ul, se_dl = spectral_efficiencies(coeffs, pu, pd)
    print(f"{name:>12}: worst-UE SE  UL {np.min(se_ul):.3f}  DL {np.min(se_dl):.3f} bit/s/Hz")
