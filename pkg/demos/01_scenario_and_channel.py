# Draw one random network and look at its channel statistics.
#
# A square service area holds L multi-antenna access points that jointly
# serve K single-antenna users. Everything downstream (estimation quality,
# interference coupling, power allocation) is driven by the large-scale
# gain table built here.

import numpy as np

from cfpower import NetworkConfig, build_large_scale, sample_scenario, tau_split
from cfpower.pipeline import sample_coeffs

cfg = NetworkConfig(n_antennas=2)
print(f"area {cfg.area_side:.0f} m, {cfg.n_antennas} antennas per AP, "
      f"noise {cfg.sigma2_dbm:.1f} dBm")

scen = sample_scenario(cfg, k=4, l=9, seed=7)
print("\nUE positions (m):\n", np.round(scen.ue_xy, 1))
print("AP grid occupies the same square; first three APs:\n",
      np.round(scen.ap_xy[:3], 1))

table = build_large_scale(scen, cfg, seed=11)
print("\nlarge-scale gains (dB), UEs x APs:\n", np.round(table.beta_db, 1))
print("shadow fading std per entry (dB):", np.round(np.std(table.shadow_db), 2))

# The coherence block pays K pilot symbols, then splits evenly.
split = tau_split(cfg.tau_c, scen.k)
print(f"\ncoherence block: {split.tau_p} pilots, {split.tau_u} UL, "
      f"{split.tau_d} DL of {cfg.tau_c} uses")

# Monte-Carlo hardening turns channel randomness into fixed per-UE
# coefficients; the SINR becomes a deterministic function of powers.
coeffs = sample_coeffs(cfg, k=4, l=9, sample_seed=7, n_mc=500)
print("\nUL coherent gains a_k:", np.array2string(coeffs.ul.a, precision=3))
print("UL noise scales  c_k:", np.array2string(coeffs.ul.c, precision=3))
print("interference matrix b (row = victim UE):\n",
      np.array2string(coeffs.ul.b, precision=3))
