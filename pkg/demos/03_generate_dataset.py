# Build a small labeled dataset: geometry in, optimal powers out.
#
# Each sample stores the raw coordinates, the normalized feature matrix
# the model consumes, and the exact max-min powers as labels. Shards are
# newline-delimited JSON, one file per (K, L) configuration, described by
# a manifest. Identical seeds give byte-identical directories.

import time

from cfpower import NetworkConfig, generate_dataset, load_dataset, save_dataset, split_dataset

cfg = NetworkConfig(n_antennas=2)

t0 = time.time()
ds = generate_dataset(cfg, k_values=[2, 4], l_values=[9], base_seed=123,
                      n_per_config=25, n_mc=500, verbose=True)
print(f"\n{len(ds.samples)} samples in {time.time() - t0:.1f} s")

s = ds.samples[0]
print(f"\nfirst sample: K={s.k}, L={s.l}, seed {s.seed}")
print("feature row 0 (UE xy then AP grid, normalized):", s.z[0][:6].round(3), "...")
print("UL label (mW):", s.p_ul.round(2))
print("DL label (mW):", s.p_dl.round(2), "sums to", s.p_dl.sum().round(2))
print(f"optimal worst-UE SE: UL {s.min_se_ul:.3f}, DL {s.min_se_dl:.3f} bit/s/Hz")

out_dir = "demos/out/dataset"
save_dataset(ds, out_dir)
reloaded = load_dataset(out_dir)
print(f"\nwrote and reloaded {out_dir}: {len(reloaded.samples)} samples")

train, test = split_dataset(ds, ratio=0.8, seed=0)
print(f"stratified split: {len(train)} train / {len(test)} test")
