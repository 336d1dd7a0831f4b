# Score the trained allocator against the exact optimum and baselines,
# then render the CDFs and a network-scaling sweep.
#
# Every held-out sample is re-simulated from its stored seed, so all
# methods face exactly the channel statistics that produced the label.
# Expects demos/out from the two previous scripts (falls back to fresh
# tiny artifacts if missing).

import os

from cfpower import (ModelConfig, NetworkConfig, evaluate, export_csv,
                     export_plots, generate_dataset, load_dataset,
                     monotone_fraction, plot_sweep, split_dataset, summarize,
                     sweep_k, theoretical_complexity)
from cfpower.trainer import TrainConfig, load_weights, train

cfg = NetworkConfig(n_antennas=2)

if os.path.isdir("demos/out/dataset") and os.path.exists("demos/out/weights.json"):
    ds = load_dataset("demos/out/dataset")
    weights = load_weights("demos/out/weights.json")
else:
    ds = generate_dataset(cfg, [2, 4], [9], base_seed=123, n_per_config=25, n_mc=500)
    weights, _ = train(split_dataset(ds, 0.8, 0)[0], ModelConfig(),
                       TrainConfig(epochs_per_config=10, batch_size=16, seed=0))

_, test_samples = split_dataset(ds, ratio=0.8, seed=0)
records = evaluate(weights, ds, samples=test_samples)
summary = summarize(records)

print(f"{summary['n_records']} held-out samples; median worst-UE SE (bit/s/Hz):")
for method in ("optimal", "model", "epa", "fpa"):
    m = summary["median_min_se"][method]
    r = summary["median_ratio"][method]
    print(f"  {method:>8}: UL {m['ul']:.3f} ({r['ul']:.0%} of optimal)   "
          f"DL {m['dl']:.3f} ({r['dl']:.0%})")

os.makedirs("demos/out", exist_ok=True)
export_csv(records, "demos/out/eval.csv")
for path in export_plots(records, "demos/out"):
    print("wrote", path)

# Scaling trend: the equalized SE drops as more UEs share 16 APs.
sweep = sweep_k(cfg, [4, 8, 12], l=16, n_seeds=5, n_mc=300, base_seed=7)
print("\nmean optimal worst-UE SE vs K:",
      [round(float(v), 3) for v in sweep["min_se_ul"].mean(axis=0)])
print("fraction of per-seed drops:",
      monotone_fraction(sweep["min_se_ul"], decreasing=True))
print("wrote", plot_sweep(sweep, "demos/out/sweep_k.svg"))

# The model replaces the whole label pipeline with this many multiplies.
flops = theoretical_complexity(10, 16)
print(f"\nforward pass at K=10, L=16: {flops['inference_flops']} multiplies")
