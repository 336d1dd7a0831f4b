# Train the allocator on the demo dataset from 03_generate_dataset.py.
#
# The model sees only coordinates; labels are the exact solver's powers.
# Training visits one (K, L) configuration at a time so every mini-batch
# is homogeneous, which sidesteps padding across different user counts.

import os

from cfpower import ModelConfig, NetworkConfig, generate_dataset, load_dataset, split_dataset
from cfpower.trainer import TrainConfig, eval_loss, save_weights, train

ds_dir = "demos/out/dataset"
if os.path.isdir(ds_dir):
    ds = load_dataset(ds_dir)
else:
    ds = generate_dataset(NetworkConfig(n_antennas=2), [2, 4], [9],
                          base_seed=123, n_per_config=25, n_mc=500, verbose=True)

train_samples, test_samples = split_dataset(ds, ratio=0.8, seed=0)
print(f"{len(train_samples)} training / {len(test_samples)} held-out samples")

model_cfg = ModelConfig(p_ul_max=ds.config.p_ul_max,
                        p_dl_max_per_ap=ds.config.p_dl_max_per_ap)
tcfg = TrainConfig(epochs_per_config=10, batch_size=16, seed=0)
weights, report = train(train_samples, model_cfg, tcfg, verbose=True)

print(f"\n{report.n_params} parameters, {report.n_steps} steps, "
      f"{report.wall_time_s:.1f} s")
for key, losses in sorted(report.config_losses.items()):
    print(f"  config ({key}): loss {losses[0]:.3f} -> {losses[-1]:.3f}")
print(f"held-out loss: {eval_loss(weights, test_samples):.3f}")

os.makedirs("demos/out", exist_ok=True)
save_weights(weights, "demos/out/weights.json")
print("saved demos/out/weights.json")
