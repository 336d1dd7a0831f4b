"""Sequential per-configuration training loop and weight-file serialization.

The training set is grouped by (K, L); each group is visited in turn for a
fixed number of epochs, and every mini-batch is homogeneous in (K, L) so a
batch stacks to a single well-shaped input tensor. Targets are normalized
before the loss: uplink powers by the per-UE cap, downlink powers by the
sample's total budget, which puts both heads on one scale. Runs are
deterministic in the training seed.
"""

import time
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from . import jsonio
from . import nncore as nn
from .model import ModelConfig, forward_z, init_weights, mse_loss

WEIGHTS_FORMAT_VERSION = 1


@dataclass
class TrainConfig:
    epochs_per_config: int = 10
    batch_size: int = 32
    lr: float = 0.001
    weight_decay: float = 0.01
    seed: int = 0
    # Order in which the (K, L) groups are trained; None means sorted
    # ascending. Groups may repeat as long as each pair's total epoch
    # budget stays at epochs_per_config per appearance.
    config_order: list = None
    # One extra epoch interleaving batches from all groups, off by default.
    finetune_pass: bool = False

    def __post_init__(self):
        if self.epochs_per_config < 0:
            raise ValueError("epochs_per_config must be nonnegative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")


@dataclass
class TrainReport:
    config_losses: dict = field(default_factory=dict)
    n_steps: int = 0
    n_params: int = 0
    wall_time_s: float = 0.0
    weights_path: str = None

    def to_dict(self):
        return {"config_losses": self.config_losses, "n_steps": self.n_steps,
                "n_params": self.n_params, "wall_time_s": self.wall_time_s,
                "weights_path": self.weights_path}


def sample_loss(weights, sample, training=False, rng=None):
    """Normalized squared-error loss of one sample as a graph tensor."""
    cfg = weights.cfg
    p_ul, p_dl = forward_z(weights, sample.z, training=training, rng=rng)
    budget = sample.l * cfg.p_dl_max_per_ap
    loss_ul = mse_loss(nn.scale(p_ul, 1.0 / cfg.p_ul_max),
                       sample.p_ul[:, None] / cfg.p_ul_max)
    loss_dl = mse_loss(nn.scale(p_dl, 1.0 / budget),
                       sample.p_dl[:, None] / budget)
    return nn.add(loss_ul, loss_dl)


def _group_by_config(samples):
    groups = {}
    for s in samples:
        groups.setdefault((s.k, s.l), []).append(s)
    return groups


def _train_batch(weights, opt, batch, rng_dropout, where):
    losses = [sample_loss(weights, s, training=True, rng=rng_dropout)
              for s in batch]
    loss = nn.scale(reduce(nn.add, losses), 1.0 / len(batch))
    if not np.isfinite(loss.value):
        raise FloatingPointError(f"non-finite training loss at {where}")
    opt.zero_grad()
    loss.backward()
    opt.step()
    return float(loss.value) * len(batch)


def train(train_set, model_cfg, train_cfg, verbose=False):
    """Train freshly initialized weights group by group; returns (weights, report).

    Visits the (K, L) groups in ``config_order``, running
    ``epochs_per_config`` epochs of shuffled homogeneous mini-batches on
    each before moving on. Optimizer state persists across groups.
    """
    groups = _group_by_config(train_set)
    if not groups:
        raise ValueError("training set is empty")
    order = train_cfg.config_order or sorted(groups)
    missing = [kl for kl in order if kl not in groups]
    if missing:
        raise ValueError(f"no training samples for configurations {missing}")

    init_ss, shuffle_ss, dropout_ss = np.random.SeedSequence(
        train_cfg.seed).spawn(3)
    weights = init_weights(model_cfg, seed=init_ss)
    rng_shuffle = np.random.default_rng(shuffle_ss)
    rng_dropout = np.random.default_rng(dropout_ss)

    opt = nn.AdamW(weights.parameters(), lr=train_cfg.lr,
                   weight_decay=train_cfg.weight_decay,
                   no_decay=weights.no_decay_parameters())

    t0 = time.perf_counter()
    report = TrainReport(n_params=weights.param_count())
    for k, l in order:
        samples = groups[(k, l)]
        key = f"{k},{l}"
        losses = report.config_losses.setdefault(key, [])
        for epoch in range(train_cfg.epochs_per_config):
            perm = rng_shuffle.permutation(len(samples))
            total = 0.0
            for start in range(0, len(perm), train_cfg.batch_size):
                batch = [samples[i]
                         for i in perm[start:start + train_cfg.batch_size]]
                where = f"config ({k},{l}) epoch {epoch} batch {start}"
                total += _train_batch(weights, opt, batch, rng_dropout, where)
                report.n_steps += 1
            losses.append(total / len(samples))
            if verbose:
                print(f"({k},{l}) epoch {epoch + 1}/"
                      f"{train_cfg.epochs_per_config}  loss {losses[-1]:.6f}")

    if train_cfg.finetune_pass:
        batches = []
        for k, l in sorted(groups):
            samples = groups[(k, l)]
            perm = rng_shuffle.permutation(len(samples))
            for start in range(0, len(perm), train_cfg.batch_size):
                batch = [samples[i]
                         for i in perm[start:start + train_cfg.batch_size]]
                batches.append(((k, l), batch))
        for i in rng_shuffle.permutation(len(batches)):
            (k, l), batch = batches[i]
            _train_batch(weights, opt, batch, rng_dropout,
                         f"finetune config ({k},{l})")
            report.n_steps += 1

    report.wall_time_s = time.perf_counter() - t0
    return weights, report


def eval_loss(weights, samples):
    """Mean normalized squared error over samples, dropout disabled."""
    if not samples:
        raise ValueError("evaluation set is empty")
    total = sum(float(sample_loss(weights, s, training=False).value) for s in samples)
    return total / len(samples)


def save_weights(weights, path):
    payload = {"format_version": WEIGHTS_FORMAT_VERSION,
               "model_config": weights.cfg.to_dict(),
               "params": {name: t.value for name, t in weights.named_parameters()}}
    jsonio.dump(payload, path)


def load_weights(path):
    d = jsonio.load(path)
    if d.get("format_version") != WEIGHTS_FORMAT_VERSION:
        raise ValueError(f"unsupported weights format: {d.get('format_version')}")
    cfg = ModelConfig.from_dict(d["model_config"])
    weights = init_weights(cfg, seed=0)
    params = dict(weights.named_parameters())
    saved = d["params"]
    if set(saved) != set(params):
        raise ValueError("weight file parameter names do not match the architecture")
    for name, tensor in params.items():
        arr = np.asarray(saved[name], dtype=np.float64)
        if arr.shape != tensor.value.shape:
            raise ValueError(f"shape mismatch for {name}: {arr.shape} vs {tensor.value.shape}")
        tensor.value = arr
    return weights
