"""Labeled datasets: network features paired with exact max-min powers.

Every sample owns an integer seed derived from the dataset base seed and
its (K, L, index) coordinates, so datasets are bit-reproducible and any
sample's full coefficient set can be regenerated later from the seed alone.
A dataset on disk is a directory: ``manifest.json`` plus one NDJSON shard
per (K, L) configuration with one sample per line.
"""

import hashlib
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from . import jsonio
from .pipeline import sample_coeffs, solve_sample, spectral_efficiencies
from .scenario import NetworkConfig

FORMAT_VERSION = 1

log = logging.getLogger(__name__)


@dataclass
class Sample:
    k: int
    l: int
    seed: int
    ue_xy: np.ndarray    # (K, 2) UE positions, meters
    ap_xy: np.ndarray    # (L, 2) AP positions, meters
    z: np.ndarray        # (K, 2L + 2) unit-square features
    p_ul: np.ndarray     # (K,) optimal uplink powers, mW
    p_dl: np.ndarray     # (K,) optimal downlink powers, mW
    min_se_ul: float     # optimal max-min SE, bit/s/Hz
    min_se_dl: float

    def to_dict(self):
        return {"k": self.k, "l": self.l, "seed": self.seed,
                "ue_xy": self.ue_xy, "ap_xy": self.ap_xy, "z": self.z,
                "p_ul": self.p_ul, "p_dl": self.p_dl,
                "min_se_ul": self.min_se_ul, "min_se_dl": self.min_se_dl}

    @classmethod
    def from_dict(cls, d):
        return cls(k=int(d["k"]), l=int(d["l"]), seed=int(d["seed"]),
                   ue_xy=np.asarray(d["ue_xy"], dtype=np.float64),
                   ap_xy=np.asarray(d["ap_xy"], dtype=np.float64),
                   z=np.asarray(d["z"], dtype=np.float64),
                   p_ul=np.asarray(d["p_ul"], dtype=np.float64),
                   p_dl=np.asarray(d["p_dl"], dtype=np.float64),
                   min_se_ul=float(d["min_se_ul"]),
                   min_se_dl=float(d["min_se_dl"]))


@dataclass
class Dataset:
    config: NetworkConfig
    n_mc: int
    base_seed: int
    samples: list
    solver_opts: dict = field(default_factory=dict)

    def grid(self):
        return sorted({(s.k, s.l) for s in self.samples})

    def manifest(self):
        """Header describing the dataset without the sample payload."""
        counts = {}
        for s in self.samples:
            key = f"k{s.k}_l{s.l}"
            counts[key] = counts.get(key, 0) + 1
        cfg_json = jsonio.dumps(self.config.to_dict())
        return {"format_version": FORMAT_VERSION,
                "config": self.config.to_dict(),
                "config_hash": hashlib.sha256(cfg_json.encode()).hexdigest()[:16],
                "n_mc": self.n_mc,
                "base_seed": self.base_seed,
                "grid": [list(kl) for kl in self.grid()],
                "counts": counts,
                "n_samples": len(self.samples),
                "feature_bounds": [0.0, self.config.area_side],
                "solver_opts": self.solver_opts}


def sample_seed_for(base_seed, k, l, index, attempt=0):
    """Stable per-sample seed from the dataset seed and sample coordinates."""
    words = [base_seed, k, l, index] + ([attempt] if attempt else [])
    return int(np.random.SeedSequence(words).generate_state(1)[0])


def build_features(scenario, cfg):
    """Pack UE and AP positions, scaled to the unit square, into (K, 2L + 2)."""
    ue = scenario.ue_xy / cfg.area_side
    ap = (scenario.ap_xy / cfg.area_side).reshape(-1)
    return np.concatenate([ue, np.tile(ap, (scenario.k, 1))], axis=1)


def generate_sample(cfg, k, l, seed, n_mc=500, solver_opts=None):
    """Solve one realization end to end and package it as a labeled sample."""
    coeffs = sample_coeffs(cfg, k, l, seed, n_mc=n_mc)
    ul_sol, dl_sol = solve_sample(coeffs, cfg, solver_opts)
    se_ul, se_dl = spectral_efficiencies(coeffs, ul_sol.p, dl_sol.p)
    scen = coeffs.scenario
    return Sample(k=k, l=l, seed=seed, ue_xy=scen.ue_xy, ap_xy=scen.ap_xy,
                  z=build_features(scen, cfg), p_ul=ul_sol.p, p_dl=dl_sol.p,
                  min_se_ul=float(np.min(se_ul)), min_se_dl=float(np.min(se_dl)))


def generate_dataset(cfg, k_values, l_values, base_seed, n_per_config,
                     n_mc=500, solver_opts=None, max_attempts=5, verbose=False):
    """Labeled samples for every (K, L) in the grid k_values x l_values.

    A sample whose solver run fails is regenerated with a perturbed seed,
    up to max_attempts times, and the substitution is logged.
    """
    samples = []
    for k in k_values:
        for l in l_values:
            for i in range(n_per_config):
                for attempt in range(max_attempts):
                    seed = sample_seed_for(base_seed, k, l, i, attempt)
                    try:
                        samples.append(generate_sample(
                            cfg, k, l, seed, n_mc=n_mc, solver_opts=solver_opts))
                        break
                    except (RuntimeError, np.linalg.LinAlgError) as exc:
                        log.warning("sample (K=%d, L=%d, i=%d) attempt %d "
                                    "failed: %s; reseeding", k, l, i, attempt, exc)
                else:
                    raise RuntimeError(
                        f"sample (K={k}, L={l}, i={i}) failed "
                        f"{max_attempts} times")
            if verbose:
                print(f"generated {n_per_config} samples for K={k}, L={l}")
    return Dataset(config=cfg, n_mc=n_mc, base_seed=base_seed, samples=samples,
                   solver_opts=dict(solver_opts or {}))


def split_dataset(dataset, ratio=0.8, seed=0):
    """Shuffle and split per (K, L) group so both parts cover every config."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("split ratio must be in (0, 1)")
    rng = np.random.default_rng(seed)
    groups = {}
    for s in dataset.samples:
        groups.setdefault((s.k, s.l), []).append(s)
    train, test = [], []
    for key in sorted(groups):
        group = groups[key]
        order = rng.permutation(len(group))
        n_train = int(round(ratio * len(group)))
        train.extend(group[i] for i in order[:n_train])
        test.extend(group[i] for i in order[n_train:])
    return train, test


def _shard_name(k, l):
    return f"k{k}_l{l}.ndjson"


def save_dataset(dataset, out_dir):
    """Write manifest.json plus one NDJSON shard per (K, L) configuration."""
    os.makedirs(out_dir, exist_ok=True)
    jsonio.dump(dataset.manifest(), os.path.join(out_dir, "manifest.json"))
    shards = {}
    for s in dataset.samples:
        shards.setdefault((s.k, s.l), []).append(s)
    for (k, l), members in sorted(shards.items()):
        path = os.path.join(out_dir, _shard_name(k, l))
        with open(path, "w", encoding="ascii") as f:
            for s in members:
                f.write(jsonio.dumps(s.to_dict()) + "\n")


def load_dataset(in_dir):
    """Read a dataset directory written by save_dataset."""
    manifest = jsonio.load(os.path.join(in_dir, "manifest.json"))
    if manifest.get("format_version") != FORMAT_VERSION:
        raise ValueError(
            f"unsupported dataset format: {manifest.get('format_version')}")
    cfg = NetworkConfig.from_dict(manifest["config"])
    samples = []
    for k, l in manifest["grid"]:
        path = os.path.join(in_dir, _shard_name(k, l))
        with open(path, encoding="ascii") as f:
            for line in f:
                if line.strip():
                    samples.append(Sample.from_dict(jsonio.loads(line)))
    counts = {f"k{s.k}_l{s.l}": 0 for s in samples}
    for s in samples:
        counts[f"k{s.k}_l{s.l}"] += 1
    if counts != manifest["counts"]:
        raise ValueError("shard contents do not match the manifest counts")
    return Dataset(config=cfg, n_mc=int(manifest["n_mc"]),
                   base_seed=int(manifest["base_seed"]), samples=samples,
                   solver_opts=dict(manifest.get("solver_opts", {})))
