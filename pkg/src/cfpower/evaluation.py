"""Evaluation of learned allocations against exact solutions and baselines.

Every sample's coefficients are regenerated from its stored seed, so the
model, the baselines and the recorded optimum are scored on exactly the
channel statistics that produced the label.
"""

import csv
import time
from dataclasses import dataclass

import numpy as np

from .dataset import build_features
from .model import predict_powers
from .pipeline import sample_coeffs, solve_sample, spectral_efficiencies
from .solvers import epa, fpa

METHODS = ("optimal", "model", "epa", "fpa")


@dataclass
class EvalRecord:
    k: int
    l: int
    seed: int
    min_se: dict    # method -> {"ul": float, "dl": float}

    def to_dict(self):
        return {"k": self.k, "l": self.l, "seed": self.seed, "min_se": self.min_se}


def _min_se_pair(coeffs, p_ul, p_dl):
    se_ul, se_dl = spectral_efficiencies(coeffs, p_ul, p_dl)
    return {"ul": float(np.min(se_ul)), "dl": float(np.min(se_dl))}


def evaluate(weights, dataset, samples=None):
    """Score the model, EPA and FPA against the stored optimum per sample."""
    cfg = dataset.config
    records = []
    for s in (dataset.samples if samples is None else samples):
        coeffs = sample_coeffs(cfg, s.k, s.l, s.seed, n_mc=dataset.n_mc)
        p_ul_hat, p_dl_hat = predict_powers(weights, s.z)
        allocations = {
            "optimal": (s.p_ul, s.p_dl),
            "model": (p_ul_hat, p_dl_hat),
            "epa": (epa("ul", s.k, s.l, cfg), epa("dl", s.k, s.l, cfg)),
            "fpa": (fpa("ul", coeffs.table.beta, cfg), fpa("dl", coeffs.table.beta, cfg)),
        }
        min_se = {name: _min_se_pair(coeffs, pu, pd)
                  for name, (pu, pd) in allocations.items()}
        records.append(EvalRecord(k=s.k, l=s.l, seed=s.seed, min_se=min_se))
    return records


def summarize(records):
    """Medians of the min-SE per method and of the ratio to the optimum."""
    if not records:
        raise ValueError("no records to summarize")
    out = {"n_records": len(records), "median_min_se": {}, "median_ratio": {}}
    for method in METHODS:
        out["median_min_se"][method] = {
            d: float(np.median([r.min_se[method][d] for r in records]))
            for d in ("ul", "dl")}
    for method in METHODS:
        out["median_ratio"][method] = {
            d: float(np.median([r.min_se[method][d] / r.min_se["optimal"][d]
                                for r in records]))
            for d in ("ul", "dl")}
    return out


def cdf(values):
    """Empirical CDF support points and levels."""
    x = np.sort(np.asarray(values, dtype=np.float64))
    if x.size == 0:
        raise ValueError("empty sample")
    return x, np.arange(1, x.size + 1) / x.size


def _row_seed(base_seed, row):
    return int(np.random.SeedSequence([base_seed, row]).generate_state(1)[0])


def _sweep(cfg, axis, values, fixed, n_seeds, n_mc, base_seed):
    ul = np.zeros((n_seeds, len(values)))
    dl = np.zeros((n_seeds, len(values)))
    for i in range(n_seeds):
        seed = _row_seed(base_seed, i)
        for j, v in enumerate(values):
            k, l = (v, fixed) if axis == "k" else (fixed, v)
            coeffs = sample_coeffs(cfg, k, l, seed, n_mc=n_mc)
            ul_sol, dl_sol = solve_sample(coeffs, cfg)
            pair = _min_se_pair(coeffs, ul_sol.p, dl_sol.p)
            ul[i, j] = pair["ul"]
            dl[i, j] = pair["dl"]
    return {"axis": axis, "values": list(values), "fixed": fixed,
            "n_seeds": n_seeds, "n_mc": n_mc, "base_seed": base_seed,
            "min_se_ul": ul, "min_se_dl": dl}


def sweep_k(cfg, k_values, l, n_seeds=20, n_mc=500, base_seed=0):
    """Optimal max-min SE as the UE count grows, APs and seed held fixed."""
    return _sweep(cfg, "k", list(k_values), l, n_seeds, n_mc, base_seed)


def sweep_l(cfg, l_values, k, n_seeds=20, n_mc=500, base_seed=0):
    """Optimal max-min SE as the AP count grows, UEs and seed held fixed."""
    return _sweep(cfg, "l", list(l_values), k, n_seeds, n_mc, base_seed)


def monotone_fraction(per_seed, decreasing=False):
    """Fraction of adjacent column pairs moving in the stated direction."""
    per_seed = np.asarray(per_seed, dtype=np.float64)
    diff = np.diff(per_seed, axis=1)
    hits = diff < 0 if decreasing else diff > 0
    return float(np.mean(hits))


def theoretical_complexity(k, l, n_layers=2, d_model=32, batch_size=None):
    """Closed-form multiply counts of the forward pass (and a train step).

    Inference: each encoder layer costs K*d^2 for the projections plus
    K^2*d for attention, and the embeddings touch all 2L + 2 input
    coordinates per UE. Training roughly doubles per sample in a batch for
    the backward pass.
    """
    infer = n_layers * (k * d_model ** 2 + k ** 2 * d_model) \
        + k * (2 * l + 2) * d_model
    out = {"inference_flops": int(infer)}
    if batch_size is not None:
        train = 2 * n_layers * batch_size * k * d_model * (d_model + k) \
            + 2 * batch_size * k * (2 * l + 2) * d_model
        out["training_flops_per_batch"] = int(train)
    return out


def bench_runtime(cfg, weights, k, l, n_mc=300, n_repeat=3, seed=0):
    """Wall-clock comparison: full solver pipeline vs one model forward."""
    pipeline_times = []
    z = None
    for r in range(n_repeat):
        start = time.perf_counter()
        coeffs = sample_coeffs(cfg, k, l, _row_seed(seed, r), n_mc=n_mc)
        solve_sample(coeffs, cfg)
        pipeline_times.append(time.perf_counter() - start)
        z = build_features(coeffs.scenario, cfg)

    predict_powers(weights, z)    # warm-up
    model_times = []
    for _ in range(max(n_repeat, 10)):
        start = time.perf_counter()
        predict_powers(weights, z)
        model_times.append(time.perf_counter() - start)

    pipeline_s = float(np.median(pipeline_times))
    model_s = float(np.median(model_times))
    return {"k": k, "l": l, "n_mc": n_mc,
            "pipeline_s": pipeline_s, "model_s": model_s,
            "speedup": pipeline_s / model_s}


def export_csv(records, path):
    """Long-format CSV: one row per record, method and direction."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "l", "seed", "method", "direction", "min_se"])
        for r in records:
            for method in METHODS:
                for d in ("ul", "dl"):
                    writer.writerow([r.k, r.l, r.seed, method, d,
                                     format(r.min_se[method][d], ".17g")])


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "cfpower"
    return plt


def export_plots(records, out_dir):
    """CDF plots of the min-SE per method, one SVG per direction."""
    from pathlib import Path

    plt = _pyplot()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for d, label in (("ul", "uplink"), ("dl", "downlink")):
        fig, ax = plt.subplots(figsize=(5, 4))
        for method in METHODS:
            x, y = cdf([r.min_se[method][d] for r in records])
            ax.step(x, y, where="post", label=method)
        ax.set_xlabel("min SE (bit/s/Hz)")
        ax.set_ylabel("CDF")
        ax.set_title(f"{label} max-min spectral efficiency")
        ax.legend()
        ax.grid(True, alpha=0.3)
        path = out / f"cdf_{d}.svg"
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)
        written.append(str(path))
    return written


def plot_sweep(sweep, path):
    """Mean optimal min-SE with a min/max band along the swept axis."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    x = sweep["values"]
    for key, label in (("min_se_ul", "uplink"), ("min_se_dl", "downlink")):
        data = np.asarray(sweep[key])
        ax.plot(x, data.mean(axis=0), marker="o", label=label)
        ax.fill_between(x, data.min(axis=0), data.max(axis=0), alpha=0.2)
    fixed_name = "L" if sweep["axis"] == "k" else "K"
    ax.set_xlabel(sweep["axis"].upper())
    ax.set_ylabel("optimal min SE (bit/s/Hz)")
    ax.set_title(f"max-min SE vs {sweep['axis'].upper()} ({fixed_name}={sweep['fixed']})")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    return str(path)
