"""Command-line entry points wrapping the library workflows."""

import argparse
import sys

import numpy as np

from . import jsonio
from .dataset import generate_dataset, load_dataset, save_dataset, split_dataset
from .evaluation import (bench_runtime, evaluate, export_csv, export_plots,
                         monotone_fraction, plot_sweep, summarize, sweep_k,
                         sweep_l, theoretical_complexity)
from .model import ModelConfig, predict_powers
from .pipeline import sample_coeffs, solve_sample, spectral_efficiencies
from .scenario import NetworkConfig
from .trainer import TrainConfig, load_weights, save_weights, train


def _network_config(args):
    if args.config:
        return NetworkConfig.from_json(args.config)
    return NetworkConfig()


def _add_common(p):
    p.add_argument("--config", help="network config JSON; defaults used otherwise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path")


def _require_out(args):
    if not args.out:
        raise ValueError("--out is required for this command")
    return args.out


def cmd_gen_dataset(args):
    cfg = _network_config(args)
    ds = generate_dataset(cfg, args.k, args.l, args.seed, args.n_samples,
                          n_mc=args.n_mc, verbose=True)
    save_dataset(ds, _require_out(args))
    print(f"wrote {len(ds.samples)} samples to {args.out}")
    return 0


def cmd_train(args):
    ds = load_dataset(args.dataset)
    model_cfg = ModelConfig(d_model=args.d_model, n_layers=args.n_layers,
                            n_heads=args.n_heads, d_ffn=args.d_ffn,
                            dropout_rate=args.dropout,
                            p_ul_max=ds.config.p_ul_max,
                            p_dl_max_per_ap=ds.config.p_dl_max_per_ap)
    train_samples, _ = split_dataset(ds, ratio=args.train_frac,
                                     seed=args.split_seed)
    weights, report = train(train_samples, model_cfg,
                            TrainConfig(epochs_per_config=args.epochs,
                                        batch_size=args.batch_size,
                                        lr=args.lr,
                                        weight_decay=args.weight_decay,
                                        seed=args.seed,
                                        finetune_pass=args.finetune),
                            verbose=True)
    out = _require_out(args)
    save_weights(weights, out)
    if args.report:
        report.weights_path = out
        jsonio.dump(report.to_dict(), args.report)
    print(f"trained {report.n_params} parameters for {report.n_steps} steps")
    return 0


def cmd_infer(args):
    weights = load_weights(args.weights)
    payload = jsonio.load(args.features)
    z = np.asarray(payload["z"] if isinstance(payload, dict) else payload,
                   dtype=np.float64)
    p_ul, p_dl = predict_powers(weights, z)
    result = {"p_ul": p_ul, "p_dl": p_dl}
    if args.out:
        jsonio.dump(result, args.out)
    else:
        print(jsonio.dumps(result))
    return 0


def cmd_solve(args):
    cfg = _network_config(args)
    coeffs = sample_coeffs(cfg, args.k, args.l, args.seed, n_mc=args.n_mc)
    ul_sol, dl_sol = solve_sample(coeffs, cfg)
    se_ul, se_dl = spectral_efficiencies(coeffs, ul_sol.p, dl_sol.p)
    result = {"k": args.k, "l": args.l, "seed": args.seed, "n_mc": args.n_mc,
              "ul": {"p": ul_sol.p, "sinr": ul_sol.sinr, "min_se": float(np.min(se_ul))},
              "dl": {"p": dl_sol.p, "sinr": dl_sol.sinr, "min_se": float(np.min(se_dl))}}
    if args.out:
        jsonio.dump(result, args.out)
    else:
        print(jsonio.dumps(result))
    return 0


def cmd_eval(args):
    ds = load_dataset(args.dataset)
    weights = load_weights(args.weights)
    train_s, test_s = split_dataset(ds, ratio=args.train_frac,
                                    seed=args.split_seed)
    subset = {"train": train_s, "test": test_s, "all": ds.samples}[args.split]
    records = evaluate(weights, ds, subset)
    result = {"summary": summarize(records),
              "records": [r.to_dict() for r in records]}
    jsonio.dump(result, _require_out(args))
    if args.csv:
        export_csv(records, args.csv)
    med = result["summary"]["median_ratio"]["model"]
    print(f"model/optimal median ratio: ul {med['ul']:.3f}, dl {med['dl']:.3f}")
    return 0


def _sweep_payload(sweep, decreasing):
    return {**sweep,
            "trend_fraction_ul": monotone_fraction(sweep["min_se_ul"], decreasing),
            "trend_fraction_dl": monotone_fraction(sweep["min_se_dl"], decreasing)}


def cmd_sweep_k(args):
    cfg = _network_config(args)
    sweep = sweep_k(cfg, args.k_values, args.l, n_seeds=args.n_seeds,
                    n_mc=args.n_mc, base_seed=args.seed)
    jsonio.dump(_sweep_payload(sweep, decreasing=True), _require_out(args))
    print(f"wrote sweep over K={args.k_values} to {args.out}")
    return 0


def cmd_sweep_l(args):
    cfg = _network_config(args)
    sweep = sweep_l(cfg, args.l_values, args.k, n_seeds=args.n_seeds,
                    n_mc=args.n_mc, base_seed=args.seed)
    jsonio.dump(_sweep_payload(sweep, decreasing=False), _require_out(args))
    print(f"wrote sweep over L={args.l_values} to {args.out}")
    return 0


def cmd_bench(args):
    cfg = _network_config(args)
    weights = load_weights(args.weights)
    result = bench_runtime(cfg, weights, args.k, args.l, n_mc=args.n_mc,
                           n_repeat=args.repeat, seed=args.seed)
    if args.out:
        jsonio.dump(result, args.out)
    print(f"pipeline {result['pipeline_s']:.3f} s, model {result['model_s'] * 1e3:.3f} ms, "
          f"speedup {result['speedup']:.0f}x")
    return 0


def cmd_complexity(args):
    result = theoretical_complexity(args.k, args.l, n_layers=args.n_layers,
                                    d_model=args.d_model,
                                    batch_size=args.batch_size)
    if args.out:
        jsonio.dump(result, args.out)
    else:
        print(jsonio.dumps(result))
    return 0


def cmd_plot(args):
    if not args.eval and not args.sweep:
        raise ValueError("nothing to plot: pass --eval and/or --sweep")
    written = []
    if args.eval:
        payload = jsonio.load(args.eval)
        from .evaluation import EvalRecord
        records = [EvalRecord(k=r["k"], l=r["l"], seed=r["seed"], min_se=r["min_se"])
                   for r in payload["records"]]
        written.extend(export_plots(records, _require_out(args)))
    if args.sweep:
        sweep = jsonio.load(args.sweep)
        sweep["min_se_ul"] = np.asarray(sweep["min_se_ul"])
        sweep["min_se_dl"] = np.asarray(sweep["min_se_dl"])
        from pathlib import Path
        out = Path(_require_out(args))
        out.mkdir(parents=True, exist_ok=True)
        written.append(plot_sweep(sweep, out / f"sweep_{sweep['axis']}.svg"))
    print("wrote " + ", ".join(written))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cfpower",
        description="Max-min power allocation for cell-free networks: "
                    "exact solvers, dataset generation and a learned allocator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="generate a labeled dataset")
    _add_common(p)
    p.add_argument("--k", type=int, nargs="+", default=[2, 4, 6, 8, 10])
    p.add_argument("--l", type=int, nargs="+", default=[9, 16])
    p.add_argument("--n-samples", type=int, default=800)
    p.add_argument("--n-mc", type=int, default=500)
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("train", help="train the allocator on a dataset")
    _add_common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--weight-decay", type=float, default=0.01)
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--d-model", type=int, default=32)
    p.add_argument("--n-layers", type=int, default=2)
    p.add_argument("--n-heads", type=int, default=4)
    p.add_argument("--d-ffn", type=int, default=128)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--finetune", action="store_true",
                   help="one extra interleaved epoch over all configs")
    p.add_argument("--report", help="optional training report JSON")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="predict powers from a feature matrix")
    _add_common(p)
    p.add_argument("--weights", required=True)
    p.add_argument("--features", required=True,
                   help="JSON with a (K, 2L+2) feature matrix under 'z' or bare")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("solve", help="exact max-min solution for one draw")
    _add_common(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--n-mc", type=int, default=500)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eval", help="score a trained model against baselines")
    _add_common(p)
    p.add_argument("--weights", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", choices=["train", "test", "all"], default="test")
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--csv", help="optional long-format CSV path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-k", help="optimal min-SE trend over the UE count")
    _add_common(p)
    p.add_argument("--k-values", type=int, nargs="+", default=[2, 4, 6, 8, 10])
    p.add_argument("--l", type=int, default=16)
    p.add_argument("--n-seeds", type=int, default=20)
    p.add_argument("--n-mc", type=int, default=500)
    p.set_defaults(func=cmd_sweep_k)

    p = sub.add_parser("sweep-l", help="optimal min-SE trend over the AP count")
    _add_common(p)
    p.add_argument("--l-values", type=int, nargs="+", default=[4, 9, 16, 25, 36])
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--n-seeds", type=int, default=20)
    p.add_argument("--n-mc", type=int, default=500)
    p.set_defaults(func=cmd_sweep_l)

    p = sub.add_parser("bench", help="runtime: solver pipeline vs model forward")
    _add_common(p)
    p.add_argument("--weights", required=True)
    p.add_argument("--k", type=int, default=40)
    p.add_argument("--l", type=int, default=16)
    p.add_argument("--n-mc", type=int, default=300)
    p.add_argument("--repeat", type=int, default=3)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("complexity", help="closed-form multiply counts")
    _add_common(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--n-layers", type=int, default=2)
    p.add_argument("--d-model", type=int, default=32)
    p.add_argument("--batch-size", type=int, default=None)
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("plot", help="render evaluation CDFs and sweep curves")
    _add_common(p)
    p.add_argument("--eval", help="eval JSON written by the eval command")
    p.add_argument("--sweep", help="sweep JSON written by sweep-k/sweep-l")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
