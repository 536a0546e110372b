"""Command-line entry point.

Subcommands: gen-data, gen-kernel, run, theory, report, heatmap.
Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys

import numpy as np

from . import harness, kernels, krr, theory
from .errors import AqkaError, ConfigError
from .numerics import opnorm, psd_project
from .shotsim import load_ledger_csv, pairs_from_matrix


def _add_run(sub):
    p = sub.add_parser("run", help="run an experiment sweep")
    p.add_argument("--preset", help=f"one of: {', '.join(harness.preset_names())}")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seeds", type=int, help="override seed count")
    p.add_argument("--budget-multipliers", help="comma list, overrides the grid")
    p.add_argument("--budgets", help="comma list of absolute budgets")
    p.add_argument("--workers", type=int, help="parallel worker count")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--dump-plans", action="store_true", help="write per-round plans")
    p.add_argument("--master-seed", type=int, help="override the master seed")


def _add_others(sub):
    p = sub.add_parser("gen-data", help="generate a dataset CSV")
    p.add_argument("--kind", choices=("gaussian", "haar_adhoc"), default="gaussian")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--qubits", type=int, default=4)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--margin-frac", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("gen-kernel", help="generate a kernel CSV from a dataset")
    p.add_argument("--kind", choices=("rbf", "zz", "standin"), default="rbf")
    p.add_argument("--data", help="dataset CSV (rbf/zz kinds)")
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--qubits", type=int, default=4)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--n", type=int, default=50, help="size for the standin kind")
    p.add_argument("--standin-dim", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("theory", help="evaluate bounds from a kernel and ledger")
    p.add_argument("--kernel", required=True, help="ground-truth kernel CSV")
    p.add_argument("--labels", required=True, help="one label per line")
    p.add_argument("--ledger", help="shot ledger CSV")
    p.add_argument("--estimate", help="estimated kernel CSV for the plug-in factor")
    p.add_argument("--ridge", type=float, default=0.01)
    p.add_argument("--support-size", type=int)
    p.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("report", help="aggregate record CSVs")
    p.add_argument("paths", nargs="+")
    p.add_argument("--out", help="also write the aggregate as CSV")

    p = sub.add_parser("heatmap", help="shot-concentration stats from plan dumps")
    p.add_argument("--result", required=True, help="run directory with plan dumps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aqka",
        description="Shot-budgeted kernel acquisition experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    _add_others(sub)
    return parser


def _cmd_run(args) -> int:
    if bool(args.preset) == bool(args.config):
        raise ConfigError("exactly one of --preset / --config is required")
    if args.preset:
        cfg = harness.preset(args.preset)
    else:
        with open(args.config) as fh:
            cfg = harness.config_from_text(fh.read())
    overrides = {}
    if args.seeds:
        overrides["seeds"] = args.seeds
    if args.workers:
        overrides["workers"] = args.workers
    if args.master_seed is not None:
        overrides["master_seed"] = args.master_seed
    if args.budgets:
        overrides["budgets"] = tuple(
            int(float(v)) for v in args.budgets.split(",") if v.strip()
        )
        overrides["budget_multipliers"] = ()
    if args.budget_multipliers:
        overrides["budget_multipliers"] = tuple(
            float(v) for v in args.budget_multipliers.split(",") if v.strip()
        )
        if not args.budgets:
            overrides["budgets"] = ()
    if args.dump_plans:
        overrides["dump_plans"] = True
    overrides["out_dir"] = args.out
    from dataclasses import replace

    cfg = replace(cfg, **overrides)
    cfg.validate()
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "config.txt"), "w") as fh:
        fh.write(harness.config_to_text(cfg))
    records_path = os.path.join(args.out, "records.csv")
    records = harness.run_experiment(cfg, records_path)
    rows, text = harness.report([records_path])
    harness.write_report_csv(rows, os.path.join(args.out, "summary.csv"))
    print(text)
    print(f"\n{len(records)} records -> {records_path}")
    return 0


def _cmd_gen_data(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind == "gaussian":
        x = kernels.standardized_gaussian_features(args.n, args.d, rng)
        y = rng.permutation(np.repeat([1.0, -1.0], (args.n + 1) // 2)[: args.n])
    else:
        fmap = kernels.FeatureMapConfig(args.qubits, args.depth)
        x_all = rng.uniform(0, 2 * np.pi, size=(3 * args.n, args.qubits))
        labels, kept = kernels.haar_adhoc_labels(x_all, fmap, args.margin_frac, rng)
        x, y = x_all[kept[: args.n]], labels[: args.n]
    kernels.save_dataset_csv(args.out, x, y)
    print(f"wrote {len(y)} rows -> {args.out}")
    return 0


def _cmd_gen_kernel(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind == "standin":
        k = harness.standin_kernel(args.n, args.standin_dim, rng)
        meta = {"generator": "standin", "seed": args.seed, "dim": args.standin_dim}
    else:
        if not args.data:
            raise ConfigError("--data is required for rbf/zz kernels")
        ds = kernels.load_dataset_csv(args.data)
        if args.kind == "rbf":
            k = kernels.rbf_kernel(ds.X, args.gamma)
            meta = {"generator": "rbf", "gamma": args.gamma, "seed": args.seed}
        else:
            fmap = kernels.FeatureMapConfig(args.qubits, args.depth)
            k = kernels.zz_fidelity_kernel(ds.X, None, fmap)
            meta = {"generator": "zz", "qubits": args.qubits, "depth": args.depth,
                    "seed": args.seed}
    harness.save_kernel_csv(k, args.out, meta)
    print(f"wrote {k.shape[0]}x{k.shape[0]} kernel -> {args.out}")
    return 0


def _cmd_theory(args) -> int:
    k = harness.load_kernel_csv(args.kernel)
    with open(args.labels) as fh:
        y = np.asarray([float(line) for line in fh if line.strip()])
    n = k.shape[0]
    fit = krr.krr_fit(k, y, args.ridge)
    grad = krr.krr_gradient(fit)
    field = krr.krr_sensitivity(grad, pairs_from_matrix(k), args.ridge)
    if args.ledger:
        ledger = load_ledger_csv(args.ledger, n)
        shots = ledger.shots
    else:
        shots = np.ones_like(field.weights)
    delta_w = None
    if args.estimate:
        est = psd_project(harness.load_kernel_csv(args.estimate), 1e-6)
        delta_w = opnorm(est - k)
    support = args.support_size
    if support is None:
        amax = np.max(np.abs(fit.alpha))
        support = int(np.sum(np.abs(fit.alpha) > 1e-8 * max(amax, 1e-300)))
    rep = theory.bound_report(
        field.weights, shots, args.ridge, n,
        support_size=support,
        delta_w=delta_w,
        kappa=opnorm(k),
        y_norm=float(np.linalg.norm(y)),
    )
    text = rep.to_json(indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_report(args) -> int:
    rows, text = harness.report(args.paths)
    print(text)
    if args.out:
        harness.write_report_csv(rows, args.out)
    return 0


def _cmd_heatmap(args) -> int:
    plan_files = sorted(glob.glob(os.path.join(args.result, "plans_*.csv")))
    if not plan_files:
        raise ConfigError(f"no plan dumps found under {args.result}")
    out = {}
    for path in plan_files:
        anchors_path = path.replace("plans_", "anchors_")
        if not os.path.exists(anchors_path):
            continue
        counts = harness.load_plan_counts(path)
        with open(anchors_path) as fh:
            anchors = np.asarray([int(line) for line in fh if line.strip()])
        stats = harness.heatmap_stats(counts, anchors)
        out[os.path.basename(path)] = stats
        print(
            f"{os.path.basename(path)}: anchor max {stats['anchor_max']:.0f}, "
            f"off-block median {stats['off_block_median']:.1f}, "
            f"ratio {stats['ratio']:.1f}x"
        )
    if not out:
        raise ConfigError("plan dumps found but no anchors sidecars")
    print(json.dumps(out, indent=2))
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "gen-data": _cmd_gen_data,
    "gen-kernel": _cmd_gen_kernel,
    "theory": _cmd_theory,
    "report": _cmd_report,
    "heatmap": _cmd_heatmap,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (AqkaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
