"""Experiment orchestration: sweeps over methods, budgets, and seeds.

A sweep is a grid of (variant, method, budget, seed) cells over a fixed
dataset generator. Every cell derives its own random streams from the master
seed so results are bit-identical across re-runs and worker counts; records
append to CSV incrementally so a killed sweep loses at most the in-flight
cell.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import allocators, kernels, krr, svm
from .allocators import AllocatorResult, AqkaConfig, BernoulliBackend
from .errors import ConfigError, ConvergenceFailure, InvalidInput, ParseError
from .numerics import opnorm, psd_project
from .shotsim import pair_count, pair_indices

RECORD_FIELDS = [
    "variant",
    "method",
    "budget",
    "seed",
    "test_accuracy",
    "test_mse",
    "op_norm_error",
    "total_shots",
    "wall_time",
    "meta",
]

PLAN_HEADER = ["round", "i", "j", "delta"]

BASE_METHODS = (
    "oracle",
    "uniform",
    "random",
    "bernoulli_only",
    "leverage",
    "target_est",
    "target_oracle",
    "multinomial_est",
    "multinomial_oracle",
    "target_est_svm",
    "shofar",
    "nystrom",
    "hybrid",
)

DATASETS = ("planted_rbf", "planted_zz", "haar_zz", "standin", "csv")

_DATA_TAG = zlib.crc32(b"dataset-stream")
_STANDIN_SEED = 271828  # the stand-in ground truth is fixed across seeds


@dataclass
class ExperimentConfig:
    """One sweep: dataset generator, method list, budget grid, seeds."""

    preset: str = "custom"
    dataset: str = "planted_rbf"
    csv_path: str = ""
    n_train: int = 225
    n_test: int = 75
    dim: int = 8
    gamma: float = 0.05
    n_qubits: int = 4
    depth: int = 2
    input_scale: float = 1.0
    anchors: int = 10
    margin_frac: float = 0.15
    standin_dim: int = 12
    model: str = "krr"
    ridge: float = 0.01
    svm_box: float = 5.0
    methods: tuple = ("uniform", "target_est")
    budgets: tuple = ()
    budget_multipliers: tuple = ()
    seeds: int = 5
    master_seed: int = 7
    rounds: int = 4
    warm_frac: float = 0.2
    explore_frac: float = 0.2
    sens_floor_frac: float = 0.05
    placeholder: float = 0.0
    known_diagonal: bool = False
    psd_floor: float = 1e-6
    cumulative_targets: bool = True
    balanced_warmup: bool = False
    tau: float = 0.05
    n_landmarks: int = 0  # 0 means ceil(sqrt(n_train))
    workers: int = 1
    dump_plans: bool = False
    out_dir: str = ""
    variants: tuple = ()  # ((label, {field: value}), ...)
    meta: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not self.budgets and not self.budget_multipliers:
            raise ConfigError("budget grid is empty")
        if self.seeds < 1:
            raise ConfigError("seeds must be >= 1")
        if self.dataset not in DATASETS:
            raise ConfigError(f"unknown dataset {self.dataset!r}")
        if self.model not in ("krr", "svm"):
            raise ConfigError(f"unknown model {self.model!r}")
        for spec in self.methods:
            parse_method(spec)

    def aqka_config(self, budget: int) -> AqkaConfig:
        return AqkaConfig(
            budget=int(budget),
            rounds=self.rounds,
            warm_frac=self.warm_frac,
            explore_frac=self.explore_frac,
            ridge=self.ridge,
            sens_floor_frac=self.sens_floor_frac,
            placeholder=self.placeholder,
            known_diagonal=self.known_diagonal,
            psd_floor=self.psd_floor,
            svm_box=self.svm_box,
            cumulative_targets=self.cumulative_targets,
            balanced_warmup=self.balanced_warmup,
        )


def parse_method(spec: str) -> tuple[str, dict]:
    """Split ``name@k=v,k=v`` method specs; unknown names raise ConfigError."""
    name, _, rest = spec.partition("@")
    name = name.strip()
    if name not in BASE_METHODS:
        raise ConfigError(f"unknown method {name!r} (in spec {spec!r})")
    params: dict = {}
    if rest:
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            if not eq:
                raise ConfigError(f"bad method parameter {item!r} in {spec!r}")
            key = key.strip()
            value = value.strip()
            try:
                params[key] = int(value)
            except ValueError:
                try:
                    params[key] = float(value)
                except ValueError:
                    params[key] = value
    return name, params


def _crc(text: str) -> int:
    return zlib.crc32(text.encode("utf8"))


def data_rng(cfg: ExperimentConfig, variant: str, seed: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(
            [cfg.master_seed, _crc(cfg.preset), _crc(variant), _DATA_TAG, seed]
        )
    )


def shot_rng(
    cfg: ExperimentConfig, variant: str, method: str, budget: int, seed: int
) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(
            [cfg.master_seed, _crc(cfg.preset), _crc(variant), _crc(method),
             int(budget), seed]
        )
    )


# ---------------------------------------------------------------------------
# Instance construction
# ---------------------------------------------------------------------------


@dataclass
class Instance:
    """Ground truth for one cell: train/test kernels, labels, planted structure."""

    k_train: np.ndarray
    k_test: np.ndarray
    y_train: np.ndarray
    y_test: np.ndarray
    y_raw: np.ndarray
    anchors: np.ndarray | None = None
    coeffs: np.ndarray | None = None


def standin_kernel(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Synthetic concentrated fidelity kernel: squared overlaps of random pure states.

    Haar-random unit vectors in C^dim give unit diagonal, PSD structure, and
    mean off-diagonal 1/dim.
    """
    v = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    k = np.abs(v @ v.conj().T) ** 2
    k = (k + k.T) / 2.0
    np.fill_diagonal(k, 1.0)
    return np.clip(k, 0.0, 1.0)


def build_instance(cfg: ExperimentConfig, variant_cfg: "ExperimentConfig",
                   variant: str, seed: int) -> Instance:
    c = variant_cfg
    rng = data_rng(cfg, variant, seed)
    if c.dataset == "planted_rbf":
        x = kernels.standardized_gaussian_features(c.n_train + c.n_test, c.dim, rng)
        x_tr, x_te = x[: c.n_train], x[c.n_train :]
        k_train = kernels.rbf_kernel(x_tr, c.gamma)
        k_test = kernels.rbf_kernel(x_te, c.gamma, x_tr)
        return _planted(k_train, k_test, c, rng)
    if c.dataset == "planted_zz":
        fmap = kernels.FeatureMapConfig(c.n_qubits, c.depth, input_scale=c.input_scale)
        x = rng.uniform(0.0, 2.0 * np.pi, size=(c.n_train + c.n_test, c.n_qubits))
        x_tr, x_te = x[: c.n_train], x[c.n_train :]
        k_train = kernels.zz_fidelity_kernel(x_tr, None, fmap)
        k_test = kernels.zz_fidelity_kernel(x_te, x_tr, fmap)
        return _planted(k_train, k_test, c, rng)
    if c.dataset == "haar_zz":
        fmap = kernels.FeatureMapConfig(c.n_qubits, c.depth, input_scale=c.input_scale)
        total = c.n_train + c.n_test
        # oversample so the margin filter still leaves enough points
        x = rng.uniform(0.0, 2.0 * np.pi, size=(3 * total, c.n_qubits))
        labels, kept = kernels.haar_adhoc_labels(x, fmap, c.margin_frac, rng)
        if kept.size < total:
            raise InvalidInput("margin filter left too few points")
        x = x[kept[:total]]
        labels = labels[:total]
        x_tr, x_te = x[: c.n_train], x[c.n_train :]
        y_tr, y_te = labels[: c.n_train], labels[c.n_train :]
        k_train = kernels.zz_fidelity_kernel(x_tr, None, fmap)
        k_test = kernels.zz_fidelity_kernel(x_te, x_tr, fmap)
        return Instance(k_train, k_test, y_tr, y_te, y_te.astype(float))
    if c.dataset == "standin":
        fixed = np.random.default_rng(_STANDIN_SEED)
        k_full = standin_kernel(c.n_train + c.n_test, c.standin_dim, fixed)
        k_train = k_full[: c.n_train, : c.n_train].copy()
        k_test = k_full[c.n_train :, : c.n_train].copy()
        target_rng = np.random.default_rng(_STANDIN_SEED + 1)
        return _planted(k_train, k_test, c, target_rng)
    if c.dataset == "csv":
        ds = kernels.load_dataset_csv(c.csv_path)
        order = rng.permutation(ds.n)
        if c.n_test >= ds.n:
            raise ConfigError("n_test must be smaller than the CSV row count")
        te, tr = order[: c.n_test], order[c.n_test :]
        x_tr, x_te = ds.X[tr], ds.X[te]
        y_tr, y_te = ds.y[tr], ds.y[te]
        k_train = kernels.rbf_kernel(x_tr, c.gamma)
        k_test = kernels.rbf_kernel(x_te, c.gamma, x_tr)
        return Instance(k_train, k_test, y_tr, y_te, y_te.astype(float))
    raise ConfigError(f"unknown dataset {c.dataset!r}")


def _planted(k_train, k_test, c: ExperimentConfig, rng) -> Instance:
    target = kernels.planted_sparse_target(k_train, c.anchors, c.ridge, rng)
    y_test = kernels.planted_labels(k_test, target.coeffs)
    y_raw = k_test @ target.coeffs
    return Instance(
        k_train=k_train,
        k_test=k_test,
        y_train=target.y,
        y_test=y_test,
        y_raw=y_raw,
        anchors=target.anchors,
        coeffs=target.coeffs,
    )


# ---------------------------------------------------------------------------
# Single-cell execution
# ---------------------------------------------------------------------------


def _landmark_count(c: ExperimentConfig) -> int:
    return c.n_landmarks if c.n_landmarks > 0 else math.ceil(math.sqrt(c.n_train))


def run_allocator(
    method_spec: str,
    backend: BernoulliBackend,
    instance: Instance,
    c: ExperimentConfig,
    budget: int,
    rng: np.random.Generator,
) -> AllocatorResult | None:
    """Dispatch one method spec; returns None for the shot-free oracle row."""
    name, params = parse_method(method_spec)
    acfg = c.aqka_config(budget)
    y = instance.y_train
    if name == "oracle":
        return None
    if name == "uniform":
        plan = allocators.alloc_uniform(backend.n_pairs, budget)
        return allocators.run_single_plan(backend, plan, rng, "uniform", c.placeholder)
    if name == "random":
        plan = allocators.alloc_random(backend.n_pairs, budget, rng)
        return allocators.run_single_plan(backend, plan, rng, "random", c.placeholder)
    if name == "target_est":
        return allocators.aqka_run(backend, y, acfg, rng, "estimated", "target")
    if name == "target_oracle":
        return allocators.aqka_run(backend, y, acfg, rng, "oracle", "target")
    if name == "multinomial_est":
        return allocators.aqka_run(backend, y, acfg, rng, "estimated", "multinomial")
    if name == "multinomial_oracle":
        return allocators.aqka_run(backend, y, acfg, rng, "oracle", "multinomial")
    if name == "bernoulli_only":
        return allocators.aqka_run(backend, y, acfg, rng, "bernoulli", "target")
    if name == "leverage":
        return allocators.aqka_run(backend, y, acfg, rng, "leverage", "target")
    if name == "target_est_svm":
        y_signed = np.where(y >= 0, 1.0, -1.0)
        return allocators.aqka_run(backend, y_signed, acfg, rng, "svm", "target")
    if name == "shofar":
        tau = float(params.get("tau", c.tau))
        return allocators.alloc_shofar(backend, y, budget, tau, acfg, rng)
    if name == "nystrom":
        m_l = int(params.get("m", _landmark_count(c)))
        mode = str(params.get("mode", "random"))
        return allocators.alloc_nystrom(
            backend, budget, m_l, c.ridge, rng,
            landmark_mode=mode, y=y, warm_frac=c.warm_frac,
            placeholder=c.placeholder, psd_floor=c.psd_floor,
        )
    if name == "hybrid":
        m_l = int(params.get("m", _landmark_count(c)))
        return allocators.alloc_hybrid(backend, y, budget, m_l, acfg, rng)
    raise ConfigError(f"unhandled method {name!r}")


def _fit_and_score(
    c: ExperimentConfig, instance: Instance, k_model: np.ndarray
) -> tuple[float, float]:
    if c.model == "svm":
        y_signed = np.where(instance.y_train >= 0, 1.0, -1.0)
        try:
            fit = svm.svm_dual_solve(k_model, y_signed, c.svm_box)
        except ConvergenceFailure as exc:  # score the best iterate
            fit = exc.fit
        bias = svm.svm_bias(fit, k_model, y_signed)
        decision = svm.svm_decision(fit, instance.k_test, y_signed, bias)
        signed = np.where(decision >= 0, 1.0, -1.0)
        accuracy = float(np.mean(signed == instance.y_test))
        mse = float(np.mean((decision - instance.y_raw) ** 2))
        return accuracy, mse
    fit = krr.krr_fit(k_model, instance.y_train, c.ridge)
    return krr.predict_and_score(
        instance.k_test, fit.alpha, instance.y_test, instance.y_raw
    )


def run_cell(
    cfg: ExperimentConfig,
    variant: str,
    overrides: dict,
    method_spec: str,
    budget_spec: tuple,
    seed: int,
) -> dict:
    """Run one (variant, method, budget, seed) cell and return its record."""
    c = replace(cfg, **overrides) if overrides else cfg
    start = time.perf_counter()
    instance = build_instance(cfg, c, variant, seed)
    n_pairs = pair_count(instance.k_train.shape[0])
    kind, value = budget_spec
    budget = int(round(value * n_pairs)) if kind == "mult" else int(value)
    rng = shot_rng(cfg, variant, method_spec, budget, seed)
    backend = BernoulliBackend(instance.k_train)

    result = run_allocator(method_spec, backend, instance, c, budget, rng)
    if result is None:  # oracle: exact kernel, no shots
        k_model = instance.k_train
        total_shots = 0
        op_err = 0.0
        meta: dict = {"oracle": True}
    else:
        k_model = psd_project(result.final_estimate, c.psd_floor)
        total_shots = result.ledger.total_shots()
        op_err = opnorm(k_model - instance.k_train)
        meta = {"tag": result.method_tag, **_compact_meta(result.meta)}
    accuracy, mse = _fit_and_score(c, instance, k_model)
    wall = time.perf_counter() - start

    record = {
        "variant": variant,
        "method": method_spec,
        "budget": budget,
        "seed": seed,
        "test_accuracy": accuracy,
        "test_mse": mse,
        "op_norm_error": op_err,
        "total_shots": total_shots,
        "wall_time": wall,
        "meta": json.dumps(meta, sort_keys=True),
    }
    if cfg.dump_plans and result is not None and cfg.out_dir:
        _dump_plans(cfg, variant, method_spec, budget, seed, instance, result)
    return record


def _compact_meta(meta: dict) -> dict:
    out = {}
    for key, value in meta.items():
        if key == "rounds":
            out["fallback_rounds"] = sum(1 for r in value if r.get("fallback"))
        elif key == "landmarks":
            out["n_landmarks"] = len(value)
        else:
            out[key] = value
    return out


def _plan_path(out_dir, variant, method, budget, seed) -> str:
    label = f"{variant}_" if variant else ""
    safe_method = method.replace("@", "-").replace("=", "").replace(",", "_")
    return os.path.join(out_dir, f"plans_{label}{safe_method}_B{budget}_s{seed}.csv")


def _dump_plans(cfg, variant, method, budget, seed, instance, result) -> None:
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = _plan_path(cfg.out_dir, variant, method, budget, seed)
    n = result.ledger.n
    iu, ju = pair_indices(n)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PLAN_HEADER)
        for rnd, plan in enumerate(result.per_round_plans):
            for p in np.nonzero(plan.deltas)[0]:
                writer.writerow([rnd, int(iu[p]), int(ju[p]), int(plan.deltas[p])])
    if instance.anchors is not None:
        with open(path.replace("plans_", "anchors_"), "w") as fh:
            fh.write("\n".join(str(int(a)) for a in instance.anchors) + "\n")


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def _cells(cfg: ExperimentConfig) -> list[tuple]:
    budget_specs = [("abs", b) for b in cfg.budgets]
    budget_specs += [("mult", m) for m in cfg.budget_multipliers]
    variants = cfg.variants if cfg.variants else (("", {}),)
    return [
        (variant, dict(overrides), method, spec, seed)
        for variant, overrides in variants
        for method in cfg.methods
        for spec in budget_specs
        for seed in range(cfg.seeds)
    ]


def run_experiment(cfg: ExperimentConfig, records_path: str | None = None) -> list[dict]:
    """Execute the full sweep; optionally append records to CSV as they finish.

    With a records path, each completed record is flushed immediately
    (crash-safe) and the file is rewritten in sorted order at the end so
    re-runs are byte-identical regardless of worker scheduling.
    """
    cfg.validate()
    cells = _cells(cfg)
    records: list[dict] = []

    writer = None
    fh = None
    if records_path:
        os.makedirs(os.path.dirname(records_path) or ".", exist_ok=True)
        fh = open(records_path, "w", newline="")
        writer = csv.DictWriter(fh, fieldnames=RECORD_FIELDS)
        writer.writeheader()
        fh.flush()

    def _emit(record):
        records.append(record)
        if writer is not None:
            writer.writerow(record)
            fh.flush()

    try:
        if cfg.workers > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                futures = [pool.submit(run_cell, cfg, *cell) for cell in cells]
                for future in as_completed(futures):
                    _emit(future.result())
        else:
            for cell in cells:
                _emit(run_cell(cfg, *cell))
    finally:
        if fh is not None:
            fh.close()

    records.sort(key=lambda r: (r["variant"], r["method"], r["budget"], r["seed"]))
    if records_path:
        with open(records_path, "w", newline="") as out:
            w = csv.DictWriter(out, fieldnames=RECORD_FIELDS)
            w.writeheader()
            w.writerows(records)
    return records


def load_records(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RECORD_FIELDS:
            raise ParseError(f"unexpected record schema {reader.fieldnames!r}")
        rows = []
        for row in reader:
            row["budget"] = int(row["budget"])
            row["seed"] = int(row["seed"])
            for key in ("test_accuracy", "test_mse", "op_norm_error", "wall_time"):
                row[key] = float(row[key])
            row["total_shots"] = int(row["total_shots"])
            rows.append(row)
        return rows


def report(paths: list) -> tuple[list[dict], str]:
    """Aggregate records: mean and SE per cell plus gap against uniform.

    Returns (rows, aligned_text). A single-seed cell reports SE = 0 and is
    flagged.
    """
    rows: list[dict] = []
    for path in paths:
        rows.extend(load_records(path))
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        groups.setdefault((row["variant"], row["method"], row["budget"]), []).append(
            row["test_accuracy"]
        )

    out = []
    for (variant, method, budget), accs in sorted(groups.items()):
        arr = np.asarray(accs)
        se = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
        uniform = groups.get((variant, "uniform", budget))
        gap = float(arr.mean() - np.mean(uniform)) if uniform else float("nan")
        out.append(
            {
                "variant": variant,
                "method": method,
                "budget": budget,
                "n_seeds": int(arr.size),
                "mean_accuracy": float(arr.mean()),
                "se_accuracy": se,
                "gap_vs_uniform": gap,
                "single_seed": arr.size == 1,
            }
        )

    header = f"{'variant':<12} {'method':<28} {'budget':>10} {'n':>3} {'acc':>8} {'se':>8} {'gap':>8}"
    lines = [header, "-" * len(header)]
    for r in out:
        gap = "" if math.isnan(r["gap_vs_uniform"]) else f"{r['gap_vs_uniform']:+.3f}"
        lines.append(
            f"{r['variant']:<12} {r['method']:<28} {r['budget']:>10} "
            f"{r['n_seeds']:>3} {r['mean_accuracy']:>8.3f} {r['se_accuracy']:>8.3f} {gap:>8}"
        )
    return out, "\n".join(lines)


def write_report_csv(rows: list[dict], path) -> None:
    fields = ["variant", "method", "budget", "n_seeds", "mean_accuracy",
              "se_accuracy", "gap_vs_uniform", "single_seed"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# Heatmap statistics
# ---------------------------------------------------------------------------


def load_plan_counts(path, n: int | None = None) -> np.ndarray:
    """Total per-pair shot counts from a ``round,i,j,delta`` plan dump."""
    entries = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != PLAN_HEADER:
            raise ParseError(f"bad plan header {header!r}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                _, i, j, delta = (int(v) for v in row)
            except ValueError as exc:
                raise ParseError(f"non-integer field {row!r}", line=lineno) from exc
            entries.append((i, j, delta))
    if not entries:
        raise ParseError("plan file has no rows")
    size = n if n is not None else max(max(i, j) for i, j, _ in entries) + 1
    counts = np.zeros((size, size))
    for i, j, delta in entries:
        counts[i, j] += delta
        if i != j:
            counts[j, i] += delta
    return counts


def heatmap_stats(counts: np.ndarray, anchors: np.ndarray) -> dict:
    """Anchor-block max over off-anchor-block median of a shot-count matrix."""
    counts = np.asarray(counts, dtype=float)
    n = counts.shape[0]
    mask = np.zeros(n, dtype=bool)
    mask[np.asarray(anchors, dtype=int)] = True
    iu, ju = pair_indices(n)
    anchor_block = mask[iu] & mask[ju]
    off_block = ~mask[iu] & ~mask[ju]
    vals = counts[iu, ju]
    anchor_max = float(vals[anchor_block].max()) if anchor_block.any() else 0.0
    off_median = float(np.median(vals[off_block])) if off_block.any() else 0.0
    ratio = anchor_max / off_median if off_median > 0 else float("inf")
    return {"anchor_max": anchor_max, "off_block_median": off_median, "ratio": ratio}


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------


def _fig1_base(**kw) -> ExperimentConfig:
    base = dict(
        dataset="planted_rbf",
        n_train=225,
        n_test=150,
        dim=8,
        gamma=0.08,
        anchors=10,
        ridge=0.01,
        seeds=5,
        budgets=(3_000, 10_000, 30_000, 100_000, 300_000, 1_000_000),
    )
    base.update(kw)
    return ExperimentConfig(**base)


def _presets() -> dict:
    grid_tau = (0.01, 0.02, 0.05, 0.10, 0.20)
    presets = {
        "fig1": _fig1_base(
            preset="fig1",
            methods=("uniform", "random", "target_est", "target_oracle"),
        ),
        "sparsity": _fig1_base(
            preset="sparsity",
            methods=("uniform", "target_est", "target_oracle"),
            budgets=(30_000, 100_000, 300_000),
            variants=tuple(
                (f"m={m}", {"anchors": m}) for m in (5, 10, 20, 50, 100, 200)
            ),
        ),
        "quantum": ExperimentConfig(
            preset="quantum",
            dataset="planted_zz",
            n_train=150,
            n_test=50,
            n_qubits=4,
            depth=2,
            anchors=10,
            ridge=0.01,
            seeds=5,
            budgets=(10_000, 30_000, 100_000),
            methods=("uniform", "target_est"),
        ),
        "multinomial": _fig1_base(
            preset="multinomial",
            methods=(
                "uniform",
                "target_est",
                "target_oracle",
                "multinomial_est",
                "multinomial_oracle",
            ),
        ),
        "head_to_head": ExperimentConfig(
            preset="head_to_head",
            dataset="planted_zz",
            n_train=150,
            n_test=50,
            n_qubits=4,
            depth=2,
            anchors=10,
            ridge=0.01,
            seeds=3,
            budget_multipliers=(0.3, 1.0, 4.0, 16.0),
            methods=("uniform", "random", "target_est", "shofar", "nystrom"),
        ),
        "n_scaling": _fig1_base(
            preset="n_scaling",
            methods=("uniform", "target_est", "bernoulli_only"),
            seeds=3,
            budgets=(),
            budget_multipliers=(0.3, 1.0, 3.0, 10.0, 30.0),
            variants=(
                ("N=225", {"n_train": 225, "anchors": 10}),
                ("N=500", {"n_train": 500, "anchors": 22}),
                ("N=1000", {"n_train": 1000, "anchors": 45}),
            ),
        ),
        "tau_sweep": _fig1_base(
            preset="tau_sweep",
            seeds=3,
            budgets=(10_000, 100_000),
            methods=("uniform", "target_est")
            + tuple(f"shofar@tau={t}" for t in grid_tau),
        ),
        "nystrom_sweep": _fig1_base(
            preset="nystrom_sweep",
            seeds=3,
            budgets=(100_000,),
            methods=("uniform", "target_est")
            + tuple(f"nystrom@mode=random,m={m}" for m in (15, 30, 56, 60, 112))
            + tuple(f"nystrom@mode=leverage,m={m}" for m in (15, 30, 56, 60, 112)),
        ),
        "hybrid": _fig1_base(
            preset="hybrid",
            methods=("uniform", "target_est", "nystrom", "hybrid"),
            budgets=(),
            budget_multipliers=(1.0,),
        ),
        "heatmap": ExperimentConfig(
            preset="heatmap",
            dataset="planted_rbf",
            n_train=30,
            n_test=10,
            dim=8,
            gamma=0.05,
            anchors=4,
            ridge=0.01,
            seeds=1,
            budget_multipliers=(10.0,),
            methods=("uniform", "target_oracle"),
            dump_plans=True,
        ),
        "hardware_stand_in": ExperimentConfig(
            preset="hardware_stand_in",
            dataset="standin",
            n_train=50,
            n_test=8,
            anchors=4,
            standin_dim=12,
            ridge=0.01,
            seeds=20,
            budget_multipliers=(1.0, 4.0, 16.0),
            methods=("uniform", "target_est"),
            meta={"note": "synthetic stand-in; no device data reproduced"},
        ),
    }
    return presets


def preset(name: str) -> ExperimentConfig:
    """Desk-scaled configuration for a named figure family."""
    presets = _presets()
    if name not in presets:
        raise ConfigError(
            f"unknown preset {name!r}; known presets: {', '.join(sorted(presets))}"
        )
    return presets[name]


def preset_names() -> list[str]:
    return sorted(_presets())


# ---------------------------------------------------------------------------
# Flat-text config files and kernel file I/O
# ---------------------------------------------------------------------------

_TUPLE_FIELDS = {"methods": str, "budgets": float, "budget_multipliers": float}
_SKIP_FIELDS = {"variants", "meta"}


def config_to_text(cfg: ExperimentConfig) -> str:
    lines = []
    for key, value in asdict(cfg).items():
        if key in _SKIP_FIELDS:
            continue
        if isinstance(value, tuple) or isinstance(value, list):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> ExperimentConfig:
    """Parse a flat ``key = value`` config; unknown keys raise ConfigError."""
    defaults = ExperimentConfig()
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key = key.strip()
        value = value.strip()
        if not hasattr(defaults, key) or key in _SKIP_FIELDS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        current = getattr(defaults, key)
        if key in _TUPLE_FIELDS:
            cast = _TUPLE_FIELDS[key]
            items = tuple(v.strip() for v in value.split(",") if v.strip())
            if cast is float:
                items = tuple(int(float(v)) if key == "budgets" else float(v) for v in items)
            values[key] = items
        elif isinstance(current, bool):
            values[key] = value.lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int):
            values[key] = int(float(value))
        elif isinstance(current, float):
            values[key] = float(value)
        else:
            values[key] = value
    return replace(defaults, **values)


def save_kernel_csv(k: np.ndarray, path, metadata: dict | None = None) -> None:
    """Write a kernel as headerless N x N decimal CSV plus a .meta sidecar."""
    k = np.asarray(k, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in k:
            writer.writerow([repr(float(v)) for v in row])
    meta = {"n": k.shape[0]}
    if metadata:
        meta.update(metadata)
    with open(f"{path}.meta", "w") as fh:
        for key, value in meta.items():
            fh.write(f"{key} = {value}\n")


def load_kernel_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    k = np.asarray(rows, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ParseError(f"kernel file is not square: shape {k.shape}")
    return k
