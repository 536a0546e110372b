"""Render figure families from experiment record CSVs.

Consumes only the stable record schema (variant, method, budget, seed,
test_accuracy, ...) and the plan-dump schema (round, i, j, delta); never
imports the experiment library. Output is deterministic for fixed inputs and
backend version.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

RECORD_COLUMNS = ("variant", "method", "budget", "seed", "test_accuracy")
PLAN_COLUMNS = ("round", "i", "j", "delta")

FAMILIES = ("budget_curves", "sparsity", "gap_bars", "heatmap")

_DPI = 120


class SchemaError(ValueError):
    """A required column is missing from an input CSV."""


@dataclass
class PlotSpec:
    """What to render: input CSVs, figure family, scales, output path."""

    inputs: list
    family: str
    out_path: str
    log_x: bool = True
    anchors_path: str | None = None
    title: str = ""
    extra: dict = field(default_factory=dict)


def load_records(paths) -> list[dict]:
    rows = []
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            for column in RECORD_COLUMNS:
                if column not in header:
                    raise SchemaError(f"{path}: missing column {column!r}")
            for row in reader:
                rows.append(
                    {
                        "variant": row["variant"],
                        "method": row["method"],
                        "budget": int(row["budget"]),
                        "seed": int(row["seed"]),
                        "test_accuracy": float(row["test_accuracy"]),
                    }
                )
    if not rows:
        raise SchemaError("no data rows in input CSVs")
    return rows


def _aggregate(rows):
    """(variant, method, budget) -> (mean, se) over seeds."""
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        key = (row["variant"], row["method"], row["budget"])
        groups.setdefault(key, []).append(row["test_accuracy"])
    out = {}
    for key, vals in groups.items():
        arr = np.asarray(vals)
        se = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
        out[key] = (float(arr.mean()), se)
    return out


def _method_order(rows):
    seen = []
    for row in rows:
        if row["method"] not in seen:
            seen.append(row["method"])
    return seen


def _finish(fig, out_path):
    fig.savefig(out_path, dpi=_DPI, metadata={"Software": "aqka-plot"})
    plt.close(fig)


def render_budget_curves(spec: PlotSpec) -> None:
    rows = load_records(spec.inputs)
    stats = _aggregate(rows)
    methods = _method_order(rows)
    budgets = sorted({r["budget"] for r in rows})
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    for method in methods:
        xs, ys, es = [], [], []
        for budget in budgets:
            key = ("", method, budget)
            if key not in stats:
                continue
            xs.append(budget)
            mean, se = stats[key]
            ys.append(mean)
            es.append(se)
        if not xs:
            continue
        xs, ys, es = np.asarray(xs), np.asarray(ys), np.asarray(es)
        (line,) = ax.plot(xs, ys, marker="o", label=method)
        ax.fill_between(xs, ys - es, ys + es, alpha=0.2, color=line.get_color())
    if spec.log_x:
        ax.set_xscale("log")
    ax.set_xlabel("shot budget")
    ax.set_ylabel("test accuracy")
    ax.set_title(spec.title or "accuracy vs budget")
    ax.grid(True, alpha=0.3)
    # legend outside the axes so bands stay readable
    ax.legend(loc="center left", bbox_to_anchor=(1.02, 0.5), frameon=False)
    fig.tight_layout()
    _finish(fig, spec.out_path)


def _variant_value(variant: str) -> float:
    if "=" in variant:
        try:
            return float(variant.split("=", 1)[1])
        except ValueError:
            pass
    return float("nan")


def render_sparsity(spec: PlotSpec) -> None:
    """Gap over uniform vs the variant parameter, one line per budget."""
    rows = load_records(spec.inputs)
    stats = _aggregate(rows)
    budgets = sorted({r["budget"] for r in rows})
    variants = sorted({r["variant"] for r in rows}, key=_variant_value)
    methods = [m for m in _method_order(rows) if m != "uniform"]
    fig, axes = plt.subplots(1, max(len(methods), 1), figsize=(4.6 * max(len(methods), 1), 4.0), squeeze=False)
    for ax, method in zip(axes[0], methods):
        for budget in budgets:
            xs, ys = [], []
            for variant in variants:
                key = (variant, method, budget)
                base = (variant, "uniform", budget)
                if key in stats and base in stats:
                    xs.append(_variant_value(variant))
                    ys.append(stats[key][0] - stats[base][0])
            if xs:
                ax.plot(xs, ys, marker="s", label=f"B={budget:g}")
        ax.axhline(0.0, color="gray", lw=0.8)
        ax.set_xscale("log")
        ax.set_xlabel("support size")
        ax.set_ylabel("accuracy gain over uniform")
        ax.set_title(method)
        ax.grid(True, alpha=0.3)
    axes[0][-1].legend(loc="center left", bbox_to_anchor=(1.02, 0.5), frameon=False)
    fig.suptitle(spec.title or "sparsity sweep")
    fig.tight_layout()
    _finish(fig, spec.out_path)


def render_gap_bars(spec: PlotSpec) -> None:
    """Bar chart of each method's gap over uniform, grouped by budget."""
    rows = load_records(spec.inputs)
    stats = _aggregate(rows)
    budgets = sorted({r["budget"] for r in rows})
    methods = [m for m in _method_order(rows) if m != "uniform"]
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    width = 0.8 / max(len(methods), 1)
    xs = np.arange(len(budgets))
    for idx, method in enumerate(methods):
        gaps = []
        for budget in budgets:
            key = ("", method, budget)
            base = ("", "uniform", budget)
            gaps.append(stats[key][0] - stats[base][0] if key in stats and base in stats else np.nan)
        ax.bar(xs + idx * width, gaps, width=width, label=method)
    ax.axhline(0.0, color="black", lw=0.8)
    ax.set_xticks(xs + 0.4 - width / 2)
    ax.set_xticklabels([f"{b:g}" for b in budgets])
    ax.set_xlabel("shot budget")
    ax.set_ylabel("accuracy gap vs uniform")
    ax.set_title(spec.title or "gap vs uniform")
    ax.legend(loc="center left", bbox_to_anchor=(1.02, 0.5), frameon=False)
    fig.tight_layout()
    _finish(fig, spec.out_path)


def load_plan_counts(path) -> np.ndarray:
    entries = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in PLAN_COLUMNS:
            if column not in header:
                raise SchemaError(f"{path}: missing column {column!r}")
        for row in reader:
            entries.append((int(row["i"]), int(row["j"]), int(row["delta"])))
    if not entries:
        raise SchemaError(f"{path}: no plan rows")
    n = max(max(i, j) for i, j, _ in entries) + 1
    counts = np.zeros((n, n))
    for i, j, delta in entries:
        counts[i, j] += delta
        if i != j:
            counts[j, i] += delta
    return counts


def heatmap_stats(counts: np.ndarray, anchors: np.ndarray) -> dict:
    n = counts.shape[0]
    mask = np.zeros(n, dtype=bool)
    mask[anchors] = True
    iu, ju = np.triu_indices(n)
    vals = counts[iu, ju]
    block = mask[iu] & mask[ju]
    off = ~mask[iu] & ~mask[ju]
    anchor_max = float(vals[block].max()) if block.any() else 0.0
    off_median = float(np.median(vals[off])) if off.any() else 0.0
    ratio = anchor_max / off_median if off_median > 0 else float("inf")
    return {"anchor_max": anchor_max, "off_block_median": off_median, "ratio": ratio}


def render_heatmap(spec: PlotSpec) -> dict:
    """Log-scale shot-count matrix with anchors permuted to the top-left.

    Returns the anchor-concentration statistics that are annotated on the
    figure.
    """
    counts = load_plan_counts(spec.inputs[0])
    n = counts.shape[0]
    if spec.anchors_path:
        with open(spec.anchors_path) as fh:
            anchors = np.asarray([int(line) for line in fh if line.strip()])
    else:
        anchors = np.asarray([], dtype=int)
    stats = heatmap_stats(counts, anchors) if anchors.size else {
        "anchor_max": float(counts.max()), "off_block_median": float(np.median(counts)),
        "ratio": float("nan"),
    }
    order = np.concatenate([anchors, np.setdiff1d(np.arange(n), anchors)])
    permuted = counts[np.ix_(order, order)]
    fig, ax = plt.subplots(figsize=(5.4, 4.6))
    shown = np.log10(permuted + 1.0)
    im = ax.imshow(shown, cmap="viridis", interpolation="nearest")
    fig.colorbar(im, ax=ax, label="log10(shots + 1)")
    if anchors.size:
        edge = anchors.size - 0.5
        ax.axhline(edge, color="white", lw=1.2)
        ax.axvline(edge, color="white", lw=1.2)
        ax.set_title(
            spec.title
            or f"anchor max {stats['anchor_max']:.0f} = "
            f"{stats['ratio']:.0f}x off-block median"
        )
    else:
        ax.set_title(spec.title or "shot allocation")
    ax.set_xlabel("training point (anchors first)")
    ax.set_ylabel("training point (anchors first)")
    fig.tight_layout()
    _finish(fig, spec.out_path)
    return stats


def render(spec: PlotSpec):
    """Dispatch one figure family; returns family-specific metadata if any."""
    if spec.family == "budget_curves":
        return render_budget_curves(spec)
    if spec.family == "sparsity":
        return render_sparsity(spec)
    if spec.family == "gap_bars":
        return render_gap_bars(spec)
    if spec.family == "heatmap":
        return render_heatmap(spec)
    raise SchemaError(f"unknown figure family {spec.family!r}; known: {FAMILIES}")
