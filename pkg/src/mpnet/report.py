"""Benchmark orchestration and report rendering (CSV tables + figures)."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .config import RunConfig
from .dataset import CLASS_ORDER, Dataset, load_dataset
from .evaluate import ClassificationReport, RegressionReport, cross_validate, learning_curve
from .featurize import Target

_FLOAT_FMT = "{:.10g}"


@dataclass
class BenchmarkRow:
    featurization: str
    kind: str
    report: RegressionReport | ClassificationReport


def run_benchmark(config: RunConfig, ds: Dataset | None = None) -> list[BenchmarkRow]:
    """Cross-validate every (featurization, model) pair in the config."""
    if ds is None:
        ds = load_dataset(config.data)
    rows = []
    for feat in config.featurizations:
        for model in config.models:
            report = cross_validate(
                ds,
                feat.spec,
                model.kind,
                model.hyperparams,
                k=config.k,
                runs=config.runs,
                seed=config.seed,
            )
            rows.append(BenchmarkRow(featurization=feat.name, kind=model.kind, report=report))
    return rows


def _fmt(v) -> str:
    return _FLOAT_FMT.format(v) if isinstance(v, float) else str(v)


def write_benchmark_csv(rows: list[BenchmarkRow], path: Path) -> Path:
    classify = isinstance(rows[0].report, ClassificationReport)
    if classify:
        header = [
            "featurization", "model",
            "accuracy_mean", "accuracy_std",
            "macro_auc_mean", "macro_auc_std",
            "micro_auc_mean", "micro_auc_std",
        ]
    else:
        header = [
            "featurization", "model",
            "r2_mean", "r2_std", "mae_um_mean", "mae_um_std",
        ]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            r = row.report
            if classify:
                cells = [
                    r.accuracy_mean, r.accuracy_std,
                    r.macro_auc_mean, r.macro_auc_std,
                    r.micro_auc_mean, r.micro_auc_std,
                ]
            else:
                cells = [r.r2_mean, r.r2_std, r.mae_mean * 1e6, r.mae_std * 1e6]
            writer.writerow([row.featurization, row.kind] + [_fmt(c) for c in cells])
    return Path(path)


def write_benchmark_json(rows: list[BenchmarkRow], path: Path) -> Path:
    doc = [
        {"featurization": row.featurization, "model": row.kind, **row.report.to_dict()}
        for row in rows
    ]
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1), encoding="utf-8")
    return Path(path)


def _grouped_bars(ax, rows: list[BenchmarkRow], value, err, ylabel: str):
    feats = list(dict.fromkeys(r.featurization for r in rows))
    kinds = list(dict.fromkeys(r.kind for r in rows))
    width = 0.8 / max(len(kinds), 1)
    x = np.arange(len(feats))
    lookup = {(r.featurization, r.kind): r for r in rows}
    for j, kind in enumerate(kinds):
        vals = [value(lookup[(f, kind)].report) if (f, kind) in lookup else np.nan for f in feats]
        errs = [err(lookup[(f, kind)].report) if (f, kind) in lookup else 0.0 for f in feats]
        ax.bar(x + (j - (len(kinds) - 1) / 2) * width, vals, width, yerr=errs, capsize=2, label=kind)
    ax.set_xticks(x)
    ax.set_xticklabels(feats, rotation=12, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=7)
    ax.grid(axis="y", alpha=0.3)


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    # strip the version string so re-runs are byte-identical across envs
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return Path(path)


def render_benchmark_figures(rows: list[BenchmarkRow], outdir: Path) -> list[Path]:
    outdir = Path(outdir)
    produced = []
    classify = isinstance(rows[0].report, ClassificationReport)
    if classify:
        fig, ax = plt.subplots(figsize=(7, 4))
        _grouped_bars(ax, rows, lambda r: r.accuracy_mean, lambda r: r.accuracy_std, "accuracy")
        produced.append(_save(fig, outdir / "accuracy_by_featurization.png"))
        fig, ax = plt.subplots(figsize=(7, 4))
        _grouped_bars(ax, rows, lambda r: r.macro_auc_mean, lambda r: r.macro_auc_std, "macro AUC-ROC")
        produced.append(_save(fig, outdir / "auc_by_featurization.png"))
        best = max(rows, key=lambda r: r.report.accuracy_mean)
        produced.append(_render_roc(best, outdir / "roc_curves.png"))
        produced.append(_render_confusion(best, outdir / "confusion_matrix.png"))
    else:
        fig, ax = plt.subplots(figsize=(7, 4))
        _grouped_bars(ax, rows, lambda r: r.r2_mean, lambda r: r.r2_std, "$R^2$")
        produced.append(_save(fig, outdir / "r2_by_featurization.png"))
        fig, ax = plt.subplots(figsize=(7, 4))
        _grouped_bars(ax, rows, lambda r: r.mae_mean * 1e6, lambda r: r.mae_std * 1e6, "MAE (um)")
        produced.append(_save(fig, outdir / "mae_by_featurization.png"))
    return produced


def _render_roc(row: BenchmarkRow, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4.5))
    roc = row.report.roc
    for class_id, curve in roc["per_class"].items():
        ax.plot(curve.fpr, curve.tpr, label=f"{CLASS_ORDER[class_id].value} (AUC {curve.auc:.3f})", lw=1.2)
    ax.plot([0, 1], [0, 1], "k--", lw=0.8)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title(
        f"{row.kind} / {row.featurization} "
        f"(micro {roc['micro']:.3f}, macro {roc['macro']:.3f})",
        fontsize=9,
    )
    ax.legend(fontsize=7, loc="lower right")
    return _save(fig, path)


def _render_confusion(row: BenchmarkRow, path: Path) -> Path:
    conf = row.report.confusion
    names = [c.value for c in CLASS_ORDER]
    fig, ax = plt.subplots(figsize=(5, 4.5))
    im = ax.imshow(conf, cmap="Blues")
    for i in range(conf.shape[0]):
        for j in range(conf.shape[1]):
            ax.text(j, i, str(conf[i, j]), ha="center", va="center", fontsize=8,
                    color="white" if conf[i, j] > conf.max() / 2 else "black")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=7)
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=7)
    ax.set_xlabel("true class")
    ax.set_ylabel("predicted class")
    ax.set_title(f"{row.kind} / {row.featurization}", fontsize=9)
    fig.colorbar(im, ax=ax, shrink=0.8)
    return _save(fig, path)


def render_learning_curves(config: RunConfig, outdir: Path, ds: Dataset | None = None) -> list[Path]:
    """Learning-curve CSV + figure for each model on the first featurization."""
    if not config.learning_curve_fractions:
        return []
    if ds is None:
        ds = load_dataset(config.data)
    outdir = Path(outdir)
    feat = config.featurizations[0]
    classify = config.target is Target.DEFECT_CLASS
    fig, ax = plt.subplots(figsize=(6, 4))
    csv_rows = []
    for model in config.models:
        points = learning_curve(
            ds, feat.spec, model.kind, model.hyperparams,
            fractions=config.learning_curve_fractions,
            k=config.k, runs=config.runs, seed=config.seed,
        )
        if classify:
            means = [rep.accuracy_mean for _, rep in points]
            stds = [rep.accuracy_std for _, rep in points]
        else:
            means = [rep.mae_mean * 1e6 for _, rep in points]
            stds = [rep.mae_std * 1e6 for _, rep in points]
        fr = [f for f, _ in points]
        ax.errorbar(fr, means, yerr=stds, marker="o", capsize=3, label=model.kind)
        for f, mean, std in zip(fr, means, stds):
            csv_rows.append([model.kind, _fmt(float(f)), _fmt(mean), _fmt(std)])
    metric = "accuracy" if classify else "test MAE (um)"
    ax.set_xlabel("training fraction")
    ax.set_ylabel(metric)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig_path = _save(fig, outdir / "learning_curve.png")
    csv_path = outdir / "learning_curve.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "fraction", "metric_mean", "metric_std"])
        writer.writerows(csv_rows)
    return [fig_path, csv_path]


def render_identify_figure(y_true: np.ndarray, y_pred: np.ndarray, target: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    um = 1e6
    ax.scatter(y_true * um, y_pred * um, s=12, alpha=0.6, edgecolor="none")
    lo = min(y_true.min(), y_pred.min()) * um
    hi = max(y_true.max(), y_pred.max()) * um
    ax.plot([lo, hi], [lo, hi], "k--", lw=0.8)
    ax.set_xlabel(f"measured {target} (um)")
    ax.set_ylabel(f"predicted {target} (um)")
    return _save(fig, path)
