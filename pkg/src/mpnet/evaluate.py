"""Metrics, cross-validation protocol, learning curves, and model inspection.

The benchmark protocol is: shuffle, split into k folds, train on k-1 folds
and test on the held-out fold, average the metric over folds, and repeat for
several independently shuffled runs; summaries are mean and population std
over the run-level means. Normalization statistics are always fit on the
training folds only.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .bundle import ModelBundle
from .dataset import (
    CLASS_ORDER,
    Dataset,
    MeltpoolRecord,
    N_CLASSES,
    NormalizationStats,
    Process,
    SplitPlan,
    make_split,
    zscore_fit,
)
from .errors import DegenerateLabelsError, ModelKindError, ShapeError
from .featurize import FeatureMatrix, FeatureSpec, Target, assemble
from .learners import CLASSIFICATION, TrainedModel, train


# ---------------------------------------------------------------------------
# scalar metrics

def r2(y_true, y_pred) -> float:
    """Coefficient of determination, 1 - SS_res / SS_tot."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape or y_true.size == 0:
        raise ValueError("r2 needs equal-length nonempty arrays")
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("r2 undefined for constant y_true")
    return 1.0 - float(np.sum((y_true - y_pred) ** 2)) / ss_tot


def mae(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape or y_true.size == 0:
        raise ValueError("mae needs equal-length nonempty arrays")
    return float(np.mean(np.abs(y_true - y_pred)))


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    return float(np.mean(y_true == y_pred))


def confusion_matrix(y_true, y_pred, n_classes: int = N_CLASSES) -> np.ndarray:
    """counts[i, j] = number of samples predicted i whose true class is j."""
    m = np.zeros((n_classes, n_classes), dtype=int)
    for t, p in zip(np.asarray(y_true, dtype=int), np.asarray(y_pred, dtype=int)):
        m[p, t] += 1
    return m


def log_loss(proba: np.ndarray, y_true, eps: float = 1e-15) -> float:
    """Multiclass logarithmic loss with probability clipping."""
    proba = np.asarray(proba, dtype=float)
    y = np.asarray(y_true, dtype=int)
    picked = np.clip(proba[np.arange(len(y)), y], eps, 1.0)
    return float(-np.mean(np.log(picked)))


# ---------------------------------------------------------------------------
# ROC / AUC

@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    def to_dict(self) -> dict:
        return {
            "fpr": self.fpr.tolist(),
            "tpr": self.tpr.tolist(),
            "auc": self.auc,
        }


def roc_auc_binary(scores, labels) -> RocCurve:
    """ROC curve and trapezoidal AUC; tied scores step simultaneously."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(int)
    pos = int(labels.sum())
    neg = len(labels) - pos
    if pos == 0 or neg == 0:
        raise DegenerateLabelsError("ROC needs both classes present")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    # last index of each tie group
    distinct = np.nonzero(np.append(s[1:] != s[:-1], True))[0]
    tps = np.cumsum(y)[distinct]
    fps = np.cumsum(1 - y)[distinct]
    tpr = np.concatenate([[0.0], tps / pos, ])
    fpr = np.concatenate([[0.0], fps / neg, ])
    thresholds = np.concatenate([[np.inf], s[distinct]])
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(thresholds=thresholds, fpr=fpr, tpr=tpr, auc=auc)


def roc_auc_multiclass(proba: np.ndarray, labels) -> dict:
    """One-vs-rest curves plus micro and macro averages.

    Macro averages the per-class AUCs over classes present in ``labels``;
    absent classes are skipped with a warning. Micro flattens the binarized
    indicator matrix over all class columns.
    """
    proba = np.asarray(proba, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n_classes = proba.shape[1]
    present = sorted(int(c) for c in np.unique(labels))
    if len(present) < 2:
        raise DegenerateLabelsError("multiclass ROC needs at least two classes present")
    absent = sorted(set(range(n_classes)) - set(present))
    if absent:
        warnings.warn(f"classes {absent} absent; skipped in the macro average")
    curves = {}
    for c in present:
        curves[c] = roc_auc_binary(proba[:, c], labels == c)
    macro = float(np.mean([curves[c].auc for c in present]))
    indicator = np.zeros_like(proba, dtype=int)
    indicator[np.arange(len(labels)), labels] = 1
    micro = roc_auc_binary(proba.ravel(), indicator.ravel()).auc
    return {"per_class": curves, "micro": micro, "macro": macro}


# ---------------------------------------------------------------------------
# cross-validation

from .seeding import child_seed as _child_seed


@dataclass
class RegressionReport:
    kind: str
    target: str
    k: int
    runs: int
    fold_r2: list[list[float]]
    fold_mae: list[list[float]]
    run_r2: list[float]
    run_mae: list[float]
    r2_mean: float
    r2_std: float
    mae_mean: float  # target units (meters for geometry)
    mae_std: float
    fold_train_indices: list[list[np.ndarray]] = field(default_factory=list, repr=False)
    fold_stats: list[list[NormalizationStats]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "task": "regression",
            "kind": self.kind,
            "target": self.target,
            "k": self.k,
            "runs": self.runs,
            "r2_mean": self.r2_mean,
            "r2_std": self.r2_std,
            "mae_um_mean": self.mae_mean * 1e6,
            "mae_um_std": self.mae_std * 1e6,
            "run_r2": self.run_r2,
            "run_mae_um": [v * 1e6 for v in self.run_mae],
            "fold_r2": self.fold_r2,
            "fold_mae_um": [[v * 1e6 for v in run] for run in self.fold_mae],
        }


@dataclass
class ClassificationReport:
    kind: str
    target: str
    k: int
    runs: int
    fold_accuracy: list[list[float]]
    run_accuracy: list[float]
    run_macro_auc: list[float]
    run_micro_auc: list[float]
    accuracy_mean: float
    accuracy_std: float
    macro_auc_mean: float
    macro_auc_std: float
    micro_auc_mean: float
    micro_auc_std: float
    confusion: np.ndarray  # pooled out-of-fold predictions of run 0
    roc: dict  # pooled run-0 curves: {per_class, micro, macro}
    fold_train_indices: list[list[np.ndarray]] = field(default_factory=list, repr=False)
    fold_stats: list[list[NormalizationStats]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "task": "classification",
            "kind": self.kind,
            "target": self.target,
            "k": self.k,
            "runs": self.runs,
            "accuracy_mean": self.accuracy_mean,
            "accuracy_std": self.accuracy_std,
            "macro_auc_mean": self.macro_auc_mean,
            "macro_auc_std": self.macro_auc_std,
            "micro_auc_mean": self.micro_auc_mean,
            "micro_auc_std": self.micro_auc_std,
            "run_accuracy": self.run_accuracy,
            "run_macro_auc": self.run_macro_auc,
            "run_micro_auc": self.run_micro_auc,
            "fold_accuracy": self.fold_accuracy,
            "confusion": self.confusion.tolist(),
            "roc": {
                "micro": self.roc["micro"],
                "macro": self.roc["macro"],
                "per_class": {
                    CLASS_ORDER[c].value: curve.to_dict()
                    for c, curve in self.roc["per_class"].items()
                },
            },
        }


def _pstd(values) -> float:
    return float(np.std(np.asarray(values, dtype=float)))


def cross_validate(
    ds: Dataset | FeatureMatrix,
    spec: FeatureSpec,
    kind: str,
    hyperparams: dict | None = None,
    k: int = 5,
    runs: int = 5,
    seed: int = 0,
    fraction: float = 1.0,
):
    """k-fold cross validation repeated over independently shuffled runs.

    ``fraction`` < 1 subsamples each training fold (the learning-curve path);
    at 1.0 the training folds are used as-is.
    """
    matrix = ds if isinstance(ds, FeatureMatrix) else assemble(ds, spec)
    classify = spec.target is Target.DEFECT_CLASS
    n = matrix.n

    fold_metric: list[list[float]] = []
    fold_mae: list[list[float]] = []
    run_macro: list[float] = []
    run_micro: list[float] = []
    all_train_idx: list[list[np.ndarray]] = []
    all_stats: list[list[NormalizationStats]] = []
    pooled_run0 = None

    for run in range(runs):
        folds = make_split(n, SplitPlan.kfold(k, _child_seed(seed, "shuffle", run)))
        per_fold_metric, per_fold_mae = [], []
        per_fold_macro, per_fold_micro = [], []
        train_idx_run, stats_run = [], []
        if classify and run == 0:
            pooled_run0 = {
                "proba": np.zeros((n, N_CLASSES)),
                "pred": np.zeros(n, dtype=int),
            }
        for fold, (tr, te) in enumerate(folds):
            if fraction < 1.0:
                m = int(np.ceil(fraction * len(tr)))
                if m < 2:
                    warnings.warn(
                        f"fraction {fraction} leaves {m} training samples; fold skipped"
                    )
                    continue
                sub_rng = np.random.default_rng(_child_seed(seed, "subsample", run, fold))
                tr = np.sort(sub_rng.choice(tr, size=m, replace=False))
            stats = zscore_fit(matrix.take(tr))
            x_tr = stats.transform(matrix.rows[tr])
            x_te = stats.transform(matrix.rows[te])
            y_tr = matrix.target_values[tr]
            y_te = matrix.target_values[te]
            model = train(
                kind,
                x_tr,
                y_tr,
                hyperparams,
                seed=_child_seed(seed, "train", run, fold),
                task=CLASSIFICATION if classify else "regression",
            )
            train_idx_run.append(tr)
            stats_run.append(stats)
            if classify:
                proba = model.predict_proba(x_te)
                pred = np.argmax(proba, axis=1)
                per_fold_metric.append(accuracy(y_te, pred))
                try:
                    aucs = roc_auc_multiclass(proba, y_te)
                    per_fold_macro.append(aucs["macro"])
                    per_fold_micro.append(aucs["micro"])
                except DegenerateLabelsError:
                    warnings.warn(f"run {run} fold {fold}: AUC undefined, skipped")
                if run == 0:
                    pooled_run0["proba"][te] = proba
                    pooled_run0["pred"][te] = pred
            else:
                pred = model.predict(x_te)
                per_fold_metric.append(r2(y_te, pred))
                per_fold_mae.append(mae(y_te, pred))
        if not per_fold_metric:
            continue  # every fold skipped (subsample too small)
        fold_metric.append(per_fold_metric)
        fold_mae.append(per_fold_mae)
        if classify:
            run_macro.append(float(np.mean(per_fold_macro)))
            run_micro.append(float(np.mean(per_fold_micro)))
        all_train_idx.append(train_idx_run)
        all_stats.append(stats_run)

    if not fold_metric:
        raise ValueError(
            f"no folds produced a score (fraction={fraction} leaves too few samples)"
        )
    run_metric = [float(np.mean(f)) for f in fold_metric]
    if classify:
        pooled_roc = roc_auc_multiclass(pooled_run0["proba"], matrix.target_values)
        return ClassificationReport(
            kind=kind,
            target=spec.target.value,
            k=k,
            runs=runs,
            fold_accuracy=fold_metric,
            run_accuracy=run_metric,
            run_macro_auc=run_macro,
            run_micro_auc=run_micro,
            accuracy_mean=float(np.mean(run_metric)),
            accuracy_std=_pstd(run_metric),
            macro_auc_mean=float(np.mean(run_macro)),
            macro_auc_std=_pstd(run_macro),
            micro_auc_mean=float(np.mean(run_micro)),
            micro_auc_std=_pstd(run_micro),
            confusion=confusion_matrix(matrix.target_values, pooled_run0["pred"]),
            roc=pooled_roc,
            fold_train_indices=all_train_idx,
            fold_stats=all_stats,
        )
    run_mae_values = [float(np.mean(f)) for f in fold_mae]
    return RegressionReport(
        kind=kind,
        target=spec.target.value,
        k=k,
        runs=runs,
        fold_r2=fold_metric,
        fold_mae=fold_mae,
        run_r2=run_metric,
        run_mae=run_mae_values,
        r2_mean=float(np.mean(run_metric)),
        r2_std=_pstd(run_metric),
        mae_mean=float(np.mean(run_mae_values)),
        mae_std=_pstd(run_mae_values),
        fold_train_indices=all_train_idx,
        fold_stats=all_stats,
    )


def learning_curve(
    ds: Dataset | FeatureMatrix,
    spec: FeatureSpec,
    kind: str,
    hyperparams: dict | None = None,
    fractions=(0.2, 0.4, 0.6, 0.8, 1.0),
    k: int = 5,
    runs: int = 5,
    seed: int = 0,
):
    """Cross-validation at increasing training-fold subsample fractions.

    Returns (fraction, report) pairs; fraction 1.0 reproduces the plain
    cross-validation result exactly.
    """
    matrix = ds if isinstance(ds, FeatureMatrix) else assemble(ds, spec)
    points = []
    for f in fractions:
        try:
            report = cross_validate(
                matrix, spec, kind, hyperparams, k=k, runs=runs, seed=seed, fraction=float(f)
            )
        except ValueError as exc:
            warnings.warn(f"fraction {f}: {exc}")
            continue
        points.append((float(f), report))
    return points


# ---------------------------------------------------------------------------
# model inspection

def rf_feature_importance(m: TrainedModel) -> np.ndarray:
    """Impurity-based importances of a random forest, normalized to sum 1."""
    if m.kind != "random_forest":
        raise ModelKindError(f"feature importance requires a random forest, got {m.kind!r}")
    return m.model.feature_importance()


def decision_boundary_grid(
    bundle: ModelBundle,
    material: str,
    p_range: tuple[float, float],
    v_range: tuple[float, float],
    resolution: int,
    fixed: dict | None = None,
) -> dict:
    """Class-id grid over a power x velocity sweep with other features fixed.

    ``grid[i][j]`` is the predicted class at (p_axis[i], v_axis[j]). ``fixed``
    may override process, beam_diameter, layer_thickness, and hatch_spacing
    (SI units).
    """
    if bundle.model.task != CLASSIFICATION:
        raise ModelKindError("decision boundaries need a classification model")
    columns = bundle.model.columns or ()
    if "power" not in columns or "velocity" not in columns:
        raise ShapeError("model was trained without power/velocity columns")
    fixed = dict(fixed or {})
    process = Process(fixed.get("process", Process.LPBF))
    p_axis = np.linspace(p_range[0], p_range[1], resolution)
    v_axis = np.linspace(v_range[0], v_range[1], resolution)
    grid = np.zeros((resolution, resolution), dtype=int)
    for i, p in enumerate(p_axis):
        for j, v in enumerate(v_axis):
            record = MeltpoolRecord(
                source_id="grid",
                process=process,
                material_name=material,
                power=float(p),
                velocity=float(v),
                beam_diameter=fixed.get("beam_diameter", 80e-6),
                layer_thickness=fixed.get("layer_thickness", 40e-6),
                hatch_spacing=fixed.get("hatch_spacing"),
            )
            x = bundle.featurize(record)
            grid[i, j] = int(bundle.model.predict(x)[0])
    return {
        "grid": grid,
        "p_axis": p_axis,
        "v_axis": v_axis,
        "material": material,
        "classes": [c.value for c in CLASS_ORDER],
    }
