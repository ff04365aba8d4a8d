"""Native supervised learners behind one train/predict surface.

Eight kinds are available; ridge, lasso, and the Gaussian process are
regression-only, logistic regression is classification-only, and the rest
serve both tasks. Training is deterministic for a fixed seed. Fitted models
serialize to a versioned JSON document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dataset import N_CLASSES
from ..errors import DegenerateLabelsError, ModelKindError, ShapeError
from .ensembles import GradientBoosting, RandomForest
from .gpr import GPRegressor
from .linear import Lasso, Logistic, Ridge
from .mlp import MLP
from .trees import DecisionTree

MODEL_FORMAT = "mpnet-model/1"

REGRESSION = "regression"
CLASSIFICATION = "classification"

#: kind -> (constructor, allowed tasks, needs task kwarg)
_KINDS = {
    "ridge": (Ridge, {REGRESSION}, False),
    "lasso": (Lasso, {REGRESSION}, False),
    "logistic": (Logistic, {CLASSIFICATION}, False),
    "decision_tree": (DecisionTree, {REGRESSION, CLASSIFICATION}, True),
    "random_forest": (RandomForest, {REGRESSION, CLASSIFICATION}, True),
    "gradient_boosting": (GradientBoosting, {REGRESSION, CLASSIFICATION}, True),
    "mlp": (MLP, {REGRESSION, CLASSIFICATION}, True),
    "gpr": (GPRegressor, {REGRESSION}, False),
}

MODEL_KINDS = tuple(_KINDS)

#: Kinds whose fit depends on feature scale (normalize inputs for these).
SCALE_SENSITIVE_KINDS = frozenset({"ridge", "lasso", "logistic", "mlp", "gpr"})


def default_task(kind: str) -> str | None:
    _, tasks, _ = _require_kind(kind)
    return next(iter(tasks)) if len(tasks) == 1 else None


def _require_kind(kind: str):
    try:
        return _KINDS[kind]
    except KeyError:
        raise ModelKindError(f"unknown model kind {kind!r}; choose from {MODEL_KINDS}") from None


@dataclass
class TrainedModel:
    """Opaque fitted learner plus the metadata needed to reuse it safely."""

    kind: str
    task: str
    hyperparams: dict
    columns: tuple[str, ...] | None
    seed: int
    model: object

    def _check_columns(self, X: np.ndarray, columns=None):
        X = np.asarray(X, dtype=float)
        if columns is not None and self.columns is not None:
            if tuple(columns) != tuple(self.columns):
                raise ShapeError(
                    f"feature columns {list(columns)} do not match training "
                    f"columns {list(self.columns)}"
                )
        expected = len(self.columns) if self.columns is not None else X.shape[1]
        if X.ndim != 2 or X.shape[1] != expected:
            raise ShapeError(f"expected {expected} feature columns, got {X.shape}")
        return X

    def predict(self, X: np.ndarray, columns=None) -> np.ndarray:
        return self.model.predict(self._check_columns(X, columns))

    def predict_proba(self, X: np.ndarray, columns=None) -> np.ndarray:
        if self.task != CLASSIFICATION:
            raise ModelKindError(f"{self.kind} ({self.task}) has no class probabilities")
        proba = self.model.predict_proba(self._check_columns(X, columns))
        return proba

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "kind": self.kind,
            "task": self.task,
            "hyperparams": self.hyperparams,
            "columns": list(self.columns) if self.columns is not None else None,
            "seed": self.seed,
            "params": self.model.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        if d.get("format") != MODEL_FORMAT:
            raise ValueError(f"unsupported model format {d.get('format')!r}")
        ctor, _, _ = _require_kind(d["kind"])
        return cls(
            kind=d["kind"],
            task=d["task"],
            hyperparams=d["hyperparams"],
            columns=tuple(d["columns"]) if d["columns"] is not None else None,
            seed=d["seed"],
            model=ctor.from_dict(d["params"]),
        )


def train(
    kind: str,
    X: np.ndarray,
    y: np.ndarray,
    hyperparams: dict | None = None,
    seed: int = 0,
    task: str | None = None,
    columns=None,
) -> TrainedModel:
    """Fit a learner of the given kind; deterministic for a fixed seed."""
    ctor, tasks, takes_task = _require_kind(kind)
    if task is None:
        task = default_task(kind)
    if task is None:  # dual-task kind: infer from the label dtype
        task = CLASSIFICATION if np.issubdtype(np.asarray(y).dtype, np.integer) else REGRESSION
    if task not in tasks:
        raise ModelKindError(f"model kind {kind!r} does not support task {task!r}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ShapeError(f"X {X.shape} and y {y.shape} do not align")
    hp = dict(hyperparams or {})
    if task == CLASSIFICATION:
        y = y.astype(int)
        if y.min() < 0 or y.max() >= N_CLASSES:
            raise ValueError(f"class ids must lie in 0..{N_CLASSES - 1}")
        if len(np.unique(y)) < 2:
            raise DegenerateLabelsError(
                f"only class {int(y[0])} present in the training labels"
            )
        hp.setdefault("n_classes", N_CLASSES)
    if takes_task:
        hp["task"] = task
    model = ctor(**hp)
    if isinstance(model, DecisionTree):
        model.fit(X, y, np.random.default_rng(np.random.SeedSequence((seed, 0))))
    else:
        model.fit(X, y, seed=seed)
    stored_hp = dict(hyperparams or {})
    return TrainedModel(
        kind=kind,
        task=task,
        hyperparams=stored_hp,
        columns=tuple(columns) if columns is not None else None,
        seed=seed,
        model=model,
    )


def save_model(m: TrainedModel, path: str | Path):
    Path(path).write_text(json.dumps(m.to_dict(), sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    return TrainedModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
