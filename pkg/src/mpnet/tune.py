"""Seeded random hyperparameter search with a cross-validated objective.

Regression trials maximize the validation R^2; classification trials
minimize the multiclass logarithmic loss (probabilities clipped at 1e-15).
The search is plain uniform sampling (log-uniform for the scale-free
parameters), so a (space, seed, budget) triple always reproduces the same
trial sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, SplitPlan, make_split, zscore_fit
from .errors import MpnetError, SearchError
from .evaluate import log_loss, r2
from .featurize import FeatureMatrix, FeatureSpec, Target, assemble
from .learners import CLASSIFICATION, train
from .seeding import child_seed


class IntRange:
    def __init__(self, lo: int, hi: int):
        self.lo, self.hi = int(lo), int(hi)

    def sample(self, rng):
        return int(rng.integers(self.lo, self.hi + 1))

    def contains(self, v):
        return isinstance(v, (int, np.integer)) and self.lo <= v <= self.hi


class LogUniform:
    def __init__(self, lo: float, hi: float):
        self.lo, self.hi = float(lo), float(hi)

    def sample(self, rng):
        return float(np.exp(rng.uniform(np.log(self.lo), np.log(self.hi))))

    def contains(self, v):
        return self.lo <= v <= self.hi


class Categorical:
    def __init__(self, choices):
        self.choices = list(choices)

    def sample(self, rng):
        return self.choices[int(rng.integers(0, len(self.choices)))]

    def contains(self, v):
        return v in self.choices


class LayerSizes:
    """Tuple of layer widths, each drawn from a fixed choice set."""

    def __init__(self, choices, n_layers: int = 3):
        self.choices = list(choices)
        self.n_layers = n_layers

    def sample(self, rng):
        return tuple(
            self.choices[int(rng.integers(0, len(self.choices)))]
            for _ in range(self.n_layers)
        )

    def contains(self, v):
        return len(tuple(v)) == self.n_layers and all(h in self.choices for h in v)


NEURON_CHOICES = (32, 64, 128, 256, 512)

#: Table-derived ranges where stated; linear-model penalties are artifact
#: defaults (log-uniform spans chosen to bracket useful regularization).
DEFAULT_SPACES: dict[str, dict] = {
    "random_forest": {"n_estimators": IntRange(1, 500)},
    "gradient_boosting": {"n_estimators": IntRange(1, 500)},
    "logistic": {"C": LogUniform(1.0, 500.0)},
    "mlp": {
        "hidden": LayerSizes(NEURON_CHOICES, 3),
        "alpha": LogUniform(1e-7, 1e-1),
    },
    "gpr": {
        "length_scale": LogUniform(1e-2, 1e2),
        "signal_variance": LogUniform(1e-1, 1e1),
        "noise": LogUniform(1e-8, 1e-2),
    },
    "ridge": {"lam": LogUniform(1e-10, 1e2)},
    "lasso": {"lam": LogUniform(1e-12, 1e-2)},
    "decision_tree": {"max_depth": IntRange(2, 30)},
}


def default_space(kind: str) -> dict:
    if kind not in DEFAULT_SPACES:
        raise KeyError(f"no default search space for kind {kind!r}")
    return dict(DEFAULT_SPACES[kind])


def sample_params(space: dict, rng: np.random.Generator) -> dict:
    # fixed name order keeps RNG consumption reproducible
    return {name: space[name].sample(rng) for name in sorted(space)}


@dataclass
class Trial:
    index: int
    params: dict
    objective: float | None
    fold_scores: list[float] = field(default_factory=list)
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.objective is None


@dataclass
class SearchResult:
    best_params: dict
    best_objective: float
    best_index: int
    trials: list[Trial]
    objective_name: str


def _cv_objective(matrix: FeatureMatrix, classify: bool, kind: str, params: dict, k: int, seed: int):
    folds = make_split(matrix.n, SplitPlan.kfold(k, seed))
    scores = []
    for fold, (tr, te) in enumerate(folds):
        stats = zscore_fit(matrix.take(tr))
        x_tr, x_te = stats.transform(matrix.rows[tr]), stats.transform(matrix.rows[te])
        y_tr, y_te = matrix.target_values[tr], matrix.target_values[te]
        model = train(
            kind,
            x_tr,
            y_tr,
            params,
            seed=child_seed(seed, fold),
            task=CLASSIFICATION if classify else "regression",
        )
        if classify:
            scores.append(log_loss(model.predict_proba(x_te), y_te))
        else:
            scores.append(r2(y_te, model.predict(x_te)))
    return float(np.mean(scores)), scores


def search(
    space: dict | None,
    kind: str,
    ds: Dataset | FeatureMatrix,
    spec: FeatureSpec,
    budget: int = 50,
    seed: int = 0,
    k: int = 5,
) -> SearchResult:
    """Run ``budget`` random trials and return the best parameters.

    Best means maximum validation R^2 (regression) or minimum multiclass log
    loss (classification); ties go to the earliest trial.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if space is None:
        space = default_space(kind)
    matrix = ds if isinstance(ds, FeatureMatrix) else assemble(ds, spec)
    classify = spec.target is Target.DEFECT_CLASS
    rng = np.random.default_rng(seed)
    trials: list[Trial] = []
    for index in range(budget):
        params = sample_params(space, rng)
        try:
            objective, scores = _cv_objective(
                matrix, classify, kind, params, k, child_seed(seed, "trial", index)
            )
            trials.append(Trial(index=index, params=params, objective=objective, fold_scores=scores))
        except (MpnetError, ValueError) as exc:
            trials.append(Trial(index=index, params=params, objective=None, error=str(exc)))
    ok = [t for t in trials if not t.failed]
    if not ok:
        log = "; ".join(f"trial {t.index}: {t.error}" for t in trials)
        raise SearchError(f"all {budget} trials failed: {log}")
    sign = 1.0 if classify else -1.0  # minimize loss / maximize r2
    best = min(ok, key=lambda t: (sign * t.objective, t.index))
    return SearchResult(
        best_params=best.params,
        best_objective=best.objective,
        best_index=best.index,
        trials=trials,
        objective_name="log_loss" if classify else "r2",
    )
