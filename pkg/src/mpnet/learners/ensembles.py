"""Bagged and boosted tree ensembles built on the native decision tree."""

from __future__ import annotations

import numpy as np

from .trees import DecisionTree


def _tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    # per-tree stream keyed by (seed, index): schedule-independent
    return np.random.default_rng(np.random.SeedSequence((seed, tree_index)))


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class RandomForest:
    """Bootstrap-aggregated trees; per-tree RNG derived from (seed, index)."""

    def __init__(
        self,
        task: str = "regression",
        n_estimators: int = 100,
        max_depth: int | None = None,
        min_samples_leaf: int = 1,
        max_features="auto",
        n_classes: int | None = None,
    ):
        self.task = task
        self.n_estimators = int(n_estimators)
        self.max_depth = max_depth
        self.min_samples_leaf = int(min_samples_leaf)
        self.max_features = max_features
        self.n_classes = n_classes

    def _mtry(self):
        if self.max_features == "auto":
            return "sqrt" if self.task == "classification" else "third"
        return self.max_features

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int = 0):
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        if self.task == "classification" and self.n_classes is None:
            self.n_classes = int(np.max(y)) + 1
        self.trees_ = []
        for t in range(self.n_estimators):
            rng = _tree_rng(seed, t)
            boot = rng.integers(0, n, size=n)
            tree = DecisionTree(
                task=self.task,
                max_depth=self.max_depth,
                min_samples_leaf=self.min_samples_leaf,
                max_features=self._mtry(),
                n_classes=self.n_classes,
            )
            tree.fit(X[boot], np.asarray(y)[boot], rng)
            self.trees_.append(tree)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.task == "classification":
            return np.argmax(self.predict_proba(X), axis=1)
        return np.mean([t.predict(X) for t in self.trees_], axis=0)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        # average of per-tree leaf class frequencies
        return np.mean([t.predict_proba(X) for t in self.trees_], axis=0)

    def feature_importance(self) -> np.ndarray:
        """Mean decrease in impurity, averaged over trees and normalized to 1."""
        imp = np.mean([t.feature_importance() for t in self.trees_], axis=0)
        total = imp.sum()
        if total <= 0:
            return np.full_like(imp, 1.0 / len(imp))
        return imp / total

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "n_estimators": self.n_estimators,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "max_features": self.max_features,
            "n_classes": self.n_classes,
            "trees": [t.to_dict() for t in self.trees_],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForest":
        rf = cls(
            task=d["task"],
            n_estimators=d["n_estimators"],
            max_depth=d["max_depth"],
            min_samples_leaf=d["min_samples_leaf"],
            max_features=d["max_features"],
            n_classes=d["n_classes"],
        )
        rf.trees_ = [DecisionTree.from_dict(td) for td in d["trees"]]
        return rf


class GradientBoosting:
    """Stagewise trees on residuals (squared loss) or softmax gradients.

    Regression starts from the training mean and fits each new tree to the
    current residuals; multiclass fits one gradient tree per present class
    and stage, accumulating logits that feed a softmax.
    """

    def __init__(
        self,
        task: str = "regression",
        n_estimators: int = 100,
        learning_rate: float = 0.1,
        max_depth: int = 3,
        min_samples_leaf: int = 1,
        n_classes: int | None = None,
    ):
        self.task = task
        self.n_estimators = int(n_estimators)
        self.learning_rate = float(learning_rate)
        self.max_depth = max_depth
        self.min_samples_leaf = int(min_samples_leaf)
        self.n_classes = n_classes

    def _new_tree(self):
        return DecisionTree(
            task="regression",
            max_depth=self.max_depth,
            min_samples_leaf=self.min_samples_leaf,
        )

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int = 0):
        X = np.asarray(X, dtype=float)
        if self.task == "regression":
            y = np.asarray(y, dtype=float)
            self.init_ = float(y.mean())
            current = np.full(y.shape, self.init_)
            self.trees_ = []
            self.staged_train_loss_ = [float(np.mean((y - current) ** 2))]
            for _ in range(self.n_estimators):
                tree = self._new_tree()
                tree.fit(X, y - current, _tree_rng(seed, len(self.trees_)))
                current = current + self.learning_rate * tree.predict(X)
                self.trees_.append(tree)
                self.staged_train_loss_.append(float(np.mean((y - current) ** 2)))
        else:
            y = np.asarray(y, dtype=int)
            if self.n_classes is None:
                self.n_classes = int(y.max()) + 1
            self.present_classes_ = sorted(int(c) for c in np.unique(y))
            k = len(self.present_classes_)
            onehot = np.zeros((len(y), k))
            for col, c in enumerate(self.present_classes_):
                onehot[y == c, col] = 1.0
            logits = np.zeros((len(y), k))
            self.trees_ = []
            for stage in range(self.n_estimators):
                proba = _softmax(logits)
                stage_trees = []
                for col in range(k):
                    tree = self._new_tree()
                    tree.fit(X, onehot[:, col] - proba[:, col], _tree_rng(seed, stage * k + col))
                    logits[:, col] += self.learning_rate * tree.predict(X)
                    stage_trees.append(tree)
                self.trees_.append(stage_trees)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.task == "classification":
            return np.argmax(self.predict_proba(X), axis=1)
        pred = np.full(np.asarray(X).shape[0], self.init_)
        for tree in self.trees_:
            pred = pred + self.learning_rate * tree.predict(X)
        return pred

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        if self.task != "classification":
            raise ValueError("predict_proba requires a classification model")
        n = np.asarray(X).shape[0]
        k = len(self.present_classes_)
        logits = np.zeros((n, k))
        for stage_trees in self.trees_:
            for col, tree in enumerate(stage_trees):
                logits[:, col] += self.learning_rate * tree.predict(X)
        proba = np.zeros((n, self.n_classes))
        proba[:, self.present_classes_] = _softmax(logits)
        return proba

    def to_dict(self) -> dict:
        d = {
            "task": self.task,
            "n_estimators": self.n_estimators,
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "n_classes": self.n_classes,
        }
        if self.task == "regression":
            d["init"] = self.init_
            d["trees"] = [t.to_dict() for t in self.trees_]
        else:
            d["present_classes"] = self.present_classes_
            d["trees"] = [[t.to_dict() for t in stage] for stage in self.trees_]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GradientBoosting":
        gb = cls(
            task=d["task"],
            n_estimators=d["n_estimators"],
            learning_rate=d["learning_rate"],
            max_depth=d["max_depth"],
            min_samples_leaf=d["min_samples_leaf"],
            n_classes=d["n_classes"],
        )
        if d["task"] == "regression":
            gb.init_ = d["init"]
            gb.trees_ = [DecisionTree.from_dict(td) for td in d["trees"]]
        else:
            gb.present_classes_ = list(d["present_classes"])
            gb.trees_ = [
                [DecisionTree.from_dict(td) for td in stage] for stage in d["trees"]
            ]
        return gb
