"""Axis-aligned decision trees with a vectorized split search.

Split criterion is variance reduction for regression and Gini impurity for
classification. Candidate splits for every feature of a node are scored in
one pass via prefix sums over the sorted values; tie-breaks go to the lowest
split position, then the lowest feature index, so builds are deterministic.
"""

from __future__ import annotations

import numpy as np

_INF = np.inf


def _resolve_max_features(max_features, d: int) -> int:
    if max_features is None:
        return d
    if max_features == "sqrt":
        return max(1, int(round(np.sqrt(d))))
    if max_features == "third":
        return max(1, int(round(d / 3.0)))
    return max(1, min(int(max_features), d))


class DecisionTree:
    """CART-style tree for one task ("regression" or "classification")."""

    def __init__(
        self,
        task: str = "regression",
        max_depth: int | None = None,
        min_samples_leaf: int = 1,
        min_samples_split: int = 2,
        max_features=None,
        n_classes: int | None = None,
    ):
        self.task = task
        self.max_depth = max_depth
        self.min_samples_leaf = int(min_samples_leaf)
        self.min_samples_split = int(min_samples_split)
        self.max_features = max_features
        self.n_classes = n_classes

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator | None = None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        n, d = X.shape
        if rng is None:
            rng = np.random.default_rng(0)
        mtry = _resolve_max_features(self.max_features, d)
        classify = self.task == "classification"
        if classify:
            k = self.n_classes if self.n_classes is not None else int(y.max()) + 1
            self.n_classes = k
            onehot = np.zeros((n, k))
            onehot[np.arange(n), y.astype(int)] = 1.0

        feature, threshold, left, right = [], [], [], []
        values, counts, impurities = [], [], []

        def node_stats(idx):
            if classify:
                probs = onehot[idx].mean(axis=0)
                return probs, 1.0 - float(np.sum(probs**2))
            sub = y[idx]
            return float(sub.mean()), float(sub.var())

        # (index set, depth, slot); explicit stack keeps RNG use in build order
        stack = [(np.arange(n), 0, None)]
        while stack:
            idx, depth, slot = stack.pop()
            node_id = len(feature)
            if slot is not None:
                parent, side = slot
                (left if side == "L" else right)[parent] = node_id
            value, impurity = node_stats(idx)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            values.append(value)
            counts.append(len(idx))
            impurities.append(impurity)

            if (
                len(idx) < self.min_samples_split
                or len(idx) < 2 * self.min_samples_leaf
                or impurity <= 0.0
                or (self.max_depth is not None and depth >= self.max_depth)
            ):
                continue
            if mtry < d:
                feats = np.sort(rng.choice(d, size=mtry, replace=False))
            else:
                feats = np.arange(d)
            split = self._best_split(
                X[np.ix_(idx, feats)], onehot[idx] if classify else y[idx]
            )
            if split is None:
                continue
            j_local, thr = split
            feat = int(feats[j_local])
            go_left = X[idx, feat] <= thr
            feature[node_id] = feat
            threshold[node_id] = thr
            # push right first so the left child is built (and numbered) first
            stack.append((idx[~go_left], depth + 1, (node_id, "R")))
            stack.append((idx[go_left], depth + 1, (node_id, "L")))

        self.feature_ = np.array(feature, dtype=int)
        self.threshold_ = np.array(threshold, dtype=float)
        self.left_ = np.array(left, dtype=int)
        self.right_ = np.array(right, dtype=int)
        self.value_ = np.array(values, dtype=float)
        self.count_ = np.array(counts, dtype=int)
        self.impurity_ = np.array(impurities, dtype=float)
        self.n_features_ = d
        return self

    def _best_split(self, Xn: np.ndarray, yn: np.ndarray):
        """Best (feature, threshold) over all features of a node, or None."""
        n, m = Xn.shape
        order = np.argsort(Xn, axis=0, kind="stable")
        xs = np.take_along_axis(Xn, order, axis=0)
        n_left = np.arange(1, n)[:, None]
        n_right = n - n_left
        if yn.ndim == 1:  # regression: minimize summed squared error
            ys = yn[order]
            csum = np.cumsum(ys, axis=0)
            csq = np.cumsum(ys**2, axis=0)
            sum_l, sq_l = csum[:-1], csq[:-1]
            sum_r, sq_r = csum[-1] - sum_l, csq[-1] - sq_l
            cost = (sq_l - sum_l**2 / n_left) + (sq_r - sum_r**2 / n_right)
        else:  # classification: minimize weighted Gini
            ys = yn[order]  # (n, m, k)
            ccount = np.cumsum(ys, axis=0)
            cnt_l = ccount[:-1]
            cnt_r = ccount[-1][None, :, :] - cnt_l
            cost = (n_left - (cnt_l**2).sum(axis=2) / n_left) + (
                n_right - (cnt_r**2).sum(axis=2) / n_right
            )
        valid = xs[:-1] < xs[1:]
        if self.min_samples_leaf > 1:
            lo, hi = self.min_samples_leaf - 1, n - self.min_samples_leaf
            valid[:lo] = False
            valid[hi:] = False
        cost = np.where(valid, cost, _INF)
        flat = int(np.argmin(cost))
        if not np.isfinite(cost.flat[flat]):
            return None
        i, j = divmod(flat, m)
        a, b = xs[i, j], xs[i + 1, j]
        thr = (a + b) / 2.0
        if thr >= b:  # midpoint rounded up to b: fall back to the left value
            thr = a
        return j, float(thr)

    def _leaf_indices(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        nodes = np.zeros(X.shape[0], dtype=int)
        cols = np.arange(X.shape[0])
        while True:
            feat = self.feature_[nodes]
            internal = feat >= 0
            if not internal.any():
                return nodes
            go_left = X[cols, np.clip(feat, 0, None)] <= self.threshold_[nodes]
            nxt = np.where(go_left, self.left_[nodes], self.right_[nodes])
            nodes = np.where(internal, nxt, nodes)

    def predict(self, X: np.ndarray) -> np.ndarray:
        leaves = self._leaf_indices(X)
        if self.task == "classification":
            return np.argmax(self.value_[leaves], axis=1)
        return self.value_[leaves]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        if self.task != "classification":
            raise ValueError("predict_proba requires a classification tree")
        return self.value_[self._leaf_indices(X)]

    def feature_importance(self) -> np.ndarray:
        """Unnormalized mean-decrease-in-impurity per feature."""
        imp = np.zeros(self.n_features_)
        for nid in range(len(self.feature_)):
            f = self.feature_[nid]
            if f < 0:
                continue
            l, r = self.left_[nid], self.right_[nid]
            decrease = (
                self.count_[nid] * self.impurity_[nid]
                - self.count_[l] * self.impurity_[l]
                - self.count_[r] * self.impurity_[r]
            )
            imp[f] += decrease
        return imp

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "min_samples_split": self.min_samples_split,
            "max_features": self.max_features,
            "n_classes": self.n_classes,
            "feature": self.feature_.tolist(),
            "threshold": self.threshold_.tolist(),
            "left": self.left_.tolist(),
            "right": self.right_.tolist(),
            "value": self.value_.tolist(),
            "count": self.count_.tolist(),
            "impurity": self.impurity_.tolist(),
            "n_features": self.n_features_,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        tree = cls(
            task=d["task"],
            max_depth=d["max_depth"],
            min_samples_leaf=d["min_samples_leaf"],
            min_samples_split=d["min_samples_split"],
            max_features=d["max_features"],
            n_classes=d["n_classes"],
        )
        tree.feature_ = np.array(d["feature"], dtype=int)
        tree.threshold_ = np.array(d["threshold"], dtype=float)
        tree.left_ = np.array(d["left"], dtype=int)
        tree.right_ = np.array(d["right"], dtype=int)
        tree.value_ = np.array(d["value"], dtype=float)
        tree.count_ = np.array(d["count"], dtype=int)
        tree.impurity_ = np.array(d["impurity"], dtype=float)
        tree.n_features_ = d["n_features"]
        return tree
