"""Fully connected network with ReLU hiddens and an L2 weight penalty.

Trained by (mini-)batch gradient descent with a fixed step; the default is
full batch, which keeps training deterministic for a given seed. Regression
targets are standardized internally so step sizes behave across target
scales; predictions are mapped back.

The penalized loss and its analytic gradient are exposed (``loss`` /
``loss_gradient``) so the backpropagation can be checked against finite
differences.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateLabelsError


def _relu(x):
    return np.maximum(x, 0.0)


class MLP:
    def __init__(
        self,
        task: str = "regression",
        hidden: tuple[int, ...] = (64, 32, 64),
        alpha: float = 1e-4,
        lr: float = 0.05,
        max_iter: int = 2000,
        batch_size: int | None = None,
        clip_grad_norm: float = 5.0,
        n_classes: int | None = None,
    ):
        self.task = task
        self.hidden = tuple(int(h) for h in hidden)
        self.alpha = float(alpha)
        self.lr = float(lr)
        self.max_iter = int(max_iter)
        self.batch_size = batch_size
        # update-step stabilizer: a fixed step with unbounded gradients can
        # blow up for unlucky inits; the loss/gradient pair stays exact
        self.clip_grad_norm = clip_grad_norm
        self.n_classes = n_classes

    # -- parameter plumbing ------------------------------------------------

    def init_params(self, n_inputs: int, n_outputs: int, rng: np.random.Generator):
        sizes = [n_inputs, *self.hidden, n_outputs]
        self.weights_ = [
            rng.normal(0.0, np.sqrt(2.0 / sizes[i]), size=(sizes[i], sizes[i + 1]))
            for i in range(len(sizes) - 1)
        ]
        self.biases_ = [np.zeros(sizes[i + 1]) for i in range(len(sizes) - 1)]

    def flat_params(self) -> np.ndarray:
        return np.concatenate(
            [w.ravel() for w in self.weights_] + [b.ravel() for b in self.biases_]
        )

    def set_flat_params(self, flat: np.ndarray):
        pos = 0
        for i, w in enumerate(self.weights_):
            self.weights_[i] = flat[pos : pos + w.size].reshape(w.shape)
            pos += w.size
        for i, b in enumerate(self.biases_):
            self.biases_[i] = flat[pos : pos + b.size].reshape(b.shape)
            pos += b.size

    # -- forward / loss / gradient -----------------------------------------

    def _forward(self, X: np.ndarray):
        acts = [np.asarray(X, dtype=float)]
        for i, (w, b) in enumerate(zip(self.weights_, self.biases_)):
            z = acts[-1] @ w + b
            acts.append(_relu(z) if i < len(self.weights_) - 1 else z)
        return acts

    def _output_and_delta(self, out: np.ndarray, y: np.ndarray):
        n = out.shape[0]
        if self.task == "regression":
            err = out[:, 0] - y
            loss = float(np.mean(err**2))
            delta = (2.0 * err / n)[:, None]
        else:
            z = out - out.max(axis=1, keepdims=True)
            e = np.exp(z)
            proba = e / e.sum(axis=1, keepdims=True)
            onehot = np.zeros_like(proba)
            onehot[np.arange(n), y.astype(int)] = 1.0
            loss = float(-np.mean(np.log(np.clip(proba[np.arange(n), y.astype(int)], 1e-300, None))))
            delta = (proba - onehot) / n
        return loss, delta

    def loss(self, X: np.ndarray, y: np.ndarray) -> float:
        acts = self._forward(X)
        loss, _ = self._output_and_delta(acts[-1], np.asarray(y))
        penalty = self.alpha * sum(float(np.sum(w**2)) for w in self.weights_)
        return loss + penalty

    def loss_gradient(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Analytic gradient of the penalized loss, flattened like ``flat_params``."""
        acts = self._forward(X)
        _, delta = self._output_and_delta(acts[-1], np.asarray(y))
        grad_w = [None] * len(self.weights_)
        grad_b = [None] * len(self.biases_)
        for layer in range(len(self.weights_) - 1, -1, -1):
            grad_w[layer] = acts[layer].T @ delta + 2.0 * self.alpha * self.weights_[layer]
            grad_b[layer] = delta.sum(axis=0)
            if layer > 0:
                delta = (delta @ self.weights_[layer].T) * (acts[layer] > 0)
        return np.concatenate(
            [g.ravel() for g in grad_w] + [g.ravel() for g in grad_b]
        )

    # -- training ------------------------------------------------------------

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int = 0):
        X = np.asarray(X, dtype=float)
        rng = np.random.default_rng(np.random.SeedSequence((seed, 0x6D6C70)))
        if self.task == "regression":
            y = np.asarray(y, dtype=float)
            self.y_mean_ = float(y.mean())
            self.y_scale_ = float(y.std()) or 1.0
            target = (y - self.y_mean_) / self.y_scale_
            n_out = 1
        else:
            y = np.asarray(y, dtype=int)
            classes = sorted(int(c) for c in np.unique(y))
            if len(classes) < 2:
                raise DegenerateLabelsError(f"need at least two classes, got {classes}")
            if self.n_classes is None:
                self.n_classes = max(classes) + 1
            self.present_classes_ = classes
            remap = {c: i for i, c in enumerate(classes)}
            target = np.array([remap[int(v)] for v in y])
            n_out = len(classes)
        self.init_params(X.shape[1], n_out, rng)
        n = X.shape[0]
        batch = n if self.batch_size is None else min(self.batch_size, n)
        for _ in range(self.max_iter):
            if batch >= n:
                xb, yb = X, target
            else:
                pick = rng.choice(n, size=batch, replace=False)
                xb, yb = X[pick], target[pick]
            grad = self.loss_gradient(xb, yb)
            if self.clip_grad_norm is not None:
                norm = float(np.linalg.norm(grad))
                if norm > self.clip_grad_norm:
                    grad = grad * (self.clip_grad_norm / norm)
            self.set_flat_params(self.flat_params() - self.lr * grad)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.task == "classification":
            return np.argmax(self.predict_proba(X), axis=1)
        out = self._forward(X)[-1][:, 0]
        return out * self.y_scale_ + self.y_mean_

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        if self.task != "classification":
            raise ValueError("predict_proba requires a classification model")
        out = self._forward(X)[-1]
        z = out - out.max(axis=1, keepdims=True)
        e = np.exp(z)
        local = e / e.sum(axis=1, keepdims=True)
        proba = np.zeros((out.shape[0], self.n_classes))
        proba[:, self.present_classes_] = local
        return proba

    def to_dict(self) -> dict:
        d = {
            "task": self.task,
            "hidden": list(self.hidden),
            "alpha": self.alpha,
            "lr": self.lr,
            "max_iter": self.max_iter,
            "batch_size": self.batch_size,
            "clip_grad_norm": self.clip_grad_norm,
            "n_classes": self.n_classes,
            "weights": [w.tolist() for w in self.weights_],
            "biases": [b.tolist() for b in self.biases_],
        }
        if self.task == "regression":
            d["y_mean"] = self.y_mean_
            d["y_scale"] = self.y_scale_
        else:
            d["present_classes"] = self.present_classes_
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MLP":
        m = cls(
            task=d["task"],
            hidden=tuple(d["hidden"]),
            alpha=d["alpha"],
            lr=d["lr"],
            max_iter=d["max_iter"],
            batch_size=d["batch_size"],
            clip_grad_norm=d.get("clip_grad_norm", 5.0),
            n_classes=d["n_classes"],
        )
        m.weights_ = [np.array(w, dtype=float) for w in d["weights"]]
        m.biases_ = [np.array(b, dtype=float) for b in d["biases"]]
        if d["task"] == "regression":
            m.y_mean_ = d["y_mean"]
            m.y_scale_ = d["y_scale"]
        else:
            m.present_classes_ = list(d["present_classes"])
        return m
