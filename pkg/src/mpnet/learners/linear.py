"""Linear models: closed-form ridge, coordinate-descent lasso, softmax logistic."""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateLabelsError, NumericalError


class Ridge:
    """L2-penalized least squares with an unpenalized intercept.

    Solves (Xc' Xc + lam I) beta = Xc' yc on centered data, so lam -> inf
    drives the weights to zero and the prediction to the training mean.
    """

    def __init__(self, lam: float = 1.0):
        self.lam = float(lam)

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int = 0):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        self.x_mean_ = X.mean(axis=0)
        self.y_mean_ = float(y.mean())
        xc = X - self.x_mean_
        yc = y - self.y_mean_
        a = xc.T @ xc + self.lam * np.eye(X.shape[1])
        try:
            # Cholesky rejects singular normal equations (lam = 0, collinear X)
            chol = np.linalg.cholesky(a)
        except np.linalg.LinAlgError:
            raise NumericalError(
                "singular normal equations: increase lam or drop collinear columns"
            ) from None
        rhs = xc.T @ yc
        self.coef_ = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
        self.intercept_ = self.y_mean_ - float(self.x_mean_ @ self.coef_)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coef_ + self.intercept_

    def to_dict(self) -> dict:
        return {
            "lam": self.lam,
            "coef": self.coef_.tolist(),
            "intercept": self.intercept_,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Ridge":
        m = cls(lam=d["lam"])
        m.coef_ = np.array(d["coef"], dtype=float)
        m.intercept_ = d["intercept"]
        return m


def _soft_threshold(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


class Lasso:
    """L1-penalized least squares by cyclic coordinate descent.

    Objective: (1/2n) ||y - X beta - b||^2 + lam ||beta||_1, intercept
    unpenalized. Coordinates are swept in fixed order until the largest
    update falls below tol.
    """

    def __init__(self, lam: float = 1e-6, max_sweeps: int = 1000, tol: float = 1e-12):
        self.lam = float(lam)
        self.max_sweeps = int(max_sweeps)
        self.tol = float(tol)

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int = 0):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n, d = X.shape
        self.x_mean_ = X.mean(axis=0)
        self.y_mean_ = float(y.mean())
        xc = X - self.x_mean_
        yc = y - self.y_mean_
        col_sq = (xc**2).sum(axis=0) / n
        beta = np.zeros(d)
        resid = yc.copy()
        for _ in range(self.max_sweeps):
            delta = 0.0
            for j in range(d):
                if col_sq[j] == 0.0:
                    continue
                old = beta[j]
                rho = (xc[:, j] @ resid) / n + col_sq[j] * old
                new = _soft_threshold(rho, self.lam) / col_sq[j]
                if new != old:
                    resid -= xc[:, j] * (new - old)
                    beta[j] = new
                    delta = max(delta, abs(new - old))
            if delta <= self.tol:
                break
        self.coef_ = beta
        self.intercept_ = self.y_mean_ - float(self.x_mean_ @ beta)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coef_ + self.intercept_

    def to_dict(self) -> dict:
        return {
            "lam": self.lam,
            "max_sweeps": self.max_sweeps,
            "tol": self.tol,
            "coef": self.coef_.tolist(),
            "intercept": self.intercept_,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Lasso":
        m = cls(lam=d["lam"], max_sweeps=d["max_sweeps"], tol=d["tol"])
        m.coef_ = np.array(d["coef"], dtype=float)
        m.intercept_ = d["intercept"]
        return m


class Logistic:
    """Multinomial logistic regression trained by full-batch gradient descent.

    C is the inverse regularization strength: the penalty is ||W||^2 / (2C)
    on the weights only.
    """

    def __init__(self, C: float = 100.0, lr: float = 0.5, max_iter: int = 2000, n_classes: int | None = None):
        self.C = float(C)
        self.lr = float(lr)
        self.max_iter = int(max_iter)
        self.n_classes = n_classes

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int = 0):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        classes = sorted(int(c) for c in np.unique(y))
        if len(classes) < 2:
            raise DegenerateLabelsError(
                f"need at least two classes to train, got {classes}"
            )
        if self.n_classes is None:
            self.n_classes = max(classes) + 1
        self.present_classes_ = classes
        k = len(classes)
        n, d = X.shape
        onehot = np.zeros((n, k))
        for col, c in enumerate(classes):
            onehot[y == c, col] = 1.0
        w = np.zeros((d, k))
        b = np.zeros(k)
        for _ in range(self.max_iter):
            logits = X @ w + b
            logits -= logits.max(axis=1, keepdims=True)
            e = np.exp(logits)
            proba = e / e.sum(axis=1, keepdims=True)
            err = (proba - onehot) / n
            grad_w = X.T @ err + w / self.C
            grad_b = err.sum(axis=0)
            w -= self.lr * grad_w
            b -= self.lr * grad_b
        self.weights_ = w
        self.bias_ = b
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        logits = X @ self.weights_ + self.bias_
        logits -= logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        local = e / e.sum(axis=1, keepdims=True)
        proba = np.zeros((X.shape[0], self.n_classes))
        proba[:, self.present_classes_] = local
        return proba

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "lr": self.lr,
            "max_iter": self.max_iter,
            "n_classes": self.n_classes,
            "present_classes": self.present_classes_,
            "weights": self.weights_.tolist(),
            "bias": self.bias_.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Logistic":
        m = cls(C=d["C"], lr=d["lr"], max_iter=d["max_iter"], n_classes=d["n_classes"])
        m.present_classes_ = list(d["present_classes"])
        m.weights_ = np.array(d["weights"], dtype=float)
        m.bias_ = np.array(d["bias"], dtype=float)
        return m
