"""Exact Gaussian-process regression with an RBF kernel.

Inference goes through a Cholesky factorization of K + noise*I; if the
factorization fails, jitter escalates along a fixed ladder (1e-10 .. 1e-6)
before giving up. Targets are standardized internally and mapped back.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericalError

_JITTER_LADDER = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


def rbf_kernel(a: np.ndarray, b: np.ndarray, length_scale: float, signal_variance: float) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    sq = (
        np.sum(a**2, axis=1)[:, None]
        + np.sum(b**2, axis=1)[None, :]
        - 2.0 * a @ b.T
    )
    return signal_variance * np.exp(-np.clip(sq, 0.0, None) / (2.0 * length_scale**2))


class GPRegressor:
    def __init__(self, length_scale: float = 1.0, signal_variance: float = 1.0, noise: float = 1e-6):
        self.length_scale = float(length_scale)
        self.signal_variance = float(signal_variance)
        self.noise = float(noise)

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int = 0):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        self.x_train_ = X
        self.y_mean_ = float(y.mean())
        self.y_scale_ = float(y.std()) or 1.0
        target = (y - self.y_mean_) / self.y_scale_
        k = rbf_kernel(X, X, self.length_scale, self.signal_variance)
        base = k + self.noise * np.eye(len(X))
        chol = None
        for jitter in _JITTER_LADDER:
            try:
                chol = np.linalg.cholesky(base + jitter * np.eye(len(X)))
                break
            except np.linalg.LinAlgError:
                continue
        if chol is None:
            raise NumericalError(
                "kernel matrix not positive definite even after jitter escalation"
            )
        self.chol_ = chol
        self.alpha_ = np.linalg.solve(chol.T, np.linalg.solve(chol, target))
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        k_star = rbf_kernel(np.asarray(X, dtype=float), self.x_train_, self.length_scale, self.signal_variance)
        return (k_star @ self.alpha_) * self.y_scale_ + self.y_mean_

    def predict_std(self, X: np.ndarray) -> np.ndarray:
        """Posterior standard deviation (same units as the target)."""
        X = np.asarray(X, dtype=float)
        k_star = rbf_kernel(X, self.x_train_, self.length_scale, self.signal_variance)
        v = np.linalg.solve(self.chol_, k_star.T)
        var = self.signal_variance - np.sum(v**2, axis=0)
        return np.sqrt(np.clip(var, 0.0, None)) * self.y_scale_

    def to_dict(self) -> dict:
        return {
            "length_scale": self.length_scale,
            "signal_variance": self.signal_variance,
            "noise": self.noise,
            "x_train": self.x_train_.tolist(),
            "alpha": self.alpha_.tolist(),
            "chol": self.chol_.tolist(),
            "y_mean": self.y_mean_,
            "y_scale": self.y_scale_,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GPRegressor":
        m = cls(
            length_scale=d["length_scale"],
            signal_variance=d["signal_variance"],
            noise=d["noise"],
        )
        m.x_train_ = np.array(d["x_train"], dtype=float)
        m.alpha_ = np.array(d["alpha"], dtype=float)
        m.chol_ = np.array(d["chol"], dtype=float)
        m.y_mean_ = d["y_mean"]
        m.y_scale_ = d["y_scale"]
        return m
