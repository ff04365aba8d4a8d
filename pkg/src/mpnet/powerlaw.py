"""Dimension-constrained power-law identification for meltpool geometry.

Fits y = w0 * P^w1 * V^w2 * rho^w3 * Cp^w4 * k^w5 * (Tm - T0)^w6 subject to
four linear constraints on the exponents that make both sides of the equation
carry the dimension of length. The constraints are eliminated exactly: the
feasible exponent set is the affine space (particular + span(basis)) computed
from the constraint matrix, and the optimizer works in the two free
coordinates plus the log-multiplier. A closed-form constrained least-squares
fit in log space seeds a damped Gauss-Newton refinement of the original-space
squared error, with seeded multi-starts because the refinement objective is
non-convex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IdentifiabilityError, PhysicsDomainError

#: Covariate order used throughout: P, V, rho, Cp, k, (Tm - T0).
PARAM_NAMES = ["P", "V", "rho", "Cp", "k", "dT"]

#: Base-unit exponents (M, L, T, K) for each covariate and for the target.
DIMENSIONS = {
    "P": (1, 2, -3, 0),
    "V": (0, 1, -1, 0),
    "rho": (1, -3, 0, 0),
    "Cp": (0, 2, -2, -1),
    "k": (1, 1, -3, -1),
    "dT": (0, 0, 0, 1),
}
TARGET_DIMENSION = (0, 1, 0, 0)  # depth/width/length are lengths

_RANK_TOL = 1e-10


@dataclass(frozen=True)
class ConstraintSystem:
    """Linear exponent constraints C w = rhs with an exact null-space basis."""

    matrix: np.ndarray  # 4 x 6, integer-valued
    rhs: np.ndarray  # 4
    particular: np.ndarray  # 6, minimum-norm solution of C w = rhs
    basis: np.ndarray  # 6 x 2, orthonormal null-space basis

    def residual(self, w: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(w, dtype=float) - self.rhs


def build_constraints() -> ConstraintSystem:
    """Derive the four dimensional-consistency constraints from the unit table."""
    matrix = np.array(
        [[DIMENSIONS[p][u] for p in PARAM_NAMES] for u in range(4)], dtype=float
    )
    rhs = np.array(TARGET_DIMENSION, dtype=float)
    particular = np.linalg.pinv(matrix) @ rhs
    _, s, vt = np.linalg.svd(matrix)
    null_dim = matrix.shape[1] - int(np.sum(s > _RANK_TOL * s[0]))
    basis = vt[matrix.shape[1] - null_dim :].T
    return ConstraintSystem(matrix=matrix, rhs=rhs, particular=particular, basis=basis)


@dataclass(frozen=True)
class PowerLawModel:
    """Identified multiplier and exponents, with fit diagnostics."""

    w0: float
    exponents: np.ndarray  # w1..w6 in PARAM_NAMES order
    fit_r2: float
    constraint_residual: float
    objective: float
    low_confidence: bool = False
    objective_trace: tuple[float, ...] = ()  # winning start, per accepted step

    def to_dict(self) -> dict:
        d = {"w0": self.w0}
        d.update({f"w{i + 1}": float(e) for i, e in enumerate(self.exponents)})
        d["r2"] = self.fit_r2
        d["constraint_residual"] = self.constraint_residual
        d["low_confidence"] = self.low_confidence
        return d

    def render(self, label: str = "y") -> str:
        terms = " * ".join(
            f"({name})^{e:+.3f}" if name == "dT" else f"{name}^{e:+.3f}"
            for name, e in zip(PARAM_NAMES, self.exponents)
        )
        return f"{label} = {self.w0:.4e} * {terms}".replace("(dT)", "(Tm - T0)")


@dataclass(frozen=True)
class FitConfig:
    multistarts: int = 8
    seed: int = 0
    max_iter: int = 500
    rel_tol: float = 1e-10


def _validate_inputs(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(PARAM_NAMES):
        raise ValueError(f"X must be n x {len(PARAM_NAMES)} in {PARAM_NAMES} order")
    if y.shape != (X.shape[0],):
        raise ValueError("y length must match X rows")
    if X.shape[0] < 10:
        raise ValueError(f"need at least 10 samples, got {X.shape[0]}")
    if np.any(X <= 0):
        raise PhysicsDomainError("all covariates must be > 0 (log transform)")
    if np.any(y <= 0):
        raise PhysicsDomainError("all targets must be > 0 (log transform)")
    return X, y


def _canonical_order(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # sample order must not change the result; reduce in a canonical order
    order = np.lexsort((*(X[:, j] for j in range(X.shape[1] - 1, -1, -1)), y))
    return X[order], y[order]


def _gauss_newton(
    theta0: np.ndarray,
    y: np.ndarray,
    logs: np.ndarray,
    reduced: np.ndarray,
    max_iter: int,
    rel_tol: float,
) -> tuple[np.ndarray, float, list[float]]:
    """Levenberg-style damped Gauss-Newton; accepts only descent steps."""

    def predict(theta):
        return np.exp(theta[0] + reduced @ theta[1:] + logs)

    theta = theta0.copy()
    pred = predict(theta)
    obj = float(np.sum((y - pred) ** 2))
    history = [obj]
    lam = 1e-3
    for _ in range(max_iter):
        resid = y - pred
        # d pred / d theta = pred * [1, reduced]
        jac = pred[:, None] * np.column_stack([np.ones_like(pred), reduced])
        grad = -jac.T @ resid
        hess = jac.T @ jac
        accepted = False
        for _ in range(60):
            try:
                step = np.linalg.solve(hess + lam * np.eye(hess.shape[0]), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            cand = theta + step
            cand_pred = predict(cand)
            cand_obj = float(np.sum((y - cand_pred) ** 2))
            if np.isfinite(cand_obj) and cand_obj < obj:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break
        improvement = (obj - cand_obj) / max(obj, 1e-300)
        theta, pred, obj = cand, cand_pred, cand_obj
        history.append(obj)
        lam = max(lam / 3.0, 1e-12)
        if improvement < rel_tol:
            break
    return theta, obj, history


def fit_power_law(
    X: np.ndarray, y: np.ndarray, config: FitConfig = FitConfig()
) -> PowerLawModel:
    """Fit the constrained power law to positive covariates/targets.

    Covariate columns follow ``PARAM_NAMES``; the returned exponents satisfy
    the dimensional constraints to machine precision by construction.
    """
    X, y = _validate_inputs(X, y)
    X, y = _canonical_order(X, y)
    system = build_constraints()
    L = np.log(X)
    # fixed contribution of the particular solution to log-predictions
    logs = L @ system.particular
    reduced = L @ system.basis  # n x 2 free-coordinate design
    design = np.column_stack([np.ones(len(y)), reduced])
    if np.linalg.matrix_rank(design, tol=_RANK_TOL * max(1.0, float(np.abs(design).max()))) < design.shape[1]:
        raise IdentifiabilityError(
            "covariates lack variation along the feasible exponent directions; "
            "multi-material data is required to identify the exponents"
        )
    # closed-form constrained least squares in log space seeds the refinement
    theta0, *_ = np.linalg.lstsq(design, np.log(y) - logs, rcond=None)

    material_logs = L[:, 2:]  # rho, Cp, k, dT columns
    low_confidence = bool(
        np.all(np.ptp(material_logs, axis=0) < 1e-12)
    )

    rng = np.random.default_rng(config.seed)
    best: tuple[float, int, np.ndarray, list[float]] | None = None
    for start in range(max(1, config.multistarts)):
        if start == 0:
            init = theta0
        else:
            init = theta0 + rng.normal(scale=[0.5, 0.25, 0.25])
        theta, obj, history = _gauss_newton(
            init, y, logs, reduced, config.max_iter, config.rel_tol
        )
        if best is None or obj < best[0]:
            best = (obj, start, theta, history)
    obj, _, theta, history = best

    w = system.particular + system.basis @ theta[1:]
    pred = np.exp(theta[0] + reduced @ theta[1:] + logs)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - obj / ss_tot if ss_tot > 0 else float("nan")
    return PowerLawModel(
        w0=float(math.exp(theta[0])),
        exponents=w,
        fit_r2=r2,
        constraint_residual=float(np.linalg.norm(system.residual(w))),
        objective=obj,
        low_confidence=low_confidence,
        objective_trace=tuple(history),
    )


def evaluate_power_law(model: PowerLawModel, X: np.ndarray) -> np.ndarray:
    """Elementwise w0 * prod(x^w); rejects nonpositive inputs."""
    X = np.asarray(X, dtype=float)
    if np.any(X <= 0):
        raise PhysicsDomainError("power-law evaluation requires positive covariates")
    return model.w0 * np.exp(np.log(X) @ model.exponents)


def covariates_from_records(records, ambient_temp: float, target: str):
    """Extract (X, y, kept_indices) for identification from labeled records.

    Records lacking the geometry label or registry thermal properties are
    dropped; covariates are P, V, rho, Cp, k, (Tm - T0) in SI units.
    """
    from .materials import lookup_material

    rows, targets, kept = [], [], []
    for i, r in enumerate(records):
        label = r.get(target)
        if label is None:
            continue
        mat = lookup_material(r.material_name)
        if not mat.has_thermal or mat.melting_temp <= ambient_temp:
            continue
        rows.append(
            [
                r.power,
                r.velocity,
                mat.density,
                mat.specific_heat,
                mat.conductivity,
                mat.melting_temp - ambient_temp,
            ]
        )
        targets.append(label)
        kept.append(i)
    return np.array(rows, dtype=float), np.array(targets, dtype=float), np.array(kept)
