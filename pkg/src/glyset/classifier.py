"""L2-regularized logistic regression with a tunable decision threshold."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from glyset import kernels


class ClassifierError(ValueError):
    pass


@dataclass
class TrainedClassifier:
    weights: np.ndarray
    bias: float
    C: float
    threshold: float = 0.5
    columns: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "C": self.C,
            "threshold": self.threshold,
            "columns": list(self.columns),
            "meta": self.meta,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def from_json(cls, obj: dict) -> "TrainedClassifier":
        w = np.asarray(obj["weights"], dtype=float)
        cols = list(obj.get("columns", []))
        if cols and len(cols) != len(w):
            raise ClassifierError("column names do not match the weight vector")
        return cls(w, float(obj["bias"]), float(obj["C"]), float(obj.get("threshold", 0.5)), cols, obj.get("meta", {}))

    @classmethod
    def load(cls, path: str | Path) -> "TrainedClassifier":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _prepare(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ClassifierError("X must be 2-D")
    if not np.all(np.isfinite(X)):
        raise ClassifierError("non-finite feature value")
    y = np.asarray(y).astype(bool)
    if y.shape != (X.shape[0],):
        raise ClassifierError("y must have one label per row")
    if y.all() or not y.any():
        raise ClassifierError("training labels contain a single class")
    ysign = np.where(y, 1.0, -1.0)
    return X, ysign


def objective(X, y, w, b, C):
    """Objective value and gradient ``(f, grad_w, grad_b)`` for positive-class labels ``y``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    ysign = np.where(np.asarray(y).astype(bool), 1.0, -1.0)
    return kernels.logistic_loss_grad(X, ysign, np.ascontiguousarray(w, dtype=np.float64), float(b), float(C))


def train_lr(
    X,
    y,
    C: float = 1.0,
    tol: float = 1e-6,
    max_iters: int = 1000,
    threshold: float = 0.5,
    columns: Sequence[str] = (),
) -> TrainedClassifier:
    """Minimize ``0.5*|w|^2 + C*sum(log(1+exp(-y*(w.x+b))))`` with an unpenalized bias.

    ``y`` is truthy for UD. Starts from zero and runs L-BFGS until the
    gradient's infinity norm drops below ``tol`` or ``max_iters`` is reached.
    """
    if C <= 0:
        raise ClassifierError("C must be positive")
    X, ysign = _prepare(X, y)
    d = X.shape[1]

    def fun(theta):
        f, gw, gb = kernels.logistic_loss_grad(X, ysign, theta[:d], float(theta[d]), C)
        return f, np.append(gw, gb)

    res = minimize(
        fun,
        np.zeros(d + 1),
        jac=True,
        method="L-BFGS-B",
        options={"gtol": tol, "ftol": 0.0, "maxiter": max_iters, "maxcor": 20},
    )
    theta = res.x
    _, gw, gb = kernels.logistic_loss_grad(X, ysign, np.ascontiguousarray(theta[:d]), float(theta[d]), C)
    gnorm = max(float(np.max(np.abs(gw), initial=0.0)), abs(gb))
    return TrainedClassifier(
        weights=theta[:d].copy(),
        bias=float(theta[d]),
        C=float(C),
        threshold=float(threshold),
        columns=list(columns),
        meta={"iterations": int(res.nit), "converged": bool(gnorm < tol), "grad_inf_norm": gnorm},
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def decision_function(m: TrainedClassifier, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != len(m.weights):
        raise ClassifierError(f"dimension mismatch: {X.shape[1]} columns vs {len(m.weights)} weights")
    return X @ m.weights + m.bias


def predict_proba(m: TrainedClassifier, X) -> np.ndarray:
    """Probability of UD per row."""
    return _sigmoid(decision_function(m, X))


def predict(m: TrainedClassifier, X) -> np.ndarray:
    """True (UD) where the probability reaches the threshold; ties go to UD."""
    return predict_proba(m, X) >= m.threshold
