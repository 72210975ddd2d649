from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, ClassVar

import numpy as np

from ..errors import FitError

FAMILIES = ("logistic", "random_forest", "gradient_boost", "adaboost", "knn")


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class ClassifierSpec:
    family: str
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0


class Classifier:
    """Binary classifier over labels 1 (team A wins) and 0 (team B wins).

    ``predict_proba`` returns an ``(n, 2)`` array of ``(P(A), P(B))`` rows.
    """

    family: ClassVar[str]
    defaults: ClassVar[dict[str, Any]] = {}
    # Hyperparameter whose smaller settings are prefixes of a larger fit.
    staged_param: ClassVar[str | None] = None
    needs_both_classes: ClassVar[bool] = True

    def __init__(self, seed: int = 0, **hyperparams):
        unknown = set(hyperparams) - set(self.defaults)
        if unknown:
            raise ValueError(f"{self.family}: unknown hyperparameter(s) {sorted(unknown)}")
        self.params = {**self.defaults, **hyperparams}
        self.seed = int(seed)
        self.n_features: int | None = None

    def _check_fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if X.ndim != 2:
            raise ValueError("X must be a 2-D matrix")
        if X.shape[1] == 0:
            raise ValueError("X has no features")
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y lengths differ")
        if X.shape[0] < 2 and self.needs_both_classes:
            raise FitError("need at least 2 training rows")
        if not np.all(np.isin(y, (0, 1))):
            raise ValueError("labels must be 0 or 1")
        if self.needs_both_classes and len(np.unique(y)) < 2:
            raise FitError(f"{self.family}: training labels contain a single class")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite values")
        self.n_features = X.shape[1]
        return X, y.astype(np.int64)

    def _check_predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if self.n_features is None:
            raise ValueError(f"{self.family}: model is not fitted")
        if X.shape[1] != self.n_features:
            raise ValueError(f"{self.family}: expected {self.n_features} features, got {X.shape[1]}")
        return X

    @staticmethod
    def _two_column(p_a):
        p_a = np.clip(np.asarray(p_a, dtype=float), 0.0, 1.0)
        return np.column_stack([p_a, 1.0 - p_a])

    def fit(self, X, y) -> "Classifier":
        raise NotImplementedError

    def predict_proba(self, X) -> np.ndarray:
        raise NotImplementedError

    def truncated(self, n: int) -> "Classifier":
        raise TypeError(f"{self.family} has no staged parameter")

    def get_state(self) -> dict:
        raise NotImplementedError

    def set_state(self, state: dict) -> None:
        raise NotImplementedError
