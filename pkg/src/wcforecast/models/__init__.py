"""The five classifier families behind one fit/predict contract."""
from __future__ import annotations

import numpy as np

from .base import FAMILIES, Classifier, ClassifierSpec, sigmoid
from .boosting import AdaBoost, GradientBoosting
from .forest import RandomForest
from .knn import KNearestNeighbors
from .logistic import LogisticRegression

REGISTRY: dict[str, type[Classifier]] = {
    "logistic": LogisticRegression,
    "random_forest": RandomForest,
    "gradient_boost": GradientBoosting,
    "adaboost": AdaBoost,
    "knn": KNearestNeighbors,
}


def make_classifier(spec: ClassifierSpec) -> Classifier:
    try:
        cls = REGISTRY[spec.family]
    except KeyError:
        raise ValueError(f"unknown classifier family {spec.family!r}") from None
    return cls(spec.seed, **spec.hyperparams)


def fit(spec: ClassifierSpec, X, y) -> Classifier:
    return make_classifier(spec).fit(X, y)


def predict_proba(model: Classifier, x) -> tuple[float, float]:
    """(P(A), P(B)) for a single feature vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("predict_proba expects a single feature vector")
    p = model.predict_proba(x[None, :])[0]
    return float(p[0]), float(p[1])


def restore(family: str, seed: int, params: dict, n_features: int, state: dict) -> Classifier:
    model = REGISTRY[family](seed, **params)
    model.set_state(state)
    model.n_features = n_features
    return model


__all__ = [
    "FAMILIES", "REGISTRY", "Classifier", "ClassifierSpec", "AdaBoost", "GradientBoosting",
    "KNearestNeighbors", "LogisticRegression", "RandomForest", "fit", "make_classifier",
    "predict_proba", "restore", "sigmoid",
]
