"""Exact k-nearest-neighbors by exhaustive Euclidean search."""
from __future__ import annotations

import numpy as np

from .base import Classifier

_CHUNK = 256


class KNearestNeighbors(Classifier):
    family = "knn"
    defaults = {"k": 5}
    needs_both_classes = False

    def fit(self, X, y):
        X, y = self._check_fit(X, y)
        if len(y) == 0:
            raise ValueError("knn needs at least one training row")
        self.X_ = X.copy()
        self.y_ = y.copy()
        return self

    def neighbors(self, X) -> np.ndarray:
        """Indices of the k nearest training rows; distance ties go to the lower row index."""
        X = self._check_predict(X)
        k = min(int(self.params["k"]), len(self.y_))
        out = np.empty((X.shape[0], k), dtype=np.int64)
        for start in range(0, X.shape[0], _CHUNK):
            block = X[start:start + _CHUNK]
            d2 = ((block[:, None, :] - self.X_[None, :, :]) ** 2).sum(axis=2)
            out[start:start + _CHUNK] = np.argsort(d2, axis=1, kind="stable")[:, :k]
        return out

    def predict_proba(self, X):
        idx = self.neighbors(X)
        return self._two_column(self.y_[idx].mean(axis=1))

    def get_state(self):
        return {"X": self.X_, "y": self.y_}

    def set_state(self, state):
        self.X_ = np.asarray(state["X"], dtype=float)
        self.y_ = np.asarray(state["y"], dtype=np.int64)
        self.n_features = self.X_.shape[1]
