"""L2-regularized logistic regression fit by full-batch gradient descent."""
from __future__ import annotations

import numpy as np

from .base import Classifier, sigmoid


def logistic_loss(w, b, X, y, l2):
    """Mean log-loss plus (l2/2)*||w||^2; the intercept is not penalized."""
    z = X @ w + b
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))


def logistic_gradient(w, b, X, y, l2):
    resid = sigmoid(X @ w + b) - y
    n = X.shape[0]
    return X.T @ resid / n + l2 * w, float(resid.sum() / n)


class LogisticRegression(Classifier):
    family = "logistic"
    # step=None picks 1/L with L the gradient's Lipschitz bound on this data.
    defaults = {"l2": 0.1, "step": None, "max_iter": 5000, "tol": 1e-7}

    def fit(self, X, y):
        X, y = self._check_fit(X, y)
        y = y.astype(float)
        l2 = float(self.params["l2"])
        n, d = X.shape
        step = self.params["step"]
        if step is None:
            Xb = np.column_stack([X, np.ones(n)])
            lipschitz = 0.25 * np.linalg.norm(Xb, 2) ** 2 / n + l2
            step = 1.0 / lipschitz
        w = np.zeros(d)
        b = 0.0
        self.n_iter_ = 0
        for it in range(int(self.params["max_iter"])):
            gw, gb = logistic_gradient(w, b, X, y, l2)
            if max(np.abs(gw).max(), abs(gb)) < self.params["tol"]:
                break
            w = w - step * gw
            b = b - step * gb
            self.n_iter_ = it + 1
        self.coef_ = w
        self.intercept_ = b
        return self

    def decision_function(self, X):
        X = self._check_predict(X)
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        return self._two_column(sigmoid(self.decision_function(X)))

    def get_state(self):
        return {"coef": self.coef_, "intercept": float(self.intercept_)}

    def set_state(self, state):
        self.coef_ = np.asarray(state["coef"], dtype=float)
        self.intercept_ = float(state["intercept"])
        self.n_features = len(self.coef_)
