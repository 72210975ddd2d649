"""Gradient-boosted regression trees on the logistic loss, and discrete AdaBoost."""
from __future__ import annotations

import numpy as np

from .base import Classifier, sigmoid
from .tree import Presorted, build_tree, pack_trees, unpack_trees

ADABOOST_EPS_FLOOR = 1e-10


def leaf_objective(gamma, F, y):
    """Logistic loss of the rows in one leaf after shifting their scores by gamma."""
    z = np.asarray(F, dtype=float) + gamma
    return float(np.sum(np.logaddexp(0.0, z) - y * z))


def leaf_gradient(gamma, F, y):
    return float(np.sum(sigmoid(np.asarray(F, dtype=float) + gamma) - y))


def leaf_hessian(gamma, F, y):
    p = sigmoid(np.asarray(F, dtype=float) + gamma)
    return float(np.sum(p * (1.0 - p)))


def newton_leaf_value(F, y, min_hessian=1e-12):
    """One Newton step on the leaf objective from gamma = 0."""
    return -leaf_gradient(0.0, F, y) / max(leaf_hessian(0.0, F, y), min_hessian)


class GradientBoosting(Classifier):
    family = "gradient_boost"
    defaults = {"n_rounds": 100, "learning_rate": 0.1, "max_depth": 3, "min_samples_leaf": 1}
    staged_param = "n_rounds"

    def fit(self, X, y):
        X, y = self._check_fit(X, y)
        yf = y.astype(float)
        n = len(yf)
        prior = np.clip(yf.mean(), 1e-12, 1 - 1e-12)
        self.base_score_ = float(np.log(prior / (1 - prior)))
        eta = float(self.params["learning_rate"])
        data = Presorted(X)
        ones = np.ones(n)
        F = np.full(n, self.base_score_)
        self.trees_ = []
        for _ in range(int(self.params["n_rounds"])):
            resid = yf - sigmoid(F)
            tree = build_tree(
                data, resid, ones,
                criterion="sse",
                max_depth=int(self.params["max_depth"]),
                min_samples_leaf=int(self.params["min_samples_leaf"]),
                leaf_value=lambda rows, F=F: newton_leaf_value(F[rows], yf[rows]),
            )
            F = F + eta * tree.predict(X)
            self.trees_.append(tree)
        return self

    def decision_function(self, X):
        X = self._check_predict(X)
        F = np.full(X.shape[0], self.base_score_)
        eta = float(self.params["learning_rate"])
        for tree in self.trees_:
            F = F + eta * tree.predict(X)
        return F

    def predict_proba(self, X):
        return self._two_column(sigmoid(self.decision_function(X)))

    def truncated(self, n):
        clone = GradientBoosting(self.seed, **{**self.params, "n_rounds": n})
        clone.n_features = self.n_features
        clone.base_score_ = self.base_score_
        clone.trees_ = self.trees_[:n]
        return clone

    def get_state(self):
        return {"base_score": self.base_score_, **pack_trees(self.trees_)}

    def set_state(self, state):
        self.base_score_ = float(state["base_score"])
        self.trees_ = unpack_trees(state)


class AdaBoost(Classifier):
    """Discrete AdaBoost over decision stumps.

    A stump predicts ``polarity`` when ``x[feature] > threshold`` and
    ``-polarity`` otherwise. P(A) is the logistic transform of twice the
    weighted margin.
    """

    family = "adaboost"
    defaults = {"n_rounds": 50}
    staged_param = "n_rounds"

    def fit(self, X, y):
        X, y = self._check_fit(X, y)
        n, d = X.shape
        data = Presorted(X)
        ypm = np.where(y == 1, 1.0, -1.0)
        sorted_vals = np.take_along_axis(data.X.T, data.order, axis=1)
        valid = sorted_vals[:, 1:] > sorted_vals[:, :-1]
        ys = ypm[data.order]
        w = np.full(n, 1.0 / n)
        stumps = []
        self.errors_ = []
        for _ in range(int(self.params["n_rounds"])):
            ws = w[data.order]
            pos = np.cumsum(np.where(ys > 0, ws, 0.0), axis=1)[:, :-1]
            neg = np.cumsum(np.where(ys < 0, ws, 0.0), axis=1)[:, :-1]
            total_pos = w[ypm > 0].sum()
            total_neg = w[ypm < 0].sum()
            # polarity +1: left predicts -1, right predicts +1
            err_plus = pos + (total_neg - neg)
            err_minus = neg + (total_pos - pos)
            errs = np.stack([err_plus, err_minus], axis=-1)
            errs = np.where(valid[:, :, None], errs, np.inf)
            best = int(np.argmin(errs))
            f, rest = divmod(best, errs.shape[1] * 2)
            p, which = divmod(rest, 2)
            eps = float(errs[f, p, which])
            if not np.isfinite(eps) or eps >= 0.5:
                break
            polarity = 1.0 if which == 0 else -1.0
            thr = sorted_vals[f, p] + (sorted_vals[f, p + 1] - sorted_vals[f, p]) / 2.0
            if thr >= sorted_vals[f, p + 1]:
                thr = sorted_vals[f, p]
            eps_c = min(max(eps, ADABOOST_EPS_FLOOR), 1.0 - ADABOOST_EPS_FLOOR)
            alpha = 0.5 * np.log((1.0 - eps_c) / eps_c)
            h = np.where(X[:, f] > thr, polarity, -polarity)
            stumps.append((f, thr, polarity, alpha))
            self.errors_.append(eps)
            w = w * np.exp(-alpha * ypm * h)
            w = w / w.sum()
            if eps <= ADABOOST_EPS_FLOOR:
                break
        self._set_stumps(stumps)
        self.errors_ = np.asarray(self.errors_, dtype=float)
        return self

    def _set_stumps(self, stumps):
        self.stump_feature_ = np.array([s[0] for s in stumps], dtype=np.int64)
        self.stump_threshold_ = np.array([s[1] for s in stumps], dtype=float)
        self.stump_polarity_ = np.array([s[2] for s in stumps], dtype=float)
        self.alphas_ = np.array([s[3] for s in stumps], dtype=float)

    def stump_predictions(self, X):
        X = self._check_predict(X)
        if len(self.alphas_) == 0:
            return np.zeros((0, X.shape[0]))
        above = X[:, self.stump_feature_].T > self.stump_threshold_[:, None]
        return np.where(above, self.stump_polarity_[:, None], -self.stump_polarity_[:, None])

    def decision_function(self, X):
        return self.alphas_ @ self.stump_predictions(X)

    def predict_proba(self, X):
        return self._two_column(sigmoid(2.0 * self.decision_function(X)))

    def truncated(self, n):
        clone = AdaBoost(self.seed, **{**self.params, "n_rounds": n})
        clone.n_features = self.n_features
        clone.stump_feature_ = self.stump_feature_[:n]
        clone.stump_threshold_ = self.stump_threshold_[:n]
        clone.stump_polarity_ = self.stump_polarity_[:n]
        clone.alphas_ = self.alphas_[:n]
        clone.errors_ = self.errors_[:n]
        return clone

    def get_state(self):
        return {
            "feature": self.stump_feature_,
            "threshold": self.stump_threshold_,
            "polarity": self.stump_polarity_,
            "alpha": self.alphas_,
            "errors": self.errors_,
        }

    def set_state(self, state):
        self.stump_feature_ = np.asarray(state["feature"], dtype=np.int64)
        self.stump_threshold_ = np.asarray(state["threshold"], dtype=float)
        self.stump_polarity_ = np.asarray(state["polarity"], dtype=float)
        self.alphas_ = np.asarray(state["alpha"], dtype=float)
        self.errors_ = np.asarray(state.get("errors", np.zeros(len(self.alphas_))), dtype=float)
