"""Random forest of Gini CART trees with bootstrap rows and sqrt(d) features per split."""
from __future__ import annotations

import math

import numpy as np

from .base import Classifier
from .tree import Presorted, build_tree, pack_trees, unpack_trees


class RandomForest(Classifier):
    family = "random_forest"
    defaults = {"n_trees": 100, "max_depth": 8, "min_samples_leaf": 1}
    staged_param = "n_trees"

    def fit(self, X, y):
        X, y = self._check_fit(X, y)
        n, d = X.shape
        data = Presorted(X)
        mtry = max(1, int(math.isqrt(d)))
        self.trees_ = []
        for t in range(int(self.params["n_trees"])):
            # One stream per tree: a smaller forest is a prefix of a larger one.
            rng = np.random.default_rng([self.seed, t])
            counts = np.bincount(rng.integers(0, n, n), minlength=n).astype(float)

            def features(rng=rng):
                return np.sort(rng.choice(d, size=mtry, replace=False))

            self.trees_.append(
                build_tree(
                    data, y, counts,
                    criterion="gini",
                    max_depth=int(self.params["max_depth"]),
                    min_samples_leaf=int(self.params["min_samples_leaf"]),
                    features=features,
                )
            )
        return self

    def tree_votes(self, X):
        """(n_trees, n) matrix of class votes; a leaf split 50/50 votes for B."""
        X = self._check_predict(X)
        return np.array([(tree.predict(X) > 0.5) for tree in self.trees_], dtype=float).reshape(
            len(self.trees_), X.shape[0]
        )

    def predict_proba(self, X):
        votes = self.tree_votes(X)
        if votes.shape[0] == 0:
            return self._two_column(np.full(votes.shape[1], 0.5))
        return self._two_column(votes.mean(axis=0))

    def truncated(self, n):
        clone = RandomForest(self.seed, **{**self.params, "n_trees": n})
        clone.n_features = self.n_features
        clone.trees_ = self.trees_[:n]
        return clone

    def get_state(self):
        return pack_trees(self.trees_)

    def set_state(self, state):
        self.trees_ = unpack_trees(state)
