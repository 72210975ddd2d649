"""Train/test split, match-grouped folds, cross-validated grid search and ensemble refit."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import models
from .dataset import TeamProfile
from .errors import ConfigError, DataError, FitError
from .features import (
    DEFAULT_SCALER_EPS,
    ExampleSet,
    PcaModel,
    Scaler,
    apply_scaler,
    fit_pca,
    fit_scaler,
)
from .models import FAMILIES, Classifier, ClassifierSpec
from .seeds import derive_seed

log = logging.getLogger(__name__)

FORMAT_VERSION = "1.1"

DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "logistic": {"l2": [0.01, 0.1, 1.0]},
    "random_forest": {"n_trees": [50, 200], "max_depth": [4, 8]},
    "gradient_boost": {"n_rounds": [50, 200], "learning_rate": [0.05, 0.1], "max_depth": [2, 3]},
    "adaboost": {"n_rounds": [50, 200]},
    "knn": {"k": [5, 15, 31]},
}
DEFAULT_PCA_OPTIONS: tuple[float | None, ...] = (None, 0.95)


def fit_model(spec: ClassifierSpec, X, y) -> Classifier:
    return models.fit(spec, X, y)


def _group_split_sizes(n_groups, test_fraction):
    n_test = int(np.floor(test_fraction * n_groups + 0.5))
    if n_test < 1 or n_test >= n_groups:
        raise DataError(
            f"cannot split {n_groups} matches with test_fraction={test_fraction}: "
            "both sides need at least one match"
        )
    return n_test


def split_train_test(
    examples: ExampleSet, test_fraction: float = 0.2, seed: int = 0, mode: str = "random"
) -> tuple[ExampleSet, ExampleSet]:
    """Split by match so both orientations of a match land on the same side.

    ``mode="chronological"`` puts the latest matches in the test set.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    ids, inverse = examples.match_groups()
    n_test = _group_split_sizes(len(ids), test_fraction)
    if mode == "random":
        perm = np.random.default_rng(seed).permutation(len(ids))
        test_groups = perm[:n_test]
    elif mode == "chronological":
        first_date = {}
        for g, d in zip(inverse, examples.dates):
            first_date.setdefault(int(g), d)
        order = sorted(range(len(ids)), key=lambda g: (first_date[g], g))
        test_groups = np.array(order[len(ids) - n_test:])
    else:
        raise ValueError(f"unknown split mode {mode!r}")
    in_test = np.isin(inverse, test_groups)
    return examples.subset(np.flatnonzero(~in_test)), examples.subset(np.flatnonzero(in_test))


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int
    stratified: bool

    def folds(self):
        """Yield ``(fit_rows, eval_rows)`` index arrays, fold by fold."""
        for f in range(self.k):
            yield np.flatnonzero(self.assignments != f), np.flatnonzero(self.assignments == f)


def plan_folds(train: ExampleSet, k: int = 5, seed: int = 0, stratified: bool = False) -> FoldPlan:
    """Assign whole matches to k folds, dealing them round-robin after a seeded shuffle.

    With ``stratified`` the shuffle runs within each label stratum (the label
    of a match's unswapped row) and the strata are dealt consecutively, so
    per-fold stratum counts differ by at most one.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    ids, inverse = train.match_groups()
    n_groups = len(ids)
    if k > n_groups:
        raise DataError(f"k={k} folds but only {n_groups} matches")
    rng = np.random.default_rng(seed)
    if stratified:
        stratum = np.full(n_groups, -1, dtype=np.int64)
        for row, g in enumerate(inverse):
            if stratum[g] < 0 or not train.swapped[row]:
                stratum[g] = train.y[row] if not train.swapped[row] else 1 - train.y[row]
        dealt = np.concatenate([rng.permutation(np.flatnonzero(stratum == s)) for s in np.unique(stratum)])
    else:
        dealt = rng.permutation(n_groups)
    group_fold = np.empty(n_groups, dtype=np.int64)
    group_fold[dealt] = np.arange(n_groups) % k
    return FoldPlan(k, group_fold[inverse], seed, stratified)


@dataclass(frozen=True)
class PipelineConfig:
    """Preprocessing searched jointly with each family's grid.

    ``pca_options`` holds ``None`` for no PCA and at most one variance target.
    """

    pca_options: tuple[float | None, ...] = DEFAULT_PCA_OPTIONS
    scaler_eps: float = DEFAULT_SCALER_EPS

    def __post_init__(self):
        targets = {p for p in self.pca_options if p is not None}
        if len(targets) > 1:
            raise ConfigError("at most one PCA variance target may be searched")
        if not self.pca_options:
            raise ConfigError("pca_options is empty")

    @property
    def pca_target(self) -> float | None:
        return next((p for p in self.pca_options if p is not None), None)


def expand_grid(space: Mapping[str, Sequence], pca_options=DEFAULT_PCA_OPTIONS) -> list[dict]:
    """Cells in declared order: PCA setting outermost, then parameters as listed."""
    names = list(space)
    cells = []
    for pca in pca_options:
        for combo in itertools.product(*(space[n] for n in names)):
            cells.append({"pca": pca, **dict(zip(names, combo))})
    return cells


@dataclass
class CellResult:
    params: dict
    fold_accuracies: list[float] = field(default_factory=list)
    fold_log_losses: list[float] = field(default_factory=list)
    valid: bool = True
    error: str | None = None

    @property
    def mean_accuracy(self) -> float:
        if not self.valid or not self.fold_accuracies:
            return float("nan")
        return sum(self.fold_accuracies) / len(self.fold_accuracies)

    @property
    def mean_log_loss(self) -> float:
        if not self.valid or not self.fold_log_losses:
            return float("nan")
        return sum(self.fold_log_losses) / len(self.fold_log_losses)


@dataclass
class GridSearchResult:
    family: str
    best_params: dict
    mean_fold_accuracy: float
    fold_accuracies: list[float]
    cells: list[CellResult]

    def summary(self) -> dict:
        return {
            "family": self.family,
            "best_params": dict(self.best_params),
            "mean_fold_accuracy": self.mean_fold_accuracy,
            "fold_accuracies": list(self.fold_accuracies),
            "cells": [
                {
                    "params": dict(c.params),
                    "mean_accuracy": c.mean_accuracy if c.valid else None,
                    "mean_log_loss": c.mean_log_loss if c.valid else None,
                    "valid": c.valid,
                }
                for c in self.cells
            ],
        }


def predicted_labels(proba: np.ndarray) -> np.ndarray:
    """Hard labels from ``(P(A), P(B))`` rows; an exact 0.5 counts as B."""
    return (proba[:, 0] > 0.5).astype(np.int64)


def _log_loss(proba, y):
    p = np.clip(np.where(y == 1, proba[:, 0], proba[:, 1]), 1e-15, 1.0)
    return float(-np.mean(np.log(p)))


def _model_params(cell):
    return {k: v for k, v in cell.items() if k != "pca"}


def grid_search(
    family: str,
    grid: Mapping[str, Sequence] | Sequence[dict],
    train: ExampleSet,
    folds: FoldPlan,
    pipeline: PipelineConfig | None = None,
    seed: int = 0,
) -> GridSearchResult:
    """Score every grid cell by mean held-out fold accuracy.

    Inside each fold the scaler, the PCA and the model are fit on the
    in-fold rows only. Cells that differ only in a family's staged parameter
    (tree or round count) are scored from one fit at the largest setting,
    truncated, which is exactly equivalent to separate fits. Ties in mean
    accuracy go to the earliest cell in declared order.
    """
    pipeline = pipeline or PipelineConfig()
    cls = models.REGISTRY.get(family)
    if cls is None:
        raise ValueError(f"unknown classifier family {family!r}")
    if isinstance(grid, Mapping):
        cells = expand_grid(grid, pipeline.pca_options)
    else:
        cells = [dict(c) for c in grid]
    if not cells:
        raise ValueError(f"{family}: empty grid")
    for cell in cells:
        cell.setdefault("pca", None)
    results = [CellResult(dict(c)) for c in cells]

    staged = cls.staged_param
    groups: dict[tuple, list[int]] = {}
    for i, cell in enumerate(cells):
        key = tuple(sorted((k, repr(v)) for k, v in cell.items() if k != staged))
        groups.setdefault(key, []).append(i)

    for fold_no, (fit_rows, eval_rows) in enumerate(folds.folds()):
        X_fit, y_fit = train.X[fit_rows], train.y[fit_rows]
        X_eval, y_eval = train.X[eval_rows], train.y[eval_rows]
        scaler = fit_scaler(X_fit, eps=pipeline.scaler_eps)
        Z_fit, Z_eval = apply_scaler(scaler, X_fit), apply_scaler(scaler, X_eval)
        views = {}
        for pca_opt in dict.fromkeys(c["pca"] for c in cells):
            if pca_opt is None:
                views[None] = (Z_fit, Z_eval)
            else:
                pca = fit_pca(Z_fit, pca_opt)
                views[pca_opt] = (pca.transform(Z_fit), pca.transform(Z_eval))

        for members in groups.values():
            lead = cells[members[0]]
            F_fit, F_eval = views[lead["pca"]]
            params = _model_params(lead)
            if staged is not None:
                params[staged] = max(int(cells[i][staged]) for i in members)
            try:
                full = fit_model(ClassifierSpec(family, params, seed), F_fit, y_fit)
            except FitError as exc:
                for i in members:
                    results[i].valid = False
                    results[i].error = f"fold {fold_no}: {exc}"
                continue
            for i in members:
                model = full
                if staged is not None and int(cells[i][staged]) != params[staged]:
                    model = full.truncated(int(cells[i][staged]))
                proba = model.predict_proba(F_eval)
                acc = float(np.mean(predicted_labels(proba) == y_eval))
                results[i].fold_accuracies.append(acc)
                results[i].fold_log_losses.append(_log_loss(proba, y_eval))

    best = None
    for r in results:
        if r.valid and (best is None or r.mean_accuracy > best.mean_accuracy):
            best = r
    if best is None:
        raise FitError(f"{family}: every grid cell is invalid ({results[0].error})")
    log.info("%s: best %s (cv accuracy %.4f)", family, best.params, best.mean_accuracy)
    return GridSearchResult(family, dict(best.params), best.mean_accuracy, list(best.fold_accuracies), results)


@dataclass
class FamilyModel:
    family: str
    params: dict
    seed: int
    use_pca: bool
    model: Classifier


@dataclass
class EnsembleBundle:
    scaler: Scaler
    pca: PcaModel | None
    members: list[FamilyModel]
    attributes: list[str]
    profiles: dict[tuple[str, int], TeamProfile]
    fallback_depth: int = 2
    seed: int = 0
    config: dict[str, str] = field(default_factory=dict)
    grid_results: list[dict] = field(default_factory=list)
    test_match_ids: list[str] = field(default_factory=list)
    format_version: str = FORMAT_VERSION

    def member(self, family: str) -> FamilyModel:
        for m in self.members:
            if m.family == family:
                return m
        raise KeyError(family)

    def member_inputs(self, member: FamilyModel, X) -> np.ndarray:
        Z = self.scaler.transform(np.atleast_2d(np.asarray(X, dtype=float)))
        if member.use_pca:
            if self.pca is None:
                raise DataError(f"{member.family} expects PCA input but the bundle has no PCA")
            Z = self.pca.transform(Z)
        return Z

    def family_proba(self, X) -> dict[str, np.ndarray]:
        """Per-family ``(n, 2)`` probability arrays for raw pair vectors."""
        return {m.family: m.model.predict_proba(self.member_inputs(m, X)) for m in self.members}

    def check(self) -> None:
        width = self.scaler.means.shape[0]
        for m in self.members:
            expected = self.pca.k if m.use_pca and self.pca is not None else width
            if m.model.n_features != expected:
                raise DataError(f"{m.family}: input width {m.model.n_features} != {expected}")


@dataclass(frozen=True)
class TrainConfig:
    k_folds: int = 5
    stratified: bool = False
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)


def train_ensemble(
    train: ExampleSet,
    grids: Mapping[str, Mapping[str, Sequence]] | None = None,
    config: TrainConfig | None = None,
    seed: int = 0,
    *,
    profiles: Mapping[tuple[str, int], TeamProfile] | None = None,
    attributes: Sequence[str] = (),
    fallback_depth: int = 2,
    config_snapshot: Mapping[str, str] | None = None,
) -> tuple[EnsembleBundle, dict[str, GridSearchResult]]:
    """Grid-search every family, then refit all five on the full training set."""
    grids = DEFAULT_GRIDS if grids is None else grids
    config = config or TrainConfig()
    missing = [f for f in FAMILIES if f not in grids]
    if missing:
        raise ConfigError(f"grids missing for families: {', '.join(missing)}")

    folds = plan_folds(train, config.k_folds, derive_seed(seed, "folds"), config.stratified)
    searches = {}
    for family in FAMILIES:
        searches[family] = grid_search(
            family, grids[family], train, folds, config.pipeline, seed=derive_seed(seed, "model", family)
        )

    scaler = fit_scaler(train.X, eps=config.pipeline.scaler_eps)
    Z = apply_scaler(scaler, train.X)
    pca_targets = {searches[f].best_params["pca"] for f in FAMILIES} - {None}
    pca = fit_pca(Z, pca_targets.pop()) if pca_targets else None

    members = []
    for family in FAMILIES:
        best = searches[family].best_params
        use_pca = best["pca"] is not None
        params = _model_params(best)
        family_seed = derive_seed(seed, "model", family)
        inputs = pca.transform(Z) if use_pca else Z
        model = fit_model(ClassifierSpec(family, params, family_seed), inputs, train.y)
        members.append(FamilyModel(family, params, family_seed, use_pca, model))

    bundle = EnsembleBundle(
        scaler=scaler,
        pca=pca,
        members=members,
        attributes=list(attributes),
        profiles=dict(profiles or {}),
        fallback_depth=fallback_depth,
        seed=seed,
        config=dict(config_snapshot or {}),
        grid_results=[searches[f].summary() for f in FAMILIES],
    )
    bundle.check()
    return bundle, searches
