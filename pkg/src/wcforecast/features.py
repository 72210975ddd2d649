"""Attribute selection, labeled example assembly, standardization and PCA."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dataset import MatchRecord, PlayerRecord, TeamProfile, attribute_order
from .errors import ConfigError, ProfileLookupError

log = logging.getLogger(__name__)

TEAM_A_WINS = 1
TEAM_B_WINS = 0

DEFAULT_SCALER_EPS = 1e-8


def select_attributes(
    players: Sequence[PlayerRecord],
    completeness_min: float = 0.5,
    corr_max: float = 0.95,
    relevant: Sequence[str] | None = None,
    declared: Sequence[str] | None = None,
) -> list[str]:
    """Keep relevant, sufficiently complete, non-redundant attributes.

    ``relevant`` is the allow-list of offensive/defensive/overall attributes;
    when omitted, every attribute seen is considered. ``declared`` fixes the
    attribute order (normally the file's column order; first-seen order
    otherwise). Redundancy is pruned greedily in that order: an attribute
    is dropped if its absolute Pearson correlation (over players having both
    values) with an already kept attribute exceeds ``corr_max``.
    """
    if not 0 < completeness_min <= 1:
        raise ValueError("completeness_min must be in (0, 1]")
    if not 0 < corr_max <= 1:
        raise ValueError("corr_max must be in (0, 1]")
    if not players:
        raise ConfigError("no players to select attributes from")

    names = list(declared) if declared is not None else attribute_order(players)
    if relevant is not None:
        allowed = set(relevant)
        names = [n for n in names if n in allowed]

    n = len(players)
    values = np.full((n, len(names)), np.nan)
    for i, p in enumerate(players):
        for j, name in enumerate(names):
            if name in p.attributes:
                values[i, j] = p.attributes[name]
    present = ~np.isnan(values)

    complete = [j for j in range(len(names)) if present[:, j].sum() >= completeness_min * n]
    kept: list[int] = []
    for j in complete:
        if all(abs(_pairwise_corr(values[:, j], values[:, k])) <= corr_max for k in kept):
            kept.append(j)
        else:
            log.info("attribute %r dropped as redundant", names[j])
    if not kept:
        raise ConfigError(
            f"no attributes survive selection (completeness_min={completeness_min}, corr_max={corr_max})"
        )
    return [names[j] for j in kept]


def _pairwise_corr(a, b) -> float:
    mask = ~(np.isnan(a) | np.isnan(b))
    if mask.sum() < 2:
        return 0.0
    a, b = a[mask] - a[mask].mean(), b[mask] - b[mask].mean()
    denom = np.sqrt((a @ a) * (b @ b))
    # Constant columns have undefined correlation; treat as not redundant.
    return float(a @ b / denom) if denom > 0 else 0.0


@dataclass
class ExampleSet:
    """Labeled rows; each decisive match contributes both orientations."""

    X: np.ndarray
    y: np.ndarray
    feature_names: list[str]
    match_ids: np.ndarray
    swapped: np.ndarray
    dates: np.ndarray = field(default=None)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.match_ids = np.asarray(self.match_ids, dtype=object)
        self.swapped = np.asarray(self.swapped, dtype=bool)
        if self.dates is None:
            self.dates = np.full(len(self.y), np.datetime64("NaT"), dtype="datetime64[D]")
        self.dates = np.asarray(self.dates, dtype="datetime64[D]")
        if self.X.ndim != 2 or len(self.X) != len(self.y):
            raise ValueError("X must be 2-D with one row per label")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("example matrix contains non-finite values")

    def __len__(self):
        return len(self.y)

    def subset(self, rows) -> "ExampleSet":
        rows = np.asarray(rows)
        return ExampleSet(
            self.X[rows], self.y[rows], list(self.feature_names),
            self.match_ids[rows], self.swapped[rows], self.dates[rows],
        )

    def match_groups(self) -> tuple[list[str], np.ndarray]:
        """Unique match ids (first-seen order) and each row's group index."""
        order = {}
        inverse = np.empty(len(self.y), dtype=np.int64)
        for i, m in enumerate(self.match_ids):
            inverse[i] = order.setdefault(m, len(order))
        return list(order), inverse


@dataclass
class SkipReport:
    draws: int = 0
    unresolved: list[tuple[str, str]] = field(default_factory=list)


def resolve_profile(
    profiles: Mapping[tuple[str, int], TeamProfile], team: str, year: int, fallback_depth: int = 2
) -> TeamProfile:
    """The profile for ``year``, else the most recent of the previous ``fallback_depth`` years."""
    for y in range(year, year - fallback_depth - 1, -1):
        prof = profiles.get((team, y))
        if prof is not None:
            return prof
    raise ProfileLookupError(f"no profile for {team!r} in {year} (fallback depth {fallback_depth})")


def pair_vector(a: TeamProfile, b: TeamProfile) -> np.ndarray:
    return np.concatenate([np.asarray(a.features, dtype=float), np.asarray(b.features, dtype=float)])


def assemble_examples(
    matches: Sequence[MatchRecord],
    profiles: Mapping[tuple[str, int], TeamProfile],
    year_fallback_depth: int = 2,
    attribute_names: Sequence[str] | None = None,
) -> tuple[ExampleSet, SkipReport]:
    if not profiles:
        raise ValueError("profiles map is empty")
    width = len(next(iter(profiles.values())).features)
    if attribute_names is None:
        attribute_names = [f"f{i}" for i in range(width)]
    names = [f"a_{n}" for n in attribute_names] + [f"b_{n}" for n in attribute_names]

    rows, labels, ids, swapped, dates = [], [], [], [], []
    skips = SkipReport()
    for m in matches:
        if m.net_score == 0:
            skips.draws += 1
            continue
        try:
            home = resolve_profile(profiles, m.home_team, m.year, year_fallback_depth)
            away = resolve_profile(profiles, m.away_team, m.year, year_fallback_depth)
        except ProfileLookupError as exc:
            skips.unresolved.append((m.match_id, str(exc)))
            continue
        label = TEAM_A_WINS if m.net_score > 0 else TEAM_B_WINS
        day = np.datetime64(m.date, "D")
        rows += [pair_vector(home, away), pair_vector(away, home)]
        labels += [label, 1 - label]
        ids += [m.match_id, m.match_id]
        swapped += [False, True]
        dates += [day, day]
    if skips.unresolved:
        log.info("%d matches skipped: unresolvable team profile", len(skips.unresolved))
    X = np.array(rows, dtype=float).reshape(len(rows), 2 * width)
    return ExampleSet(X, labels, names, ids, swapped, np.array(dates, dtype="datetime64[D]")), skips


@dataclass(frozen=True)
class Scaler:
    means: np.ndarray
    stds: np.ndarray
    floored: tuple[int, ...] = ()

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.means) / self.stds


def fit_scaler(X, eps: float = DEFAULT_SCALER_EPS) -> Scaler:
    """Per-column z-score parameters with the population (1/n) standard deviation."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("fit_scaler needs at least 2 rows")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    low = np.flatnonzero(stds < eps)
    if low.size:
        log.info("scaler: %d near-constant column(s) floored: %s", low.size, low.tolist())
    stds = np.where(stds < eps, eps, stds)
    return Scaler(means, stds, tuple(int(i) for i in low))


def apply_scaler(scaler: Scaler, X) -> np.ndarray:
    return scaler.transform(X)


@dataclass(frozen=True)
class PcaModel:
    components: np.ndarray
    explained_variance: np.ndarray
    center: np.ndarray
    all_variances: np.ndarray

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def total_variance(self) -> float:
        return float(self.all_variances.sum())

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.center) @ self.components.T

    def inverse_transform(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=float) @ self.components + self.center


def fit_pca(X, variance_target: float = 0.95) -> PcaModel:
    """Eigendecomposition of the sample covariance.

    Keeps the fewest leading components whose cumulative share of the total
    variance reaches ``variance_target``. Each component is sign-normalized
    so its largest-magnitude entry is positive.
    """
    if not 0 < variance_target <= 1:
        raise ValueError("variance_target must be in (0, 1]")
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if n < 2:
        raise ValueError("fit_pca needs at least 2 rows")
    center = X.mean(axis=0)
    Xc = X - center
    cov = Xc.T @ Xc / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1]
    evals = np.clip(evals[order], 0.0, None)
    vecs = evecs[:, order].T
    for row in vecs:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    total = evals.sum()
    if total <= 0:
        k = 1
    else:
        frac = np.cumsum(evals) / total
        k = int(np.searchsorted(frac, variance_target - 1e-12) + 1)
        k = min(k, d)
    return PcaModel(vecs[:k].copy(), evals[:k].copy(), center, evals)


def transform(pca: PcaModel, X) -> np.ndarray:
    return pca.transform(X)
