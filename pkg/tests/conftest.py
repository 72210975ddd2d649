from __future__ import annotations

import datetime as dt
import itertools

import numpy as np
import pytest

from wcforecast.dataset import Context, MatchRecord, build_team_profiles
from wcforecast.features import ExampleSet, assemble_examples, select_attributes
from wcforecast.synthetic import WC2022_TEAMS, generate_world
from wcforecast.training import train_ensemble

SMALL_GRIDS = {
    "logistic": {"l2": [0.1]},
    "random_forest": {"n_trees": [15], "max_depth": [3]},
    "gradient_boost": {"n_rounds": [15], "learning_rate": [0.1], "max_depth": [2]},
    "adaboost": {"n_rounds": [15]},
    "knn": {"k": [5]},
}

_ids = itertools.count()


def mk(home, away, hg, ag, date="2020-01-01", context=Context.FRIENDLY, match_id=None, winner=None):
    if isinstance(date, str):
        date = dt.date.fromisoformat(date)
    return MatchRecord(match_id or f"m{next(_ids)}", date, home, away, hg, ag, context, winner=winner)


def random_history(rng, teams, n, start=dt.date(2018, 1, 1)):
    out = []
    for i in range(n):
        a, b = rng.choice(len(teams), size=2, replace=False)
        hg, ag = int(rng.integers(0, 4)), int(rng.integers(0, 4))
        out.append(mk(teams[a], teams[b], hg, ag, start + dt.timedelta(days=int(rng.integers(0, 1500))), match_id=f"h{i}"))
    return out


def build_small(seed=1, teams=8, years=(2020, 2021, 2022), per_year=60):
    world = generate_world(seed, teams=WC2022_TEAMS[:teams], years=years, matches_per_year=per_year)
    attrs = select_attributes(world.players, declared=world.attributes)
    profiles = build_team_profiles(world.players, attrs)
    examples, _ = assemble_examples(world.matches, profiles, attribute_names=attrs)
    return world, attrs, profiles, examples


@pytest.fixture(scope="session")
def small_world():
    return build_small()


@pytest.fixture(scope="session")
def small_bundle(small_world):
    world, attrs, profiles, examples = small_world
    bundle, searches = train_ensemble(
        examples, SMALL_GRIDS, seed=7, profiles=profiles, attributes=attrs
    )
    return bundle


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_examples(rng, n_matches=None, d=3):
    """A small ExampleSet of symmetric pairs with random labels and dates."""
    n = int(n_matches or rng.integers(10, 60))
    rows, ys, ids, swapped, dates = [], [], [], [], []
    for i in range(n):
        a, b = rng.normal(size=d), rng.normal(size=d)
        label = int(rng.integers(0, 2))
        day = np.datetime64("2019-01-01") + int(rng.integers(0, 800))
        rows += [np.concatenate([a, b]), np.concatenate([b, a])]
        ys += [label, 1 - label]
        ids += [f"g{i}", f"g{i}"]
        swapped += [False, True]
        dates += [day, day]
    return ExampleSet(np.array(rows), ys, [f"f{j}" for j in range(2 * d)], ids, swapped, dates)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
