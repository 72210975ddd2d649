"""Majority-vote inference over the five fitted families."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .features import pair_vector, resolve_profile
from .training import EnsembleBundle


@dataclass(frozen=True)
class PredictionResult:
    team_a: str
    team_b: str
    winner: str
    win_probability: float
    votes: dict[str, str]
    per_family_proba: dict[str, tuple[float, float]]

    @property
    def loser(self) -> str:
        return self.team_b if self.winner == self.team_a else self.team_a

    def vote_count(self, team: str) -> int:
        return sum(1 for v in self.votes.values() if v == team)

    def as_record(self) -> dict:
        record = {
            "team_a": self.team_a,
            "team_b": self.team_b,
            "winner": self.winner,
            "win_probability": self.win_probability,
            "votes_for_winner": self.vote_count(self.winner),
        }
        for family, (pa, pb) in self.per_family_proba.items():
            record[f"{family}.p_a"] = pa
            record[f"{family}.p_b"] = pb
            record[f"{family}.vote"] = self.votes[family]
        return record


def vote(first: str, second: str, p_first: dict[str, float]) -> PredictionResult:
    """Hard majority vote given each family's P(first wins).

    A family at exactly 0.5 votes for the lexicographically smaller name, so
    the outcome never depends on argument order.
    """
    tie_pick = min(first, second)
    votes = {}
    for family, p in p_first.items():
        if p > 0.5:
            votes[family] = first
        elif p < 0.5:
            votes[family] = second
        else:
            votes[family] = tie_pick
    n_first = sum(1 for v in votes.values() if v == first)
    n_second = len(votes) - n_first
    if n_first == n_second:
        winner = tie_pick
    else:
        winner = first if n_first > n_second else second
    side = [p_first[f] if winner == first else 1.0 - p_first[f] for f, v in votes.items() if v == winner]
    win_probability = math.fsum(side) / len(side)
    return PredictionResult(
        first,
        second,
        winner,
        win_probability,
        votes,
        {f: (p, 1.0 - p) for f, p in p_first.items()},
    )


def predict_match(bundle: EnsembleBundle, team_a: str, team_b: str, year: int) -> PredictionResult:
    """Predict the winner of ``team_a`` vs ``team_b`` using ``year`` profiles.

    Every family scores both orientations of the pairing and its P(A) is the
    average of the two. Computation always runs in sorted-name orientation,
    so swapping the arguments yields bit-identical numbers.
    """
    if team_a == team_b:
        raise ValueError(f"a team cannot play itself ({team_a!r})")
    first, second = sorted((team_a, team_b))
    p1 = resolve_profile(bundle.profiles, first, year, bundle.fallback_depth)
    p2 = resolve_profile(bundle.profiles, second, year, bundle.fallback_depth)
    X = np.vstack([pair_vector(p1, p2), pair_vector(p2, p1)])
    p_first = {}
    for family, proba in bundle.family_proba(X).items():
        p_first[family] = float((proba[0, 0] + proba[1, 1]) / 2.0)
    result = vote(first, second, p_first)
    if first == team_a:
        return result
    return PredictionResult(
        team_a,
        team_b,
        result.winner,
        result.win_probability,
        result.votes,
        {f: (pb, pa) for f, (pa, pb) in result.per_family_proba.items()},
    )
