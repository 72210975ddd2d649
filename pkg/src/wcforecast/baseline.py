"""Head-to-head baseline with a Weighted Win Ratio fallback.

With at least ``m`` prior meetings, the side with more head-to-head wins is
picked. Otherwise each team's weighted win ratio::

    WWR = v/(v+m) * R + m/(v+m) * C

decides, where v is the team's match count, R its win ratio (wins / v) and
C the win ratio over all team appearances. Draws count as appearances but
never as wins. Only matches strictly before the cutoff date are used.
"""
from __future__ import annotations

import datetime as dt
from collections import Counter
from dataclasses import dataclass
from typing import Collection, Iterable, Sequence

from .dataset import Context, MatchRecord

DEFAULT_MATCH_THRESHOLD = 5
THRESHOLD_PERCENTILE = 75


@dataclass(frozen=True)
class HeadToHead:
    team_x: str
    team_y: str
    matches_played: int
    wins_x: int
    wins_y: int
    draws: int


@dataclass(frozen=True)
class WwrInputs:
    v: float
    R: float
    m: float
    C: float

    def __post_init__(self):
        if self.v < 0:
            raise ValueError("v (matches played) must be non-negative")
        if self.m <= 0:
            raise ValueError("m must be positive")
        if not 0.0 <= self.R <= 1.0:
            raise ValueError("R must lie in [0, 1]")
        if not 0.0 <= self.C <= 1.0:
            raise ValueError("C must lie in [0, 1]")


def wwr(inputs: WwrInputs) -> float:
    v, m = inputs.v, inputs.m
    return (v / (v + m)) * inputs.R + (m / (v + m)) * inputs.C


def filter_history(
    history: Iterable[MatchRecord],
    cutoff: dt.date | None,
    contexts: Collection[Context] | None = None,
) -> list[MatchRecord]:
    """Matches strictly before ``cutoff`` (all if None), optionally limited to some contexts."""
    return [
        h for h in history
        if (cutoff is None or h.date < cutoff) and (contexts is None or h.context in contexts)
    ]


def head_to_head(
    history: Sequence[MatchRecord],
    x: str,
    y: str,
    cutoff: dt.date | None,
    contexts: Collection[Context] | None = None,
) -> HeadToHead:
    played = wins_x = wins_y = draws = 0
    pair = {x, y}
    for h in filter_history(history, cutoff, contexts):
        if {h.home_team, h.away_team} != pair:
            continue
        played += 1
        if h.net_score == 0:
            draws += 1
        elif (h.home_team if h.net_score > 0 else h.away_team) == x:
            wins_x += 1
        else:
            wins_y += 1
    return HeadToHead(x, y, played, wins_x, wins_y, draws)


def compute_match_threshold(
    history: Sequence[MatchRecord], percentile: int = THRESHOLD_PERCENTILE
) -> int:
    """Nearest-rank percentile of meeting counts over every pair that has met.

    Returns the default of 5 when there is no history.
    """
    counts = sorted(Counter(frozenset((h.home_team, h.away_team)) for h in history).values())
    if not counts:
        return DEFAULT_MATCH_THRESHOLD
    rank = -(-percentile * len(counts) // 100)  # ceil, 1-based
    return counts[max(rank, 1) - 1]


@dataclass(frozen=True)
class TeamRecord:
    played: int
    wins: int

    @property
    def win_ratio(self) -> float:
        return self.wins / self.played if self.played else 0.0


def team_records(history: Iterable[MatchRecord]) -> tuple[dict[str, TeamRecord], float]:
    """Per-team (played, wins) plus the global ratio C = decisive wins / appearances."""
    played = Counter()
    wins = Counter()
    for h in history:
        played[h.home_team] += 1
        played[h.away_team] += 1
        if h.net_score > 0:
            wins[h.home_team] += 1
        elif h.net_score < 0:
            wins[h.away_team] += 1
    appearances = sum(played.values())
    C = sum(wins.values()) / appearances if appearances else 0.0
    return {t: TeamRecord(played[t], wins[t]) for t in played}, C


def team_wwr(records: dict[str, TeamRecord], C: float, team: str, m: float) -> float:
    rec = records.get(team, TeamRecord(0, 0))
    return wwr(WwrInputs(rec.played, rec.win_ratio, m, C))


def baseline_predict(
    history: Sequence[MatchRecord],
    x: str,
    y: str,
    cutoff: dt.date | None,
    m: int | None = None,
    contexts: Collection[Context] | None = None,
) -> str:
    """Baseline winner pick for ``x`` vs ``y``; symmetric in its two team arguments.

    ``m`` defaults to the percentile threshold computed on the usable history.
    Equal head-to-head wins fall through to WWR; equal WWR goes to the
    lexicographically smaller name.
    """
    if x == y:
        raise ValueError(f"a team cannot play itself ({x!r})")
    a, b = sorted((x, y))
    past = filter_history(history, cutoff, contexts)
    if m is None:
        m = compute_match_threshold(past)
    h2h = head_to_head(past, a, b, None)
    if h2h.matches_played >= m and h2h.wins_x != h2h.wins_y:
        return a if h2h.wins_x > h2h.wins_y else b
    records, C = team_records(past)
    wa = team_wwr(records, C, a, m)
    wb = team_wwr(records, C, b, m)
    if wa == wb:
        return a
    return a if wa > wb else b
