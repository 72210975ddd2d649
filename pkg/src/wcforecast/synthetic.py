"""Planted-strength synthetic data with a known ground truth.

Each (team, year) has a latent strength that drifts year to year as an AR(1)
process. Player attributes are strength times a per-attribute loading plus
noise; match winners are drawn with P(home wins) = sigmoid(sharpness *
(s_home - s_away)). Some matches are draws regardless of strength.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import Context, MatchRecord, PlayerRecord

WC2022_TEAMS = (
    "Qatar", "Ecuador", "Senegal", "Netherlands", "England", "Iran", "United States", "Wales",
    "Argentina", "Saudi Arabia", "Mexico", "Poland", "France", "Australia", "Denmark", "Tunisia",
    "Spain", "Costa Rica", "Germany", "Japan", "Belgium", "Canada", "Morocco", "Croatia",
    "Brazil", "Serbia", "Switzerland", "Cameroon", "Portugal", "Ghana", "Uruguay", "South Korea",
)

# name -> (mean, loading on strength, player noise sd)
OUTFIELD_ATTRIBUTES = {
    "finishing": (62.0, 7.0, 9.0),
    "passing": (65.0, 6.0, 8.0),
    "dribbling": (64.0, 6.5, 9.0),
    "tackling": (60.0, 5.5, 10.0),
    "positioning": (63.0, 6.0, 9.0),
    "stamina": (70.0, 4.0, 8.0),
    "reactions": (66.0, 6.5, 7.0),
}
GK_ATTRIBUTE = "gk_reflexes"
DUPLICATE_OF = ("short_passing", "passing")
CONTEXTS = (("Friendly", 0.5), ("FIFA World Cup", 0.15), ("UEFA Euro", 0.15), ("FIFA World Cup qualification", 0.2))


@dataclass
class SyntheticWorld:
    players: list[PlayerRecord]
    matches: list[MatchRecord]
    strengths: dict[tuple[str, int], float]
    attributes: list[str]

    def stronger(self, a: str, b: str, year: int) -> str:
        return a if self.strengths[(a, year)] >= self.strengths[(b, year)] else b


def generate_world(
    seed: int = 0,
    teams: Sequence[str] = WC2022_TEAMS,
    years: Sequence[int] = tuple(range(2015, 2024)),
    matches_per_year: int = 130,
    roster_size: int = 23,
    persistence: float = 0.6,
    sharpness: float = 3.0,
    draw_rate: float = 0.1,
    missing_rate: float = 0.02,
    n_goalkeepers: int = 3,
) -> SyntheticWorld:
    rng = np.random.default_rng(seed)
    teams = list(teams)
    years = list(years)
    strengths = {}
    current = rng.normal(size=len(teams))
    for y in years:
        for t, s in zip(teams, current):
            strengths[(t, y)] = float(s)
        current = persistence * current + math.sqrt(1 - persistence**2) * rng.normal(size=len(teams))

    players = []
    for y in years:
        for t in teams:
            s = strengths[(t, y)]
            for i in range(roster_size):
                attrs = {}
                for name, (mean, load, sd) in OUTFIELD_ATTRIBUTES.items():
                    attrs[name] = round(mean + load * s + sd * rng.normal(), 2)
                attrs[DUPLICATE_OF[0]] = round(attrs[DUPLICATE_OF[1]] + rng.normal(scale=1.0), 2)
                if i < n_goalkeepers:
                    attrs[GK_ATTRIBUTE] = round(68.0 + 5.0 * s + 8.0 * rng.normal(), 2)
                for name in list(attrs):
                    if rng.random() < missing_rate:
                        del attrs[name]
                players.append(PlayerRecord(f"{t[:3].upper()}{y}-{i:02d}", t, y, attrs))

    ctx_names = [c for c, _ in CONTEXTS]
    ctx_p = np.array([p for _, p in CONTEXTS])
    ctx_map = {"Friendly": Context.FRIENDLY, "FIFA World Cup": Context.WORLD_CUP,
               "UEFA Euro": Context.CONTINENTAL, "FIFA World Cup qualification": Context.OTHER}
    matches = []
    for y in years:
        days = np.sort(rng.integers(0, 365, matches_per_year))
        for i, day in enumerate(days):
            h, a = rng.choice(len(teams), size=2, replace=False)
            home, away = teams[h], teams[a]
            p_home = 1.0 / (1.0 + math.exp(-sharpness * (strengths[(home, y)] - strengths[(away, y)])))
            loser_goals = int(rng.poisson(0.7))
            if rng.random() < draw_rate:
                hg = ag = loser_goals
            elif rng.random() < p_home:
                hg, ag = loser_goals + 1 + int(rng.poisson(0.8)), loser_goals
            else:
                hg, ag = loser_goals, loser_goals + 1 + int(rng.poisson(0.8))
            ctx = ctx_names[int(rng.choice(len(ctx_names), p=ctx_p))]
            date = dt.date(y, 1, 1) + dt.timedelta(days=int(day))
            matches.append(MatchRecord(f"S{y}-{i:03d}", date, home, away, hg, ag, ctx_map[ctx]))

    attributes = list(OUTFIELD_ATTRIBUTES) + [DUPLICATE_OF[0], GK_ATTRIBUTE]
    return SyntheticWorld(players, matches, strengths, attributes)


_CONTEXT_LABEL = {
    Context.FRIENDLY: "Friendly",
    Context.WORLD_CUP: "FIFA World Cup",
    Context.CONTINENTAL: "UEFA Euro",
    Context.OTHER: "FIFA World Cup qualification",
}


def write_players_csv(players: Sequence[PlayerRecord], attributes: Sequence[str], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["player_id", "team", "year", *attributes])
        for p in players:
            w.writerow([p.player_id, p.team, p.year, *(p.attributes.get(a, "N/A") for a in attributes)])
    return path


def write_matches_csv(matches: Sequence[MatchRecord], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["match_id", "date", "home_team", "away_team", "home_goals", "away_goals", "context"])
        for m in matches:
            w.writerow([m.match_id, m.date.isoformat(), m.home_team, m.away_team, m.home_goals,
                        m.away_goals, _CONTEXT_LABEL[m.context]])
    return path
