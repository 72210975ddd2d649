"""Group round-robins and a knockout bracket driven by pairwise ensemble predictions."""
from __future__ import annotations

import configparser
import itertools
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .ensemble import PredictionResult, predict_match
from .errors import ConfigError, InvariantError
from .features import resolve_profile

_SLOT = re.compile(r"^\s*(\d+)\s*([A-Za-z0-9_]+)\s*$")


@dataclass(frozen=True)
class BracketSpec:
    """Groups in display order and the first knockout round in bracket order.

    Each first-round tie is a pair of ``(rank, group)`` slots; later rounds
    pair the winners of adjacent ties.
    """

    year: int
    groups: dict[str, tuple[str, ...]]
    first_round: tuple[tuple[tuple[int, str], tuple[int, str]], ...]
    third_place: bool = False

    def __post_init__(self):
        teams = [t for g in self.groups.values() for t in g]
        if len(set(teams)) != len(teams):
            dupes = sorted({t for t in teams if teams.count(t) > 1})
            raise ConfigError(f"teams listed more than once: {', '.join(dupes)}")
        for name, members in self.groups.items():
            if len(members) < 2:
                raise ConfigError(f"group {name} needs at least 2 teams")
        n_ties = len(self.first_round)
        if n_ties < 1 or n_ties & (n_ties - 1):
            raise ConfigError(f"first knockout round needs a power-of-two number of ties, got {n_ties}")
        seen = set()
        for tie in self.first_round:
            for rank, group in tie:
                if group not in self.groups:
                    raise ConfigError(f"knockout slot references unknown group {group!r}")
                if not 1 <= rank <= len(self.groups[group]):
                    raise ConfigError(f"knockout slot {rank}{group}: group has {len(self.groups[group])} teams")
                if (rank, group) in seen:
                    raise ConfigError(f"knockout slot {rank}{group} used twice")
                seen.add((rank, group))
        if self.third_place and n_ties < 2:
            raise ConfigError("a third-place match needs semi-finals")

    @property
    def teams(self) -> list[str]:
        return [t for g in self.groups.values() for t in g]

    @property
    def expected_predictions(self) -> int:
        group_games = sum(math.comb(len(g), 2) for g in self.groups.values())
        knockout = 2 * len(self.first_round) - 1 + (1 if self.third_place else 0)
        return group_games + knockout


def _parse_slot(token: str) -> tuple[int, str]:
    m = _SLOT.match(token)
    if not m:
        raise ConfigError(f"bad knockout slot {token!r} (expected e.g. '1A')")
    return int(m.group(1)), m.group(2)


def parse_bracket(text: str) -> BracketSpec:
    """Parse an INI-style bracket file with ``[bracket]``, ``[groups]`` and ``[knockout]`` sections."""
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"bad bracket file: {exc}") from exc
    for section in ("bracket", "groups", "knockout"):
        if not parser.has_section(section):
            raise ConfigError(f"bracket file missing [{section}] section")
    try:
        year = parser.getint("bracket", "year")
        third = parser.getboolean("bracket", "third_place", fallback=False)
    except (ValueError, configparser.NoOptionError) as exc:
        raise ConfigError(f"bad [bracket] section: {exc}") from exc
    groups = {
        name: tuple(t.strip() for t in value.split(",") if t.strip())
        for name, value in parser.items("groups")
    }
    first_round = []
    for name, value in parser.items("knockout"):
        parts = [p for p in value.split(",")]
        if len(parts) != 2:
            raise ConfigError(f"knockout tie {name!r} needs two slots")
        first_round.append((_parse_slot(parts[0]), _parse_slot(parts[1])))
    return BracketSpec(year, groups, tuple(first_round), third)


def load_bracket(path: str | Path) -> BracketSpec:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"bracket file not found: {path}")
    return parse_bracket(path.read_text(encoding="utf-8"))


def bundled_bracket_path() -> Path:
    return Path(__file__).parent / "data" / "wc2022_bracket.ini"


@dataclass(frozen=True)
class Standing:
    team: str
    wins: int
    score: float


@dataclass(frozen=True)
class Tie:
    round_name: str
    index: int
    result: PredictionResult

    @property
    def winner(self) -> str:
        return self.result.winner


@dataclass
class SimulationResult:
    year: int
    standings: dict[str, list[Standing]]
    group_results: dict[str, list[PredictionResult]]
    rounds: list[list[Tie]]
    third_place: Tie | None = None
    champion: str = ""

    @property
    def n_predictions(self) -> int:
        group = sum(len(v) for v in self.group_results.values())
        knockout = sum(len(r) for r in self.rounds) + (1 if self.third_place else 0)
        return group + knockout

    def tree(self) -> dict:
        """Nested bracket rooted at the final; leaves are first-round ties."""

        def node(round_no, index):
            tie = self.rounds[round_no][index]
            out = {
                "round": tie.round_name,
                "team_a": tie.result.team_a,
                "team_b": tie.result.team_b,
                "winner": tie.winner,
                "win_probability": tie.result.win_probability,
                "votes_for_winner": tie.result.vote_count(tie.winner),
            }
            if round_no > 0:
                out["children"] = [node(round_no - 1, 2 * index), node(round_no - 1, 2 * index + 1)]
            return out

        return node(len(self.rounds) - 1, 0)

    def to_dict(self) -> dict:
        return {
            "format": "wcforecast-bracket/1",
            "year": self.year,
            "champion": self.champion,
            "n_predictions": self.n_predictions,
            "groups": {
                g: [{"team": s.team, "wins": s.wins, "score": s.score} for s in rows]
                for g, rows in self.standings.items()
            },
            "third_place": None if self.third_place is None else {
                "team_a": self.third_place.result.team_a,
                "team_b": self.third_place.result.team_b,
                "winner": self.third_place.winner,
                "win_probability": self.third_place.result.win_probability,
            },
            "bracket": self.tree(),
        }


def round_name(n_teams: int) -> str:
    return {2: "Final", 4: "Semi-finals", 8: "Quarter-finals"}.get(n_teams, f"Round of {n_teams}")


Predictor = Callable[[object, str, str, int], PredictionResult]


def play_group(bundle, teams, year, predictor: Predictor = predict_match):
    """Round-robin in sorted-name pairing order; standings by wins, then summed probability, then name."""
    wins = {t: 0 for t in teams}
    score = {t: 0.0 for t in teams}
    results = []
    for a, b in itertools.combinations(sorted(teams), 2):
        res = predictor(bundle, a, b, year)
        if res.winner not in (a, b):
            raise InvariantError(f"prediction for {a} vs {b} named {res.winner!r}")
        results.append(res)
        wins[res.winner] += 1
        score[res.winner] += res.win_probability
        score[res.loser] += 1.0 - res.win_probability
    table = sorted((Standing(t, wins[t], score[t]) for t in teams), key=lambda s: (-s.wins, -s.score, s.team))
    return table, results


def simulate(bundle, spec: BracketSpec, predictor: Predictor = predict_match) -> SimulationResult:
    """Play every group, seed the bracket from the standings, and run knockouts to a champion.

    When a real bundle is given, every team's profile is resolved before any
    tie is played so a missing team fails fast.
    """
    profiles = getattr(bundle, "profiles", None)
    if profiles is not None:
        for team in spec.teams:
            resolve_profile(profiles, team, spec.year, bundle.fallback_depth)

    standings, group_results = {}, {}
    for name, teams in spec.groups.items():
        standings[name], group_results[name] = play_group(bundle, teams, spec.year, predictor)

    entrants = []
    for slot_a, slot_b in spec.first_round:
        entrants.append(tuple(standings[g][rank - 1].team for rank, g in (slot_a, slot_b)))

    rounds: list[list[Tie]] = []
    pairs = entrants
    semifinal_losers = []
    while pairs:
        n_teams = 2 * len(pairs)
        name = round_name(n_teams)
        flat = [t for p in pairs for t in p]
        if len(set(flat)) != len(flat):
            raise InvariantError(f"{name}: a team appears twice")
        ties = [Tie(name, i, predictor(bundle, a, b, spec.year)) for i, (a, b) in enumerate(pairs)]
        rounds.append(ties)
        if n_teams == 4:
            semifinal_losers = [t.result.loser for t in ties]
        winners = [t.winner for t in ties]
        pairs = [(winners[i], winners[i + 1]) for i in range(0, len(winners) - 1, 2)] if len(winners) > 1 else []

    third = None
    if spec.third_place:
        a, b = semifinal_losers
        third = Tie("Third place", 0, predictor(bundle, a, b, spec.year))
    result = SimulationResult(spec.year, standings, group_results, rounds, third, rounds[-1][0].winner)
    if result.n_predictions != spec.expected_predictions:
        raise InvariantError(
            f"simulation made {result.n_predictions} predictions, expected {spec.expected_predictions}"
        )
    return result


def render_bracket(result: SimulationResult) -> str:
    lines = [f"Tournament simulation ({result.year})", ""]
    for name, table in result.standings.items():
        lines.append(f"Group {name}")
        for pos, s in enumerate(table, 1):
            lines.append(f"  {pos}. {s.team:<24} wins {s.wins}  score {s.score:.3f}")
    for ties in result.rounds:
        lines += ["", ties[0].round_name]
        for tie in ties:
            r = tie.result
            lines.append(
                f"  {r.team_a} vs {r.team_b}: {tie.winner} "
                f"(p={r.win_probability:.3f}, {r.vote_count(tie.winner)}/{len(r.votes)} votes)"
            )
    if result.third_place:
        r = result.third_place.result
        lines += ["", "Third place", f"  {r.team_a} vs {r.team_b}: {r.winner} (p={r.win_probability:.3f})"]
    lines += ["", f"Champion: {result.champion}"]
    return "\n".join(lines) + "\n"
