"""Ingestion of player and match files into typed records and team profiles."""
from __future__ import annotations

import csv
import datetime as dt
import enum
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import IngestionError

log = logging.getLogger(__name__)

DEFAULT_YEAR_RANGE = (2015, 2023)
MISSING_TOKENS = frozenset({"", "n/a", "na", "nan", "null", "none", "-", "?"})

PLAYER_REQUIRED = ("player_id", "team", "year")
MATCH_REQUIRED = ("date", "home_team", "away_team", "home_goals", "away_goals", "context")
MATCH_OPTIONAL = ("match_id", "stage", "winner", "net_score")


class Context(str, enum.Enum):
    WORLD_CUP = "world_cup"
    CONTINENTAL = "continental"
    FRIENDLY = "friendly"
    OTHER = "other"


class Stage(str, enum.Enum):
    GROUP = "group"
    KNOCKOUT = "knockout"
    UNKNOWN = "unknown"


DEFAULT_CONTEXT_TABLE = {
    "world_cup": Context.WORLD_CUP,
    "fifa world cup": Context.WORLD_CUP,
    "world cup": Context.WORLD_CUP,
    "continental": Context.CONTINENTAL,
    "uefa euro": Context.CONTINENTAL,
    "euro": Context.CONTINENTAL,
    "copa america": Context.CONTINENTAL,
    "copa américa": Context.CONTINENTAL,
    "african cup of nations": Context.CONTINENTAL,
    "africa cup of nations": Context.CONTINENTAL,
    "afc asian cup": Context.CONTINENTAL,
    "gold cup": Context.CONTINENTAL,
    "concacaf gold cup": Context.CONTINENTAL,
    "ofc nations cup": Context.CONTINENTAL,
    "friendly": Context.FRIENDLY,
    "other": Context.OTHER,
    "fifa world cup qualification": Context.OTHER,
    "uefa nations league": Context.OTHER,
}

STAGE_TABLE = {
    "group": Stage.GROUP,
    "group stage": Stage.GROUP,
    "knockout": Stage.KNOCKOUT,
    "round of 16": Stage.KNOCKOUT,
    "quarter-final": Stage.KNOCKOUT,
    "quarter-finals": Stage.KNOCKOUT,
    "semi-final": Stage.KNOCKOUT,
    "semi-finals": Stage.KNOCKOUT,
    "third place": Stage.KNOCKOUT,
    "final": Stage.KNOCKOUT,
    "unknown": Stage.UNKNOWN,
}


@dataclass(frozen=True)
class PlayerRecord:
    player_id: str
    team: str
    year: int
    # Insertion-ordered; a missing attribute is simply absent.
    attributes: Mapping[str, float] = field(default_factory=dict, hash=False)


@dataclass(frozen=True)
class MatchRecord:
    match_id: str
    date: dt.date
    home_team: str
    away_team: str
    home_goals: int
    away_goals: int
    context: Context = Context.OTHER
    stage: Stage | None = None
    # Recorded winner for drawn knockout ties (after extra time / shootout).
    winner: str | None = None

    def __post_init__(self):
        if self.home_team == self.away_team:
            raise ValueError(f"match {self.match_id}: home and away team are both {self.home_team!r}")
        if self.home_goals < 0 or self.away_goals < 0:
            raise ValueError(f"match {self.match_id}: negative goals")

    @property
    def net_score(self) -> int:
        return self.home_goals - self.away_goals

    @property
    def total_goals(self) -> int:
        return self.home_goals + self.away_goals

    @property
    def year(self) -> int:
        return self.date.year

    def decisive_winner(self) -> str | None:
        """Winner by goals, else the recorded post-shootout winner, else None."""
        if self.net_score > 0:
            return self.home_team
        if self.net_score < 0:
            return self.away_team
        return self.winner


@dataclass(frozen=True)
class TeamProfile:
    team: str
    year: int
    features: tuple[float, ...]
    roster_size: int


@dataclass
class IngestReport:
    path: str
    accepted: int = 0
    rejected: list[tuple[int, str]] = field(default_factory=list)
    warnings: list[tuple[int, str]] = field(default_factory=list)
    # Attribute columns in file order (players files only).
    attributes: list[str] = field(default_factory=list)

    def reject(self, row: int, message: str) -> None:
        log.debug("%s row %d rejected: %s", self.path, row, message)
        self.rejected.append((row, message))

    def warn(self, row: int, message: str) -> None:
        log.warning("%s row %d: %s", self.path, row, message)
        self.warnings.append((row, message))

    def summary(self) -> str:
        text = f"{self.path}: {self.accepted} accepted, {len(self.rejected)} rejected"
        if self.warnings:
            text += f", {len(self.warnings)} warnings"
        return text


def load_aliases(path: str | Path) -> dict[str, str]:
    """Read a ``variant=canonical`` alias table. Blank lines and ``#`` comments are ignored."""
    aliases = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise IngestionError(f"{path}:{lineno}: expected 'variant=canonical'")
            variant, canonical = (part.strip() for part in line.split("=", 1))
            if not variant or not canonical:
                raise IngestionError(f"{path}:{lineno}: empty alias entry")
            aliases[variant] = canonical
    return aliases


def canonical_team(name: str, aliases: Mapping[str, str] | None) -> str:
    name = name.strip()
    if aliases:
        # Follow chains (A->B->C) but stop on cycles.
        seen = {name}
        while name in aliases:
            name = aliases[name]
            if name in seen:
                break
            seen.add(name)
    return name


def _open_table(path, delimiter):
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"file not found: {path}")
    fh = open(path, encoding="utf-8", newline="")
    if delimiter is None:
        sample = fh.read(4096)
        fh.seek(0)
        try:
            delimiter = csv.Sniffer().sniff(sample, delimiters=",;\t|").delimiter
        except csv.Error:
            delimiter = ","
    reader = csv.reader(fh, delimiter=delimiter)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        fh.close()
        raise IngestionError(f"{path}: missing header row") from None
    return fh, reader, header


def _column_index(header, schema, names, path, required=True):
    index = {}
    for name in names:
        source = schema.get(name, name)
        if source in header:
            index[name] = header.index(source)
        elif required:
            raise IngestionError(f"{path}: missing mandatory column {source!r}")
    return index


def _parse_float(cell: str) -> float | None:
    cell = cell.strip()
    if cell.lower() in MISSING_TOKENS:
        return None
    value = float(cell)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {cell!r}")
    return value


def load_players(
    path: str | Path,
    schema: Mapping[str, str] | None = None,
    *,
    attributes: Sequence[str] | None = None,
    aliases: Mapping[str, str] | None = None,
    year_range: tuple[int, int] = DEFAULT_YEAR_RANGE,
    delimiter: str | None = None,
) -> tuple[list[PlayerRecord], IngestReport]:
    """Load a delimiter-separated players file.

    ``schema`` maps the canonical names ``player_id``, ``team`` and ``year`` to
    source columns. Every other column is an attribute unless ``attributes``
    names them explicitly. Bad rows are rejected and listed in the report; a
    missing mandatory column raises :class:`IngestionError`.
    """
    schema = dict(schema or {})
    report = IngestReport(str(path))
    fh, reader, header = _open_table(path, delimiter)
    with fh:
        idx = _column_index(header, schema, PLAYER_REQUIRED, path)
        if attributes is None:
            used = set(idx.values())
            attr_cols = [(h, i) for i, h in enumerate(header) if i not in used]
        else:
            missing = [a for a in attributes if a not in header]
            if missing:
                raise IngestionError(f"{path}: missing attribute column {missing[0]!r}")
            attr_cols = [(a, header.index(a)) for a in attributes]
        if not attr_cols:
            raise IngestionError(f"{path}: no attribute columns")
        report.attributes = [name for name, _ in attr_cols]

        records = []
        seen = set()
        lo, hi = year_range
        for rowno, row in enumerate(reader, 2):
            if not any(cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                report.reject(rowno, f"expected {len(header)} cells, got {len(row)}")
                continue
            pid = row[idx["player_id"]].strip()
            team = canonical_team(row[idx["team"]], aliases)
            if not pid or not team:
                report.reject(rowno, "empty player_id or team")
                continue
            try:
                year = int(row[idx["year"]].strip())
            except ValueError:
                report.reject(rowno, f"unparsable year {row[idx['year']]!r}")
                continue
            if not lo <= year <= hi:
                report.reject(rowno, f"year {year} outside {lo}-{hi}")
                continue
            attrs = {}
            try:
                for name, col in attr_cols:
                    value = _parse_float(row[col])
                    if value is not None:
                        attrs[name] = value
            except ValueError:
                report.reject(rowno, f"unparsable numeric cell in column {name!r}: {row[col]!r}")
                continue
            key = (team, year, pid)
            if key in seen:
                report.reject(rowno, f"duplicate player {pid!r} for {team} {year}")
                continue
            seen.add(key)
            records.append(PlayerRecord(pid, team, year, attrs))
            report.accepted += 1
    return records, report


def _parse_goals(cell):
    value = int(cell.strip())
    if value < 0:
        raise ValueError("negative goals")
    return value


def load_matches(
    path: str | Path,
    schema: Mapping[str, str] | None = None,
    *,
    aliases: Mapping[str, str] | None = None,
    context_table: Mapping[str, Context] | None = None,
    delimiter: str | None = None,
) -> tuple[list[MatchRecord], IngestReport]:
    """Load a delimiter-separated matches file.

    Context strings are matched case-insensitively against ``context_table``;
    unknown strings map to ``Context.OTHER`` with a warning. ``net_score`` is
    derived from the goals; a source ``net_score`` column that disagrees
    rejects the row.
    """
    schema = dict(schema or {})
    table = {k.lower(): Context(v) for k, v in (context_table or DEFAULT_CONTEXT_TABLE).items()}
    report = IngestReport(str(path))
    fh, reader, header = _open_table(path, delimiter)
    with fh:
        idx = _column_index(header, schema, MATCH_REQUIRED, path)
        idx.update(_column_index(header, schema, MATCH_OPTIONAL, path, required=False))
        records = []
        for rowno, row in enumerate(reader, 2):
            if not any(cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                report.reject(rowno, f"expected {len(header)} cells, got {len(row)}")
                continue
            try:
                date = dt.date.fromisoformat(row[idx["date"]].strip())
            except ValueError:
                report.reject(rowno, f"unparsable date {row[idx['date']]!r}")
                continue
            try:
                hg = _parse_goals(row[idx["home_goals"]])
                ag = _parse_goals(row[idx["away_goals"]])
            except ValueError as exc:
                report.reject(rowno, f"bad goals: {exc}")
                continue
            if "net_score" in idx and row[idx["net_score"]].strip():
                try:
                    net = int(row[idx["net_score"]].strip())
                except ValueError:
                    net = None
                if net != hg - ag:
                    report.reject(rowno, f"net_score {row[idx['net_score']]!r} != {hg - ag}")
                    continue
            home = canonical_team(row[idx["home_team"]], aliases)
            away = canonical_team(row[idx["away_team"]], aliases)
            if not home or not away or home == away:
                report.reject(rowno, f"invalid team pair {home!r} vs {away!r}")
                continue
            raw_ctx = row[idx["context"]].strip()
            context = table.get(raw_ctx.lower())
            if context is None:
                report.warn(rowno, f"unknown context {raw_ctx!r} mapped to 'other'")
                context = Context.OTHER
            stage = None
            if "stage" in idx and row[idx["stage"]].strip():
                stage = STAGE_TABLE.get(row[idx["stage"]].strip().lower(), Stage.UNKNOWN)
            winner = None
            if "winner" in idx and row[idx["winner"]].strip():
                winner = canonical_team(row[idx["winner"]], aliases)
                if winner not in (home, away):
                    report.reject(rowno, f"winner {winner!r} is neither team")
                    continue
            match_id = row[idx["match_id"]].strip() if "match_id" in idx else ""
            records.append(
                MatchRecord(
                    match_id=match_id or f"row{rowno}",
                    date=date,
                    home_team=home,
                    away_team=away,
                    home_goals=hg,
                    away_goals=ag,
                    context=context,
                    stage=stage,
                    winner=winner,
                )
            )
            report.accepted += 1
    return records, report


def attribute_order(players: Iterable[PlayerRecord]) -> list[str]:
    """Attribute names in first-seen order across the records."""
    order = {}
    for p in players:
        for name in p.attributes:
            order.setdefault(name, None)
    return list(order)


def build_team_profiles(
    players: Sequence[PlayerRecord],
    retained: Sequence[str],
    imputation: str = "year_mean",
) -> dict[tuple[str, int], TeamProfile]:
    """Aggregate players into one profile per (team, year).

    Each feature is the mean of the roster's present values. An attribute
    missing for the whole roster takes the mean over every player of that
    year (falling back to all years if the year has no value at all).
    Sums use ``math.fsum`` so the result does not depend on roster order.
    """
    if not retained:
        raise ValueError("retained attribute list is empty")
    if imputation != "year_mean":
        raise ValueError(f"unsupported imputation policy {imputation!r}")

    rosters = defaultdict(list)
    by_year = defaultdict(lambda: defaultdict(list))
    overall = defaultdict(list)
    for p in players:
        rosters[(p.team, p.year)].append(p)
        for name in retained:
            if name in p.attributes:
                by_year[p.year][name].append(p.attributes[name])
                overall[name].append(p.attributes[name])

    def fill_value(year, name):
        values = by_year[year][name] or overall[name]
        if not values:
            raise ValueError(f"attribute {name!r} has no observed values")
        return math.fsum(values) / len(values)

    profiles = {}
    for key in sorted(rosters):
        roster = rosters[key]
        feats = []
        for name in retained:
            values = [p.attributes[name] for p in roster if name in p.attributes]
            if values:
                feats.append(math.fsum(values) / len(values))
            else:
                feats.append(fill_value(key[1], name))
        profiles[key] = TeamProfile(key[0], key[1], tuple(feats), len(roster))
    return profiles
