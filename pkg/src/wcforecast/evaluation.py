"""Ensemble vs baseline accuracy: overall, high/low-scoring buckets and challenging cases."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Callable, Collection, Sequence

from .baseline import baseline_predict, compute_match_threshold, filter_history
from .dataset import Context, MatchRecord
from .ensemble import PredictionResult, predict_match
from .errors import ProfileLookupError

log = logging.getLogger(__name__)

DEFAULT_GOAL_THRESHOLD = 4
LEDGER_COLUMNS = (
    "match_id", "date", "team_a", "team_b", "actual", "model_pick", "baseline_pick", "total_goals", "bucket",
)


def accuracy(predictions: Sequence[str], actuals: Sequence[str]) -> float:
    """Percentage of predictions equal to the actual winner."""
    if len(predictions) != len(actuals):
        raise ValueError("predictions and actuals differ in length")
    if not predictions:
        raise ValueError("accuracy of an empty prediction list is undefined")
    correct = sum(1 for p, a in zip(predictions, actuals) if p == a)
    return 100.0 * correct / len(predictions)


def format_percent(value: float | None) -> str:
    """Two decimals, half-up, with a percent sign; None renders as n/a."""
    if value is None:
        return "n/a"
    return f"{Decimal(value).quantize(Decimal('0.01'), rounding=ROUND_HALF_UP)}%"


@dataclass(frozen=True)
class LedgerRow:
    match_id: str
    date: str
    team_a: str
    team_b: str
    actual: str
    model_pick: str
    baseline_pick: str
    total_goals: int
    bucket: str = ""

    @property
    def model_correct(self) -> bool:
        return self.model_pick == self.actual

    @property
    def baseline_correct(self) -> bool:
        return self.baseline_pick == self.actual


def bucket_matches(matches: Sequence, goal_threshold: int) -> tuple[list, list]:
    """Split into (high, low): high means total goals >= ``goal_threshold``."""
    if goal_threshold < 0:
        raise ValueError("goal_threshold must be non-negative")
    high = [m for m in matches if m.total_goals >= goal_threshold]
    low = [m for m in matches if m.total_goals < goal_threshold]
    return high, low


def _acc_or_none(rows, attr):
    if not rows:
        return None
    return accuracy([getattr(r, attr) for r in rows], [r.actual for r in rows])


@dataclass
class EvaluationReport:
    n_matches: int
    goal_threshold: int
    overall_accuracy_model: float
    overall_accuracy_baseline: float
    high_count: int
    low_count: int
    high_scoring_accuracy_model: float | None
    high_scoring_accuracy_baseline: float | None
    low_scoring_accuracy_model: float | None
    low_scoring_accuracy_baseline: float | None
    challenging_case_count: int
    challenging_case_model_accuracy: float | None
    ledger: list[LedgerRow]
    skipped: list[tuple[str, str]] = field(default_factory=list)
    baseline_threshold: int | None = None

    @property
    def model_correct(self) -> int:
        return sum(r.model_correct for r in self.ledger)

    @property
    def baseline_correct(self) -> int:
        return sum(r.baseline_correct for r in self.ledger)


def build_report(
    rows: Sequence[LedgerRow],
    goal_threshold: int = DEFAULT_GOAL_THRESHOLD,
    skipped: Sequence[tuple[str, str]] = (),
    baseline_threshold: int | None = None,
) -> EvaluationReport:
    if not rows:
        raise ValueError("no evaluated matches")
    ledger = [replace(r, bucket="high" if r.total_goals >= goal_threshold else "low") for r in rows]
    high, low = bucket_matches(ledger, goal_threshold)
    challenging = [r for r in ledger if not r.baseline_correct]
    return EvaluationReport(
        n_matches=len(ledger),
        goal_threshold=goal_threshold,
        overall_accuracy_model=_acc_or_none(ledger, "model_pick"),
        overall_accuracy_baseline=_acc_or_none(ledger, "baseline_pick"),
        high_count=len(high),
        low_count=len(low),
        high_scoring_accuracy_model=_acc_or_none(high, "model_pick"),
        high_scoring_accuracy_baseline=_acc_or_none(high, "baseline_pick"),
        low_scoring_accuracy_model=_acc_or_none(low, "model_pick"),
        low_scoring_accuracy_baseline=_acc_or_none(low, "baseline_pick"),
        challenging_case_count=len(challenging),
        challenging_case_model_accuracy=_acc_or_none(challenging, "model_pick"),
        ledger=ledger,
        skipped=list(skipped),
        baseline_threshold=baseline_threshold,
    )


Predictor = Callable[[object, str, str, int], PredictionResult]


def evaluate(
    bundle,
    eval_matches: Sequence[MatchRecord],
    history: Sequence[MatchRecord],
    goal_threshold: int = DEFAULT_GOAL_THRESHOLD,
    m: int | None = None,
    contexts: Collection[Context] | None = None,
    predictor: Predictor = predict_match,
) -> EvaluationReport:
    """Run the ensemble and the baseline over ``eval_matches``.

    The baseline sees only history strictly before each match's date. When
    ``m`` is not given it is computed once from history before the earliest
    evaluated match. Matches without a decisive winner (a draw with no
    recorded shootout winner) and matches whose profiles cannot be resolved
    are skipped and listed.
    """
    ordered = sorted(eval_matches, key=lambda mr: (mr.date, mr.match_id))
    if not ordered:
        raise ValueError("no evaluation matches")
    if m is None:
        m = compute_match_threshold(filter_history(history, ordered[0].date, contexts))
    rows, skipped = [], []
    for match in ordered:
        actual = match.decisive_winner()
        if actual is None:
            skipped.append((match.match_id, "draw without recorded winner"))
            continue
        try:
            pred = predictor(bundle, match.home_team, match.away_team, match.year)
        except ProfileLookupError as exc:
            skipped.append((match.match_id, str(exc)))
            continue
        base = baseline_predict(history, match.home_team, match.away_team, match.date, m, contexts)
        rows.append(
            LedgerRow(
                match.match_id, match.date.isoformat(), match.home_team, match.away_team,
                actual, pred.winner, base, match.total_goals,
            )
        )
    if skipped:
        log.info("evaluation skipped %d match(es)", len(skipped))
    return build_report(rows, goal_threshold, skipped, m)


def render_report(report: EvaluationReport) -> str:
    label_w = 26
    lines = [
        f"{'Evaluation metric':<{label_w}}{'Ensemble':>12}{'Baseline':>12}",
        "-" * (label_w + 24),
    ]

    def row(label, a, b):
        lines.append(f"{label:<{label_w}}{format_percent(a):>12}{format_percent(b):>12}")

    row("Overall accuracy", report.overall_accuracy_model, report.overall_accuracy_baseline)
    row("Accuracy (high-scoring)", report.high_scoring_accuracy_model, report.high_scoring_accuracy_baseline)
    row("Accuracy (low-scoring)", report.low_scoring_accuracy_model, report.low_scoring_accuracy_baseline)
    lines += [
        "-" * (label_w + 24),
        f"matches evaluated: {report.n_matches} (high {report.high_count} / low {report.low_count})",
        f"high-scoring means total goals >= {report.goal_threshold}"
        + (" (unvalidated default)" if report.goal_threshold == DEFAULT_GOAL_THRESHOLD else ""),
        f"challenging cases (baseline wrong): {report.challenging_case_count}, "
        f"ensemble accuracy on them: {format_percent(report.challenging_case_model_accuracy)}",
    ]
    if report.baseline_threshold is not None:
        lines.append(f"baseline head-to-head threshold m = {report.baseline_threshold}")
    if report.skipped:
        lines.append(f"skipped: {len(report.skipped)} match(es)")
    return "\n".join(lines) + "\n"


def write_ledger(report: EvaluationReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# wcforecast evaluation ledger v1\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LEDGER_COLUMNS)
        for r in report.ledger:
            writer.writerow([getattr(r, c) for c in LEDGER_COLUMNS])
    return path


def read_ledger(path: str | Path) -> list[LedgerRow]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    for rec in csv.DictReader(lines):
        rows.append(
            LedgerRow(
                match_id=rec["match_id"],
                date=rec.get("date", ""),
                team_a=rec["team_a"],
                team_b=rec["team_b"],
                actual=rec["actual"],
                model_pick=rec["model_pick"],
                baseline_pick=rec["baseline_pick"],
                total_goals=int(rec["total_goals"]),
                bucket=rec.get("bucket", "") or "",
            )
        )
    return rows


def golden_ledger_path() -> Path:
    return Path(__file__).parent / "data" / "golden_ledger.csv"
