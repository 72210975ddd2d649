"""Command-line entry point.

Every subcommand accepts ``--config FILE`` plus ``--key value`` overrides for
any config key (``--test-fraction 0.25`` and ``--grid.knn.k 3,5`` both work).
Exit codes: 0 success, 1 usage or config error, 2 data error, 3 internal
invariant violation.
"""
from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import sys
from collections import Counter
from pathlib import Path

from . import __version__
from .baseline import baseline_predict, compute_match_threshold, filter_history
from .bundle import load_bundle, save_bundle
from .config import KEYS, RunConfig, load_config
from .dataset import build_team_profiles, load_aliases, load_matches, load_players
from .ensemble import predict_match
from .errors import ConfigError, DataError, FitError, WcForecastError
from .evaluation import (
    build_report,
    evaluate,
    golden_ledger_path,
    read_ledger,
    render_report,
    write_ledger,
)
from .features import assemble_examples, select_attributes
from .synthetic import generate_world, write_matches_csv, write_players_csv
from .tournament import bundled_bracket_path, load_bracket, render_bracket, simulate
from .training import split_train_test, train_ensemble

log = logging.getLogger("wcforecast")

BUNDLE_NAME = "bundle.wcfb"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def split_overrides(argv: list[str]) -> tuple[list[str], dict[str, str]]:
    """Pull ``--key value`` / ``--key=value`` tokens for config keys out of ``argv``."""
    rest, overrides = [], {}
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and len(tok) > 2:
            name, eq, value = tok[2:].partition("=")
            key = name.replace("-", "_") if "." not in name else name
            if key in KEYS or key.startswith(("grid.", "schema.")):
                if not eq:
                    if i + 1 >= len(argv):
                        raise ConfigError(f"option --{name} needs a value")
                    value = argv[i + 1]
                    i += 1
                overrides[key] = value
                i += 1
                continue
        rest.append(tok)
        i += 1
    return rest, overrides


def _outdir(cfg: RunConfig) -> Path:
    path = Path(cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _aliases(cfg: RunConfig):
    cfg.check_paths("aliases")
    return load_aliases(cfg.aliases) if cfg.aliases else None


def _load_players(cfg: RunConfig, aliases):
    cfg.require("players")
    cfg.check_paths("players")
    return load_players(
        cfg.players, cfg.player_schema or None, aliases=aliases,
        year_range=(cfg.year_min, cfg.year_max), delimiter=cfg.delimiter,
    )


def _load_matches(cfg: RunConfig, aliases):
    cfg.require("matches")
    cfg.check_paths("matches")
    return load_matches(cfg.matches, cfg.match_schema or None, aliases=aliases, delimiter=cfg.delimiter)


def _profiles(cfg: RunConfig, players, report):
    attrs = select_attributes(
        players, cfg.completeness_min, cfg.corr_max,
        relevant=cfg.relevant_attributes, declared=report.attributes or None,
    )
    return attrs, build_team_profiles(players, attrs)


def _bundle_path(cfg: RunConfig, given: str | None) -> Path:
    path = Path(given) if given else Path(cfg.output_dir) / BUNDLE_NAME
    if not path.exists():
        raise ConfigError(f"bundle not found: {path}")
    return path


def cmd_ingest(cfg: RunConfig, args) -> int:
    aliases = _aliases(cfg)
    players, prep = _load_players(cfg, aliases)
    matches, mrep = _load_matches(cfg, aliases)
    print(prep.summary())
    print(mrep.summary())
    for row, msg in prep.rejected + mrep.rejected:
        print(f"  row {row}: {msg}")
    if not players:
        raise DataError(f"{cfg.players}: no usable player rows")
    attrs, profiles = _profiles(cfg, players, prep)
    print(f"attributes retained ({len(attrs)}): {', '.join(attrs)}")
    teams_in_matches = Counter()
    for m in matches:
        for team in (m.home_team, m.away_team):
            teams_in_matches[(m.year, team)] += 1
    print("profile coverage by year:")
    for year in sorted({y for _, y in profiles} | {y for y, _ in teams_in_matches}):
        playing = {t for y, t in teams_in_matches if y == year}
        covered = {t for t, y in profiles if y == year}
        print(f"  {year}: {len(covered)} profiles, {len(playing & covered)}/{len(playing)} match teams covered")
    return 0


def cmd_train(cfg: RunConfig, args) -> int:
    cfg.require("seed")
    aliases = _aliases(cfg)
    players, prep = _load_players(cfg, aliases)
    matches, _ = _load_matches(cfg, aliases)
    attrs, profiles = _profiles(cfg, players, prep)
    if cfg.train_until is not None:
        matches = [m for m in matches if m.date <= cfg.train_until]
    examples, skips = assemble_examples(matches, profiles, cfg.fallback_depth, attrs)
    if len(examples) == 0:
        raise DataError("no decisive matches with resolvable profiles")
    train, test = split_train_test(examples, cfg.test_fraction, cfg.seed, cfg.split_mode)
    bundle, searches = train_ensemble(
        train, cfg.grids, cfg.train_config(), cfg.seed, profiles=profiles, attributes=attrs,
        fallback_depth=cfg.fallback_depth, config_snapshot=cfg.snapshot(),
    )
    test_ids = sorted(set(test.match_ids))
    bundle.test_match_ids = test_ids
    by_id = {m.match_id: m for m in matches}
    correct = sum(
        predict_match(bundle, by_id[i].home_team, by_id[i].away_team, by_id[i].year).winner
        == by_id[i].decisive_winner()
        for i in test_ids
    )

    out = _outdir(cfg)
    save_bundle(bundle, out / BUNDLE_NAME)
    lines = [
        f"wcforecast {__version__} training report",
        f"seed: {cfg.seed}",
        f"attributes: {', '.join(attrs)}",
        f"examples: {len(examples)} rows from {len(set(examples.match_ids))} matches "
        f"({skips.draws} draws, {len(skips.unresolved)} unresolved skipped)",
        f"split: {cfg.split_mode}, {len(set(train.match_ids))} train / {len(test_ids)} test matches",
        f"pca: {'none' if bundle.pca is None else f'{bundle.pca.k} components'}",
        "",
    ]
    for family, res in searches.items():
        lines.append(f"{family}: best {res.best_params} cv accuracy {res.mean_fold_accuracy:.4f}")
        for cell in res.cells:
            lines.append(f"    {cell.params} acc {cell.mean_accuracy:.4f} log-loss {cell.mean_log_loss:.4f}")
    lines += ["", f"held-out match accuracy: {correct}/{len(test_ids)} = {100.0 * correct / len(test_ids):.2f}%"]
    (out / "training_report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    print(f"bundle written to {out / BUNDLE_NAME}")
    return 0


def cmd_predict(cfg: RunConfig, args) -> int:
    bundle = load_bundle(_bundle_path(cfg, args.bundle))
    res = predict_match(bundle, args.team_a, args.team_b, args.year)
    if args.format == "json":
        print(json.dumps(res.as_record(), sort_keys=True, indent=2))
        return 0
    print(f"{res.team_a} vs {res.team_b} ({args.year})")
    print(f"winner: {res.winner}  probability {res.win_probability:.4f}  votes {res.vote_count(res.winner)}/5")
    print(f"{'family':<16}{'P(' + res.team_a + ')':>20}{'vote':>20}")
    for family, (pa, _) in res.per_family_proba.items():
        print(f"{family:<16}{pa:>20.4f}{res.votes[family]:>20}")
    return 0


def _eval_matches(cfg: RunConfig, bundle, matches):
    windowed = cfg.eval_start or cfg.eval_end or cfg.eval_contexts
    if windowed:
        contexts = cfg.contexts("eval_contexts")
        return [
            m for m in matches
            if (cfg.eval_start is None or m.date >= cfg.eval_start)
            and (cfg.eval_end is None or m.date <= cfg.eval_end)
            and (contexts is None or m.context in contexts)
        ]
    if not bundle.test_match_ids:
        raise ConfigError("bundle has no recorded test matches; set eval_start/eval_end")
    wanted = set(bundle.test_match_ids)
    return [m for m in matches if m.match_id in wanted]


def cmd_evaluate(cfg: RunConfig, args) -> int:
    bundle = load_bundle(_bundle_path(cfg, args.bundle))
    matches, _ = _load_matches(cfg, _aliases(cfg))
    chosen = _eval_matches(cfg, bundle, matches)
    if not chosen:
        raise DataError("evaluation window selects no matches")
    report = evaluate(
        bundle, chosen, matches, cfg.goal_threshold, cfg.baseline_m, cfg.contexts("baseline_contexts")
    )
    text = render_report(report)
    out = _outdir(cfg)
    (out / "evaluation.txt").write_text(text, encoding="utf-8")
    write_ledger(report, out / "ledger.csv")
    print(text, end="")
    return 0


def cmd_simulate(cfg: RunConfig, args) -> int:
    cfg.require("seed")
    bundle = load_bundle(_bundle_path(cfg, args.bundle))
    path = args.bracket or cfg.bracket or bundled_bracket_path()
    spec = load_bracket(path)
    result = simulate(bundle, spec)
    out = _outdir(cfg)
    text = render_bracket(result)
    (out / "bracket.txt").write_text(text, encoding="utf-8")
    (out / "bracket.json").write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(text, end="")
    return 0


def cmd_baseline(cfg: RunConfig, args) -> int:
    matches, _ = _load_matches(cfg, _aliases(cfg))
    cutoff = dt.date.fromisoformat(args.date) if args.date else None
    contexts = cfg.contexts("baseline_contexts")
    m = cfg.baseline_m
    if m is None:
        m = compute_match_threshold(filter_history(matches, cutoff, contexts))
    pick = baseline_predict(matches, args.team_a, args.team_b, cutoff, m, contexts)
    print(f"{args.team_a} vs {args.team_b}: baseline picks {pick} (m = {m})")
    return 0


def cmd_synth(cfg: RunConfig, args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.seed if cfg.seed is not None else 0
    world = generate_world(seed)
    write_players_csv(world.players, world.attributes, out / "players.csv")
    write_matches_csv(world.matches, out / "matches.csv")
    (out / "run.cfg").write_text(
        "# synthetic run\n"
        "players = players.csv\n"
        "matches = matches.csv\n"
        "output_dir = out\n"
        f"seed = {seed}\n",
        encoding="utf-8",
    )
    print(f"{len(world.players)} players and {len(world.matches)} matches written to {out}")
    return 0


def cmd_ledger_report(cfg: RunConfig, args) -> int:
    path = Path(args.ledger) if args.ledger else golden_ledger_path()
    if not path.exists():
        raise ConfigError(f"ledger not found: {path}")
    rows = read_ledger(path)
    if not rows:
        raise DataError(f"{path}: ledger has no rows")
    print(render_report(build_report(rows, cfg.goal_threshold)), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wcforecast", description="Football match outcome forecasting.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value config file")
        p.set_defaults(func=func)
        return p

    add("ingest", cmd_ingest, "validate input files and report profile coverage")
    add("train", cmd_train, "grid-search and fit the ensemble, write a bundle")
    p = add("predict", cmd_predict, "predict one pairing")
    p.add_argument("team_a")
    p.add_argument("team_b")
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--bundle")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p = add("evaluate", cmd_evaluate, "compare ensemble and baseline on an evaluation set")
    p.add_argument("--bundle")
    p = add("simulate", cmd_simulate, "simulate a tournament bracket")
    p.add_argument("--bundle")
    p.add_argument("--bracket-file", dest="bracket")
    p = add("baseline", cmd_baseline, "head-to-head / WWR pick for one pairing")
    p.add_argument("team_a")
    p.add_argument("team_b")
    p.add_argument("--date", help="only history strictly before this ISO date is used")
    p = add("synth", cmd_synth, "write a planted-strength synthetic dataset")
    p.add_argument("--out", required=True)
    p = add("ledger-report", cmd_ledger_report, "summarize a ledger file (default: the bundled golden ledger)")
    p.add_argument("--ledger")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        rest, overrides = split_overrides(argv)
        args = build_parser().parse_args(rest)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        cfg = load_config(args.config, overrides)
        return args.func(cfg, args)
    except WcForecastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
