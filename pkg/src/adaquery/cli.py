"""Command-line entry points.

``adaquery run`` executes a testing campaign, ``adaquery recheck`` replays
saved bug reproductions, ``adaquery stats`` prints a persisted feature
table. Exit codes for run: 0 completed without bugs, 1 completed with
bugs, 2 fatal error.
"""

from __future__ import annotations

import argparse
import sys

from .campaign import (
    CampaignConfig,
    make_adapter_factory,
    recheck,
    run_campaign,
)
from .catalog import default_catalog
from .errors import AdaqueryError
from .features import InferenceConfig, StatsStore, load_stats
from .generator import GenConfig, TypingMode


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaquery",
        description="feedback-guided metamorphic testing for SQL engines",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a testing campaign")
    run.add_argument("--target", required=True,
                     help="sqlite:<path> or mock:<spec-path>")
    run.add_argument("--oracle", choices=("tlp", "norec", "both"), default="both")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--threshold-p", type=float, default=0.01)
    run.add_argument("--interval-i", type=int, default=2000,
                     help="statements per update window")
    run.add_argument("--max-depth", type=int, default=3)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--budget", type=int, default=None,
                     help="total statement budget")
    run.add_argument("--duration", type=float, default=None,
                     help="wall-clock limit in seconds")
    run.add_argument("--stats", default=None,
                     help="stats file to load at start and persist at exit")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--no-feedback", action="store_true",
                     help="record statistics but never reclassify")
    run.add_argument("--isolate-stats", action="store_true",
                     help="per-worker statistics instead of shared")
    run.add_argument("--typing", choices=("static", "dynamic", "learn"),
                     default="learn")

    chk = sub.add_parser("recheck", help="replay saved bug reproductions")
    chk.add_argument("--out", required=True)
    chk.add_argument("--target", required=True)

    st = sub.add_parser("stats", help="print a persisted feature table")
    st.add_argument("--stats", required=True)
    return parser


def _cmd_run(args) -> int:
    catalog = default_catalog()
    budget = args.budget
    if budget is None and args.duration is None:
        budget = 20000
    cfg = CampaignConfig(
        oracle=args.oracle,
        seed=args.seed,
        interval=args.interval_i,
        budget=budget,
        duration=args.duration,
        workers=args.workers,
        out_dir=args.out,
        stats_path=args.stats,
        feedback=not args.no_feedback,
        isolate_stats=args.isolate_stats,
        inference=InferenceConfig(
            threshold_p=args.threshold_p, update_interval=args.interval_i
        ),
        generation=GenConfig(
            max_depth=args.max_depth,
            depth_schedule_interval=args.interval_i,
            seed=args.seed,
            typing_mode=TypingMode[args.typing.upper()],
        ),
    )
    try:
        factory = make_adapter_factory(args.target, catalog)
        result = run_campaign(cfg, catalog, factory)
    except (AdaqueryError, OSError) as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return 2
    print(
        f"statements executed: {result.statements_executed} "
        f"(succeeded: {result.statements_succeeded})"
    )
    for w in result.windows:
        print(f"window {w.window}: checks={w.executed} validity={w.validity:.4f}")
    print(f"bugs: {len(result.bugs)} ({result.bugs_new} new, "
          f"{result.bugs_duplicate} duplicates)")
    if result.fatal:
        print(f"fatal: {result.message}", file=sys.stderr)
        return 2
    return 1 if result.bugs else 0


def _cmd_recheck(args) -> int:
    catalog = default_catalog()
    try:
        factory = make_adapter_factory(args.target, catalog)
        entries = recheck(args.out, factory)
    except (AdaqueryError, OSError) as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return 2
    still_failing = 0
    for e in entries:
        line = f"{e.bug}: was {e.original_status}, replay {e.replay_status}"
        if e.detail:
            line += f" ({e.detail})"
        print(line)
        if e.replay_status == "Fail":
            still_failing += 1
    print(f"{still_failing}/{len(entries)} reproductions still fail")
    return 0


def _cmd_stats(args) -> int:
    catalog = default_catalog()
    try:
        rows = load_stats(args.stats, catalog.ids)
    except (AdaqueryError, OSError) as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return 2
    store = StatsStore(catalog.features(), catalog.ddl_rule_ids)
    store.adopt(rows)
    print(f"{'feature':<24}{'executions':>12}{'successes':>12}  state")
    for stats in sorted(store.all_stats(), key=lambda s: s.feature.identifier):
        if stats.executions == 0 and stats.state.value == "Unknown":
            continue
        print(
            f"{stats.feature.identifier:<24}{stats.executions:>12}"
            f"{stats.successes:>12}  {stats.state.value}"
        )
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "recheck":
        return _cmd_recheck(args)
    return _cmd_stats(args)


if __name__ == "__main__":
    sys.exit(main())
