"""Command line entry point: ``scripteval <stage> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline as pl

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEPENDENCY = 3
EXIT_TRANSPORT = 4
EXIT_DATA = 5


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config overriding the defaults")
    common.add_argument("--run-id", default="default", help="run directory name (default: %(default)s)")
    common.add_argument("--workdir", type=Path, default=Path("runs"), help="root of run directories")
    common.add_argument("--force", action="store_true", help="redo a stage that already completed")
    common.add_argument("--workers", type=int, default=1, help="concurrent backend calls")
    common.add_argument("--rate-limit", type=float, default=None, help="max backend calls per second")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="scripteval", description="Script continuation benchmark pipeline.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", parents=[common], help="clean, split and index a corpus directory")
    s.add_argument("corpus", nargs="?", type=Path, help="directory of *.txt scripts (default: bundled mini corpus)")
    sub.add_parser("profile", parents=[common], help="detect format profiles and render contracts")
    for name, text in (("generate", "generate continuations"), ("judge", "judge valid samples"),
                       ("score", "compute automatic metrics")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("--model", required=True)
    s = sub.add_parser("stats", parents=[common], help="paired comparison of two models")
    s.add_argument("--model-a")
    s.add_argument("--model-b")
    sub.add_parser("report", parents=[common], help="write tables and plot data")
    s = sub.add_parser("run", parents=[common], help="every stage end to end")
    s.add_argument("corpus", nargs="?", type=Path)
    return p


def _dispatch(args, ws: pl.Workspace) -> None:
    cmd = args.command
    if cmd == "ingest":
        pl.stage_ingest(ws, args.corpus)
    elif cmd == "profile":
        pl.stage_profile(ws)
    elif cmd == "generate":
        pl.stage_generate(ws, args.model)
    elif cmd == "judge":
        pl.stage_judge(ws, args.model)
    elif cmd == "score":
        pl.stage_score(ws, args.model)
    elif cmd == "stats":
        for r in pl.stage_stats(ws, args.model_a, args.model_b):
            print(f"{r['metric_name']}: n={r['n_pairs']} diff={r['mean_diff']} p={r['p_value']} d={r['cohens_d']}")
    elif cmd == "report":
        print(pl.stage_report(ws) / "tables.md")
    elif cmd == "run":
        print(pl.run_all(ws, args.corpus) / "tables.md")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = pl.load_config(args.config)
        ws = pl.Workspace(args.workdir, args.run_id, config, force=args.force,
                          workers=args.workers, rate_limit=args.rate_limit)
        _dispatch(args, ws)
    except pl.PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
