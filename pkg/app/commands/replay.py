"""replay: re-execute a recorded run into a new out dir."""
from __future__ import annotations

import argparse
from pathlib import Path

from app.commands.common import RunConfig, read_run_file
from app.core.errors import ConfigError


def add_replay_parser(subparsers) -> None:
    parser = subparsers.add_parser("replay", help="re-run a recorded run from its run.json")
    parser.add_argument("--run", type=Path, required=True, help="out dir (or run.json) of the run to repeat")
    parser.add_argument("--out", type=Path, required=True, help="new output directory")
    parser.set_defaults(build_run=replay_run)


def replay_run(args: argparse.Namespace, argv: list[str]) -> RunConfig:
    recorded = read_run_file(args.run)
    if recorded.command == "replay":
        raise ConfigError("run.json of a replay points at another run; replay that one instead")
    if Path(recorded.out_dir).resolve() == args.out.resolve():
        raise ConfigError(f"replay must write to a new directory, not {args.out}")
    return recorded.model_copy(update={"out_dir": str(args.out), "argv": argv})
