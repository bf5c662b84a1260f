import argparse
import logging
import sys
from typing import Optional, Sequence

from app.commands import HANDLERS, PARSERS
from app.commands.common import execute
from app.core.config import settings
from app.core.errors import AsrError, ConfigError

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grounded-asr",
        description=f"{settings.APP_NAME} {settings.APP_VERSION}: multimodal ASR with masked-word recovery",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for add_parser in PARSERS:
        add_parser(subparsers)
    return parser


def configure_logging() -> None:
    logging.basicConfig(level=settings.LOG_LEVEL.upper(), format=settings.LOG_FORMAT)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse, persist run metadata, run; 0 on success, 2 for config errors, 1 for runtime failures."""
    argv = list(sys.argv[1:] if argv is None else argv)
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        run = args.build_run(args, argv)
        handler = HANDLERS.get(run.command)
        if handler is None:
            raise ConfigError(f"no handler for recorded command {run.command!r}")
        return execute(run, handler)
    except AsrError as e:
        logger.error(e.detail)
        return e.exit_code
    except Exception:
        logger.exception("Unexpected failure")
        return 1
