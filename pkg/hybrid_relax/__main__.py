"""Command-line entrypoint."""

from __future__ import annotations

import logging
import os
import sys

from .cli import main as cli_main


def main() -> None:
    """Configure logging from the environment and run the CLI."""
    log_level = os.environ.get("LOG_LEVEL", "INFO").upper()
    logging.basicConfig(level=getattr(logging, log_level, logging.INFO))
    workers = max(1, int(os.environ.get("HYBRID_RELAX_THREADS", "1")))
    logging.debug("Starting (log level: %s, threads: %d)", log_level, workers)
    sys.exit(cli_main(sys.argv[1:], workers=workers))


if __name__ == "__main__":  # pragma: no cover - manual entry
    main()
