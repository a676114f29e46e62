"""Logging configuration for the certifier using loguru."""

import os
import sys
from pathlib import Path
from loguru import logger

# Remove default handler
logger.remove()

# Get data directory (kept next to the scripts, like run records)
SCRIPTS_DIR = Path(__file__).parent
DATA_DIR = Path(os.getenv("CERTIFY_DATA_DIR", str(SCRIPTS_DIR / "data")))
LOGS_DIR = DATA_DIR / "logs"
LOGS_DIR.mkdir(parents=True, exist_ok=True)
PHASE_LOGS_DIR = LOGS_DIR / "phases"
PHASE_LOGS_DIR.mkdir(parents=True, exist_ok=True)

# Store phase loggers
_phase_loggers = {}

# Console handler id, so the CLI can swap it out for the dashboard
_console_handler_id = None


def setup_logger(
    console_level: str = "INFO",
    file_level: str = "DEBUG"
):
    """
    Set up loguru logger with console and file outputs.

    Args:
        console_level: Log level for console output
        file_level: Log level for file output
    """
    global _console_handler_id

    # Console handler - formatted for readability
    _console_handler_id = logger.add(
        sys.stderr,
        level=console_level,
        format="<level>{message}</level>",
        filter=lambda record: "phase_log" not in record["extra"]
    )

    # Main log file - all certification activity
    logger.add(
        LOGS_DIR / "certify_{time:YYYY-MM-DD}.log",
        level=file_level,
        format="{time:HH:mm:ss} | {level:<8} | {message}",
        rotation="1 day",
        retention="7 days",
        filter=lambda record: "phase_log" not in record["extra"]
    )


def silence_console() -> None:
    """Remove the console sink (file logging continues)."""
    global _console_handler_id
    if _console_handler_id is not None:
        try:
            logger.remove(_console_handler_id)
        except ValueError:
            pass
        _console_handler_id = None


def get_phase_logger(phase: str):
    """
    Get a logger bound to a specific certification phase.

    Args:
        phase: Phase name (e.g., "inner", "outer", "oracle", "sweep")

    Returns:
        Bound logger for the phase
    """
    safe_phase = phase.replace('/', '_').replace(':', '_')

    # Create phase-specific log file if not exists
    if safe_phase not in _phase_loggers:
        log_file = PHASE_LOGS_DIR / f"{safe_phase}.log"

        logger.add(
            log_file,
            level="DEBUG",
            format="{time:HH:mm:ss.SSS} | {level:<8} | {message}",
            filter=lambda record, p=safe_phase: record["extra"].get("phase") == p,
            rotation="1 MB",
            retention="3 days"
        )
        _phase_loggers[safe_phase] = True

    return logger.bind(phase=safe_phase, phase_log=True)


# Initialize with default settings
setup_logger(
    console_level=os.getenv("CERTIFY_LOG_LEVEL", "INFO").upper(),
    file_level=os.getenv("CERTIFY_FILE_LOG_LEVEL", "DEBUG").upper()
)

# Export logger
__all__ = ["logger", "setup_logger", "silence_console", "get_phase_logger", "LOGS_DIR"]
