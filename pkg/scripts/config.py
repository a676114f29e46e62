"""Configuration management for the residual-bound certifier."""

import os
from pathlib import Path
from typing import Optional, Tuple

from dotenv import load_dotenv

from errors import ConfigurationError

# Get the scripts directory
SCRIPTS_DIR = Path(__file__).parent
ENV_PATH = SCRIPTS_DIR / ".env"

# Load environment variables
load_dotenv(ENV_PATH)


def _env_int(name: str, default: int, minimum: int = 0) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigurationError(f"{name}={raw!r} is not an integer")
    if value < minimum:
        raise ConfigurationError(f"{name}={value} must be >= {minimum}")
    return value


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = float(raw)
    except ValueError:
        raise ConfigurationError(f"{name}={raw!r} is not a number")
    if value < 0:
        raise ConfigurationError(f"{name}={value} must be non-negative")
    return value


def parse_order(raw: str) -> Tuple[int, int]:
    """
    Parse a spectral order string.

    Format: "n" or "nx,ny"
    Examples:
        - "12" -> (12, 12)
        - "16,8" -> (16, 8)

    Returns:
        Tuple of (n_x, n_y)
    """
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise ConfigurationError(f"Invalid order {raw!r}. Expected 'n' or 'nx,ny'")
    try:
        order = (int(parts[0]), int(parts[1]))
    except ValueError:
        raise ConfigurationError(f"Invalid order {raw!r}. Expected integers")
    if min(order) < 1:
        raise ConfigurationError(f"Spectral orders must be >= 1, got {order}")
    return order


class Config:
    """Configuration for the certifier."""

    def __init__(self):
        self.scripts_dir = SCRIPTS_DIR

        # Data directory structure
        self.data_dir = Path(os.getenv("CERTIFY_DATA_DIR", str(SCRIPTS_DIR / "data")))
        self.logs_dir = self.data_dir / "logs"
        self.runs_dir = self.data_dir / "runs"

        # Ensure directories exist
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.logs_dir.mkdir(parents=True, exist_ok=True)
        self.runs_dir.mkdir(parents=True, exist_ok=True)

        # Sweep worker pool
        self.workers = _env_int("CERTIFY_WORKERS", 1, minimum=1)

        # Spectral resolution on the inner and outer rectangles
        self.inner_order = parse_order(os.getenv("CERTIFY_INNER_ORDER", "12"))
        self.outer_order = parse_order(os.getenv("CERTIFY_OUTER_ORDER", "12"))

        # Quadrature defaults
        self.inner_points = _env_int("CERTIFY_INNER_POINTS", 32, minimum=1)
        self.triangle_order = _env_int("CERTIFY_TRIANGLE_ORDER", 10, minimum=1)
        self.refine_levels = _env_int("CERTIFY_REFINE_LEVELS", 3)
        self.time_points = _env_int("CERTIFY_TIME_POINTS", 16, minimum=1)

        # Reference solutions
        self.oracle_levels = _env_int("CERTIFY_ORACLE_LEVELS", 3)

        # Relative tolerance for lower <= upper in emitted reports
        self.report_tolerance = _env_float("CERTIFY_REPORT_TOLERANCE", 1e-8)

        # Logging
        self.console_level = os.getenv("CERTIFY_LOG_LEVEL", "INFO").upper()
        self.file_level = os.getenv("CERTIFY_FILE_LOG_LEVEL", "DEBUG").upper()

    def summary(self) -> dict:
        """Get the configuration as a plain dict (stored with run records)."""
        return {
            "workers": self.workers,
            "inner_order": list(self.inner_order),
            "outer_order": list(self.outer_order),
            "inner_points": self.inner_points,
            "triangle_order": self.triangle_order,
            "refine_levels": self.refine_levels,
            "time_points": self.time_points,
            "oracle_levels": self.oracle_levels,
            "report_tolerance": self.report_tolerance,
        }


# Global config instance
_config: Optional[Config] = None


def get_config() -> Config:
    """Get or create the global config instance."""
    global _config
    if _config is None:
        _config = Config()
    return _config


def reset_config() -> None:
    """Drop the global config instance so the environment is re-read."""
    global _config
    _config = None
