"""Package initialization for the certifier scripts."""

import sys
from pathlib import Path

# modules import each other by bare name
sys.path.insert(0, str(Path(__file__).parent))

from config import Config, get_config  # noqa: E402
from api import CertifyAPI, load_run_config, parse_run_config  # noqa: E402
from certify import certify_elliptic, certify_parabolic, sweep  # noqa: E402
from storage import ReportStorage, RunStorage  # noqa: E402

__all__ = [
    'get_config',
    'Config',
    'CertifyAPI',
    'load_run_config',
    'parse_run_config',
    'certify_elliptic',
    'certify_parabolic',
    'sweep',
    'ReportStorage',
    'RunStorage',
]
