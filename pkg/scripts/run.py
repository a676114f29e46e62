#!/usr/bin/env python3
"""
Runner for the certifier scripts.

Makes sure the project venv exists, then runs the script with its Python:

    python scripts/run.py cli.py describe sawblade
"""

import subprocess
import sys
from pathlib import Path
from typing import List, Optional

from setup_environment import CertifyEnvironment

SCRIPTS = {
    "cli.py": "Certify sweeps, describe catalog problems, list runs",
    "setup_environment.py": "Create the virtual environment",
}


def resolve_script(name: str, scripts_dir: Optional[Path] = None) -> Path:
    """Map 'cli', 'cli.py' or 'scripts/cli.py' to a path under scripts/."""
    scripts_dir = scripts_dir or Path(__file__).parent
    if name.startswith("scripts/"):
        name = name[len("scripts/"):]
    if not name.endswith(".py"):
        name += ".py"
    return scripts_dir / name


def usage() -> str:
    lines = ["Usage: python run.py <script> [args...]", "", "Available scripts:"]
    lines += [f"  {name:<22} {text}" for name, text in SCRIPTS.items()]
    lines += ["", "Examples:",
              "  python run.py cli.py run --config sweep.json --out bounds.csv",
              "  python run.py cli.py describe notch"]
    return "\n".join(lines)


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        print(usage())
        return 2

    script_path = resolve_script(argv[0])
    if not script_path.exists():
        print(f"Script not found: {script_path}")
        return 2

    env = CertifyEnvironment()
    if not env.venv_dir.exists() and not env.ensure_venv():
        print("Failed to set up environment")
        return 1

    try:
        return subprocess.run([env.python_executable(), str(script_path), *argv[1:]]).returncode
    except KeyboardInterrupt:
        print("\nInterrupted by user")
        return 130


if __name__ == "__main__":
    sys.exit(main())
