#!/usr/bin/env python3
"""
Environment setup for the certifier.

Creates .venv next to scripts/ and installs requirements.txt into it.
"""

import argparse
import importlib.util
import os
import subprocess
import sys
import venv
from pathlib import Path
from typing import List, Optional

# import name of every runtime requirement
REQUIRED_MODULES = ["numpy", "scipy", "dotenv", "loguru", "rich"]


def missing_modules(modules: Optional[List[str]] = None) -> List[str]:
    """Modules from the list that the current interpreter cannot import."""
    return [m for m in (modules or REQUIRED_MODULES) if importlib.util.find_spec(m) is None]


class CertifyEnvironment:
    """Manages the project virtual environment."""

    def __init__(self, root: Optional[Path] = None):
        self.scripts_dir = Path(__file__).parent
        self.root = root or self.scripts_dir.parent
        self.venv_dir = self.root / ".venv"
        self.requirements_file = self.root / "requirements.txt"
        if os.name == "nt":
            self.venv_python = self.venv_dir / "Scripts" / "python.exe"
        else:
            self.venv_python = self.venv_dir / "bin" / "python"

    def is_active(self) -> bool:
        """True when the running interpreter belongs to this project's venv."""
        return sys.prefix != sys.base_prefix and Path(sys.prefix) == self.venv_dir

    def python_executable(self) -> str:
        return str(self.venv_python) if self.venv_python.exists() else sys.executable

    def ensure_venv(self) -> bool:
        """Create the venv if needed and install the requirements; False on failure."""
        if self.is_active():
            return True
        if not self.venv_dir.exists():
            print(f"Creating virtual environment in {self.venv_dir.name}/")
            try:
                venv.create(self.venv_dir, with_pip=True)
            except OSError as e:
                print(f"Failed to create venv: {e}")
                return False
        if not self.requirements_file.exists():
            print("No requirements.txt found, skipping dependency installation")
            return True
        print("Installing dependencies...")
        result = subprocess.run(
            [str(self.venv_python), "-m", "pip", "install", "-r", str(self.requirements_file)],
            capture_output=True,
            text=True,
        )
        if result.returncode != 0:
            print(f"Failed to install dependencies:\n{result.stderr}")
            return False
        return True

    def activate_instructions(self) -> str:
        if os.name == "nt":
            return f"Run: {self.venv_dir / 'Scripts' / 'activate.bat'}"
        return f"Run: source {self.venv_dir / 'bin' / 'activate'}"


def main() -> int:
    parser = argparse.ArgumentParser(description="Set up the certifier environment")
    parser.add_argument("--check", action="store_true", help="Report the venv and missing packages only")
    args = parser.parse_args()

    env = CertifyEnvironment()
    if args.check:
        print(f"Virtual env: {env.venv_dir} ({'present' if env.venv_dir.exists() else 'missing'})")
        missing = missing_modules()
        print(f"Missing packages in this interpreter: {', '.join(missing) or 'none'}")
        return 0 if env.venv_dir.exists() else 1

    if not env.ensure_venv():
        print("Environment setup failed")
        return 1
    print(f"Environment ready: {env.python_executable()}")
    print(env.activate_instructions())
    return 0


if __name__ == "__main__":
    sys.exit(main())
