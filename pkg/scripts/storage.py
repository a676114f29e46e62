"""Storage for certification reports (CSV) and run records (JSON)."""

import csv
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from certify import BoundReport

BASE_COLUMNS = [
    "dual_inner", "dual_outer", "lower_bound", "upper_bound",
    "ref_error", "eff_lower", "eff_upper",
    "t_inner_s", "t_outer_s", "t_oracle_s",
]
EXTRA_COLUMNS = ["ref_slack", "dual_domain", "lower_domain", "upper_domain", "error"]


def format_cell(value: Any) -> str:
    """Blank for None, 17 significant digits for floats."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def csv_header(mu_names: Sequence[str]) -> List[str]:
    return ["param_index", *mu_names, *BASE_COLUMNS, *EXTRA_COLUMNS]


def report_row(report: BoundReport, mu_names: Sequence[str]) -> List[str]:
    mu = list(report.mu) + [None] * (len(mu_names) - len(report.mu))
    values: List[Any] = [report.param_index, *mu[:len(mu_names)]]
    values += [getattr(report, name) for name in BASE_COLUMNS]
    values += [getattr(report, name) for name in EXTRA_COLUMNS]
    # the error column is free text; keep it on one line
    if values[-1] is not None:
        values[-1] = " ".join(str(values[-1]).split())
    return [format_cell(v) for v in values]


class ReportStorage:
    """Writes sweep reports as CSV, one row per parameter in sweep order."""

    @staticmethod
    def write_csv(path: Path, reports: Sequence[BoundReport], mu_names: Sequence[str]) -> Path:
        """
        Write reports to a CSV file.

        Args:
            path: Target file; parent directories are created
            reports: Reports in parameter order
            mu_names: Names of the parameter columns

        Returns:
            The path written
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(csv_header(mu_names))
            for report in sorted(reports, key=lambda r: r.param_index):
                writer.writerow(report_row(report, mu_names))
        return path

    @staticmethod
    def read_csv(path: Path) -> List[Dict[str, str]]:
        with open(path, "r", encoding="utf-8", newline="") as f:
            return list(csv.DictReader(f))


class RunStorage:
    """Manages run records in JSON files."""

    def __init__(self, runs_dir: Path):
        """
        Initialize run storage.

        Args:
            runs_dir: Directory to store run records
        """
        self.runs_dir = Path(runs_dir)
        self.runs_dir.mkdir(parents=True, exist_ok=True)

    def _get_run_path(self, run_id: str) -> Path:
        return self.runs_dir / f"{run_id}.json"

    def save_run(self, run_id: str, problem: str, config: Dict[str, Any], summary: Dict[str, Any],
                 csv_path: Optional[Path], environment: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """
        Save one run record.

        Args:
            run_id: Unique identifier of the run
            problem: Catalog id of the certified problem
            config: The run configuration as loaded
            summary: Sweep summary (counts, effectivities, elapsed time)
            csv_path: Where the CSV was written
            environment: Environment defaults the run started from (Config.summary())

        Returns:
            The stored record
        """
        record = {
            "id": run_id,
            "created_at": datetime.now(timezone.utc).isoformat(),
            "problem": problem,
            "config": config,
            "summary": summary,
            "csv": str(csv_path) if csv_path else None,
            "environment": environment or {},
        }
        with open(self._get_run_path(run_id), "w", encoding="utf-8") as f:
            json.dump(record, f, indent=2, ensure_ascii=False, default=str)
        return record

    def get_run(self, run_id: str) -> Optional[Dict[str, Any]]:
        path = self._get_run_path(run_id)
        if not path.exists():
            return None
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)

    def list_runs(self) -> List[Dict[str, Any]]:
        """
        List all runs (metadata only), sorted by newest first.

        Returns:
            List of run metadata dicts with 'index' field (1-based)
        """
        runs = []
        for path in self.runs_dir.glob("*.json"):
            try:
                with open(path, "r", encoding="utf-8") as f:
                    data = json.load(f)
                summary = data.get("summary", {})
                runs.append({
                    "id": data["id"],
                    "created_at": data["created_at"],
                    "problem": data.get("problem", "?"),
                    "rows": summary.get("rows", 0),
                    "failed": summary.get("failed", 0),
                    "csv": data.get("csv"),
                })
            except (OSError, ValueError, KeyError):
                pass  # skip corrupted records

        runs.sort(key=lambda r: r["created_at"], reverse=True)
        for i, run in enumerate(runs, 1):
            run["index"] = i
        return runs

    def get_run_by_index(self, index: int) -> Optional[Dict[str, Any]]:
        """Get a run by its 1-based list index."""
        runs = self.list_runs()
        if index < 1 or index > len(runs):
            return None
        return self.get_run(runs[index - 1]["id"])
