"""
Rich console output: live sweep progress, the summary table and the
problem sheet.
"""

import threading
from typing import Any, Dict, List, Optional, Sequence

from rich.console import Console, Group
from rich.panel import Panel
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.table import Table
from rich.text import Text

from certify import BoundReport
import templates


def _fmt(value: Optional[float], spec: str = ".4e") -> str:
    return "-" if value is None else format(value, spec)


class SweepDashboard:
    """
    Live progress bar over sweep rows.

    Use as a context manager and pass `on_row` to the sweep; rows may
    complete on worker threads.
    """

    def __init__(self, total: int, title: str = "Certifying", console: Optional[Console] = None):
        self.console = console or Console(stderr=True)
        self.total = total
        self.failed = 0
        self._lock = threading.Lock()
        self._progress = Progress(
            SpinnerColumn(),
            TextColumn("[bold blue]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            TextColumn("{task.fields[status]}"),
            TimeElapsedColumn(),
            console=self.console,
        )
        self._task = self._progress.add_task(title, total=total, status="")

    def on_row(self, report: BoundReport) -> None:
        with self._lock:
            if not report.ok:
                self.failed += 1
            status = f"[red]{self.failed} failed[/red]" if self.failed else "[green]ok[/green]"
            self._progress.update(self._task, advance=1, status=status)

    def __enter__(self):
        self._progress.start()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self._progress.stop()
        return False


def create_dashboard_sink(dashboard: SweepDashboard):
    """Loguru sink printing warnings above the live progress bar."""
    def sink(message):
        record = message.record
        if record["level"].no >= 30:
            dashboard.console.print(f"[yellow]{record['level'].name}[/yellow] {record['message']}")
    return sink


def summary_table(reports: Sequence[BoundReport], mu_names: Sequence[str]) -> Table:
    table = Table(title="Certified bounds", show_lines=False)
    table.add_column("#", justify="right")
    for name in mu_names:
        table.add_column(name, justify="right")
    for name in ("lower", "upper", "ref error", "eff lo", "eff up", "t inner", "t outer"):
        table.add_column(name, justify="right")
    for r in reports:
        if not r.ok:
            table.add_row(str(r.param_index), *[f"{m:.4g}" for m in r.mu],
                          Text(r.error or "failed", style="red"), *[""] * 6)
            continue
        table.add_row(
            str(r.param_index),
            *[f"{m:.4g}" for m in r.mu],
            _fmt(r.lower_bound),
            _fmt(r.upper_bound),
            _fmt(r.ref_error),
            _fmt(r.eff_lower, ".3f"),
            _fmt(r.eff_upper, ".3f"),
            f"{r.t_inner_s:.3f}s",
            f"{r.t_outer_s:.3f}s",
        )
    return table


def render_summary(console: Console, reports: Sequence[BoundReport], mu_names: Sequence[str],
                   summary: Dict[str, Any], csv_path: Optional[str] = None) -> None:
    console.print(summary_table(reports, mu_names))
    lines = [f"Rows: {summary['rows']}  succeeded: {summary['succeeded']}  failed: {summary['failed']}"]
    for name in ("eff_lower", "eff_upper"):
        if name in summary:
            s = summary[name]
            lines.append(f"{name}: min {s['min']:.3f}  median {s['median']:.3f}  max {s['max']:.3f}")
    if "elapsed_s" in summary:
        lines.append(f"Elapsed: {summary['elapsed_s']:.2f}s")
    if csv_path:
        lines.append(f"CSV: {csv_path}")
    console.print(Panel("\n".join(lines), title="Summary"))


def render_problem_sheet(console: Console, sheet: Dict[str, Any]) -> None:
    """Print the sheet returned by CertifyAPI.describe."""
    header = templates.PROBLEM_SHEET_HEADER.format(**sheet)
    subregions = f", subregions {', '.join(sheet['subregions'])}" if sheet["subregions"] else ""
    domain = templates.DOMAIN_TEMPLATE.format(**{**sheet, "subregions": subregions})

    params = Table(show_header=True, box=None)
    params.add_column("parameter")
    params.add_column("range")
    for p in sheet["parameters"]:
        params.add_row(p["name"], Text(f"[{p['low']:g}, {p['high']:g}]"))

    coeffs = Table(show_header=False, box=None)
    for name, text in sheet["coefficients"].items():
        coeffs.add_row(f"{name}:", Text(text))

    sample = ", ".join(f"{m:.6g}" for m in sheet["sample_mu"]) or "-"
    constant_lines: List[str] = []
    for name, c in sheet["constants"].items():
        value = f"  ->  {c['value']:.6g} at mu = ({sample})" if c["value"] is not None else ""
        constant_lines.append(templates.CONSTANT_LINE.format(name=name, formula=c["formula"], value=value))

    body = Group(
        Text.from_markup(header),
        Text(""),
        Text(domain),
        Text(""),
        params if sheet["parameters"] else Text(templates.NO_PARAMETERS),
        Text(""),
        coeffs,
        Text(""),
        Text("\n".join(constant_lines)),
        Text(""),
        Text(templates.EXACT_NOTE if sheet["exact_solution"] else templates.ORACLE_NOTE, style="dim"),
    )
    console.print(Panel(body, title=f"Problem sheet: {sheet['name']}"))


def render_catalog(console: Console, problems: Sequence[Dict[str, str]]) -> None:
    table = Table(title="Problem catalog")
    table.add_column("id", style="bold")
    table.add_column("kind")
    table.add_column("summary")
    for p in problems:
        table.add_row(p["name"], p["kind"], Text(p["summary"]))
    table.add_row("custom", "elliptic", "Constant coefficients on a polygon from the run config")
    console.print(table)


def render_run_list(console: Console, runs: Sequence[Dict[str, Any]]) -> None:
    if not runs:
        console.print("No runs found.")
        return
    table = Table(title="Run history")
    table.add_column("#", justify="right")
    table.add_column("created")
    table.add_column("problem")
    table.add_column("rows", justify="right")
    table.add_column("failed", justify="right")
    table.add_column("csv")
    for run in runs:
        table.add_row(str(run["index"]), run["created_at"][:19], run["problem"], str(run["rows"]),
                      str(run["failed"]), run["csv"] or "")
    console.print(table)
    console.print(templates.RUN_LIST_HINT)
