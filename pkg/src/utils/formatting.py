"""Terminal output and summary text for scenario reports"""

import io
from typing import Any, Dict, List, Optional

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from src.models.report import ScenarioReport
from src.models.scenario import ExperimentKind

console = Console()

SUMMARY_WIDTH = 100


def format_duration(seconds: float) -> str:
    """
    Format virtual seconds as h:mm:ss

    Args:
        seconds: Duration in seconds

    Returns:
        Formatted duration string
    """
    total = int(round(seconds))
    sign = "-" if total < 0 else ""
    total = abs(total)
    hours, rest = divmod(total, 3600)
    minutes, secs = divmod(rest, 60)
    return f"{sign}{hours}:{minutes:02d}:{secs:02d}"


def format_usd(amount: Optional[float]) -> str:
    if amount is None:
        return "-"
    return f"${amount:,.2f}"


def build_table(rows: List[Dict[str, Any]], title: str, max_rows: Optional[int] = None) -> Table:
    table = Table(title=title, show_header=True, header_style="bold magenta")
    if not rows:
        table.add_column("(no rows)")
        return table
    for column in rows[0]:
        table.add_column(str(column), style="cyan")
    for row in rows[:max_rows] if max_rows else rows:
        table.add_row(*[str(value) for value in row.values()])
    return table


def print_results_table(rows: List[Dict[str, Any]], title: str = "Results", max_rows: int = 100):
    """
    Pretty print rows as a Rich table

    Args:
        rows: List of rows as dictionaries (keys are the columns)
        title: Title for the table
        max_rows: Maximum rows to display
    """
    if not rows:
        console.print(f"[yellow]{title}: No results found[/yellow]")
        return
    console.print(build_table(rows, title, max_rows))
    if len(rows) > max_rows:
        console.print(f"[yellow]... (showing {max_rows} of {len(rows)} rows)[/yellow]")


def print_error(error_message: str, title: str = "Error"):
    """
    Pretty print error message

    Args:
        error_message: Error message to print
        title: Title for the error panel
    """
    console.print(Panel(f"[red]{error_message}[/red]", title=title, border_style="red"))


def print_warning(warning_message: str, title: str = "Warning"):
    console.print(Panel(f"[yellow]{warning_message}[/yellow]", title=title, border_style="yellow"))


def print_success(success_message: str, title: str = "Success"):
    console.print(Panel(f"[green]{success_message}[/green]", title=title, border_style="green"))


def _elastic_tables(report: ScenarioReport) -> List[Table]:
    overview = {
        "strategy": report.strategy,
        "jobs": f"{report.completed}/{len(report.jobs)} completed",
        "makespan": format_duration(report.makespan_s),
        "cost": format_usd(report.total_cost_usd),
        "on-demand equivalent": format_usd(report.on_demand_cost_usd),
        "average wait": format_duration(report.avg_wait_s),
        "peak wait": format_duration(report.peak_wait_s),
        "peak concurrency": report.peak_concurrency,
        "instances": len(report.instance_costs),
        "revocations": report.revocations,
        "deferred provisioning": report.failed_provisions,
    }
    tables = [build_table([{"metric": k, "value": v} for k, v in overview.items()], "Elastic scaling")]
    if report.audit_summary is not None:
        tables.append(build_table([report.audit_summary.model_dump()], "Audit"))
    return tables


def _storage_tables(report: ScenarioReport) -> List[Table]:
    rows = [
        {
            "strategy": row.strategy,
            "storage / year": format_usd(row.year_usd),
            "access / year": format_usd(row.access_usd),
            "access time": row.access_time,
        }
        for row in report.storage_rows
    ]
    return [build_table(rows, "Storage cost projection")]


def _throughput_tables(report: ScenarioReport) -> List[Table]:
    rows = [
        {
            "workers": row.workers,
            "model tasks/s": f"{row.model_tasks_per_s:.2f}",
            "simulated tasks/s": f"{row.simulated_tasks_per_s:.2f}",
            "completion": format_duration(row.completion_s),
        }
        for row in report.throughput_rows
    ]
    return [build_table(rows, "Throughput")]


def _provisioning_tables(report: ScenarioReport) -> List[Table]:
    pivot: Dict[float, Dict[str, Any]] = {}
    for row in report.strategy_rows:
        pivot.setdefault(row.data_gb, {"data GB": f"{row.data_gb:g}"})[row.strategy] = format_usd(row.monthly_usd)
    return [build_table(list(pivot.values()), "Monthly cost by placement strategy")]


def _lifecycle_tables(report: ScenarioReport) -> List[Table]:
    last = report.lifecycle_rows[-1] if report.lifecycle_rows else None
    overview = {
        "days": len(report.lifecycle_rows),
        "simulated cost": format_usd(report.lifecycle_cost_usd),
        "formula cost": format_usd(report.lifecycle_formula_usd),
    }
    if last is not None:
        overview.update(
            {
                "final STD GB": f"{last.std_gb:g}",
                "final IA GB": f"{last.ia_gb:g}",
                "final GLACIER GB": f"{last.glacier_gb + last.retrieving_gb:g}",
            }
        )
    return [build_table([{"metric": k, "value": v} for k, v in overview.items()], "Storage lifecycle")]


SUMMARY_BUILDERS = {
    ExperimentKind.ELASTIC_SCALING: _elastic_tables,
    ExperimentKind.STORAGE_COST: _storage_tables,
    ExperimentKind.THROUGHPUT: _throughput_tables,
    ExperimentKind.COST_AWARE_PROVISIONING: _provisioning_tables,
    ExperimentKind.LIFECYCLE_SIMULATION: _lifecycle_tables,
}


def summary_tables(report: ScenarioReport) -> List[Table]:
    return SUMMARY_BUILDERS[report.experiment](report)


def render_summary(report: ScenarioReport) -> str:
    """Plain-text summary of a report, identical for identical reports"""
    recorder = Console(record=True, width=SUMMARY_WIDTH, file=io.StringIO(), color_system=None)
    recorder.print(f"Scenario {report.name} ({report.experiment.value}, seed {report.seed})")
    for table in summary_tables(report):
        recorder.print(table)
    return recorder.export_text(styles=False)


def print_summary(report: ScenarioReport):
    console.print(Panel(f"[bold]{report.name}[/bold] ({report.experiment.value}, seed {report.seed})", style="blue"))
    for table in summary_tables(report):
        console.print(table)
