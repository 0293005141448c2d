"""CSV and summary output for scenario reports, with matching readers"""

import csv
import logging
import os
from typing import Dict, List, Sequence, Tuple, Type, TypeVar

from pydantic import ValidationError

from src.models.errors import ScenarioLoadError
from src.models.report import (
    AuditRow,
    ComparisonRow,
    CsvRow,
    InstanceCostRow,
    JobEventRow,
    JobRow,
    LifecycleRow,
    ScenarioReport,
    StorageCostCsvRow,
    StrategyCostCsvRow,
    ThroughputRow,
)
from src.models.scenario import ExperimentKind
from src.utils.formatting import render_summary

logger = logging.getLogger(__name__)

RowT = TypeVar("RowT", bound=CsvRow)

# file name, report attribute, row model
REPORT_FILES: Dict[ExperimentKind, List[Tuple[str, str, Type[CsvRow]]]] = {
    ExperimentKind.ELASTIC_SCALING: [
        ("job_events.csv", "job_events", JobEventRow),
        ("jobs.csv", "jobs", JobRow),
        ("cost.csv", "instance_costs", InstanceCostRow),
        ("audit.csv", "audit", AuditRow),
    ],
    ExperimentKind.STORAGE_COST: [("cost.csv", "storage_rows", StorageCostCsvRow)],
    ExperimentKind.THROUGHPUT: [("throughput.csv", "throughput_rows", ThroughputRow)],
    ExperimentKind.COST_AWARE_PROVISIONING: [("cost.csv", "strategy_rows", StrategyCostCsvRow)],
    ExperimentKind.LIFECYCLE_SIMULATION: [("lifecycle.csv", "lifecycle_rows", LifecycleRow)],
}

SUMMARY_FILE = "summary.txt"
COMPARISON_FILE = "comparison.csv"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def write_rows(path: str, rows: Sequence[CsvRow], row_type: Type[CsvRow]) -> None:
    """Write rows with the model's fields as the header"""
    columns = row_type.columns()
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(getattr(row, column)) for column in columns])


def read_rows(path: str, row_type: Type[RowT]) -> List[RowT]:
    """
    Read a CSV written by write_rows

    Raises:
        ScenarioLoadError: Missing file, unexpected header or invalid row
    """
    rows = []
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames != row_type.columns():
                raise ScenarioLoadError(path, f"expected header {','.join(row_type.columns())}", 1)
            for record in reader:
                try:
                    rows.append(row_type.model_validate(record))
                except ValidationError as e:
                    raise ScenarioLoadError(path, e.errors()[0]["msg"], reader.line_num)
    except OSError as e:
        raise ScenarioLoadError(path, f"cannot read: {e.strerror or e}")
    return rows


def read_job_events(path: str) -> List[JobEventRow]:
    return read_rows(path, JobEventRow)


def read_jobs(path: str) -> List[JobRow]:
    return read_rows(path, JobRow)


def read_instance_costs(path: str) -> List[InstanceCostRow]:
    return read_rows(path, InstanceCostRow)


def read_audit(path: str) -> List[AuditRow]:
    return read_rows(path, AuditRow)


def read_storage_costs(path: str) -> List[StorageCostCsvRow]:
    return read_rows(path, StorageCostCsvRow)


def read_throughput(path: str) -> List[ThroughputRow]:
    return read_rows(path, ThroughputRow)


def read_strategy_costs(path: str) -> List[StrategyCostCsvRow]:
    return read_rows(path, StrategyCostCsvRow)


def read_lifecycle(path: str) -> List[LifecycleRow]:
    return read_rows(path, LifecycleRow)


def read_comparison(path: str) -> List[ComparisonRow]:
    return read_rows(path, ComparisonRow)


def report_dir(out_dir: str, report: ScenarioReport) -> str:
    return os.path.join(out_dir, report.name)


def write_report(report: ScenarioReport, out_dir: str) -> List[str]:
    """
    Write a report's CSVs and summary under <out_dir>/<scenario name>/

    Args:
        report: Report to write
        out_dir: Base output directory

    Returns:
        Paths written, summary last
    """
    target = report_dir(out_dir, report)
    os.makedirs(target, exist_ok=True)
    written = []
    for filename, attribute, row_type in REPORT_FILES[report.experiment]:
        path = os.path.join(target, filename)
        write_rows(path, getattr(report, attribute), row_type)
        written.append(path)
    summary_path = os.path.join(target, SUMMARY_FILE)
    with open(summary_path, "w", encoding="utf-8") as f:
        f.write(render_summary(report))
    written.append(summary_path)
    logger.info(f"Wrote {len(written)} files to {target}")
    return written


def write_comparison(rows: Sequence[ComparisonRow], out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, COMPARISON_FILE)
    write_rows(path, rows, ComparisonRow)
    return path
