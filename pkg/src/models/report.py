"""Pydantic models for experiment reports and the rows of every emitted CSV"""

from typing import Any, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.models.scenario import ExperimentKind


class CsvRow(BaseModel):
    """
    Base class for CSV rows

    Field order is the column order. Blank cells read back as None for
    every non-string column.
    """
    model_config = ConfigDict(frozen=True)

    @model_validator(mode="before")
    @classmethod
    def blank_cells(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        cleaned = {}
        for key, value in data.items():
            field = cls.model_fields.get(key)
            if value == "" and field is not None and field.annotation is not str:
                value = None
            cleaned[key] = value
        return cleaned

    @classmethod
    def columns(cls) -> List[str]:
        return list(cls.model_fields)


class JobEventRow(CsvRow):
    job_id: str
    event: str
    at_seconds: int
    detail: str = ""


class JobRow(CsvRow):
    """Per-job times in seconds"""
    job_id: str
    queue: str
    owner_role: str
    state: str
    attempts: int = Field(..., ge=0)
    submit_s: int
    wait_s: int
    staging_s: int
    run_s: int
    stage_out_s: int
    completion_s: Optional[int] = None


class InstanceCostRow(CsvRow):
    instance_id: str
    pool: str
    market: str
    region: str
    az: str
    instance_type: str
    launch_s: int
    ready_s: int
    end_s: int
    end_state: str
    cost_usd: float
    on_demand_usd: float


class AuditRow(CsvRow):
    at: int
    principal: str = ""
    role: str
    resource: str
    action: str
    decision: str


class StorageCostCsvRow(CsvRow):
    strategy: str
    year_usd: float
    access_usd: Optional[float] = None
    access_time: str


class ThroughputRow(CsvRow):
    workers: int
    model_tasks_per_s: float
    simulated_tasks_per_s: float
    completion_s: int
    broker_reads: int
    broker_writes: int


class StrategyCostCsvRow(CsvRow):
    data_gb: float
    strategy: str
    monthly_usd: float


class LifecycleRow(CsvRow):
    day: int
    std_gb: float
    ia_gb: float
    glacier_gb: float
    retrieving_gb: float
    cost_usd: float


class ComparisonRow(CsvRow):
    scenario: str
    strategy: str
    seed: int
    makespan_s: int
    cost_usd: float
    on_demand_usd: float
    avg_wait_s: float
    savings_pct: float
    seed_mismatch: bool = False


class AuditSummary(BaseModel):
    decisions: int = 0
    allowed: int = 0
    denied: int = 0
    role_switches: int = 0
    open_handles: int = 0


class ScenarioReport(BaseModel):
    """Outcome of running one scenario with one seed"""
    name: str = Field(..., description="Scenario name")
    experiment: ExperimentKind
    seed: int
    strategy: str = Field(default="", description="Strategy label used in comparisons")
    jobs: List[JobRow] = Field(default_factory=list)
    job_events: List[JobEventRow] = Field(default_factory=list)
    instance_costs: List[InstanceCostRow] = Field(default_factory=list)
    audit: List[AuditRow] = Field(default_factory=list)
    audit_summary: Optional[AuditSummary] = None
    storage_rows: List[StorageCostCsvRow] = Field(default_factory=list)
    throughput_rows: List[ThroughputRow] = Field(default_factory=list)
    strategy_rows: List[StrategyCostCsvRow] = Field(default_factory=list)
    lifecycle_rows: List[LifecycleRow] = Field(default_factory=list)
    lifecycle_formula_usd: Optional[float] = None
    makespan_s: int = 0
    total_cost_usd: float = 0.0
    on_demand_cost_usd: float = 0.0
    avg_wait_s: float = 0.0
    peak_wait_s: int = 0
    peak_concurrency: int = 0
    revocations: int = 0
    failed_provisions: int = 0
    events_processed: int = 0

    @model_validator(mode="after")
    def check_makespan(self) -> "ScenarioReport":
        completions = [job.completion_s for job in self.jobs if job.completion_s is not None]
        if completions:
            expected = max(completions) - min(job.submit_s for job in self.jobs)
            if self.makespan_s != expected:
                raise ValueError(f"makespan {self.makespan_s} != last completion - first submit ({expected})")
        return self

    @property
    def completed(self) -> int:
        return sum(1 for job in self.jobs if job.state == "completed")

    @property
    def lifecycle_cost_usd(self) -> float:
        return sum(row.cost_usd for row in self.lifecycle_rows)

    def savings_vs(self, baseline: "ScenarioReport") -> float:
        """Percent saved on on-demand-equivalent cost relative to `baseline`"""
        if baseline.on_demand_cost_usd == 0:
            return 0.0
        return 100.0 * (1.0 - self.on_demand_cost_usd / baseline.on_demand_cost_usd)
