"""Service that loads scenarios, runs their experiment and builds reports"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

from src.core import workload
from src.core.config import SimulationConfig
from src.core.costmodel import storage_cost_table, strategy_comparison
from src.core.market import PriceBook
from src.core.rbac import AccessControl, Action, Decision
from src.core.simkernel import RngStream
from src.core.simulation import ElasticRunResult, ElasticScalingSimulation, LifecycleSimulation
from src.core.storagesim import DataObject, StagingModel, StorageSystem, Tier, parse_policy
from src.core.throughput import simulate_throughput
from src.core.trace_generator import generate_traces
from src.models.errors import ConfigurationError
from src.models.job import JobSpec
from src.models.report import (
    AuditRow,
    AuditSummary,
    ComparisonRow,
    InstanceCostRow,
    JobEventRow,
    JobRow,
    LifecycleRow,
    ScenarioReport,
    StorageCostCsvRow,
    StrategyCostCsvRow,
    ThroughputRow,
)
from src.models.scenario import ExperimentKind, MarketKind, Scenario, ScalingPolicy, ScalingStrategy
from src.utils.loaders import load_scenario, read_manifest, read_spot_traces
from src.utils.validation import validate_scenario

logger = logging.getLogger(__name__)


def strategy_label(policy: ScalingPolicy) -> str:
    """Short label such as 'no-scaling-40', 'limited-10' or 'unlimited-spot'"""
    label = policy.strategy.value
    if policy.strategy is ScalingStrategy.NO_SCALING:
        label += f"-{policy.fixed_size}"
    elif policy.strategy is ScalingStrategy.LIMITED:
        label += f"-{policy.max_size}"
    if policy.market is MarketKind.SPOT:
        label += "-spot"
    return label


def peak_concurrency(intervals: Sequence[Tuple[int, int]]) -> int:
    """Largest number of overlapping [start, end) intervals"""
    changes = sorted([(end, -1) for _, end in intervals] + [(start, 1) for start, _ in intervals])
    current = peak = 0
    for _, delta in changes:
        current += delta
        peak = max(peak, current)
    return peak


class ScenarioService:
    """Runs the experiment a scenario describes"""

    def __init__(self, config: Optional[SimulationConfig] = None):
        """
        Initialize the service

        Args:
            config: Process configuration; its virtual-time guard overrides scenarios
        """
        self.config = config or SimulationConfig()

    def load(self, path: str, seed: Optional[int] = None, max_virtual_days: Optional[float] = None) -> Scenario:
        """
        Load a scenario, apply overrides and run the cross-checks

        Raises:
            ScenarioLoadError: The file (or a file it references) does not load
            ConfigurationError: A cross-check failed
        """
        scenario = load_scenario(path)
        updates = {}
        if seed is not None:
            updates["seed"] = seed
        days = max_virtual_days if max_virtual_days is not None else self.config.max_virtual_days
        if days is not None:
            updates["max_virtual_days"] = days
        if updates:
            scenario = scenario.model_copy(update=updates)
        is_valid, issues = validate_scenario(scenario)
        if not is_valid:
            raise ConfigurationError(f"{path}: " + "; ".join(issues))
        return scenario

    def price_book(self, scenario: Scenario) -> PriceBook:
        """Prices plus spot traces from the trace file or the synthetic generator"""
        book = PriceBook(settings=scenario.prices)
        if scenario.spot_trace_path:
            for trace in read_spot_traces(scenario.spot_trace_path):
                book.add_trace(trace)
        elif scenario.synthetic_traces:
            instance_types = sorted(
                {policy.instance_type for policy in scenario.pools.values()} | {scenario.provisioning.instance_type}
            )
            days = max(scenario.provisioning.synthetic_days, int(math.ceil(scenario.max_virtual_days)) + 1)
            rng = RngStream(scenario.seed, "traces")
            for instance_type in instance_types:
                if instance_type not in scenario.prices.on_demand_usd_per_hour:
                    continue
                on_demand = book.on_demand_price(instance_type)
                for trace in generate_traces(rng.child(instance_type), instance_type, on_demand, days=days):
                    book.add_trace(trace)
        return book

    def run(self, scenario: Scenario) -> ScenarioReport:
        """
        Run the scenario's experiment

        Raises:
            ConfigurationError: Inputs that only fail once the run is wired
            SimulationGuardError: Elastic run exceeded the virtual-time guard
        """
        runners = {
            ExperimentKind.ELASTIC_SCALING: self.run_elastic,
            ExperimentKind.STORAGE_COST: self.run_storage_cost,
            ExperimentKind.THROUGHPUT: self.run_throughput,
            ExperimentKind.COST_AWARE_PROVISIONING: self.run_provisioning,
            ExperimentKind.LIFECYCLE_SIMULATION: self.run_lifecycle,
        }
        report = runners[scenario.experiment](scenario)
        logger.info(f"Finished {scenario.name} ({scenario.experiment.value}) with seed {scenario.seed}")
        return report

    def run_path(self, path: str, seed: Optional[int] = None, max_virtual_days: Optional[float] = None) -> ScenarioReport:
        return self.run(self.load(path, seed=seed, max_virtual_days=max_virtual_days))

    def _storage(self, scenario: Scenario, jobs: Sequence[JobSpec], rbac: AccessControl) -> StorageSystem:
        """Manifest objects plus every job input the manifest does not list (placed in STD)"""
        storage = StorageSystem(
            policy=parse_policy(scenario.tier_policy),
            staging=StagingModel(scenario.prices.s3_bandwidth_gb_per_s, scenario.prices.glacier_retrieval_s),
            rbac=rbac,
        )
        if scenario.dataset_manifest_path:
            for obj in read_manifest(scenario.dataset_manifest_path):
                storage.add_object(obj)
        for spec in jobs:
            if spec.input_object_id and spec.input_object_id not in storage.objects:
                storage.add_object(DataObject(spec.input_object_id, spec.input_size_gb, Tier.STD, owner_role=spec.owner_role))
        return storage

    def simulate_elastic(self, scenario: Scenario) -> Tuple[ElasticRunResult, AccessControl]:
        jobs = workload.generate(scenario.workload, RngStream(scenario.seed, "workload"))
        rbac = AccessControl.from_settings(scenario.rbac)
        simulation = ElasticScalingSimulation(
            pools=scenario.pools,
            price_book=self.price_book(scenario),
            jobs=jobs,
            rbac=rbac,
            seed=scenario.seed,
            storage=self._storage(scenario, jobs, rbac),
            watcher_period_s=scenario.jobs.watcher_period_s,
            max_attempts=scenario.jobs.max_attempts,
            max_virtual_s=scenario.max_virtual_seconds,
        )
        return simulation.run(), rbac

    def run_elastic(self, scenario: Scenario) -> ScenarioReport:
        result, rbac = self.simulate_elastic(scenario)

        jobs = []
        for record in result.jobs:
            spans = record.durations()
            jobs.append(
                JobRow(
                    job_id=record.job_id,
                    queue=record.spec.queue.value,
                    owner_role=record.spec.owner_role,
                    state=record.state.value,
                    attempts=record.attempt,
                    submit_s=record.submitted_at,
                    wait_s=spans["wait"],
                    staging_s=spans["staging"],
                    run_s=spans["running"],
                    stage_out_s=spans["stage_out"],
                    completion_s=record.completed_at,
                )
            )
        events = [
            JobEventRow(
                job_id=marker.job_id,
                event=marker.state.value,
                at_seconds=marker.at,
                detail=";".join(part for part in (marker.worker_id or "", marker.detail) if part),
            )
            for marker in result.markers
        ]
        costs = [
            InstanceCostRow(
                instance_id=item.instance.instance_id,
                pool=item.instance.pool,
                market=item.instance.market.value,
                region=item.instance.region,
                az=item.instance.az,
                instance_type=item.instance.instance_type,
                launch_s=item.instance.launch_time,
                ready_s=item.instance.ready_time,
                end_s=item.instance.terminate_time,
                end_state=item.instance.state.value,
                cost_usd=round(item.cost_usd, 6),
                on_demand_usd=round(item.on_demand_usd, 6),
            )
            for item in result.instance_costs
        ]
        audit = [
            AuditRow(
                at=record.at,
                principal=record.principal,
                role=record.acting_role,
                resource=record.resource,
                action=record.action.value,
                decision=record.decision.value,
            )
            for record in result.audit
        ]
        summary = AuditSummary(
            decisions=result.decision_count,
            allowed=sum(1 for r in result.audit if r.decision is Decision.ALLOW),
            denied=sum(1 for r in result.audit if r.decision is Decision.DENY),
            role_switches=sum(
                1 for r in result.audit if r.action is Action.ASSUME and r.decision is Decision.ALLOW
            ),
            open_handles=rbac.held_handles,
        )

        completions = [job.completion_s for job in jobs if job.completion_s is not None]
        makespan = max(completions) - min(job.submit_s for job in jobs) if completions else 0
        waits = [job.wait_s for job in jobs]
        policy = scenario.pools[scenario.workload.queue]
        return ScenarioReport(
            name=scenario.name,
            experiment=scenario.experiment,
            seed=scenario.seed,
            strategy=strategy_label(policy),
            jobs=jobs,
            job_events=events,
            instance_costs=costs,
            audit=audit,
            audit_summary=summary,
            makespan_s=makespan,
            total_cost_usd=round(result.total_cost, 6),
            on_demand_cost_usd=round(result.on_demand_cost, 6),
            avg_wait_s=round(sum(waits) / len(waits), 3) if waits else 0.0,
            peak_wait_s=max(waits) if waits else 0,
            peak_concurrency=peak_concurrency([(row.launch_s, row.end_s) for row in costs]),
            revocations=result.revocations,
            failed_provisions=result.failed_provisions,
            events_processed=result.events_processed,
        )

    def run_storage_cost(self, scenario: Scenario) -> ScenarioReport:
        rows = [
            StorageCostCsvRow(
                strategy=row.strategy,
                year_usd=round(row.year_usd, 2),
                access_usd=None if row.access_usd is None else round(row.access_usd, 2),
                access_time=row.access_time,
            )
            for row in storage_cost_table(scenario.storage, scenario.prices.storage)
        ]
        return ScenarioReport(name=scenario.name, experiment=scenario.experiment, seed=scenario.seed, storage_rows=rows)

    def run_throughput(self, scenario: Scenario) -> ScenarioReport:
        rbac = AccessControl.from_settings(scenario.rbac)
        rows = [
            ThroughputRow(
                workers=result.worker_count,
                model_tasks_per_s=round(result.model_throughput, 4),
                simulated_tasks_per_s=round(result.simulated_throughput, 4),
                completion_s=result.completion_s,
                broker_reads=result.broker_reads,
                broker_writes=result.broker_writes,
            )
            for result in simulate_throughput(scenario.throughput, rbac, scenario.seed)
        ]
        return ScenarioReport(
            name=scenario.name, experiment=scenario.experiment, seed=scenario.seed, throughput_rows=rows
        )

    def run_provisioning(self, scenario: Scenario) -> ScenarioReport:
        params = scenario.provisioning
        rows = [
            StrategyCostCsvRow(data_gb=row.data_gb, strategy=row.strategy.value, monthly_usd=round(row.monthly_usd, 4))
            for row in strategy_comparison(
                self.price_book(scenario),
                params.instance_type,
                params.data_volumes_gb,
                params.home_region,
                start=params.start_s,
                hours=params.hours,
            )
        ]
        return ScenarioReport(
            name=scenario.name, experiment=scenario.experiment, seed=scenario.seed, strategy_rows=rows
        )

    def run_lifecycle(self, scenario: Scenario) -> ScenarioReport:
        objects = read_manifest(scenario.dataset_manifest_path) if scenario.dataset_manifest_path else None
        simulation = LifecycleSimulation(
            params=scenario.lifecycle,
            policy=parse_policy(scenario.tier_policy),
            prices=scenario.prices,
            rng=RngStream(scenario.seed, "lifecycle"),
            rbac=AccessControl.from_settings(scenario.rbac),
            objects=objects,
        )
        result = simulation.run()
        rows = [
            LifecycleRow(
                day=day,
                std_gb=volumes[Tier.STD],
                ia_gb=volumes[Tier.IA],
                glacier_gb=volumes[Tier.GLACIER],
                retrieving_gb=volumes[Tier.RETRIEVING],
                cost_usd=round(cost, 6),
            )
            for day, (volumes, cost) in enumerate(zip(result.daily_volumes, result.daily_costs), 1)
        ]
        return ScenarioReport(
            name=scenario.name,
            experiment=scenario.experiment,
            seed=scenario.seed,
            lifecycle_rows=rows,
            lifecycle_formula_usd=round(result.formula_cost, 2),
        )

    def compare(self, reports: Sequence[ScenarioReport]) -> List[ComparisonRow]:
        """
        One row per report with savings against the first (baseline) report

        Reports whose seed differs from the baseline's are flagged and logged,
        but still compared.

        Raises:
            ConfigurationError: No reports, or a report is not an elastic-scaling run
        """
        if not reports:
            raise ConfigurationError("compare needs at least one report")
        for report in reports:
            if report.experiment is not ExperimentKind.ELASTIC_SCALING:
                raise ConfigurationError(f"{report.name} is a {report.experiment.value} run; compare needs elastic-scaling")
        baseline = reports[0]
        rows = []
        for report in reports:
            mismatch = report.seed != baseline.seed
            if mismatch:
                logger.warning(
                    f"Workload seed of {report.name} ({report.seed}) differs from baseline {baseline.name} ({baseline.seed})"
                )
            rows.append(
                ComparisonRow(
                    scenario=report.name,
                    strategy=report.strategy,
                    seed=report.seed,
                    makespan_s=report.makespan_s,
                    cost_usd=round(report.total_cost_usd, 2),
                    on_demand_usd=round(report.on_demand_cost_usd, 2),
                    avg_wait_s=round(report.avg_wait_s, 1),
                    savings_pct=round(report.savings_vs(baseline), 2),
                    seed_mismatch=mismatch,
                )
            )
        return rows
