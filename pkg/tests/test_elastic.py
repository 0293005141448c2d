"""Tests for the elastic-scaling experiment"""

from functools import lru_cache
from statistics import mean

import pytest

from src.core.config import SimulationConfig
from src.core.market import PriceBook
from src.core.rbac import Action, Decision
from src.core.simulation import ElasticScalingSimulation
from src.core.storagesim import DataObject, StagingModel, StorageSystem, Tier, parse_policy
from src.models.errors import SimulationGuardError
from src.models.job import JobSpec, JobState, QueueName
from src.models.scenario import ScalingPolicy
from src.services.scenario_service import ScenarioService, peak_concurrency, strategy_label
from src.utils.loaders import read_spot_traces
from tests.conftest import RESOURCES, scenario_path

SEEDS = range(1, 6)


@lru_cache(maxsize=None)
def report(name: str, seed: int):
    return ScenarioService(SimulationConfig()).run_path(scenario_path(name), seed=seed)


def average(name: str, metric) -> float:
    return mean(metric(report(name, seed)) for seed in SEEDS)


class TestScalingStrategies:
    """Cost and makespan of the scaling strategies over seeds 1..5"""

    def test_every_job_completes(self):
        for name in ("elastic_no_scaling_40", "elastic_limited_10", "elastic_unlimited"):
            result = report(name, 1)
            assert result.completed == 40
            assert all(job.attempts == 1 for job in result.jobs)

    def test_unlimited_saves_against_fixed_pool(self):
        savings = mean(
            report("elastic_unlimited", seed).savings_vs(report("elastic_no_scaling_40", seed)) for seed in SEEDS
        )
        assert 50.0 <= savings <= 75.0

    def test_larger_fixed_pool_costs_more(self):
        for seed in SEEDS:
            assert report("elastic_no_scaling_40", seed).total_cost_usd > report("elastic_no_scaling_20", seed).total_cost_usd

    def test_unlimited_wait_is_provisioning_delay(self):
        wait_minutes = average("elastic_unlimited", lambda r: r.avg_wait_s) / 60
        assert 4.0 <= wait_minutes <= 12.0

    def test_limited_pool_stretches_makespan(self):
        limited = average("elastic_limited_10", lambda r: r.makespan_s)
        unlimited = average("elastic_unlimited", lambda r: r.makespan_s)
        assert limited >= unlimited + 2 * 3600

    def test_limited_pool_never_exceeds_bound(self):
        assert report("elastic_limited_10", 1).peak_concurrency <= 10

    def test_limited_pool_size_bounded_at_every_instant(self):
        for seed in SEEDS:
            rows = report("elastic_limited_10", seed).instance_costs
            assert peak_concurrency([(row.launch_s, row.end_s) for row in rows]) <= 10

    def test_fixed_pool_is_prewarmed(self):
        result = report("elastic_no_scaling_40", 1)
        assert len(result.instance_costs) == 40
        assert all(row.launch_s == 0 and row.ready_s == 0 for row in result.instance_costs)

    def test_every_role_handle_released(self):
        result = report("elastic_unlimited", 1)
        summary = result.audit_summary
        assert summary.decisions == len(result.audit)
        assert summary.open_handles == 0
        assert summary.role_switches == 40
        assert summary.denied == 0


class TestSpotMarket:
    def test_flat_sixteenth_price(self):
        result = report("elastic_unlimited_spot", 1)
        assert result.completed == 40
        assert result.total_cost_usd == pytest.approx(result.on_demand_cost_usd / 16, rel=0.02)
        assert all(row.market == "spot" for row in result.instance_costs)

    def test_revocations_are_survived(self):
        result = report("elastic_spot_revocation", 1)
        assert result.completed == 40
        assert result.revocations > 0
        assert max(job.attempts for job in result.jobs) > 1
        assert any(row.end_state == "revoked" for row in result.instance_costs)


@pytest.fixture
def spike_book(prices):
    book = PriceBook(settings=prices)
    for trace in read_spot_traces(f"{RESOURCES}/traces/revocation_spikes.csv"):
        book.add_trace(trace)
    return book


class TestHandBuiltRuns:
    def test_job_survives_two_revocations(self, spike_book, rbac):
        job = JobSpec(job_id="job-1", submit_time=0, nominal_duration=3400)
        pool = ScalingPolicy(strategy="unlimited", market="spot")
        result = ElasticScalingSimulation({QueueName.PRODUCTION: pool}, spike_book, [job], rbac, seed=1).run()
        record = result.jobs[0]
        assert record.state is JobState.COMPLETED
        assert record.attempt == 3
        assert [m.state for m in record.history].count(JobState.RESUBMITTED) == 2
        assert result.revocations == 2
        assert result.failed_provisions == 4
        assert record.completed_at == 7620 + 3400

    def test_glacier_input_waits_for_restore(self, prices, rbac):
        storage = StorageSystem(parse_policy("STD30-IA60-Glacier"), StagingModel(0.1, 14400), rbac)
        storage.add_object(DataObject("dataset/public/archive", 10.0, Tier.GLACIER))
        job = JobSpec(
            job_id="job-1",
            submit_time=0,
            nominal_duration=600,
            input_size_gb=10,
            input_object_id="dataset/public/archive",
        )
        pool = ScalingPolicy(strategy="unlimited")
        result = ElasticScalingSimulation(
            {QueueName.PRODUCTION: pool}, PriceBook(settings=prices), [job], rbac, seed=1, storage=storage
        ).run()
        record = result.jobs[0]
        assert JobState.WAITING_FOR_RETRIEVAL in [m.state for m in record.history]
        assert record.started_at == 14400 + 300 + 100
        assert record.completed_at == 14400 + 300 + 100 + 600
        assert storage.get("dataset/public/archive").tier is Tier.STD

    def test_denied_glacier_input_is_rejected_not_stalled(self, prices, rbac):
        storage = StorageSystem(parse_policy("STD30-IA60-Glacier"), StagingModel(0.1, 14400), rbac)
        storage.add_object(DataObject("dataset/wos/archive", 10.0, Tier.GLACIER, owner_role="kotta-read-WOS-private"))
        jobs = [
            JobSpec(
                job_id="denied",
                submit_time=0,
                nominal_duration=600,
                input_size_gb=10,
                input_object_id="dataset/wos/archive",
            ),
            JobSpec(job_id="allowed", submit_time=0, nominal_duration=600),
        ]
        pool = ScalingPolicy(strategy="unlimited")
        result = ElasticScalingSimulation(
            {QueueName.PRODUCTION: pool},
            PriceBook(settings=prices),
            jobs,
            rbac,
            seed=1,
            storage=storage,
            max_virtual_s=2 * 86400,
        ).run()
        assert result.rejected_jobs == 1
        assert [record.job_id for record in result.jobs] == ["allowed"]
        assert result.jobs[0].state is JobState.COMPLETED
        assert storage.get("dataset/wos/archive").tier is Tier.GLACIER

    def test_private_input_is_read_under_the_owner_role(self, prices, rbac):
        storage = StorageSystem(parse_policy("STD30-IA60-Glacier"), StagingModel(0.1, 14400), rbac)
        storage.add_object(DataObject("dataset/wos/citations", 5.0, Tier.STD, owner_role="kotta-read-WOS-private"))
        job = JobSpec(
            job_id="job-1",
            submit_time=0,
            nominal_duration=600,
            input_size_gb=5,
            input_object_id="dataset/wos/citations",
            owner_role="kotta-read-WOS-private",
        )
        pool = ScalingPolicy(strategy="unlimited")
        result = ElasticScalingSimulation(
            {QueueName.PRODUCTION: pool}, PriceBook(settings=prices), [job], rbac, seed=1, storage=storage
        ).run()
        assert result.jobs[0].state is JobState.COMPLETED
        reads = [r for r in result.audit if r.resource == "dataset/wos/citations"]
        assert len(reads) == 1
        assert reads[0].decision is Decision.ALLOW
        assert reads[0].acting_role == "kotta-read-WOS-private"
        assert reads[0].principal.startswith("i-")
        switch = [r for r in result.audit if r.action is Action.ASSUME]
        assert switch[0].resource == "role/kotta-read-WOS-private"
        assert switch[0].decision is Decision.ALLOW
        assert result.audit.index(switch[0]) < result.audit.index(reads[0])
        assert rbac.held_handles == 0
        assert len(result.audit) == result.decision_count

    def test_development_pool_keeps_a_warm_instance(self, prices, rbac):
        jobs = [
            JobSpec(job_id="dev-1", submit_time=0, nominal_duration=120, queue=QueueName.DEVELOPMENT),
            JobSpec(job_id="prod-1", submit_time=0, nominal_duration=120),
        ]
        pools = {
            QueueName.DEVELOPMENT: ScalingPolicy(strategy="unlimited", pool="development", min_size=1),
            QueueName.PRODUCTION: ScalingPolicy(strategy="unlimited"),
        }
        result = ElasticScalingSimulation(pools, PriceBook(settings=prices), jobs, rbac, seed=1).run()
        by_id = {record.job_id: record for record in result.jobs}
        assert by_id["dev-1"].durations()["wait"] == 0
        assert by_id["prod-1"].durations()["wait"] == 300
        assert {item.instance.pool for item in result.instance_costs} == {"development", "production"}
        development = [
            (item.instance.launch_time, item.instance.terminate_time)
            for item in result.instance_costs
            if item.instance.pool == "development"
        ]
        for at in range(0, result.end_time, 60):
            assert any(start <= at < end for start, end in development), at

    def test_idle_instance_is_reused(self, prices, rbac):
        jobs = [
            JobSpec(job_id="first", submit_time=0, nominal_duration=600),
            JobSpec(job_id="second", submit_time=1800, nominal_duration=600),
        ]
        pool = ScalingPolicy(strategy="unlimited")
        result = ElasticScalingSimulation({QueueName.PRODUCTION: pool}, PriceBook(settings=prices), jobs, rbac, seed=1).run()
        first, second = result.jobs
        assert len(result.instance_costs) == 1
        assert first.worker_id == second.worker_id
        assert second.durations()["wait"] == 0

    def test_guard_trips(self, prices, rbac):
        job = JobSpec(job_id="job-1", submit_time=0, nominal_duration=7200)
        pool = ScalingPolicy(strategy="unlimited")
        simulation = ElasticScalingSimulation(
            {QueueName.PRODUCTION: pool}, PriceBook(settings=prices), [job], rbac, seed=1, max_virtual_s=3600
        )
        with pytest.raises(SimulationGuardError):
            simulation.run()


class TestReportHelpers:
    def test_strategy_labels(self):
        assert strategy_label(ScalingPolicy(strategy="no-scaling", fixed_size=40)) == "no-scaling-40"
        assert strategy_label(ScalingPolicy(strategy="limited", max_size=10)) == "limited-10"
        assert strategy_label(ScalingPolicy(strategy="unlimited", market="spot")) == "unlimited-spot"

    def test_peak_concurrency(self):
        assert peak_concurrency([(0, 10), (5, 15), (10, 20)]) == 2
        assert peak_concurrency([]) == 0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
