"""Tests for report CSVs, summaries and comparisons"""

import os

import pytest

from src.core.config import SimulationConfig
from src.models.errors import ConfigurationError, ScenarioLoadError
from src.models.report import JobRow, ScenarioReport
from src.models.scenario import ExperimentKind
from src.services.report_writer import (
    read_comparison,
    read_instance_costs,
    read_jobs,
    read_lifecycle,
    read_storage_costs,
    read_strategy_costs,
    read_throughput,
    write_comparison,
    write_report,
)
from src.services.scenario_service import ScenarioService
from tests.conftest import scenario_path


@pytest.fixture(scope="module")
def service():
    return ScenarioService(SimulationConfig())


def files(directory: str):
    contents = {}
    for name in sorted(os.listdir(directory)):
        with open(os.path.join(directory, name), "rb") as f:
            contents[name] = f.read()
    return contents


class TestWriteReport:
    def test_storage_cost_report(self, service, tmp_path):
        report = service.run_path(scenario_path("storage_cost"))
        written = write_report(report, str(tmp_path))
        assert [os.path.basename(p) for p in written] == ["cost.csv", "summary.txt"]
        rows = read_storage_costs(written[0])
        assert [row.year_usd for row in rows] == pytest.approx([3546.0, 1500.0, 840.0, 1670.5, 880.26, 974.2], abs=1.0)
        assert rows[0].access_usd is None
        with open(written[1], encoding="utf-8") as f:
            summary = f.read()
        assert "Storage cost projection" in summary
        assert "$3,546.00" in summary

    def test_elastic_report_files(self, service, tmp_path):
        report = service.run_path(scenario_path("elastic_unlimited"))
        written = write_report(report, str(tmp_path))
        assert [os.path.basename(p) for p in written] == [
            "job_events.csv",
            "jobs.csv",
            "cost.csv",
            "audit.csv",
            "summary.txt",
        ]
        jobs = read_jobs(written[1])
        assert len(jobs) == 40
        assert all(job.completion_s is not None for job in jobs)
        for job in jobs:
            assert job.wait_s + job.staging_s + job.run_s + job.stage_out_s == job.completion_s - job.submit_s
        costs = read_instance_costs(written[2])
        assert sum(row.cost_usd for row in costs) == pytest.approx(report.total_cost_usd, abs=1e-4)

    def test_same_seed_writes_identical_bytes(self, service, tmp_path):
        for run in ("a", "b"):
            write_report(service.run_path(scenario_path("elastic_limited_10")), str(tmp_path / run))
        first = files(str(tmp_path / "a" / "elastic_limited_10"))
        second = files(str(tmp_path / "b" / "elastic_limited_10"))
        assert first == second

    def test_throughput_and_lifecycle_reports(self, service, tmp_path):
        throughput = write_report(service.run_path(scenario_path("throughput")), str(tmp_path))
        assert [row.workers for row in read_throughput(throughput[0])] == [1, 2, 4, 8, 16, 32]
        lifecycle = write_report(service.run_path(scenario_path("lifecycle")), str(tmp_path))
        rows = read_lifecycle(lifecycle[0])
        assert len(rows) == 365
        assert rows[0].std_gb + rows[0].ia_gb + rows[0].glacier_gb + rows[0].retrieving_gb == pytest.approx(10000)

    def test_cost_aware_provisioning_report(self, service, tmp_path):
        report = service.run_path(scenario_path("cost_aware_provisioning"))
        written = write_report(report, str(tmp_path))
        assert [os.path.basename(p) for p in written] == ["cost.csv", "summary.txt"]
        rows = read_strategy_costs(written[0])
        assert rows == report.strategy_rows
        assert len(rows) == 8 * 4
        by_volume = {}
        for row in rows:
            by_volume.setdefault(row.data_gb, {})[row.strategy] = row.monthly_usd
        free = by_volume[0.0]
        assert free["cheapest-across-regions"] <= free["cheapest-within-region"] <= free["cheapest-single-az"]
        assert free["cheapest-single-az"] <= free["most-expensive-single-az"]
        assert all(costs["cheapest-within-region"] == free["cheapest-within-region"] for costs in by_volume.values())

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "jobs.csv"
        path.write_text("job,state\nx,completed\n", encoding="utf-8")
        with pytest.raises(ScenarioLoadError) as info:
            read_jobs(str(path))
        assert info.value.line == 1


class TestReportModel:
    def test_makespan_must_match_jobs(self):
        job = JobRow(
            job_id="j",
            queue="production",
            owner_role="r",
            state="completed",
            attempts=1,
            submit_s=10,
            wait_s=0,
            staging_s=0,
            run_s=90,
            stage_out_s=0,
            completion_s=100,
        )
        ScenarioReport(name="x", experiment=ExperimentKind.ELASTIC_SCALING, seed=1, jobs=[job], makespan_s=90)
        with pytest.raises(ValueError):
            ScenarioReport(name="x", experiment=ExperimentKind.ELASTIC_SCALING, seed=1, jobs=[job], makespan_s=100)


class TestCompare:
    def test_compare_against_baseline(self, service, tmp_path):
        baseline = service.run_path(scenario_path("elastic_no_scaling_40"))
        unlimited = service.run_path(scenario_path("elastic_unlimited"))
        other_seed = service.run_path(scenario_path("elastic_unlimited"), seed=2)
        rows = service.compare([baseline, unlimited, other_seed])
        assert rows[0].savings_pct == 0.0
        assert rows[0].strategy == "no-scaling-40"
        assert rows[1].savings_pct > 0
        assert [row.seed_mismatch for row in rows] == [False, False, True]
        path = write_comparison(rows, str(tmp_path))
        assert read_comparison(path) == rows

    def test_compare_needs_elastic_reports(self, service):
        with pytest.raises(ConfigurationError):
            service.compare([service.run_path(scenario_path("storage_cost"))])
        with pytest.raises(ConfigurationError):
            service.compare([])


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
