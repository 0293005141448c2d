"""Tests for synthetic workload generation"""

import numpy as np
import pytest

from src.core.simkernel import RngStream
from src.core.workload import apply_jitter, generate, sample_durations, throughput_workload
from src.models.errors import ConfigurationError
from src.models.job import QueueName
from src.models.scenario import WorkloadParams

MIX = [(3600, 0.4), (10800, 0.2), (14400, 0.4)]


def make_params(**overrides) -> WorkloadParams:
    values = {"job_count": 40, "mean_inter_arrival_s": 360, "duration_mix": MIX}
    values.update(overrides)
    return WorkloadParams(**values)


class TestGenerate:
    """Workload statistics and determinism"""

    def test_mean_gap_within_two_percent(self):
        params = make_params(job_count=50000)
        jobs = generate(params, RngStream(11, "workload"))
        mean_gap = jobs[-1].submit_time / len(jobs)
        assert mean_gap == pytest.approx(360, rel=0.02)

    def test_duration_mix_frequencies(self):
        params = make_params()
        durations = sample_durations(params, RngStream(3, "durations"), 100000)
        for duration, probability in MIX:
            assert np.mean(durations == duration) == pytest.approx(probability, abs=0.01)

    def test_same_seed_same_jobs(self):
        params = make_params()
        assert generate(params, RngStream(5, "workload")) == generate(params, RngStream(5, "workload"))

    def test_different_seed_different_jobs(self):
        params = make_params()
        assert generate(params, RngStream(5, "workload")) != generate(params, RngStream(6, "workload"))

    def test_jobs_are_ordered_and_reference_inputs(self):
        jobs = generate(make_params(), RngStream(1, "workload"))
        times = [job.submit_time for job in jobs]
        assert times == sorted(times)
        assert jobs[0].job_id == "job-001"
        for job in jobs:
            assert job.input_object_id == f"dataset/public/input-{job.input_size_gb:g}gb"

    def test_jitter_stays_in_range(self):
        nominal = np.full(1000, 3600)
        jittered = apply_jitter(nominal, 0.05, RngStream(2, "jitter"))
        assert jittered.min() >= 3420
        assert jittered.max() <= 3780

    def test_arrival_rate_converts_to_gap(self):
        params = WorkloadParams(job_count=1, arrival_rate_per_hour=10, duration_mix=MIX)
        assert params.mean_inter_arrival_s == 360

    def test_unnormalised_mix_rejected(self):
        with pytest.raises(ValueError):
            make_params(duration_mix=[(3600, 0.5), (7200, 0.4)])

    def test_mix_sum_tolerance(self):
        make_params(duration_mix=[(600, 0.1), (1200, 0.2), (1800, 0.7)])
        near_miss = [(3600, 0.5), (7200, 0.5000001)]
        with pytest.raises(ValueError):
            make_params(duration_mix=near_miss)
        params = make_params().model_copy(update={"duration_mix": near_miss})
        with pytest.raises(ConfigurationError):
            generate(params, RngStream(1, "workload"))

    def test_empty_mix_rejected(self):
        params = make_params().model_copy(update={"duration_mix": []})
        with pytest.raises(ConfigurationError):
            generate(params, RngStream(1, "workload"))


class TestThroughputWorkload:
    def test_zero_work_tasks_at_time_zero(self):
        tasks = throughput_workload(10)
        assert len(tasks) == 10
        assert all(t.submit_time == 0 and t.nominal_duration == 0 for t in tasks)
        assert all(t.queue is QueueName.PRODUCTION for t in tasks)

    def test_task_count_must_be_positive(self):
        with pytest.raises(ConfigurationError):
            throughput_workload(0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
