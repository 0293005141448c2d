"""Synthetic workload generation"""

import logging
from typing import List

import numpy as np

from src.core.simkernel import RngStream
from src.models.errors import ConfigurationError
from src.models.job import JobSpec, QueueName
from src.models.scenario import WorkloadParams

logger = logging.getLogger(__name__)


def _check_params(params: WorkloadParams) -> None:
    if not params.duration_mix:
        raise ConfigurationError("duration_mix must not be empty")
    total = sum(probability for _, probability in params.duration_mix)
    if abs(total - 1.0) > 1e-9:
        raise ConfigurationError(f"duration_mix probabilities sum to {total}, expected 1")
    if params.mean_inter_arrival_s <= 0:
        raise ConfigurationError("mean_inter_arrival_s must be positive")


def sample_submit_times(params: WorkloadParams, rng: RngStream, count: int) -> np.ndarray:
    """Integer submit times from cumulative exponential gaps"""
    gaps = rng.exponential(params.mean_inter_arrival_s, size=count)
    return np.rint(np.cumsum(gaps)).astype(np.int64)


def sample_durations(params: WorkloadParams, rng: RngStream, count: int) -> np.ndarray:
    """Nominal durations drawn from the mix, before jitter"""
    durations = np.array([duration for duration, _ in params.duration_mix], dtype=np.int64)
    weights = np.array([probability for _, probability in params.duration_mix], dtype=float)
    weights = weights / weights.sum()
    return rng.choice(durations, size=count, p=weights)


def apply_jitter(durations: np.ndarray, fraction: float, rng: RngStream) -> np.ndarray:
    """Scale each duration by a factor drawn uniformly from [1 - fraction, 1 + fraction]"""
    if fraction == 0:
        return durations.astype(np.int64)
    factors = rng.uniform(1.0 - fraction, 1.0 + fraction, size=len(durations))
    return np.maximum(1, np.rint(durations * factors)).astype(np.int64)


def input_object_id(prefix: str, size_gb: float) -> str:
    return f"{prefix}{size_gb:g}gb"


def generate(params: WorkloadParams, rng: RngStream) -> List[JobSpec]:
    """
    Generate a workload

    Gaps, durations, jitter and input sizes each come from their own child
    stream of `rng`, so the same (params, seed) always yields the same jobs.

    Args:
        params: Workload description
        rng: Parent random stream

    Returns:
        Jobs ordered by submit time

    Raises:
        ConfigurationError: If the duration mix is empty or not normalised
    """
    _check_params(params)
    count = params.job_count
    submit_times = sample_submit_times(params, rng.child("arrivals"), count)
    durations = apply_jitter(
        sample_durations(params, rng.child("durations"), count),
        params.duration_jitter_fraction,
        rng.child("jitter"),
    )
    sizes = rng.child("sizes").choice(np.array(params.input_size_choices_gb, dtype=float), size=count)

    jobs = []
    width = max(3, len(str(count)))
    for index in range(count):
        size = float(sizes[index])
        object_id = input_object_id(params.input_object_prefix, size) if params.input_object_prefix else None
        jobs.append(
            JobSpec(
                job_id=f"job-{index + 1:0{width}d}",
                submit_time=int(submit_times[index]),
                nominal_duration=int(durations[index]),
                input_size_gb=size,
                output_size_gb=params.output_size_gb,
                queue=params.queue,
                owner_role=params.owner_role,
                executable=params.executable,
                input_object_id=object_id,
            )
        )
    logger.info(
        f"Generated {count} jobs over {jobs[-1].submit_time}s "
        f"(mean gap {params.mean_inter_arrival_s:.0f}s)"
    )
    return jobs


def throughput_workload(
    task_count: int,
    owner_role: str = "kotta-public-only",
    queue: QueueName = QueueName.PRODUCTION,
) -> List[JobSpec]:
    """Zero-duration, zero-data tasks all submitted at t=0"""
    if task_count <= 0:
        raise ConfigurationError("task_count must be positive")
    width = len(str(task_count))
    return [
        JobSpec(
            job_id=f"task-{index + 1:0{width}d}",
            submit_time=0,
            nominal_duration=0,
            queue=queue,
            owner_role=owner_role,
            executable="noop",
        )
        for index in range(task_count)
    ]
