"""Broker-bound throughput simulation for zero-work tasks"""

import logging
import math
from dataclasses import dataclass
from typing import List

from src.core.jobmgr import JobManager, effective_throughput
from src.core.rbac import AccessControl
from src.core.simkernel import Event, EventKind, SimKernel
from src.core.workload import throughput_workload
from src.models.job import QueueName
from src.models.scenario import ThroughputParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ThroughputResult:
    worker_count: int
    task_count: int
    model_throughput: float
    completion_s: int
    broker_reads: int
    broker_writes: int

    @property
    def simulated_throughput(self) -> float:
        return self.task_count / self.completion_s if self.completion_s else 0.0


class ThroughputSimulation:
    """
    Every virtual second each worker earns `per_worker_rate` task credits and
    completes whole tasks while that second's broker budget lasts.
    """

    def __init__(self, params: ThroughputParams, worker_count: int, rbac: AccessControl, seed: int = 0):
        self.params = params
        self.worker_count = worker_count
        self.kernel = SimKernel(seed)
        self.jobs = JobManager(rbac=rbac)
        self.workers = [f"w-{index + 1:03d}" for index in range(worker_count)]
        self._credit = [0.0] * worker_count
        self._remaining = params.task_count
        self._completion = 0

    def _on_tick(self, event: Event) -> None:
        at = event.fire_at
        params = self.params
        reads_left = params.capacity.read_capacity
        writes_left = params.capacity.write_capacity
        done_this_tick = 0
        for index, worker_id in enumerate(self.workers):
            self._credit[index] = min(self._credit[index] + params.per_worker_rate, params.per_worker_rate + 1.0)
            while self._credit[index] >= 1.0 and self._remaining > 0:
                if writes_left < params.writes_per_task or reads_left < params.reads_per_task:
                    break
                job_id = self.jobs.worker_poll(worker_id, QueueName.PRODUCTION, at)
                self.jobs.stage_in(job_id, "task-executor", at, worker_id=worker_id)
                self.jobs.start_running(job_id, at)
                self.jobs.finish_running(job_id, at)
                self.jobs.complete(job_id, at)
                reads_left -= params.reads_per_task
                writes_left -= params.writes_per_task
                self._credit[index] -= 1.0
                self._remaining -= 1
                done_this_tick += 1
        if done_this_tick:
            self._completion = at
        if self._remaining > 0:
            self.kernel.schedule_at(at + 1, EventKind.BROKER_TICK)
        else:
            self.kernel.stop()

    def run(self) -> ThroughputResult:
        params = self.params
        for spec in throughput_workload(params.task_count, owner_role=params.caller_role):
            self.jobs.submit(spec, params.caller_role, at=0)
        self.kernel.on(EventKind.BROKER_TICK, self._on_tick)
        self.kernel.schedule_at(1, EventKind.BROKER_TICK)
        self.kernel.run_until(2 * expected_completion_s(params, self.worker_count) + 10)
        model = effective_throughput(
            self.worker_count,
            params.capacity,
            params.per_worker_rate,
            params.reads_per_task,
            params.writes_per_task,
        )
        logger.info(f"{self.worker_count} workers finished {params.task_count} tasks in {self._completion}s")
        return ThroughputResult(
            worker_count=self.worker_count,
            task_count=params.task_count,
            model_throughput=model,
            completion_s=self._completion,
            broker_reads=self.jobs.broker.reads,
            broker_writes=self.jobs.broker.writes,
        )


def simulate_throughput(params: ThroughputParams, rbac: AccessControl, seed: int = 0) -> List[ThroughputResult]:
    """Run the throughput simulation for every configured worker count"""
    return [ThroughputSimulation(params, count, rbac, seed).run() for count in params.worker_counts]


def expected_completion_s(params: ThroughputParams, worker_count: int) -> int:
    rate = effective_throughput(
        worker_count, params.capacity, params.per_worker_rate, params.reads_per_task, params.writes_per_task
    )
    return int(math.ceil(params.task_count / rate))
