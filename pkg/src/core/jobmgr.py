"""
Queue-based job management

Jobs are submitted to a per-pool FIFO queue after an authorization check.
Workers poll the head of their queue, stage input data under the job owner's
role, run, stage out and write status markers. A periodic watcher notices
lost workers and puts their jobs back on the queue.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Optional, Tuple

from src.core.rbac import AccessControl, Action, Decision
from src.core.storagesim import StagingModel, StorageSystem
from src.models.errors import AccessDeniedError, InvalidTransitionError, JobValidationError, ObjectNotFoundError
from src.models.job import ASSIGNED_STATES, JobRecord, JobSpec, JobState, QueueName, StatusMarker, WorkerStats
from src.models.scenario import BrokerCapacity

logger = logging.getLogger(__name__)

WORKER_ROLE = "task-executor"


@dataclass
class BrokerCounters:
    """Operations issued against the queue/status broker"""
    reads: int = 0
    writes: int = 0


@dataclass
class LostWorker:
    worker_id: str
    job_id: str
    attempt: int
    at: int


def effective_throughput(
    worker_count: int,
    capacity: BrokerCapacity,
    per_worker_rate: float = 4.90,
    reads_per_task: int = 1,
    writes_per_task: int = 5,
) -> float:
    """
    Tasks per second the system sustains with `worker_count` workers

    Linear in workers until the broker's read or write capacity is the
    bottleneck.
    """
    if worker_count <= 0:
        return 0.0
    limits = [capacity.write_capacity / writes_per_task]
    if reads_per_task > 0:
        limits.append(capacity.read_capacity / reads_per_task)
    return min(worker_count * per_worker_rate, *limits)


@dataclass
class JobManager:
    """Queues, job records and the failure watcher"""
    rbac: AccessControl
    storage: Optional[StorageSystem] = None
    staging: StagingModel = field(default_factory=StagingModel)
    max_attempts: int = 0
    jobs: Dict[str, JobRecord] = field(default_factory=dict)
    queues: Dict[QueueName, Deque[str]] = field(
        default_factory=lambda: {queue: deque() for queue in QueueName}
    )
    deferred: Dict[str, List[str]] = field(default_factory=dict)
    broker: BrokerCounters = field(default_factory=BrokerCounters)
    markers: List[StatusMarker] = field(default_factory=list)
    rejected: int = 0
    _lost: List[LostWorker] = field(default_factory=list)
    _handles: Dict[str, object] = field(default_factory=dict)

    def get(self, job_id: str) -> JobRecord:
        try:
            return self.jobs[job_id]
        except KeyError:
            raise ObjectNotFoundError(f"Unknown job: {job_id}")

    def queue_depth(self, queue: QueueName) -> int:
        return len(self.queues[queue])

    @property
    def unfinished(self) -> int:
        return sum(1 for record in self.jobs.values() if not record.is_terminal)

    def all_finished(self) -> bool:
        return self.unfinished == 0

    def _mark(self, record: JobRecord, state: JobState, at: int, **kwargs) -> StatusMarker:
        marker = record.transition(state, at, **kwargs)
        self.markers.append(marker)
        return marker

    def submit(self, spec: JobSpec, caller_role: str, at: Optional[int] = None, principal: Optional[str] = None) -> str:
        """
        Accept a job onto its queue

        Args:
            spec: Job to submit
            caller_role: Role of the submitting user
            at: Submit time (defaults to the spec's submit time)
            principal: Submitting user

        Returns:
            The job id

        Raises:
            JobValidationError: Duplicate job id
            AccessDeniedError: The role may not submit to the queue or read a Glacier input
        """
        at = spec.submit_time if at is None else at
        if spec.job_id in self.jobs:
            raise JobValidationError(f"Duplicate job id: {spec.job_id}")
        resource = f"queue/{spec.queue.value}"
        if self.rbac.authorize(caller_role, resource, Action.SUBMIT, at, principal=principal) is Decision.DENY:
            self.rejected += 1
            raise AccessDeniedError(caller_role, resource, Action.SUBMIT.value, self.rbac.audit_log[-1].reason)

        if spec.owner_role != caller_role:
            spec = spec.model_copy(update={"owner_role": caller_role})

        # a denied restore must leave no job record behind
        plan = None
        object_id = spec.input_object_id
        if self.storage is not None and object_id and self.storage.needs_retrieval(object_id):
            try:
                plan = self.storage.request(object_id, at, caller_role, principal=principal)
            except AccessDeniedError:
                self.rejected += 1
                raise

        record = JobRecord(spec=spec)
        self.jobs[spec.job_id] = record
        self.markers.append(record.record_submission(at))
        self.broker.writes += 1
        self._mark(record, JobState.QUEUED, at)

        if plan is not None:
            record.retrieval_object = object_id
            self._mark(record, JobState.WAITING_FOR_RETRIEVAL, at, detail=f"ready_at={plan.ready_at}")
            self.deferred.setdefault(object_id, []).append(spec.job_id)
        else:
            self.queues[spec.queue].append(spec.job_id)
        return spec.job_id

    def release_deferred(self, object_id: str, at: int) -> List[str]:
        """Re-queue every job that was waiting for `object_id` to be restored"""
        released = self.deferred.pop(object_id, [])
        for job_id in released:
            record = self.jobs[job_id]
            record.retrieval_object = None
            self._mark(record, JobState.QUEUED, at, detail=f"restored={object_id}")
            self.queues[record.spec.queue].append(job_id)
        return released

    def worker_poll(self, worker_id: str, queue: QueueName, at: int) -> Optional[str]:
        """Hand the head of the queue to a worker; None when the queue is empty"""
        self.broker.reads += 1
        if not self.queues[queue]:
            return None
        job_id = self.queues[queue].popleft()
        record = self.jobs[job_id]
        record.attempt += 1
        record.worker_id = worker_id
        self._mark(record, JobState.STAGING_IN, at, worker_id=worker_id, detail=f"attempt={record.attempt}")
        self.broker.writes += 1
        return job_id

    def stage_in(self, job_id: str, worker_role: str, at: int, worker_id: Optional[str] = None) -> int:
        """
        Stage a job's input under the owner's role

        The worker assumes the owner role for the transfer only and releases it
        before returning.

        Returns:
            Transfer time in seconds

        Raises:
            SwitchDeniedError: The worker role may not assume the owner role
            AccessDeniedError: The owner role may not read the input
        """
        record = self.get(job_id)
        spec = record.spec
        managed = self.storage is not None and spec.input_object_id in self.storage.objects
        if not managed and spec.input_size_gb == 0:
            return 0
        handle = self.rbac.assume_role(worker_role, spec.owner_role, at, principal=worker_id)
        self._handles[job_id] = handle
        try:
            if managed:
                plan = self.storage.request(spec.input_object_id, at, handle.role, principal=worker_id)
                if plan.immediate:
                    return plan.duration
                # restored between submit and poll; wait out the restore
                return max(0, plan.ready_at - at) + self.staging.transfer_seconds(spec.input_size_gb)
            return self.staging.transfer_seconds(spec.input_size_gb)
        finally:
            handle.release()
            self._handles.pop(job_id, None)

    def is_current(self, job_id: str, attempt: int) -> bool:
        record = self.jobs.get(job_id)
        return record is not None and record.attempt == attempt and record.state in ASSIGNED_STATES

    def start_running(self, job_id: str, at: int, stats: Optional[WorkerStats] = None) -> None:
        record = self.get(job_id)
        if job_id in self._handles:
            raise InvalidTransitionError(job_id, record.state.value, "running while holding the owner role")
        self._mark(record, JobState.RUNNING, at, worker_id=record.worker_id, stats=stats)
        self.broker.writes += 1

    def finish_running(self, job_id: str, at: int) -> int:
        """Move to staging-out; returns the stage-out transfer time"""
        record = self.get(job_id)
        self._mark(record, JobState.STAGING_OUT, at, worker_id=record.worker_id)
        self.broker.writes += 1
        return self.staging.transfer_seconds(record.spec.output_size_gb)

    def complete(self, job_id: str, at: int) -> None:
        record = self.get(job_id)
        self._mark(record, JobState.COMPLETED, at, worker_id=record.worker_id)
        self.broker.writes += 1

    def fail(self, job_id: str, at: int, reason: str) -> None:
        record = self.get(job_id)
        self._mark(record, JobState.FAILED, at, worker_id=record.worker_id, detail=reason)
        self.broker.writes += 1

    def mark_worker_lost(self, worker_id: str, job_id: str, at: int) -> None:
        """Record that a worker disappeared while holding a job"""
        record = self.get(job_id)
        self._lost.append(LostWorker(worker_id, job_id, record.attempt, at))
        logger.info(f"Worker {worker_id} lost at t={at} while running {job_id}")

    def watcher_tick(self, at: int) -> List[str]:
        """
        Resubmit jobs whose worker was lost

        Returns:
            Ids of the jobs put back on their queue (or failed, when attempts
            are exhausted), in loss order
        """
        handled = []
        pending, self._lost = self._lost, []
        for lost in pending:
            record = self.jobs[lost.job_id]
            if record.attempt != lost.attempt or record.state not in ASSIGNED_STATES:
                continue
            if self.max_attempts and record.attempt >= self.max_attempts:
                self._mark(record, JobState.FAILED, at, worker_id=lost.worker_id, detail="attempts exhausted")
            else:
                self._mark(record, JobState.RESUBMITTED, at, worker_id=lost.worker_id, detail="worker lost")
                self._mark(record, JobState.QUEUED, at)
                self.queues[record.spec.queue].append(record.job_id)
            record.worker_id = None
            handled.append(record.job_id)
        return handled

    def completion_counts(self) -> Tuple[int, int]:
        """(completed, failed)"""
        completed = sum(1 for r in self.jobs.values() if r.state is JobState.COMPLETED)
        failed = sum(1 for r in self.jobs.values() if r.state is JobState.FAILED)
        return completed, failed
