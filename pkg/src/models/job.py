"""Job specifications, job states and status markers"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from src.models.errors import InvalidTransitionError


class QueueName(str, Enum):
    """Job queues, one per execution pool"""
    DEVELOPMENT = "development"
    PRODUCTION = "production"


class JobState(str, Enum):
    """Job lifecycle states"""
    SUBMITTED = "submitted"
    QUEUED = "queued"
    WAITING_FOR_RETRIEVAL = "waiting-for-retrieval"
    STAGING_IN = "staging-in"
    RUNNING = "running"
    STAGING_OUT = "staging-out"
    COMPLETED = "completed"
    FAILED = "failed"
    RESUBMITTED = "resubmitted"


LEGAL_TRANSITIONS: Dict[JobState, FrozenSet[JobState]] = {
    JobState.SUBMITTED: frozenset({JobState.QUEUED}),
    JobState.QUEUED: frozenset({JobState.STAGING_IN, JobState.WAITING_FOR_RETRIEVAL}),
    JobState.WAITING_FOR_RETRIEVAL: frozenset({JobState.QUEUED}),
    JobState.STAGING_IN: frozenset({JobState.RUNNING, JobState.RESUBMITTED, JobState.FAILED}),
    JobState.RUNNING: frozenset({JobState.STAGING_OUT, JobState.RESUBMITTED, JobState.FAILED}),
    JobState.STAGING_OUT: frozenset({JobState.COMPLETED, JobState.RESUBMITTED, JobState.FAILED}),
    JobState.RESUBMITTED: frozenset({JobState.QUEUED}),
    JobState.COMPLETED: frozenset(),
    JobState.FAILED: frozenset(),
}

TERMINAL_STATES = frozenset({JobState.COMPLETED, JobState.FAILED})
ASSIGNED_STATES = frozenset({JobState.STAGING_IN, JobState.RUNNING, JobState.STAGING_OUT})
WAITING_STATES = frozenset({
    JobState.SUBMITTED,
    JobState.QUEUED,
    JobState.WAITING_FOR_RETRIEVAL,
    JobState.RESUBMITTED,
})


class JobSpec(BaseModel):
    """Immutable description of one job in a workload"""
    model_config = ConfigDict(frozen=True)

    job_id: str = Field(..., min_length=1, description="Unique job identifier")
    submit_time: int = Field(..., ge=0, description="Virtual submit time in seconds")
    nominal_duration: int = Field(..., ge=0, description="Execution time in seconds, excluding staging")
    input_size_gb: float = Field(default=0.0, ge=0.0, description="Input data staged in before execution")
    output_size_gb: float = Field(default=0.0, ge=0.0, description="Output data staged out after execution")
    queue: QueueName = Field(default=QueueName.PRODUCTION, description="Target queue")
    owner_role: str = Field(default="kotta-public-only", description="Role the job runs under")
    executable: str = Field(default="sleep", description="Executable label")
    input_object_id: Optional[str] = Field(default=None, description="Managed storage object holding the input")


@dataclass
class WorkerStats:
    """Resource snapshot a worker attaches to its status markers"""
    cpu_fraction: float = 0.0
    io_gb: float = 0.0
    ram_gb: float = 0.0


@dataclass(frozen=True)
class StatusMarker:
    """One state change written to the broker by a worker or the manager"""
    job_id: str
    at: int
    state: JobState
    worker_id: Optional[str] = None
    detail: str = ""
    stats: Optional[WorkerStats] = None


@dataclass
class JobRecord:
    """Mutable runtime state of a submitted job"""
    spec: JobSpec
    state: JobState = JobState.SUBMITTED
    history: List[StatusMarker] = field(default_factory=list)
    attempt: int = 0
    worker_id: Optional[str] = None
    retrieval_object: Optional[str] = None

    @property
    def job_id(self) -> str:
        return self.spec.job_id

    @property
    def is_terminal(self) -> bool:
        return self.state in TERMINAL_STATES

    def transition(
        self,
        target: JobState,
        at: int,
        worker_id: Optional[str] = None,
        detail: str = "",
        stats: Optional[WorkerStats] = None,
    ) -> StatusMarker:
        """
        Move the job to a new state and append the status marker

        Args:
            target: State to move to
            at: Virtual time of the change
            worker_id: Worker responsible for the change, if any
            detail: Free-form marker detail
            stats: Optional worker resource snapshot

        Returns:
            The marker that was recorded

        Raises:
            InvalidTransitionError: If the move is not in LEGAL_TRANSITIONS
        """
        if target not in LEGAL_TRANSITIONS[self.state]:
            raise InvalidTransitionError(self.job_id, self.state.value, target.value)
        marker = StatusMarker(
            job_id=self.job_id,
            at=at,
            state=target,
            worker_id=worker_id,
            detail=detail,
            stats=stats,
        )
        self.state = target
        self.history.append(marker)
        return marker

    def record_submission(self, at: int) -> StatusMarker:
        """Write the initial submitted marker"""
        marker = StatusMarker(job_id=self.job_id, at=at, state=JobState.SUBMITTED)
        self.history.append(marker)
        return marker

    @property
    def submitted_at(self) -> int:
        return self.history[0].at

    @property
    def completed_at(self) -> Optional[int]:
        if self.state is JobState.COMPLETED:
            return self.history[-1].at
        return None

    @property
    def started_at(self) -> Optional[int]:
        """Time the final (successful or last) attempt began running"""
        for marker in reversed(self.history):
            if marker.state is JobState.RUNNING:
                return marker.at
        return None

    def durations(self) -> Dict[str, int]:
        """
        Split the job's lifetime into waiting, staging, running and stage-out time

        The four values always add up to (last marker time - submit time).
        """
        totals = {"wait": 0, "staging": 0, "running": 0, "stage_out": 0}
        for current, following in zip(self.history, self.history[1:]):
            span = following.at - current.at
            if current.state in WAITING_STATES:
                totals["wait"] += span
            elif current.state is JobState.STAGING_IN:
                totals["staging"] += span
            elif current.state is JobState.RUNNING:
                totals["running"] += span
            elif current.state is JobState.STAGING_OUT:
                totals["stage_out"] += span
        return totals
