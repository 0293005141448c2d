"""
Deterministic discrete-event kernel

A single virtual clock in integer seconds, a priority queue of events ordered
by (fire time, sequence number), and named random streams derived from the
run seed. Handlers are registered per event kind and run in queue order.
"""

import hashlib
import heapq
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.models.errors import ClockViolationError

logger = logging.getLogger(__name__)


class EventKind(str, Enum):
    """Kinds of events the simulator schedules"""
    JOB_ARRIVAL = "job-arrival"
    INSTANCE_READY = "instance-ready"
    INSTANCE_REVOKED = "instance-revoked"
    JOB_FINISHED = "job-finished"
    STAGING_DONE = "staging-done"
    LIFECYCLE_TICK = "lifecycle-tick"
    RETRIEVAL_DONE = "retrieval-done"
    WATCHER_TICK = "watcher-tick"
    BROKER_TICK = "broker-tick"
    DATA_ACCESS = "data-access"


@dataclass(order=True)
class Event:
    """An event in the queue; only (fire_at, seq) take part in ordering"""
    fire_at: int
    seq: int
    kind: EventKind = field(compare=False)
    payload: Dict[str, Any] = field(default_factory=dict, compare=False)


Handler = Callable[[Event], None]


class RngStream:
    """
    Named random stream

    The stream is seeded from (run seed, hash of label), so the draws of one
    stream never depend on how many draws another stream made.
    """

    def __init__(self, seed: int, label: str):
        self.seed = seed
        self.label = label
        digest = hashlib.sha256(label.encode("utf-8")).digest()
        sequence = np.random.SeedSequence([seed, int.from_bytes(digest[:8], "little")])
        self._generator = np.random.default_rng(sequence)

    def child(self, name: str) -> "RngStream":
        return RngStream(self.seed, f"{self.label}/{name}")

    def random(self, size: Optional[int] = None):
        return self._generator.random(size)

    def exponential(self, mean: float, size: Optional[int] = None):
        return self._generator.exponential(mean, size)

    def uniform(self, low: float, high: float, size: Optional[int] = None):
        return self._generator.uniform(low, high, size)

    def integers(self, low: int, high: int, size: Optional[int] = None):
        """Uniform integers in [low, high] (both ends included)"""
        return self._generator.integers(low, high, size=size, endpoint=True)

    def choice(self, options: Sequence[Any], size: Optional[int] = None, p=None, replace: bool = True):
        return self._generator.choice(options, size=size, p=p, replace=replace)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, label={self.label!r})"


class SimKernel:
    """Virtual clock plus event queue"""

    def __init__(self, seed: int = 0, start: int = 0):
        self.seed = seed
        self.clock = start
        self._queue: List[Event] = []
        self._next_seq = 0
        self._handlers: Dict[EventKind, Handler] = {}
        self._stopped = False
        self.processed_count = 0
        self.event_log: List[Tuple[int, int, str, Tuple[Tuple[str, Any], ...]]] = []

    @property
    def scheduled_count(self) -> int:
        return self._next_seq

    @property
    def pending_count(self) -> int:
        return len(self._queue)

    def stream(self, label: str) -> RngStream:
        """Random stream for one concern, e.g. 'arrivals' or 'provisioning'"""
        return RngStream(self.seed, label)

    def on(self, kind: EventKind, handler: Handler) -> None:
        self._handlers[kind] = handler

    def event(self, kind: EventKind, fire_at: int, **payload: Any) -> Event:
        """Create an event; it gets its sequence number when scheduled"""
        return Event(fire_at=int(fire_at), seq=-1, kind=kind, payload=payload)

    def schedule(self, event: Event) -> Event:
        """
        Insert an event into the queue

        Raises:
            ClockViolationError: If the event fires before the current clock
        """
        if event.fire_at < self.clock:
            raise ClockViolationError(event.fire_at, self.clock)
        event.seq = self._next_seq
        heapq.heappush(self._queue, event)
        self._next_seq += 1
        return event

    def schedule_at(self, fire_at: int, kind: EventKind, **payload: Any) -> Event:
        return self.schedule(self.event(kind, fire_at, **payload))

    def stop(self) -> None:
        """Stop run_until after the current handler returns"""
        self._stopped = True

    @property
    def stopped(self) -> bool:
        return self._stopped

    def next_event(self) -> Optional[Event]:
        return self._queue[0] if self._queue else None

    def run_until(self, deadline: int) -> int:
        """
        Process events in (fire_at, seq) order up to and including the deadline

        Args:
            deadline: Last virtual time to process

        Returns:
            Number of events processed by this call
        """
        processed = 0
        while self._queue and not self._stopped:
            if self._queue[0].fire_at > deadline:
                break
            event = heapq.heappop(self._queue)
            self.clock = event.fire_at
            self.event_log.append(
                (event.seq, event.fire_at, event.kind.value, tuple(sorted(event.payload.items())))
            )
            handler = self._handlers.get(event.kind)
            if handler is None:
                logger.debug(f"No handler for {event.kind.value} at t={event.fire_at}")
            else:
                handler(event)
            processed += 1
            self.processed_count += 1
        if not self._stopped:
            self.clock = max(self.clock, deadline)
        return processed
