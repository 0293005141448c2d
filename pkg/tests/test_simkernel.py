"""Tests for the event kernel and random streams"""

import pytest

from src.core.simkernel import Event, EventKind, RngStream, SimKernel
from src.models.errors import ClockViolationError


class TestEventOrdering:
    """Events fire in (time, sequence) order"""

    def test_fires_in_time_then_schedule_order(self):
        kernel = SimKernel()
        fired = []
        kernel.on(EventKind.JOB_ARRIVAL, lambda e: fired.append((e.fire_at, e.payload["name"])))
        kernel.schedule_at(10, EventKind.JOB_ARRIVAL, name="late")
        kernel.schedule_at(5, EventKind.JOB_ARRIVAL, name="first")
        kernel.schedule_at(5, EventKind.JOB_ARRIVAL, name="second")
        kernel.run_until(100)
        assert fired == [(5, "first"), (5, "second"), (10, "late")]

    def test_events_scheduled_by_handlers_at_same_time_run_after(self):
        kernel = SimKernel()
        fired = []

        def handler(event: Event):
            fired.append(event.payload["name"])
            if event.payload["name"] == "a":
                kernel.schedule_at(event.fire_at, EventKind.WATCHER_TICK, name="c")

        kernel.on(EventKind.JOB_ARRIVAL, handler)
        kernel.on(EventKind.WATCHER_TICK, handler)
        kernel.schedule_at(1, EventKind.JOB_ARRIVAL, name="a")
        kernel.schedule_at(1, EventKind.JOB_ARRIVAL, name="b")
        kernel.run_until(1)
        assert fired == ["a", "b", "c"]

    def test_run_until_stops_at_deadline(self):
        kernel = SimKernel()
        kernel.schedule_at(5, EventKind.WATCHER_TICK)
        kernel.schedule_at(50, EventKind.WATCHER_TICK)
        assert kernel.run_until(10) == 1
        assert kernel.clock == 10
        assert kernel.pending_count == 1

    def test_stop_leaves_queue(self):
        kernel = SimKernel()
        kernel.on(EventKind.WATCHER_TICK, lambda e: kernel.stop())
        kernel.schedule_at(1, EventKind.WATCHER_TICK)
        kernel.schedule_at(2, EventKind.WATCHER_TICK)
        kernel.run_until(100)
        assert kernel.stopped
        assert kernel.clock == 1
        assert kernel.pending_count == 1

    def test_scheduling_in_the_past_is_rejected(self):
        kernel = SimKernel()
        kernel.schedule_at(10, EventKind.WATCHER_TICK)
        kernel.run_until(10)
        with pytest.raises(ClockViolationError) as info:
            kernel.schedule_at(9, EventKind.WATCHER_TICK)
        assert info.value.clock == 10

    def test_rejected_event_is_not_counted(self):
        kernel = SimKernel()
        kernel.schedule_at(10, EventKind.WATCHER_TICK)
        kernel.run_until(10)
        with pytest.raises(ClockViolationError):
            kernel.schedule_at(9, EventKind.WATCHER_TICK)
        later = kernel.schedule_at(20, EventKind.WATCHER_TICK)
        assert later.seq == 1
        assert kernel.scheduled_count == kernel.processed_count + kernel.pending_count
        kernel.run_until(30)
        assert kernel.scheduled_count == 2
        assert kernel.scheduled_count == kernel.processed_count + kernel.pending_count

    def test_event_log_records_processing_order(self):
        kernel = SimKernel()
        kernel.schedule_at(3, EventKind.JOB_FINISHED, job_id="j2")
        kernel.schedule_at(2, EventKind.JOB_FINISHED, job_id="j1")
        kernel.run_until(10)
        assert [entry[1] for entry in kernel.event_log] == [2, 3]
        assert kernel.event_log[0][3] == (("job_id", "j1"),)


class TestRngStream:
    """Named streams are reproducible and independent"""

    def test_same_seed_and_label_repeat(self):
        a = RngStream(42, "arrivals").random(5)
        b = RngStream(42, "arrivals").random(5)
        assert list(a) == list(b)

    def test_labels_differ(self):
        a = RngStream(42, "arrivals").random(5)
        b = RngStream(42, "durations").random(5)
        assert list(a) != list(b)

    def test_draws_on_one_stream_do_not_shift_another(self):
        kernel = SimKernel(seed=7)
        untouched = kernel.stream("provisioning").random(3)
        kernel.stream("arrivals").random(1000)
        assert list(kernel.stream("provisioning").random(3)) == list(untouched)

    def test_child_is_labelled(self):
        child = RngStream(1, "traces").child("c4.8xlarge")
        assert child.label == "traces/c4.8xlarge"
        assert child.seed == 1

    def test_integers_include_both_ends(self):
        draws = set(RngStream(0, "ends").integers(1, 2, size=200).tolist())
        assert draws == {1, 2}


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
