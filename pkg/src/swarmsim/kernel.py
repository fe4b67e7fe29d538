"""Discrete-event core: simulated clock and totally ordered event queue.

Time is an integer count of nanoseconds from the scenario epoch, so there
is no floating-point drift in the clock and ties are exact. Events are
ordered by (time, sequence number); the sequence number increments per
schedule call, which makes the order total and gives FIFO semantics to
events scheduled for the same instant. Cancellation is lazy: cancelled
entries stay in the heap and are discarded when popped.

The kernel knows nothing about orbits, processes, or radios. Continuous
dynamics hook in through two narrow points: the `needs_continuum` flag on
events (bookkeeping used to verify lazy propagation never does more work
than event demand justifies) and `note_propagation`, called by the state
provider whenever it actually advances a body.
"""

import heapq
import time as _wallclock

from .faults import Fault, FaultRaised, PastTime

NS_PER_S = 1_000_000_000


def ns_from_s(seconds: float) -> int:
    """Convert seconds to integer nanoseconds (round half to even)."""
    return round(seconds * NS_PER_S)


def s_from_ns(t: int) -> float:
    return t / NS_PER_S


class RunSummary:
    """Counters reported by run_until; totals since kernel creation,
    except wall_seconds which covers the call that produced the summary."""

    def __init__(self, events_executed, propagations_performed,
                 wall_seconds, final_time):
        self.events_executed = events_executed
        self.propagations_performed = propagations_performed
        self.wall_seconds = wall_seconds
        self.final_time = final_time

    def __repr__(self):
        return (f"RunSummary(events_executed={self.events_executed}, "
                f"propagations_performed={self.propagations_performed}, "
                f"wall_seconds={self.wall_seconds:.6f}, "
                f"final_time={self.final_time})")


class Kernel:
    """Event queue plus simulated clock."""

    def __init__(self):
        self._queue = []            # heap of (time, seq, action, payload, flag)
        self._next_seq = 0
        self._cancelled = set()     # seqs cancelled while still queued
        self._pending = set()       # seqs currently queued and live
        self._now = 0
        self.events_executed = 0
        self.propagations_performed = 0
        self.continuum_events_executed = 0
        self.current_event = None   # seq of the event being dispatched
        self._last_prop_event = None
        self.trace = None           # set to a list to record (t, seq, label)

    def now(self) -> int:
        """Time of the most recently dequeued event (epoch before any)."""
        return self._now

    def schedule(self, t: int, action, payload=None, needs_continuum=False,
                 label=None) -> int:
        """Queue `action` to run at simulated time t; returns an event id.

        `action` is called with the kernel as its single argument.
        Scheduling at the current time is allowed; the event runs after
        the one in progress, preserving FIFO order.
        """
        if t < self._now:
            raise PastTime(f"schedule at t={t} ns before now={self._now} ns")
        seq = self._next_seq
        self._next_seq += 1
        heapq.heappush(self._queue, (t, seq, action, payload,
                                     bool(needs_continuum), label))
        self._pending.add(seq)
        return seq

    def cancel(self, event_id: int) -> bool:
        """Cancel a pending event. True if it was still pending."""
        if event_id in self._pending:
            self._pending.discard(event_id)
            self._cancelled.add(event_id)
            return True
        return False

    def run_until(self, t_end: int) -> RunSummary:
        """Dispatch events in order through t_end inclusive.

        On normal return the clock rests at t_end, whether or not any
        event ran. A Fault from any action halts dispatch at that event
        and surfaces as FaultRaised with all state preserved, clock
        included.
        """
        if t_end < self._now:
            raise PastTime(f"run_until t_end={t_end} ns before now={self._now} ns")
        start = _wallclock.perf_counter()
        queue = self._queue
        while queue and queue[0][0] <= t_end:
            t, seq, action, payload, needs_continuum, label = heapq.heappop(queue)
            if seq in self._cancelled:
                self._cancelled.discard(seq)
                continue
            self._pending.discard(seq)
            self._now = t
            self.events_executed += 1
            if needs_continuum:
                self.continuum_events_executed += 1
            if self.trace is not None:
                self.trace.append((t, seq, label))
            self.current_event = seq
            try:
                action(self)
            except Fault as fault:
                raise FaultRaised(fault, t) from fault
            finally:
                self.current_event = None
        self._now = t_end
        wall = _wallclock.perf_counter() - start
        return RunSummary(self.events_executed, self.propagations_performed,
                          wall, t_end)

    def note_propagation(self):
        """Record that continuous state advanced; at most one count per event.

        Called by the continuous-state provider. Counting per dispatching
        event (not per body) keeps the lazy-propagation invariant sharp:
        propagations_performed can never exceed the number of executed
        events flagged needs_continuum when all queries come from events.
        """
        if self.current_event is None:
            self.propagations_performed += 1
        elif self.current_event != self._last_prop_event:
            self.propagations_performed += 1
            self._last_prop_event = self.current_event
