"""Exception types shared across the simulator.

Two families matter at runtime. Plain errors (bad config, scheduling in
the past, querying a state older than its epoch) are caller mistakes and
propagate directly. Faults are defect signals from modeled flight
software or the modeled environment; they halt the simulation at the
offending event. Kernel.run_until converts any Fault into FaultRaised so
the caller receives the event context (process, reason, time) with all
simulator state preserved for inspection.
"""


class SimError(Exception):
    """Base class for everything the simulator raises on purpose."""


class ConfigError(SimError):
    """Scenario configuration rejected (unknown key, bad type, bad value)."""


class PastTime(SimError):
    """Attempt to schedule an event before the current simulation time."""


class TimeReversal(SimError):
    """Attempt to query a continuous state before its stored epoch."""


class EpochMismatch(SimError):
    """Relative elements requested for states at different epochs."""


class HyperbolicChief(SimError):
    """Relative elements requested for a non-elliptical chief orbit."""


class DuplicateName(SimError):
    """A process with this name already exists on the host."""


class EpochMisaligned(SimError):
    """GNSS measurement requested off the 1-second epoch grid."""


class NoFix(SimError):
    """PVT solution unavailable: fewer than four satellites visible."""


class NoCommonEpoch(SimError):
    """Relative navigation found no epoch present in both solutions."""


class Fault(SimError):
    """Defect signal; halts the run at the current event.

    `process` names the virtual process at fault when one is known. The
    host fills it in for anything raised while a handler is active.
    """

    def __init__(self, reason: str, process: str | None = None):
        super().__init__(reason)
        self.reason = reason
        self.process = process


class MemoryExhaustionFault(Fault):
    """Heap extent would exceed the configured limit."""

    def __init__(self, requested: int, extent: int, limit: int,
                 process: str | None = None):
        super().__init__(
            f"heap limit exceeded: requested {requested} bytes "
            f"with extent {extent} of {limit} bytes", process)
        self.requested = requested
        self.extent = extent
        self.limit = limit


class InvalidFree(Fault):
    """free/realloc of an address that is not a live allocation."""


class ZeroSize(Fault):
    """Zero-byte allocation request."""


class Overflow(Fault):
    """Allocation size arithmetic exceeded the address-space bound."""


class ReentryFault(Fault):
    """Propagated radius dropped below the Earth surface radius."""


class HandlerFault(Fault):
    """Unhandled exception inside a process handler."""


class InvalidTransition(Fault):
    """State machine received an event not legal in its current mode."""


class OutOfOrderFault(Fault):
    """Navigation queue in assume-sorted mode saw a stale epoch."""


class UnknownLinkTarget(Fault):
    """Crosslink send addressed to a peer with no configured link."""


class FaultRaised(SimError):
    """Raised by the run loop when a dispatched action signals a Fault.

    Carries the original fault plus the simulation time of the event
    that raised it. The kernel, queue, and all model state stay as they
    were at the moment of the fault.
    """

    def __init__(self, fault: Fault, time: int):
        super().__init__(
            f"fault at t={time} ns"
            + (f" in process {fault.process!r}" if fault.process else "")
            + f": {fault.reason}")
        self.fault = fault
        self.process = fault.process
        self.reason = fault.reason
        self.time = time
