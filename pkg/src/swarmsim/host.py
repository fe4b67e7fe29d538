"""Virtual flight-software process host.

Runs any number of modeled flight-software processes inside the single
deterministic event stream. Each process owns a private simulated heap,
receives typed inputs through per-kind handlers, and acts on the world
only through the outputs it emits; the host routes those outputs to the
radio links, the dynamics, the tick scheduler, or the telemetry record.

Timed behavior uses a single-slot tick protocol: a process may hold at
most one future tick, and requesting a new one replaces it. The slot is
cleared before a tick handler runs, so the handler is free to request
the next wakeup.

Handlers must not block, sleep, or touch anything global. A handler is
called as ``handler(ctx, state, payload)`` and may either mutate its
state in place (returning None) or return a replacement state. Any
allocation it performs goes through ``ctx.heap``, which the host points
at the process's own image for exactly the duration of the call.
"""

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from .faults import (ConfigError, DuplicateName, Fault, HandlerFault,
                     UnknownLinkTarget)
from .heap import HeapImage
from .kernel import NS_PER_S, Kernel

INPUT_KINDS = ("bus_telemetry", "gnss_message", "crosslink",
               "ground_command", "tick")
OUTPUT_KINDS = ("maneuver", "observation", "mission_mode",
                "crosslink_send", "telemetry", "tick_request")

DEFAULT_HEAP_LIMIT = 50 * 1024 * 1024


@dataclass(frozen=True)
class ProcessDef:
    """Recipe for one virtual process.

    handlers maps input kinds (a subset of INPUT_KINDS) to handler
    callables. state_factory, when given, is called once at spawn with
    the process heap active; it receives a context (so boot code can
    request its first tick) and returns the initial state.
    """

    name: str
    handlers: Mapping[str, Callable]
    state_factory: Optional[Callable] = None
    heap_limit: int = DEFAULT_HEAP_LIMIT


class HandlerContext:
    """What one handler invocation sees: clock, own heap, output sink."""

    __slots__ = ("time", "heap", "process_id", "_outputs")

    def __init__(self, time: int, heap: HeapImage, process_id: str):
        self.time = time
        self.heap = heap
        self.process_id = process_id
        self._outputs = []

    def emit(self, kind: str, payload):
        if kind not in OUTPUT_KINDS:
            raise ConfigError(f"unknown output kind {kind!r}")
        self._outputs.append((kind, payload))

    def request_tick(self, t: int):
        """Shorthand for emit("tick_request", t)."""
        self.emit("tick_request", int(t))


@dataclass
class VirtualProcess:
    id: str
    defn: ProcessDef
    state: object
    heap: HeapImage
    pending_tick: Optional[tuple] = None   # (time, kernel event id)


class ProcessHost:
    """Spawns processes, dispatches inputs, routes outputs.

    The host itself never draws randomness unless delivery jitter is
    enabled; with jitter_max_s left at 0 no stream is consumed, so the
    same scenario runs bit-identically with the feature compiled out of
    the config.
    """

    def __init__(self, kernel: Kernel, rng=None, jitter_max_s: float = 0.0):
        if jitter_max_s < 0:
            raise ConfigError("jitter_max_s must be >= 0")
        if jitter_max_s > 0 and rng is None:
            raise ConfigError("delivery jitter requires an rng root")
        self._kernel = kernel
        self._rng = rng
        self._jitter_max_s = float(jitter_max_s)
        self._jitter_stream = None
        self._procs: dict[str, VirtualProcess] = {}
        self._links: dict[tuple, object] = {}
        self._bodies: dict[str, tuple] = {}
        # telemetry records: {t, source, kind, payload}, appended in
        # routing order; the harness serializes these verbatim
        self.records: list[dict] = []
        # None means host context; restored after every handler, fault
        # or not
        self.active_heap: Optional[HeapImage] = None

    # -- wiring ----------------------------------------------------------

    def connect_link(self, src: str, dst: str, link):
        """Register the radio link used when src crosslinks to dst.

        link only needs a send(message, t) method.
        """
        self._links[(src, dst)] = link

    def bind_body(self, process_id: str, continuum, body_id: str):
        """Point maneuver outputs from this process at a propagated body."""
        self._bodies[process_id] = (continuum, body_id)

    # -- lifecycle ---------------------------------------------------------

    def spawn(self, defn: ProcessDef) -> str:
        """Create a process with a fresh heap; returns its id (the name)."""
        if defn.name in self._procs:
            raise DuplicateName(defn.name)
        for kind in defn.handlers:
            if kind not in INPUT_KINDS:
                raise ConfigError(
                    f"unknown input kind {kind!r} in handlers "
                    f"for {defn.name!r}")
        heap = HeapImage(defn.heap_limit, name=defn.name)
        proc = VirtualProcess(id=defn.name, defn=defn, state=None, heap=heap)
        self._procs[defn.name] = proc
        if defn.state_factory is not None:
            outputs = self._invoke(proc, defn.state_factory, None,
                                   self._kernel.now(), init=True)
            for out in outputs:
                self.route_output(proc.id, out, t=self._kernel.now())
        return proc.id

    def process(self, process_id: str) -> VirtualProcess:
        return self._proc(process_id)

    @property
    def process_ids(self):
        return list(self._procs)

    def _proc(self, process_id: str) -> VirtualProcess:
        try:
            return self._procs[process_id]
        except KeyError:
            raise ConfigError(f"unknown process {process_id!r}") from None

    # -- dispatch ----------------------------------------------------------

    def deliver(self, process_id: str, input_kind: str, payload,
                t: int) -> list:
        """Run the process's handler for one input at time t.

        Returns the outputs the handler emitted, in emission order,
        after routing each of them. A missing handler means the process
        ignores that input kind. Faults raised by the handler (or by
        its heap) propagate with the process name attached; the active
        heap is restored first.
        """
        proc = self._proc(process_id)
        if input_kind not in INPUT_KINDS:
            raise ConfigError(f"unknown input kind {input_kind!r}")
        if input_kind == "tick":
            proc.pending_tick = None   # slot free before the handler runs
        handler = proc.defn.handlers.get(input_kind)
        if handler is None:
            return []
        outputs = self._invoke(proc, handler, payload, t)
        for out in outputs:
            self.route_output(process_id, out, t=t)
        return outputs

    def schedule_input(self, process_id: str, input_kind: str, payload,
                       t: int) -> int:
        """Schedule a future deliver() as a kernel event.

        Delivery jitter, when configured, perturbs the time here: the
        event lands uniformly in [t, t + jitter_max]. Ticks never pass
        through this path; request_tick owns their timing.
        """
        self._proc(process_id)
        if input_kind == "tick":
            raise ConfigError("ticks are scheduled through request_tick")
        if input_kind not in INPUT_KINDS:
            raise ConfigError(f"unknown input kind {input_kind!r}")
        t_deliver = t + self._jitter_ns()

        def fire(kernel, pid=process_id, kind=input_kind, pl=payload,
                 td=t_deliver):
            self.deliver(pid, kind, pl, td)

        return self._kernel.schedule(t_deliver, fire,
                                     label=f"{process_id}:{input_kind}")

    def request_tick(self, process_id: str, t_tick: int):
        """Schedule the process's one future tick, replacing any pending.

        The previously pending tick event, if any, is cancelled only
        after the new one is accepted, so a rejected request (PastTime)
        leaves the old tick in place.
        """
        proc = self._proc(process_id)
        t_tick = int(t_tick)

        def fire(kernel, pid=process_id, tt=t_tick):
            self.deliver(pid, "tick", None, tt)

        event_id = self._kernel.schedule(t_tick, fire,
                                         label=f"{process_id}:tick")
        if proc.pending_tick is not None:
            self._kernel.cancel(proc.pending_tick[1])
        proc.pending_tick = (t_tick, event_id)

    # -- output routing ------------------------------------------------------

    def route_output(self, process_id: str, output, t: Optional[int] = None):
        """Apply one emitted (kind, payload) output to the world."""
        kind, payload = output
        if t is None:
            t = self._kernel.now()
        if kind == "tick_request":
            self.request_tick(process_id, payload)
        elif kind == "crosslink_send":
            to = payload["to"]
            link = self._links.get((process_id, to))
            if link is None:
                raise UnknownLinkTarget(
                    f"{process_id!r} has no link to {to!r}", process_id)
            link.send(payload["data"], t)
        elif kind == "maneuver":
            binding = self._bodies.get(process_id)
            if binding is None:
                raise ConfigError(
                    f"{process_id!r} has no body bound for maneuvers")
            continuum, body_id = binding
            dv = tuple(payload["dv_rtn"])
            t_cmd = int(payload.get("t", t))
            # always its own flagged event, even for t_cmd == now, so
            # the propagation-count accounting stays truthful
            def burn(kernel, c=continuum, b=body_id, tc=t_cmd, d=dv):
                c.apply_impulse(b, tc, d)

            self._kernel.schedule(t_cmd, burn, needs_continuum=True,
                                  label=f"{process_id}:maneuver")
        elif kind in ("telemetry", "observation", "mission_mode"):
            self.records.append({"t": t, "source": process_id,
                                 "kind": kind, "payload": payload})
        else:
            raise ConfigError(f"unknown output kind {kind!r}")

    # -- internals ---------------------------------------------------------

    def _invoke(self, proc: VirtualProcess, fn, payload, t: int,
                init: bool = False) -> list:
        ctx = HandlerContext(t, proc.heap, proc.id)
        proc.heap.mark_invocation()
        prev = self.active_heap
        self.active_heap = proc.heap
        try:
            if init:
                proc.state = fn(ctx)
            else:
                result = fn(ctx, proc.state, payload)
                if result is not None:
                    proc.state = result
        except Fault as fault:
            if fault.process is None:
                fault.process = proc.id
            raise
        except AssertionError as exc:
            raise HandlerFault(
                str(exc) or "flight software assertion failed",
                proc.id) from exc
        finally:
            self.active_heap = prev
        self._sample_heap(proc, t)
        return ctx._outputs

    def _sample_heap(self, proc: VirtualProcess, t: int):
        # resting = bytes surviving the handler; transient = peak while
        # it ran (both per the invocation marked in _invoke)
        h = proc.heap
        self.records.append({
            "t": t, "source": proc.id, "kind": "heap",
            "payload": {"resting": h.allocated_bytes,
                        "transient": h.invocation_peak,
                        "extent": h.extent}})

    def _jitter_ns(self) -> int:
        if self._jitter_max_s == 0.0:
            return 0   # feature off: no stream creation, no draw
        if self._jitter_stream is None:
            self._jitter_stream = self._rng.stream("host:jitter")
        u = float(self._jitter_stream.random())
        return int(round(u * self._jitter_max_s * NS_PER_S))
