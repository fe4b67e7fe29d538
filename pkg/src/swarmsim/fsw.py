"""Demonstration flight software for a two-spacecraft formation.

Three small programs exercise the process host the way real guidance,
navigation, and control code would. Each comes in a fragile and a
hardened variant selected purely by configuration, so the same scenario
reproduces a defect or demonstrates its fix:

* A synchronized observation state machine. One spacecraft (active)
  drives mode changes from ground commands and announces them over the
  crosslink; the other (passive) follows. The naive protocol sends each
  transition exactly once and applies received events blindly, so a
  single dropped or reordered message leaves the passive machine one
  step out of phase and the next event is an InvalidTransition fault.
  The robust protocol numbers announcements, retransmits them until
  acknowledged, and applies them strictly in sequence, so the passive
  history is always a prefix of the active history.

* A measurement-exchange navigation queue. Each side shares its position
  fixes with the peer and single-differences the newest common epoch.
  The assume_sorted policy trusts the radio to preserve order and
  faults on a stale epoch; insert_sorted binary-inserts and never
  faults, whatever the arrival order.

* A matrix memory workload standing in for an onboard convex solver.
  The dense representation allocates the full n x n double array inside
  the process heap; the sparse representation stores only the diagonal
  as coordinate triplets. At realistic sizes the dense form exhausts a
  50 MB heap while the sparse form stays well over an order of
  magnitude under it.

Crosslink payload schemas are versioned with a "v" field (currently 1):

    sync event   {"v": 1, "kind": "begin" | "end", "seq": int}
    sync ack     {"v": 1, "kind": "ack", "seq": int}        cumulative
    measurement  {"v": 1, "kind": "measurement",
                  "epoch": int ns, "pvt": [x, y, z] m}

Handlers follow the host contract: state in, outputs out, all heap
traffic through ``ctx.heap``, no globals.
"""

import bisect
import math
import struct
from dataclasses import dataclass, field

from .faults import (ConfigError, InvalidTransition, NoCommonEpoch,
                     OutOfOrderFault)
from .host import DEFAULT_HEAP_LIMIT, ProcessDef
from .kernel import NS_PER_S
from .orbits import MU_EARTH

SCHEMA_VERSION = 1

MODES = ("science", "observing")
EVENTS = ("begin", "end")

# the entire legal transition structure: anything absent is invalid
_TRANSITIONS = {("science", "begin"): "observing",
                ("observing", "end"): "science"}


# -- synchronized state machine -----------------------------------------------

@dataclass
class ObservationStateMachine:
    """Mode automaton mirrored between an active and a passive process.

    last_event_seq is the last sequence number assigned (active) or
    applied (passive). unacked holds announcement payload kinds still
    awaiting a cumulative ack, keyed by sequence number; it stays empty
    under the naive protocol. history records applied event kinds in
    order and is what prefix-consistency checks compare.
    """

    role: str
    protocol: str = "naive"
    retransmit_interval: float = 5.0
    mode: str = "science"
    last_event_seq: int = 0
    unacked: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    def __post_init__(self):
        if self.role not in ("active", "passive"):
            raise ConfigError(f"unknown role {self.role!r}")
        if self.protocol not in ("naive", "robust"):
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if self.retransmit_interval <= 0:
            raise ConfigError("retransmit_interval must be > 0")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")


def _apply(machine, event):
    nxt = _TRANSITIONS.get((machine.mode, event))
    if nxt is None:
        raise InvalidTransition(
            f"{event}-observation event in {machine.mode} mode")
    machine.mode = nxt
    machine.history.append(event)


def _event_payload(machine, seq):
    return {"v": SCHEMA_VERSION, "kind": machine.unacked[seq], "seq": seq}


def sync_handle_event(machine, event, source, seq=None):
    """Advance the machine by one event; returns crosslink payloads to send.

    source says where the event came from: "local" for the active
    machine's own command stream, "crosslink" for an announcement
    received from the peer. Active machines assign a fresh sequence
    number and return the announcement to transmit. Passive machines
    under the naive protocol apply the event blindly (an illegal pair
    faults, which is the point); under the robust protocol they apply
    only the next expected sequence number, drop duplicates and gaps,
    and always return a cumulative ack for the last applied sequence.
    """
    if event not in EVENTS:
        raise ConfigError(f"unknown event {event!r}")
    if source not in ("local", "crosslink"):
        raise ConfigError(f"unknown event source {source!r}")
    if machine.role == "active":
        if source != "local":
            raise ConfigError("active machines take events from ground "
                              "commands, not from the crosslink")
        _apply(machine, event)
        machine.last_event_seq += 1
        s = machine.last_event_seq
        if machine.protocol == "robust":
            machine.unacked[s] = event
        return [{"v": SCHEMA_VERSION, "kind": event, "seq": s}]
    if source != "crosslink":
        raise ConfigError("passive machines only receive crosslink events")
    if machine.protocol == "naive":
        _apply(machine, event)
        if seq is not None:
            machine.last_event_seq = int(seq)
        return []
    if seq is None:
        raise ConfigError("robust announcements carry a sequence number")
    if int(seq) == machine.last_event_seq + 1:
        _apply(machine, event)
        machine.last_event_seq = int(seq)
    # duplicates (seq <= last applied) and gaps (seq > last + 1) are not
    # applied; the cumulative ack below tells the active what to resend
    return [{"v": SCHEMA_VERSION, "kind": "ack",
             "seq": machine.last_event_seq}]


def sync_handle_ack(machine, seq):
    """Apply a cumulative ack: drop every announcement numbered <= seq."""
    for s in [s for s in machine.unacked if s <= seq]:
        del machine.unacked[s]


def sync_retransmissions(machine):
    """Unacknowledged announcements to resend, lowest sequence first."""
    return [_event_payload(machine, s) for s in sorted(machine.unacked)]


def build_sync_program(name, peer, role, protocol="naive",
                       retransmit_interval=5.0,
                       heap_limit=DEFAULT_HEAP_LIMIT):
    """ProcessDef for one side of the synchronized state machine.

    The active side handles ground_command {"event": "begin" | "end"},
    announces transitions to `peer`, and under the robust protocol keeps
    a retransmission tick alive until everything is acknowledged. The
    passive side handles announcements and, when robust, replies with
    cumulative acks on the reverse link. Every applied transition emits
    a mission_mode record {"mode", "seq"}.
    """
    interval_ns = int(round(retransmit_interval * NS_PER_S))

    def boot(ctx):
        return ObservationStateMachine(
            role=role, protocol=protocol,
            retransmit_interval=retransmit_interval)

    def send_all(ctx, payloads):
        for data in payloads:
            ctx.emit("crosslink_send", {"to": peer, "data": data})

    def on_command(ctx, machine, payload):
        send_all(ctx, sync_handle_event(machine, payload["event"], "local"))
        ctx.emit("mission_mode", {"mode": machine.mode,
                                  "seq": machine.last_event_seq})
        if machine.unacked:
            ctx.request_tick(ctx.time + interval_ns)

    def on_ack(ctx, machine, payload):
        if payload.get("kind") == "ack":
            sync_handle_ack(machine, int(payload["seq"]))

    def on_tick(ctx, machine, payload):
        send_all(ctx, sync_retransmissions(machine))
        if machine.unacked:
            ctx.request_tick(ctx.time + interval_ns)

    def on_announcement(ctx, machine, payload):
        if payload.get("kind") == "ack":
            return
        applied_before = len(machine.history)
        send_all(ctx, sync_handle_event(machine, payload["kind"],
                                        "crosslink", seq=payload.get("seq")))
        if len(machine.history) > applied_before:
            ctx.emit("mission_mode", {"mode": machine.mode,
                                      "seq": machine.last_event_seq})

    if role == "active":
        handlers = {"ground_command": on_command, "crosslink": on_ack,
                    "tick": on_tick}
    elif role == "passive":
        handlers = {"crosslink": on_announcement}
    else:
        raise ConfigError(f"unknown role {role!r}")
    if protocol not in ("naive", "robust"):
        raise ConfigError(f"unknown protocol {protocol!r}")
    return ProcessDef(name=name, handlers=handlers, state_factory=boot,
                      heap_limit=heap_limit)


# -- measurement-exchange navigation ----------------------------------------------

@dataclass(frozen=True)
class NavEntry:
    epoch: int
    position: tuple


@dataclass
class NavQueue:
    """Received remote position fixes, one per epoch, ordered by epoch."""

    policy: str = "insert_sorted"
    entries: list = field(default_factory=list)

    def __post_init__(self):
        if self.policy not in ("assume_sorted", "insert_sorted"):
            raise ConfigError(f"unknown queue policy {self.policy!r}")

    def epochs(self):
        return [e.epoch for e in self.entries]


def nav_ingest(queue, message):
    """Add one measurement message {"epoch", "pvt"} to the queue.

    assume_sorted trusts arrival order: an epoch older than the tail is
    an OutOfOrderFault. insert_sorted binary-inserts by epoch. Either
    way a repeated epoch from the sender is dropped silently. Returns
    the queue.
    """
    epoch = int(message["epoch"])
    position = tuple(float(c) for c in message["pvt"])
    entries = queue.entries
    if queue.policy == "assume_sorted":
        if entries and epoch < entries[-1].epoch:
            raise OutOfOrderFault(
                f"measurement epoch {epoch} precedes queue tail "
                f"{entries[-1].epoch}")
        if entries and epoch == entries[-1].epoch:
            return queue
        entries.append(NavEntry(epoch, position))
        return queue
    i = bisect.bisect_left(entries, epoch, key=lambda e: e.epoch)
    if i < len(entries) and entries[i].epoch == epoch:
        return queue
    entries.insert(i, NavEntry(epoch, position))
    return queue


def relative_nav_update(local, queue):
    """Single-difference relative position at the newest common epoch.

    local maps epoch -> own position triple; the queue holds the peer's
    fixes. Returns {"epoch", "relative"} with relative = remote - local
    in meters, unfiltered. Raises NoCommonEpoch when the two solution
    sets share no epoch (in particular when the queue is empty).
    """
    for entry in reversed(queue.entries):
        own = local.get(entry.epoch)
        if own is not None:
            return {"epoch": entry.epoch,
                    "relative": [r - l for r, l in zip(entry.position, own)]}
    raise NoCommonEpoch("no epoch shared by local and remote solutions")


@dataclass
class NavState:
    queue: NavQueue
    local: dict = field(default_factory=dict)
    last_estimate_epoch: int = -1
    samples: int = 0


def build_nav_program(name, peer, policy="insert_sorted", share_every=1,
                      heap_limit=DEFAULT_HEAP_LIMIT):
    """ProcessDef for one side of the measurement exchange.

    gnss_message inputs carry this side's position fix ({"t",
    "position", ...} as produced by the receiver model); each one is
    stored locally, and every share_every-th one (the first included)
    is forwarded to `peer` as a measurement payload. crosslink inputs
    are the peer's measurements, ingested under `policy`. Whenever the
    newest common epoch advances, the process emits an observation
    record {"epoch", "relative"}.
    """
    if policy not in ("assume_sorted", "insert_sorted"):
        raise ConfigError(f"unknown queue policy {policy!r}")
    if share_every < 1:
        raise ConfigError("share_every must be >= 1")

    def boot(ctx):
        return NavState(queue=NavQueue(policy))

    def try_update(ctx, state):
        try:
            est = relative_nav_update(state.local, state.queue)
        except NoCommonEpoch:
            return
        if est["epoch"] <= state.last_estimate_epoch:
            return
        state.last_estimate_epoch = est["epoch"]
        ctx.emit("observation", est)

    def on_gnss(ctx, state, payload):
        epoch = int(payload["t"])
        position = tuple(float(c) for c in payload["position"])
        state.local[epoch] = position
        if state.samples % share_every == 0:
            ctx.emit("crosslink_send", {"to": peer, "data": {
                "v": SCHEMA_VERSION, "kind": "measurement",
                "epoch": epoch, "pvt": list(position)}})
        state.samples += 1
        try_update(ctx, state)

    def on_crosslink(ctx, state, payload):
        if payload.get("kind") != "measurement":
            return
        nav_ingest(state.queue, payload)
        try_update(ctx, state)

    return ProcessDef(name=name,
                      handlers={"gnss_message": on_gnss,
                                "crosslink": on_crosslink},
                      state_factory=boot, heap_limit=heap_limit)


# -- matrix memory workload ---------------------------------------------------------

@dataclass(frozen=True)
class MatrixWorkload:
    """Closed-form footprint of the demo constraint matrix.

    The matrix is diagonal by construction, so the dense form wastes
    n * (n - 1) of its n^2 doubles while the sparse form keeps exactly
    3n words (row index, column index, value per nonzero).
    """

    representation: str
    dimension: int

    def __post_init__(self):
        if self.representation not in ("dense", "sparse"):
            raise ConfigError(
                f"unknown representation {self.representation!r}")
        if self.dimension <= 0:
            raise ConfigError("matrix dimension must be positive")

    @property
    def payload_bytes(self) -> int:
        n = self.dimension
        return n * n * 8 if self.representation == "dense" else 3 * n * 8

    @property
    def allocation_count(self) -> int:
        return 1 if self.representation == "dense" else 3


def run_matrix_workload(heap, representation, n):
    """Allocate the constraint matrix in `heap`, touch it, release it.

    Dense: one zero-filled n^2-double block with the diagonal written.
    Sparse: three n-entry arrays holding the diagonal as coordinate
    triplets. Returns the heap stats captured while the matrix was
    live, plus the workload's own closed-form numbers; the transient
    cost also lands in heap.invocation_peak for the host's telemetry.
    Raises MemoryExhaustionFault when the representation does not fit.
    """
    work = MatrixWorkload(representation, int(n))
    n = work.dimension
    if representation == "dense":
        addr = heap.allocate_zeroed(n * n, 8)
        one = struct.pack("<d", 1.0)
        for i in range(n):
            heap.write(addr, one, offset=i * (n + 1) * 8)
        live = [addr]
    else:
        index_words = struct.pack(f"<{n}q", *range(n))
        values = struct.pack(f"<{n}d", *([1.0] * n))
        rows = heap.allocate(n * 8)
        heap.write(rows, index_words)
        cols = heap.allocate(n * 8)
        heap.write(cols, index_words)
        vals = heap.allocate(n * 8)
        heap.write(vals, values)
        live = [rows, cols, vals]
    footprint = heap.stats()
    footprint["representation"] = work.representation
    footprint["dimension"] = n
    footprint["payload_bytes"] = work.payload_bytes
    for addr in live:
        heap.deallocate(addr)
    return footprint


def build_matrix_program(name, representation="sparse", dimension=3000,
                         period_s=60.0, resting_bytes=0,
                         heap_limit=DEFAULT_HEAP_LIMIT):
    """ProcessDef running the matrix workload on a schedule.

    With period_s set the process solves every period, starting one
    period after spawn; period_s=None disables the self-timer. A
    ground_command {"command": "solve"} triggers one solve either way.
    resting_bytes, when nonzero, is allocated once at boot and never
    freed, modeling persistent buffers so heap telemetry separates
    resting from transient use.
    """
    MatrixWorkload(representation, dimension)   # validate at build time
    if period_s is not None and period_s <= 0:
        raise ConfigError("period_s must be positive or None")
    if resting_bytes < 0:
        raise ConfigError("resting_bytes must be >= 0")
    period_ns = None if period_s is None else int(round(period_s * NS_PER_S))

    def boot(ctx):
        state = {"solves": 0, "resting": None}
        if resting_bytes:
            state["resting"] = ctx.heap.allocate(resting_bytes)
        if period_ns is not None:
            ctx.request_tick(ctx.time + period_ns)
        return state

    def solve(ctx, state):
        footprint = run_matrix_workload(ctx.heap, representation, dimension)
        state["solves"] += 1
        ctx.emit("telemetry", {
            "event": "solve", "solves": state["solves"],
            "representation": representation, "dimension": dimension,
            "payload_bytes": footprint["payload_bytes"],
            "live_bytes": footprint["allocated_bytes"],
            "extent": footprint["extent"]})

    def on_tick(ctx, state, payload):
        solve(ctx, state)
        ctx.request_tick(ctx.time + period_ns)

    def on_command(ctx, state, payload):
        if payload.get("command") == "solve":
            solve(ctx, state)

    handlers = {"ground_command": on_command}
    if period_ns is not None:
        handlers["tick"] = on_tick
    return ProcessDef(name=name, handlers=handlers, state_factory=boot,
                      heap_limit=heap_limit)


# -- impulsive maneuver sequencer ----------------------------------------------------

def circularization_dv_rtn(position, velocity, mu=MU_EARTH):
    """RTN impulse that circularizes the osculating orbit at this state.

    Kills the radial and normal velocity components and sets the
    transverse component to the local circular speed sqrt(mu/r).
    """
    rx, ry, rz = (float(c) for c in position)
    vx, vy, vz = (float(c) for c in velocity)
    r = math.sqrt(rx * rx + ry * ry + rz * rz)
    ux, uy, uz = rx / r, ry / r, rz / r
    hx = ry * vz - rz * vy
    hy = rz * vx - rx * vz
    hz = rx * vy - ry * vx
    h = math.sqrt(hx * hx + hy * hy + hz * hz)
    nx, ny, nz = hx / h, hy / h, hz / h
    tx = ny * uz - nz * uy
    ty = nz * ux - nx * uz
    tz = nx * uy - ny * ux
    v_r = vx * ux + vy * uy + vz * uz
    v_t = vx * tx + vy * ty + vz * tz
    v_n = vx * nx + vy * ny + vz * nz
    return (-v_r, math.sqrt(mu / r) - v_t, -v_n)


def _normalize_burns(burns):
    if not burns:
        raise ConfigError("transfer program needs at least one burn")
    out = []
    for i, burn in enumerate(burns):
        where = f"burns[{i}]"
        if not isinstance(burn, dict):
            raise ConfigError(f"{where}: expected a mapping")
        unknown = set(burn) - {"t_s", "dv_rtn", "mode"}
        if unknown:
            raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
        if "t_s" not in burn:
            raise ConfigError(f"{where}: missing burn time t_s")
        t_ns = int(round(float(burn["t_s"]) * NS_PER_S))
        if "dv_rtn" in burn:
            if "mode" in burn:
                raise ConfigError(f"{where}: give dv_rtn or mode, not both")
            dv = tuple(float(c) for c in burn["dv_rtn"])
            if len(dv) != 3:
                raise ConfigError(f"{where}: dv_rtn needs three components")
            out.append({"t_ns": t_ns, "dv_rtn": dv, "mode": "fixed"})
        elif burn.get("mode") == "circularize":
            out.append({"t_ns": t_ns, "dv_rtn": None, "mode": "circularize"})
        else:
            raise ConfigError(f"{where}: need dv_rtn or mode: circularize")
    out.sort(key=lambda b: b["t_ns"])
    return out


def build_transfer_program(name, burns, mu=MU_EARTH,
                           heap_limit=DEFAULT_HEAP_LIMIT):
    """ProcessDef for a scripted impulsive transfer.

    burns is a list of {"t_s": seconds, "dv_rtn": [r, t, n]} for fixed
    impulses or {"t_s": seconds, "mode": "circularize"} for a burn
    computed from the spacecraft state. The process consumes
    bus_telemetry inputs ({"t", "position", "velocity"}); each due burn
    fires on the first bus sample at or after its time, so bus cadence
    bounds the timing resolution.
    """
    plan = _normalize_burns(burns)

    def boot(ctx):
        return {"next": 0}

    def on_bus(ctx, state, payload):
        while state["next"] < len(plan) and \
                int(payload["t"]) >= plan[state["next"]]["t_ns"]:
            burn = plan[state["next"]]
            state["next"] += 1
            if burn["mode"] == "fixed":
                dv = burn["dv_rtn"]
            else:
                dv = circularization_dv_rtn(payload["position"],
                                            payload["velocity"], mu)
            ctx.emit("maneuver", {"dv_rtn": list(dv), "t": ctx.time})
            ctx.emit("telemetry", {
                "event": "burn", "mode": burn["mode"], "dv_rtn": list(dv),
                "dv_mag": math.sqrt(sum(c * c for c in dv))})

    return ProcessDef(name=name, handlers={"bus_telemetry": on_bus},
                      state_factory=boot, heap_limit=heap_limit)


# -- scenario wiring -----------------------------------------------------------------

PROGRAMS = {"sync": build_sync_program,
            "nav": build_nav_program,
            "matrix": build_matrix_program,
            "transfer": build_transfer_program}


def build_program(kind, name, **options):
    """Construct a ProcessDef from a registry name and option mapping."""
    try:
        builder = PROGRAMS[kind]
    except KeyError:
        raise ConfigError(
            f"unknown program {kind!r}; known: {sorted(PROGRAMS)}") from None
    try:
        return builder(name, **options)
    except TypeError as exc:
        raise ConfigError(f"bad options for program {kind!r}: {exc}") from None
