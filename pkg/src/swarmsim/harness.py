"""Scenario execution: single runs, Monte Carlo sweeps, determinism checks.

build_simulation wires one scenario into live objects in a fixed order
(bodies, processes, links, samplers, commands) so that a given
(scenario, seed) pair always constructs the same machine. run_scenario
executes it and reduces the output to a RunReport whose fingerprint and
analysis hash are pure functions of that pair. monte_carlo runs a seed
list in full isolation, one fresh simulation each, and aggregates.
check_determinism repeats one run and compares the evidence.
"""

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .comms import RadioLink, lognormal_params
from .continuum import BodyState, Continuum, body_from_elements
from .faults import ConfigError, FaultRaised, NoFix
from .fsw import build_program
from .gnss import GnssConstellation, Receiver, ReceiverConfig, load_almanac
from .host import ProcessHost
from .kernel import NS_PER_S, Kernel
from .rng import RngRoot
from .scenario import Scenario, elements_from_raw, load
from .telemetry import analysis_hash, canonical_line, write_jsonl


@dataclass
class Simulation:
    """Everything build_simulation wired up, ready to run."""

    scenario: Scenario
    seed: int
    root: RngRoot
    kernel: Kernel
    host: ProcessHost
    continuum: Continuum
    links: dict
    receivers: dict


@dataclass
class RunReport:
    scenario: str
    seed: int
    fingerprint: str
    analysis_hash: str
    metrics: dict
    fault: Optional[dict] = None
    records: Optional[list] = None

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "seed": self.seed,
                "fingerprint": self.fingerprint,
                "analysis_hash": self.analysis_hash,
                "metrics": self.metrics, "fault": self.fault}


def _dispersed_elements(sc: Scenario, body, root: RngRoot) -> dict:
    """Body's element dict with per-seed dispersions applied (file units)."""
    raw = dict(body.elements)
    for d in sc.dispersions:
        if d.body != body.name:
            continue
        draw = root.stream(f"disperse:{body.name}:{d.element}")
        raw[d.element] = raw[d.element] + d.sigma * float(
            draw.standard_normal())
    if raw["a_m"] <= 0:
        raise ConfigError(f"dispersion drove {body.name}.a_m nonpositive")
    if not 0.0 <= raw["e"] < 1.0:
        raise ConfigError(f"dispersion drove {body.name}.e to {raw['e']:g}")
    return raw


def build_simulation(sc: Scenario, seed: int,
                     wallclock_probe: bool = False) -> Simulation:
    """Construct the full simulation for one (scenario, seed) pair.

    wallclock_probe plants one mid-run event that records the host
    machine's clock into telemetry. It exists to prove the determinism
    check can fail: the fingerprint stays put, the analysis hash cannot.
    """
    root = RngRoot(seed)
    kernel = Kernel()
    continuum = Continuum(force_model=sc.force_model, kernel=kernel)
    host = ProcessHost(kernel, rng=root, jitter_max_s=sc.jitter_max_s)

    for body in sc.bodies:
        if body.elements is not None:
            el = elements_from_raw(_dispersed_elements(sc, body, root))
            state = body_from_elements(body.name, 0, el,
                                       mu=sc.force_model.mu,
                                       **body.ballistic)
        else:
            pos, vel = body.state
            state = BodyState(body.name, 0, pos, vel, **body.ballistic)
        continuum.add_body(state)

    for proc in sc.processes:
        options = dict(proc.options)
        if proc.heap_limit is not None:
            options["heap_limit"] = proc.heap_limit
        host.spawn(build_program(proc.program, proc.name, **options))
        if proc.body is not None:
            host.bind_body(proc.name, continuum, proc.body)

    def deliver(dst, msg, t):
        host.deliver(dst, "crosslink", msg, t)

    links = {}
    for lk in sc.links:
        kwargs = {}
        if lk.p_enter is not None:
            kwargs["p_enter"] = lk.p_enter
        if lk.p_exit is not None:
            kwargs["p_exit"] = lk.p_exit
        if lk.delay_bounds_s is not None:
            mu, sigma = lognormal_params(*lk.delay_bounds_s)
            kwargs["delay_mu"], kwargs["delay_sigma"] = mu, sigma
        link = RadioLink(lk.src, lk.dst, kernel,
                         root.stream(f"link:{lk.src}->{lk.dst}"),
                         deliver=deliver, **kwargs)
        host.connect_link(lk.src, lk.dst, link)
        links[(lk.src, lk.dst)] = link

    receivers = {}
    gnss_procs = [p for p in sc.processes if p.gnss_period_s is not None]
    if gnss_procs:
        constellation = GnssConstellation(
            root, satellites=load_almanac(sc.gnss.almanac,
                                          mu=sc.force_model.mu),
            rtn_sigma=sc.gnss.rtn_sigma_m, mu=sc.force_model.mu)
        config = ReceiverConfig(mask_angle=sc.gnss.mask_angle_deg)
        for proc in gnss_procs:
            receivers[proc.name] = Receiver(proc.name, constellation, root,
                                            config)
            _schedule_gnss(sc, kernel, host, continuum, proc,
                           receivers[proc.name])

    for proc in sc.processes:
        if proc.bus_period_s is not None:
            _schedule_bus(kernel, host, continuum, proc)

    if sc.outputs.sample_period_s is not None:
        for body in sc.bodies:
            _schedule_trajectory(sc, kernel, host, continuum, body.name)

    for cmd in sc.commands:
        host.schedule_input(cmd.process, "ground_command", dict(cmd.payload),
                            cmd.t_ns)

    if wallclock_probe:
        def probe(kern):
            host.records.append({
                "t": kern.now(), "source": "probe", "kind": "debug",
                "payload": {"wall_ns": time.perf_counter_ns()}})

        kernel.schedule(sc.duration_ns // 2, probe, label="wallclock-probe")

    return Simulation(scenario=sc, seed=seed, root=root, kernel=kernel,
                      host=host, continuum=continuum, links=links,
                      receivers=receivers)


def _schedule_gnss(sc, kernel, host, continuum, proc, receiver):
    period = proc.gnss_period_s * NS_PER_S
    pid, body_id = proc.name, proc.body
    log_meas = sc.gnss.log_measurements

    def sample(kern):
        t = kern.now()
        state = continuum.request_state(body_id, t)
        host.records.append({
            "t": t, "source": pid, "kind": "truth",
            "payload": {"body": body_id,
                        "position": [float(c) for c in state.position],
                        "velocity": [float(c) for c in state.velocity]}})
        if log_meas:
            meas = receiver.measure(state, t)
            host.records.append({
                "t": t, "source": pid, "kind": "gnss_meas",
                "payload": {"sats": [
                    {"prn": m.prn, "pr": m.pseudorange,
                     "cp": m.carrier_phase, "el": m.elevation}
                    for m in meas]}})
        try:
            pvt = receiver.pvt_solution(state, t)
        except NoFix:
            host.records.append({"t": t, "source": pid, "kind": "gnss",
                                 "payload": {"fix": False}})
        else:
            host.records.append({"t": t, "source": pid, "kind": "gnss",
                                 "payload": {"fix": True}})
            host.deliver(pid, "gnss_message", pvt, t)
        if t + period <= sc.duration_ns:
            kern.schedule(t + period, sample, needs_continuum=True,
                          label=f"{pid}:gnss")

    kernel.schedule(period, sample, needs_continuum=True,
                    label=f"{pid}:gnss")


def _schedule_bus(kernel, host, continuum, proc):
    period = int(round(proc.bus_period_s * NS_PER_S))
    pid, body_id = proc.name, proc.body

    def sample(kern):
        t = kern.now()
        state = continuum.request_state(body_id, t)
        host.deliver(pid, "bus_telemetry",
                     {"t": t,
                      "position": [float(c) for c in state.position],
                      "velocity": [float(c) for c in state.velocity]}, t)
        kern.schedule(t + period, sample, needs_continuum=True,
                      label=f"{pid}:bus")

    kernel.schedule(period, sample, needs_continuum=True,
                    label=f"{pid}:bus")


def _schedule_trajectory(sc, kernel, host, continuum, body_id):
    period = int(round(sc.outputs.sample_period_s * NS_PER_S))

    def sample(kern):
        t = kern.now()
        state = continuum.request_state(body_id, t)
        host.records.append({
            "t": t, "source": body_id, "kind": "trajectory",
            "payload": {"position": [float(c) for c in state.position],
                        "velocity": [float(c) for c in state.velocity]}})
        if t + period <= sc.duration_ns:
            kern.schedule(t + period, sample, needs_continuum=True,
                          label=f"{body_id}:trajectory")

    kernel.schedule(period, sample, needs_continuum=True,
                    label=f"{body_id}:trajectory")


# -- execution ------------------------------------------------------------


def run_scenario(scenario, seed=None, out_dir=None, wallclock_probe=False,
                 keep_records=True) -> RunReport:
    """Run one scenario to completion or first fault.

    scenario is a Scenario, a file path, or a bundled scenario name.
    seed defaults to the scenario's own. A fault ends the run early and
    is reported in the fault field; everything produced up to that point
    (records, metrics, fingerprint, hash) is still reduced normally.
    """
    sc = load(scenario) if isinstance(scenario, str) else scenario
    if seed is None:
        seed = sc.seed
    sim = build_simulation(sc, seed, wallclock_probe=wallclock_probe)

    fault = None
    start = time.perf_counter()
    try:
        summary = sim.kernel.run_until(sc.duration_ns)
        wall = summary.wall_seconds
    except FaultRaised as exc:
        wall = time.perf_counter() - start
        fault = {"type": type(exc.fault).__name__, "process": exc.process,
                 "reason": exc.reason, "time_ns": exc.time}

    fingerprint = sim.root.fingerprint()   # exactly one draw, end of run
    records = sim.host.records
    report = RunReport(
        scenario=sc.name, seed=seed, fingerprint=fingerprint,
        analysis_hash=analysis_hash(records),
        metrics=_metrics(sc, sim, wall), fault=fault,
        records=records if keep_records else None)

    if out_dir is not None:
        import json
        import os
        os.makedirs(out_dir, exist_ok=True)
        write_jsonl(records, os.path.join(out_dir, sc.outputs.telemetry))
        with open(os.path.join(out_dir, "report.json"), "w") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return report


def _metrics(sc: Scenario, sim: Simulation, wall: float) -> dict:
    kernel, host = sim.kernel, sim.host
    sim_seconds = kernel.now() / NS_PER_S
    metrics = {
        "events_executed": kernel.events_executed,
        "continuum_events": kernel.continuum_events_executed,
        "propagations_performed": kernel.propagations_performed,
        "wall_seconds": wall,
        "sim_seconds": sim_seconds,
        "speedup": sim_seconds / wall if wall > 0 else math.inf,
        "records": len(host.records),
        "dv_total": {b: float(v) for b, v in sim.continuum.dv_applied.items()},
        "heap": {}, "links": {},
    }
    for pid in host.process_ids:
        heap = host.process(pid).heap
        stats = heap.stats()
        metrics["heap"][pid] = {"peak_allocated": stats["peak_allocated"],
                                "peak_extent": stats["peak_extent"],
                                "limit": heap.limit}
    for (src, dst), link in sim.links.items():
        st = link.stats
        metrics["links"][f"{src}->{dst}"] = {
            "sent": st.sent, "dropped": st.dropped,
            "delivered": st.delivered, "reordered": st.reordered,
            "in_flight": st.in_flight}
    nav = _nav_error(sc, host.records)
    if nav is not None:
        metrics["nav_error"] = nav
    return metrics


def _nav_error(sc: Scenario, records) -> Optional[dict]:
    """Relative-position estimate error against sampled truth, meters."""
    truth = {}
    for rec in records:
        if rec["kind"] == "truth":
            truth.setdefault(rec["source"], {})[rec["t"]] = \
                rec["payload"]["position"]
    peers = {p.name: p.options.get("peer") for p in sc.processes}
    errors = []
    for rec in records:
        if rec["kind"] != "observation":
            continue
        pid, peer = rec["source"], peers.get(rec["source"])
        epoch = rec["payload"].get("epoch")
        if peer is None or epoch is None:
            continue
        own = truth.get(pid, {}).get(epoch)
        other = truth.get(peer, {}).get(epoch)
        if own is None or other is None:
            continue
        est = rec["payload"]["relative"]
        err = math.sqrt(sum((e - (o - s)) ** 2
                            for e, o, s in zip(est, other, own)))
        errors.append(err)
    if not errors:
        return None
    return {"count": len(errors),
            "mean_m": float(sum(errors) / len(errors)),
            "max_m": float(max(errors))}


# -- sweeps and checks ------------------------------------------------------------


def resolve_metric(metrics: dict, path: str):
    """Dotted-path lookup into a metrics dict, e.g. "dv_total.sc0"."""
    node = metrics
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"metric {path!r}: no component {part!r}")
        node = node[part]
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigError(f"metric {path!r} is not a number")
    return float(node)


def monte_carlo(scenario, seeds, metric=None) -> dict:
    """Run a seed sweep, one isolated simulation per seed.

    Faulted runs are recorded and the sweep continues; the metric, when
    named, is aggregated over the clean runs only.
    """
    sc = load(scenario) if isinstance(scenario, str) else scenario
    seeds = list(seeds)
    if not seeds:
        raise ConfigError("monte_carlo needs at least one seed")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("monte_carlo seeds repeat")

    reports = [run_scenario(sc, seed=s, keep_records=False) for s in seeds]
    fingerprints = [r.fingerprint for r in reports]
    fault_seeds = [r.seed for r in reports if r.fault is not None]
    by_type = {}
    for r in reports:
        if r.fault is not None:
            by_type[r.fault["type"]] = by_type.get(r.fault["type"], 0) + 1

    aggregate = {
        "scenario": sc.name, "n": len(seeds), "seeds": seeds,
        "fingerprints": fingerprints,
        "fingerprint_collisions": len(set(fingerprints)) < len(fingerprints),
        "faults": {"count": len(fault_seeds), "by_type": by_type,
                   "seeds": fault_seeds},
        "metric": metric,
        "reports": [r.to_dict() for r in reports],
    }
    if metric is not None:
        values = [resolve_metric(r.metrics, metric) for r in reports
                  if r.fault is None]
        aggregate["values"] = values
        if values:
            counts, edges = np.histogram(values, bins=20)
            aggregate["mean"] = float(np.mean(values))
            aggregate["std"] = float(np.std(values))
            aggregate["histogram"] = {"edges": [float(e) for e in edges],
                                      "counts": [int(c) for c in counts]}
    return aggregate


def check_determinism(scenario, seed=None, runs=3,
                      wallclock_probe=False) -> dict:
    """Repeat one (scenario, seed) run and demand identical evidence.

    Passes iff every run produced the same fingerprint and the same
    analysis hash. On failure the result pinpoints the first divergent
    telemetry record. A list of seeds is a configuration error: this
    checks replay of one seed, not agreement across seeds.
    """
    if isinstance(seed, (list, tuple, set)):
        raise ConfigError("check_determinism takes one seed, not a list")
    if runs < 2:
        raise ConfigError("check_determinism needs runs >= 2")
    sc = load(scenario) if isinstance(scenario, str) else scenario

    reports = [run_scenario(sc, seed=seed, wallclock_probe=wallclock_probe)
               for _ in range(runs)]
    fingerprints = [r.fingerprint for r in reports]
    hashes = [r.analysis_hash for r in reports]
    ok = len(set(fingerprints)) == 1 and len(set(hashes)) == 1

    divergence = None
    if not ok:
        base = reports[0]
        other = next(r for r in reports[1:]
                     if (r.fingerprint, r.analysis_hash) !=
                        (base.fingerprint, base.analysis_hash))
        run_index = reports.index(other)
        for i in range(max(len(base.records), len(other.records))):
            a = (canonical_line(base.records[i])
                 if i < len(base.records) else "<missing>")
            b = (canonical_line(other.records[i])
                 if i < len(other.records) else "<missing>")
            if a != b:
                divergence = {"run": run_index, "record": i,
                              "expected": a, "actual": b}
                break
        if divergence is None:
            divergence = {"run": run_index, "record": None,
                          "expected": base.fingerprint,
                          "actual": other.fingerprint}

    return {"pass": ok, "runs": runs, "seed": reports[0].seed,
            "fingerprints": fingerprints, "hashes": hashes,
            "divergence": divergence}
