"""Deterministic hybrid simulator for distributed spacecraft flight software.

The simulator combines a discrete-event core (integer-nanosecond clock,
totally ordered event queue) with lazily propagated continuous orbit
dynamics, and models the hostile execution environment flight software
actually faces: unreliable inter-satellite radio, constrained per-process
heaps, and noisy GNSS sensing. Every run is a pure function of its
scenario configuration and seed, so defects such as dropped or reordered
messages, memory exhaustion, and invalid state transitions reproduce
exactly at a desk.

Layering, bottom up:

    kernel      event queue, simulated clock, run loop
    continuum   ground-truth orbit states, RK4 propagation on demand
    heap        simulated per-process allocator with exact block layout
    host        virtual processes: handlers, outputs, ticks, heap dispatch
    comms       radio links: Markov blackouts, log-normal delays
    gnss        31-satellite constellation, visibility, noisy measurements
    fsw         demonstration flight software (sync, nav, workloads)
    harness     scenario configs, telemetry, determinism checks, CLI
"""

__version__ = "0.1.0"

from .faults import Fault, FaultRaised, ConfigError
from .kernel import Kernel, RunSummary, NS_PER_S, ns_from_s, s_from_ns
from .rng import RngRoot
from .continuum import BodyState, Continuum, ForceModelConfig, \
    body_from_elements
from .heap import HeapImage
from .host import ProcessDef, ProcessHost
from .comms import RadioLink, lognormal_params
from .gnss import GnssConstellation, Receiver, ReceiverConfig
from .fsw import PROGRAMS, build_program
from .scenario import Scenario, load
from .telemetry import analysis_hash, read_jsonl, write_jsonl
from .harness import (RunReport, build_simulation, check_determinism,
                      monte_carlo, run_scenario)
