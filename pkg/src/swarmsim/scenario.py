"""Scenario configuration: versioned YAML schema with strict validation.

A scenario file is a mapping with `version: 1` and these sections:

  name, seed, epoch_s, duration_s, jitter_max_s    run identity and span
  force_model    {mu, include_j2, integrator_step_s}
  bodies         [{name, elements|state, mass_kg, drag_area_m2, cd,
                   srp_area_m2, cr}]
  processes      [{name, program, options, heap_limit, body,
                   gnss_period_s, bus_period_s}]
  links          [{src, dst, p_enter, p_exit, delay_bounds_s}]
  gnss           {almanac, rtn_sigma_m, mask_angle_deg, log_measurements}
  ground_commands    [{process, t_s, payload}]
  observation_cycles [{process, start_s, period_s, half_s, count}]
  dispersions    [{body, element, sigma}]
  outputs        {telemetry, sample_period_s}

Unknown keys are rejected with the offending path. Angles are degrees in
the file and radians after normalization. epoch_s is bookkeeping for
aligning telemetry with external time scales; dynamics and GNSS run on
the kernel's own clock. observation_cycles expand into begin/end ground
commands at load time. Dispersions name an element key in file units;
they are applied per Monte Carlo seed, not here.
"""

import math
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import yaml

from . import orbits
from .continuum import ForceModelConfig
from .faults import ConfigError
from .fsw import PROGRAMS
from .kernel import NS_PER_S

SCHEMA_VERSION = 1
ELEMENT_KEYS = ("a_m", "e", "inc_deg", "raan_deg", "argp_deg", "M_deg")


# -- validated pieces ------------------------------------------------------------


@dataclass(frozen=True)
class BodySpec:
    name: str
    elements: Optional[dict]        # file units; dispersions apply here
    state: Optional[tuple]          # ((px,py,pz), (vx,vy,vz)) meters, m/s
    ballistic: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ProcessSpec:
    name: str
    program: str
    options: dict = field(default_factory=dict)
    heap_limit: Optional[int] = None
    body: Optional[str] = None
    gnss_period_s: Optional[int] = None
    bus_period_s: Optional[float] = None


@dataclass(frozen=True)
class LinkSpec:
    src: str
    dst: str
    p_enter: Optional[float] = None
    p_exit: Optional[float] = None
    delay_bounds_s: Optional[tuple] = None


@dataclass(frozen=True)
class GnssSpec:
    almanac: Optional[str] = None
    rtn_sigma_m: float = 1.0
    mask_angle_deg: float = 5.0
    log_measurements: bool = False


@dataclass(frozen=True)
class CommandSpec:
    process: str
    t_ns: int
    payload: dict


@dataclass(frozen=True)
class DispersionSpec:
    body: str
    element: str
    sigma: float


@dataclass(frozen=True)
class OutputSpec:
    telemetry: str = "telemetry.jsonl"
    sample_period_s: Optional[float] = None


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    epoch_s: int
    duration_ns: int
    jitter_max_s: float
    force_model: ForceModelConfig
    bodies: tuple
    processes: tuple
    links: tuple
    gnss: Optional[GnssSpec]
    commands: tuple
    dispersions: tuple
    outputs: OutputSpec

    def body(self, name: str) -> BodySpec:
        for b in self.bodies:
            if b.name == name:
                return b
        raise KeyError(name)

    def process(self, name: str) -> ProcessSpec:
        for p in self.processes:
            if p.name == name:
                return p
        raise KeyError(name)


def elements_from_raw(raw: dict) -> orbits.ClassicalElements:
    """File-unit element dict (meters, degrees) to radians form."""
    return orbits.ClassicalElements(
        a=float(raw["a_m"]), e=float(raw["e"]),
        inc=math.radians(float(raw["inc_deg"])),
        raan=math.radians(float(raw["raan_deg"])),
        argp=math.radians(float(raw["argp_deg"])),
        M=math.radians(float(raw["M_deg"])))


# -- primitive checks ------------------------------------------------------------
# YAML booleans satisfy isinstance(x, int), so numeric checks must
# reject bool explicitly or `e: true` would slip through as 1.0.


def _map(x, path) -> dict:
    if not isinstance(x, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return x


def _list(x, path) -> list:
    if not isinstance(x, list):
        raise ConfigError(f"{path}: expected a list")
    return x


def _str(x, path) -> str:
    if not isinstance(x, str) or not x:
        raise ConfigError(f"{path}: expected a non-empty string")
    return x


def _bool(x, path) -> bool:
    if not isinstance(x, bool):
        raise ConfigError(f"{path}: expected true or false")
    return x


def _num(x, path, lo=None, hi=None, lo_open=False, hi_open=False) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    v = float(x)
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise ConfigError(f"{path}: must be {'>' if lo_open else '>='} {lo}")
    if hi is not None and (v >= hi if hi_open else v > hi):
        raise ConfigError(f"{path}: must be {'<' if hi_open else '<='} {hi}")
    return v


def _int(x, path, lo=None) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(f"{path}: expected an integer")
    if lo is not None and x < lo:
        raise ConfigError(f"{path}: must be >= {lo}")
    return x


def _keys(d, path, allowed, required=()):
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")
    for k in required:
        if k not in d:
            raise ConfigError(f"{path}: missing required key {k!r}")


def _ns(seconds: float) -> int:
    return int(round(seconds * NS_PER_S))


# -- section parsers ------------------------------------------------------------


def _parse_force_model(d, path):
    d = _map(d, path)
    _keys(d, path, ("mu", "include_j2", "integrator_step_s"))
    return ForceModelConfig(
        mu=_num(d.get("mu", orbits.MU_EARTH), f"{path}.mu", lo=0,
                lo_open=True),
        include_j2=_bool(d.get("include_j2", True), f"{path}.include_j2"),
        integrator_step=_num(d.get("integrator_step_s", 10.0),
                             f"{path}.integrator_step_s", lo=1.0, hi=10.0))


_BALLISTIC = {"mass_kg": "mass", "drag_area_m2": "drag_area", "cd": "cd",
              "srp_area_m2": "srp_area", "cr": "cr"}


def _parse_body(d, path):
    d = _map(d, path)
    _keys(d, path, ("name", "elements", "state") + tuple(_BALLISTIC),
          required=("name",))
    name = _str(d.get("name"), f"{path}.name")
    if ("elements" in d) == ("state" in d):
        raise ConfigError(f"{path}: give exactly one of elements or state")
    elements = state = None
    if "elements" in d:
        e = _map(d["elements"], f"{path}.elements")
        _keys(e, f"{path}.elements", ELEMENT_KEYS, required=("a_m", "e"))
        elements = {
            "a_m": _num(e["a_m"], f"{path}.elements.a_m", lo=0, lo_open=True),
            "e": _num(e["e"], f"{path}.elements.e", lo=0.0, hi=1.0,
                      hi_open=True)}
        for k in ELEMENT_KEYS[2:]:
            elements[k] = _num(e.get(k, 0.0), f"{path}.elements.{k}")
    else:
        s = _map(d["state"], f"{path}.state")
        _keys(s, f"{path}.state", ("position", "velocity"),
              required=("position", "velocity"))
        vecs = []
        for key in ("position", "velocity"):
            v = _list(s[key], f"{path}.state.{key}")
            if len(v) != 3:
                raise ConfigError(f"{path}.state.{key}: need 3 components")
            vecs.append(tuple(_num(c, f"{path}.state.{key}[{i}]")
                              for i, c in enumerate(v)))
        state = tuple(vecs)
    ballistic = {arg: _num(d[k], f"{path}.{k}", lo=0, lo_open=True)
                 for k, arg in _BALLISTIC.items() if k in d}
    return BodySpec(name=name, elements=elements, state=state,
                    ballistic=ballistic)


def _parse_process(d, path):
    d = _map(d, path)
    _keys(d, path, ("name", "program", "options", "heap_limit", "body",
                    "gnss_period_s", "bus_period_s"),
          required=("name", "program"))
    program = _str(d.get("program"), f"{path}.program")
    if program not in PROGRAMS:
        raise ConfigError(f"{path}.program: unknown program {program!r}, "
                          f"have {sorted(PROGRAMS)}")
    options = _map(d.get("options", {}), f"{path}.options")
    for k in options:
        _str(k, f"{path}.options key")
    spec = ProcessSpec(
        name=_str(d.get("name"), f"{path}.name"),
        program=program, options=dict(options),
        heap_limit=(_int(d["heap_limit"], f"{path}.heap_limit", lo=1)
                    if "heap_limit" in d else None),
        body=(_str(d["body"], f"{path}.body") if "body" in d else None),
        gnss_period_s=(_int(d["gnss_period_s"], f"{path}.gnss_period_s",
                            lo=1) if "gnss_period_s" in d else None),
        bus_period_s=(_num(d["bus_period_s"], f"{path}.bus_period_s",
                           lo=0, lo_open=True)
                      if "bus_period_s" in d else None))
    return spec


def _parse_link(d, path):
    d = _map(d, path)
    _keys(d, path, ("src", "dst", "p_enter", "p_exit", "delay_bounds_s"),
          required=("src", "dst"))
    bounds = None
    if "delay_bounds_s" in d:
        b = _list(d["delay_bounds_s"], f"{path}.delay_bounds_s")
        if len(b) != 2:
            raise ConfigError(f"{path}.delay_bounds_s: need [lower, upper]")
        lo = _num(b[0], f"{path}.delay_bounds_s[0]", lo=0, lo_open=True)
        hi = _num(b[1], f"{path}.delay_bounds_s[1]", lo=lo, lo_open=True)
        bounds = (lo, hi)
    return LinkSpec(
        src=_str(d.get("src"), f"{path}.src"),
        dst=_str(d.get("dst"), f"{path}.dst"),
        p_enter=(_num(d["p_enter"], f"{path}.p_enter", lo=0.0, hi=1.0)
                 if "p_enter" in d else None),
        p_exit=(_num(d["p_exit"], f"{path}.p_exit", lo=0.0, hi=1.0,
                     lo_open=True) if "p_exit" in d else None),
        delay_bounds_s=bounds)


def _parse_gnss(d, path):
    d = _map(d, path)
    _keys(d, path, ("almanac", "rtn_sigma_m", "mask_angle_deg",
                    "log_measurements"))
    almanac = d.get("almanac")
    if almanac is not None:
        almanac = _str(almanac, f"{path}.almanac")
    return GnssSpec(
        almanac=almanac,
        rtn_sigma_m=_num(d.get("rtn_sigma_m", 1.0), f"{path}.rtn_sigma_m",
                         lo=0.0),
        mask_angle_deg=_num(d.get("mask_angle_deg", 5.0),
                            f"{path}.mask_angle_deg", lo=0.0, hi=90.0),
        log_measurements=_bool(d.get("log_measurements", False),
                               f"{path}.log_measurements"))


def _parse_command(d, path):
    d = _map(d, path)
    _keys(d, path, ("process", "t_s", "payload"),
          required=("process", "t_s", "payload"))
    return CommandSpec(
        process=_str(d.get("process"), f"{path}.process"),
        t_ns=_ns(_num(d["t_s"], f"{path}.t_s", lo=0.0)),
        payload=dict(_map(d["payload"], f"{path}.payload")))


def _expand_cycle(d, path):
    """One observation cycle block to its begin/end command pairs."""
    d = _map(d, path)
    _keys(d, path, ("process", "start_s", "period_s", "half_s", "count"),
          required=("process", "period_s", "half_s", "count"))
    process = _str(d.get("process"), f"{path}.process")
    start = _num(d.get("start_s", 0.0), f"{path}.start_s", lo=0.0)
    period = _num(d["period_s"], f"{path}.period_s", lo=0, lo_open=True)
    half = _num(d["half_s"], f"{path}.half_s", lo=0, lo_open=True,
                hi=period, hi_open=True)
    count = _int(d["count"], f"{path}.count", lo=1)
    out = []
    for c in range(count):
        t0 = start + c * period
        out.append(CommandSpec(process, _ns(t0), {"event": "begin"}))
        out.append(CommandSpec(process, _ns(t0 + half), {"event": "end"}))
    return out


def _parse_dispersion(d, path):
    d = _map(d, path)
    _keys(d, path, ("body", "element", "sigma"),
          required=("body", "element", "sigma"))
    element = _str(d.get("element"), f"{path}.element")
    if element not in ELEMENT_KEYS:
        raise ConfigError(f"{path}.element: unknown element {element!r}, "
                          f"have {list(ELEMENT_KEYS)}")
    return DispersionSpec(
        body=_str(d.get("body"), f"{path}.body"), element=element,
        sigma=_num(d["sigma"], f"{path}.sigma", lo=0.0))


def _parse_outputs(d, path):
    d = _map(d, path)
    _keys(d, path, ("telemetry", "sample_period_s"))
    sample = d.get("sample_period_s")
    if sample is not None:
        sample = _num(sample, f"{path}.sample_period_s", lo=0, lo_open=True)
    return OutputSpec(
        telemetry=_str(d.get("telemetry", "telemetry.jsonl"),
                       f"{path}.telemetry"),
        sample_period_s=sample)


# -- assembly ------------------------------------------------------------


_TOP_KEYS = ("version", "name", "seed", "epoch_s", "duration_s",
             "jitter_max_s", "force_model", "bodies", "processes", "links",
             "gnss", "ground_commands", "observation_cycles", "dispersions",
             "outputs")


def from_dict(data) -> Scenario:
    """Validate a parsed scenario mapping and normalize it."""
    data = _map(data, "scenario")
    _keys(data, "scenario", _TOP_KEYS, required=("version", "name",
                                                 "duration_s"))
    version = _int(data["version"], "scenario.version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"scenario.version: expected {SCHEMA_VERSION}, "
                          f"got {version}")

    bodies = tuple(_parse_body(b, f"bodies[{i}]")
                   for i, b in enumerate(_list(data.get("bodies", []),
                                               "bodies")))
    processes = tuple(_parse_process(p, f"processes[{i}]")
                      for i, p in enumerate(_list(data.get("processes", []),
                                                  "processes")))
    links = tuple(_parse_link(lk, f"links[{i}]")
                  for i, lk in enumerate(_list(data.get("links", []),
                                               "links")))
    gnss = (_parse_gnss(data["gnss"], "gnss") if "gnss" in data else None)
    commands = [_parse_command(c, f"ground_commands[{i}]")
                for i, c in enumerate(_list(data.get("ground_commands", []),
                                            "ground_commands"))]
    for i, c in enumerate(_list(data.get("observation_cycles", []),
                                "observation_cycles")):
        commands.extend(_expand_cycle(c, f"observation_cycles[{i}]"))
    dispersions = tuple(
        _parse_dispersion(d, f"dispersions[{i}]")
        for i, d in enumerate(_list(data.get("dispersions", []),
                                    "dispersions")))

    scenario = Scenario(
        name=_str(data.get("name"), "scenario.name"),
        seed=_int(data.get("seed", 0), "scenario.seed", lo=0),
        epoch_s=_int(data.get("epoch_s", 0), "scenario.epoch_s", lo=0),
        duration_ns=_ns(_num(data["duration_s"], "scenario.duration_s",
                             lo=0, lo_open=True)),
        jitter_max_s=_num(data.get("jitter_max_s", 0.0),
                          "scenario.jitter_max_s", lo=0.0),
        force_model=_parse_force_model(data.get("force_model", {}),
                                       "force_model"),
        bodies=bodies, processes=processes, links=links, gnss=gnss,
        commands=tuple(commands), dispersions=dispersions,
        outputs=_parse_outputs(data.get("outputs", {}), "outputs"))
    _cross_check(scenario)
    return scenario


def _cross_check(sc: Scenario):
    body_names = [b.name for b in sc.bodies]
    proc_names = [p.name for p in sc.processes]
    if len(set(body_names)) != len(body_names):
        raise ConfigError("bodies: duplicate name")
    if len(set(proc_names)) != len(proc_names):
        raise ConfigError("processes: duplicate name")
    for i, p in enumerate(sc.processes):
        where = f"processes[{i}] ({p.name})"
        if p.body is not None and p.body not in body_names:
            raise ConfigError(f"{where}: unknown body {p.body!r}")
        if p.gnss_period_s is not None:
            if p.body is None:
                raise ConfigError(f"{where}: gnss_period_s needs a body")
            if sc.gnss is None:
                raise ConfigError(f"{where}: gnss_period_s needs a gnss "
                                  "section")
        if p.bus_period_s is not None and p.body is None:
            raise ConfigError(f"{where}: bus_period_s needs a body")
    seen = set()
    for i, lk in enumerate(sc.links):
        where = f"links[{i}]"
        for end, label in ((lk.src, "src"), (lk.dst, "dst")):
            if end not in proc_names:
                raise ConfigError(f"{where}.{label}: unknown process "
                                  f"{end!r}")
        if lk.src == lk.dst:
            raise ConfigError(f"{where}: src and dst are both {lk.src!r}")
        if (lk.src, lk.dst) in seen:
            raise ConfigError(f"{where}: duplicate link "
                              f"{lk.src!r} -> {lk.dst!r}")
        seen.add((lk.src, lk.dst))
    for i, c in enumerate(sc.commands):
        if c.process not in proc_names:
            raise ConfigError(f"command[{i}]: unknown process "
                              f"{c.process!r}")
        if c.t_ns > sc.duration_ns:
            raise ConfigError(f"command[{i}]: t beyond scenario duration")
    for i, d in enumerate(sc.dispersions):
        where = f"dispersions[{i}]"
        if d.body not in body_names:
            raise ConfigError(f"{where}: unknown body {d.body!r}")
        if sc.body(d.body).elements is None:
            raise ConfigError(f"{where}: body {d.body!r} is state-"
                              "initialized, cannot disperse elements")


# -- file loading ------------------------------------------------------------


def bundled_names() -> list:
    """Names of the scenario files shipped inside the package."""
    root = resources.files("swarmsim").joinpath("scenarios")
    return sorted(p.name[:-5] for p in root.iterdir()
                  if p.name.endswith(".yaml"))


def load(source) -> Scenario:
    """Load a scenario from a file path or a bundled scenario name."""
    if os.path.exists(source):
        with open(source) as fh:
            text = fh.read()
    else:
        res = resources.files("swarmsim").joinpath("scenarios",
                                                   f"{source}.yaml")
        if not res.is_file():
            raise ConfigError(
                f"no scenario file {source!r}; bundled scenarios: "
                f"{bundled_names()}")
        text = res.read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"scenario parse error: {exc}") from exc
    return from_dict(data)
