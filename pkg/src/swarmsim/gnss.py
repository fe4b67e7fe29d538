"""GPS constellation and receiver measurement models.

The constellation propagates 31 satellites with a closed-form model:
Kepler motion plus secular J2 drift of the node, perigee, and mean
anomaly. On top of the deterministic orbit each satellite carries a
small radial/transverse/normal position perturbation, N(0, 1 m) per
axis by default, drawn from a stream keyed by (prn, epoch second) so
any epoch's value is reproducible in isolation.

Receivers see the constellation through an antenna: a satellite is
visible when the line of sight clears the Earth sphere and sits above
the boresight plane by at least the mask angle. Visibility uses the
unperturbed geometry, so which satellites are in view never depends on
the random state. Measurements and position-velocity-time solutions add
the configured noise:

  pseudorange   = range + N(0, sigma_pr(elevation))
  carrier phase = range + wavelength * N + N(0, sigma_cp(elevation))
  pvt           = truth + N(0, 1.5 m) and N(0, 30 mm/s) per axis

with sigma(elevation) interpolated linearly between the configured
bounds and N an integer ambiguity drawn uniformly from {-5..5} once per
continuous visibility pass (tracked at the receiver's measurement
cadence: a satellite absent from one measurement epoch loses lock).

The almanac ships as a text file (see data/gps_almanac.txt for the
schema) and can be replaced via the path argument of load_almanac.
"""

import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Optional

from . import orbits
from .continuum import BodyState
from .faults import ConfigError, EpochMisaligned, NoFix
from .kernel import NS_PER_S

SPEED_OF_LIGHT = 299_792_458.0
GPS_L1_HZ = 1575.42e6
L1_WAVELENGTH = SPEED_OF_LIGHT / GPS_L1_HZ

# Table-2 style noise model defaults, meters
SIGMA_PR_BOUNDS = (0.1437, 2.2769)
SIGMA_CP_BOUNDS = (0.659e-3, 10.45e-3)
SIGMA_PVT_POS = 1.5
SIGMA_PVT_VEL = 0.030


@dataclass(frozen=True)
class GnssSatellite:
    """One constellation entry: elements at epoch plus secular rates."""

    prn: int
    a: float
    e: float
    inc: float
    raan: float
    argp: float
    m0: float
    epoch: int = 0
    raan_dot: float = 0.0
    argp_dot: float = 0.0
    m_dot: float = 0.0

    def state_at(self, t: int, mu: float = orbits.MU_EARTH):
        """Unperturbed inertial (position, velocity) at kernel time t."""
        dt = (t - self.epoch) / NS_PER_S
        el = orbits.ClassicalElements(
            a=self.a, e=self.e, inc=self.inc,
            raan=self.raan + self.raan_dot * dt,
            argp=self.argp + self.argp_dot * dt,
            M=self.m0 + self.m_dot * dt)
        return orbits.elements_to_rv(el, mu)


def satellite_from_elements(prn: int, a: float, e: float, inc: float,
                            raan: float, argp: float, m0: float,
                            epoch: int = 0,
                            mu: float = orbits.MU_EARTH) -> GnssSatellite:
    if not 0.0 <= e < 0.1:
        raise ConfigError(f"prn {prn}: eccentricity {e} out of range")
    raan_dot, argp_dot, m_dot = orbits.j2_secular_rates(a, e, inc, mu)
    return GnssSatellite(prn=prn, a=a, e=e, inc=inc, raan=raan, argp=argp,
                         m0=m0, epoch=epoch, raan_dot=raan_dot,
                         argp_dot=argp_dot, m_dot=m_dot)


def load_almanac(path=None, mu: float = orbits.MU_EARTH):
    """Parse an almanac file into satellites; None loads the bundled one.

    Format: '#' comments, an 'epoch <ns>' line, then per-satellite rows
    'prn a_m e inc_deg raan_deg argp_deg m0_deg'.
    """
    if path is None:
        text = resources.files("swarmsim").joinpath(
            "data/gps_almanac.txt").read_text()
    else:
        with open(path) as f:
            text = f.read()
    epoch = 0
    sats = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "epoch":
            epoch = int(parts[1])
            continue
        if len(parts) != 7:
            raise ConfigError(f"almanac line {lineno}: expected 7 fields, "
                              f"got {len(parts)}")
        prn = int(parts[0])
        a, e, inc, raan, argp, m0 = map(float, parts[1:])
        sats.append(satellite_from_elements(
            prn, a, e, math.radians(inc), math.radians(raan),
            math.radians(argp), math.radians(m0), epoch=epoch, mu=mu))
    if not sats:
        raise ConfigError("almanac contains no satellites")
    seen = [s.prn for s in sats]
    if len(set(seen)) != len(seen):
        raise ConfigError("almanac repeats a prn")
    sats.sort(key=lambda s: s.prn)
    return sats


class GnssConstellation:
    """Propagates the almanac and applies per-epoch RTN perturbations."""

    def __init__(self, rng, satellites=None, rtn_sigma: float = 1.0,
                 mu: float = orbits.MU_EARTH):
        self._rng = rng
        self.satellites = (load_almanac(mu=mu) if satellites is None
                           else list(satellites))
        self.rtn_sigma = float(rtn_sigma)
        self.mu = mu
        self._by_prn = {s.prn: s for s in self.satellites}

    def satellite(self, prn: int) -> GnssSatellite:
        return self._by_prn[prn]

    def unperturbed_state(self, prn: int, t: int):
        return self._by_prn[prn].state_at(t, self.mu)

    def position(self, prn: int, t: int):
        """Perturbed inertial position of one satellite at t."""
        r, v = self.unperturbed_state(prn, t)
        if self.rtn_sigma == 0.0:
            return r
        sec = t // NS_PER_S
        draw = self._rng.keyed_normals(f"gnss:prn{prn:02d}:{sec}", 3)
        dr, dt_, dn = (self.rtn_sigma * float(x) for x in draw)
        rx, ry, rz = r
        vx, vy, vz = v
        rn = math.sqrt(rx * rx + ry * ry + rz * rz)
        ux, uy, uz = rx / rn, ry / rn, rz / rn
        hx = ry * vz - rz * vy
        hy = rz * vx - rx * vz
        hz = rx * vy - ry * vx
        hn = math.sqrt(hx * hx + hy * hy + hz * hz)
        nx, ny, nz = hx / hn, hy / hn, hz / hn
        tx = ny * uz - nz * uy
        ty = nz * ux - nx * uz
        tz = nx * uy - ny * ux
        return (rx + dr * ux + dt_ * tx + dn * nx,
                ry + dr * uy + dt_ * ty + dn * ny,
                rz + dr * uz + dt_ * tz + dn * nz)

    def constellation_states(self, t: int):
        """All satellite positions at t, ascending prn."""
        return [(s.prn, self.position(s.prn, t)) for s in self.satellites]


def elevation_sigma(elevation: float, bounds):
    """Linear sigma(elevation): bounds (min at 90 deg, max at 0 deg).

    Written in barycentric form so the endpoints come back exactly.
    """
    if not 0.0 <= elevation <= 90.0:
        raise ConfigError(f"elevation {elevation} outside [0, 90] deg")
    lo, hi = bounds
    f = elevation / 90.0
    return lo * f + hi * (1.0 - f)


@dataclass(frozen=True)
class ReceiverConfig:
    """Antenna geometry and noise model for one receiver.

    attitude maps kernel time to a 3x3 body-to-inertial rotation (rows
    of three floats); None means ideal zenith pointing, boresight along
    the instantaneous position unit vector.
    """

    boresight: tuple = (0.0, 0.0, 1.0)
    attitude: Optional[Callable] = None
    mask_angle: float = 5.0
    sigma_pr_bounds: tuple = SIGMA_PR_BOUNDS
    sigma_cp_bounds: tuple = SIGMA_CP_BOUNDS
    sigma_pvt_pos: float = SIGMA_PVT_POS
    sigma_pvt_vel: float = SIGMA_PVT_VEL
    ambiguity_range: int = 5
    wavelength: float = L1_WAVELENGTH

    def __post_init__(self):
        for name in ("sigma_pr_bounds", "sigma_cp_bounds"):
            lo, hi = getattr(self, name)
            if lo < 0 or lo > hi:
                raise ConfigError(f"{name} must satisfy 0 <= min <= max, "
                                  f"got ({lo}, {hi})")


@dataclass(frozen=True)
class GnssMeasurement:
    prn: int
    epoch: int
    pseudorange: float
    carrier_phase: float
    elevation: float
    sigma_pr: float
    sigma_cp: float


class Receiver:
    """One spacecraft's GNSS receiver.

    Per-receiver noise comes from two named streams so measurement and
    pvt cadences never shift each other's draws. Draw order within one
    measurement epoch is ascending prn: (ambiguity on acquisition),
    pseudorange noise, carrier noise.
    """

    def __init__(self, name: str, constellation: GnssConstellation, rng,
                 config: ReceiverConfig | None = None):
        self.name = name
        self.constellation = constellation
        self.config = config or ReceiverConfig()
        self._meas_stream = rng.stream(f"gnss:meas:{name}")
        self._pvt_stream = rng.stream(f"gnss:pvt:{name}")
        self._ambiguity: dict[int, int] = {}   # prn -> N while locked

    # -- geometry ----------------------------------------------------------

    def _boresight_inertial(self, position, t: int):
        cfg = self.config
        if cfg.attitude is None:
            x, y, z = position
            n = math.sqrt(x * x + y * y + z * z)
            return (x / n, y / n, z / n)
        m = cfg.attitude(t)
        bx, by, bz = cfg.boresight
        return (m[0][0] * bx + m[0][1] * by + m[0][2] * bz,
                m[1][0] * bx + m[1][1] * by + m[1][2] * bz,
                m[2][0] * bx + m[2][1] * by + m[2][2] * bz)

    def _visible_geometry(self, state: BodyState, t: int):
        """(prn, elevation deg) pairs for satellites in view, ascending."""
        rx, ry, rz = state.position
        bore = self._boresight_inertial(state.position, t)
        out = []
        for sat in self.constellation.satellites:
            (sx, sy, sz), _ = sat.state_at(t, self.constellation.mu)
            dx, dy, dz = sx - rx, sy - ry, sz - rz
            if _segment_hits_earth(rx, ry, rz, dx, dy, dz):
                continue
            dn = math.sqrt(dx * dx + dy * dy + dz * dz)
            s = (bore[0] * dx + bore[1] * dy + bore[2] * dz) / dn
            elevation = math.degrees(math.asin(max(-1.0, min(1.0, s))))
            if elevation >= self.config.mask_angle:
                out.append((sat.prn, elevation))
        return out

    def visible_set(self, state: BodyState, t: int) -> set:
        return {prn for prn, _ in self._visible_geometry(state, t)}

    # -- observables ---------------------------------------------------------

    def measure(self, state: BodyState, t: int):
        """Pseudorange and carrier phase for every visible satellite.

        t must sit on the 1-second GPS epoch grid. Satellites absent
        from this epoch lose carrier lock and redraw their integer
        ambiguity on reacquisition.
        """
        if t % NS_PER_S != 0:
            raise EpochMisaligned(f"measurement at {t} ns is off the "
                                  f"1-second epoch grid")
        cfg = self.config
        rx, ry, rz = state.position
        visible = self._visible_geometry(state, t)
        seen = set()
        out = []
        for prn, elevation in visible:
            seen.add(prn)
            if prn not in self._ambiguity:
                self._ambiguity[prn] = int(self._meas_stream.integers(
                    -cfg.ambiguity_range, cfg.ambiguity_range + 1))
            n_amb = self._ambiguity[prn]
            sx, sy, sz = self.constellation.position(prn, t)
            rng_true = math.sqrt((sx - rx) ** 2 + (sy - ry) ** 2
                                 + (sz - rz) ** 2)
            sigma_pr = elevation_sigma(elevation, cfg.sigma_pr_bounds)
            sigma_cp = elevation_sigma(elevation, cfg.sigma_cp_bounds)
            pr = rng_true + sigma_pr * float(self._meas_stream.standard_normal())
            cp = (rng_true + cfg.wavelength * n_amb
                  + sigma_cp * float(self._meas_stream.standard_normal()))
            out.append(GnssMeasurement(prn=prn, epoch=t, pseudorange=pr,
                                       carrier_phase=cp, elevation=elevation,
                                       sigma_pr=sigma_pr, sigma_cp=sigma_cp))
        for prn in list(self._ambiguity):
            if prn not in seen:
                del self._ambiguity[prn]   # loss of lock ends the pass
        return out

    def ambiguity(self, prn: int):
        """Current integer ambiguity for a locked prn, else None."""
        return self._ambiguity.get(prn)

    def pvt_solution(self, state: BodyState, t: int) -> dict:
        """Position-velocity-time fix: truth plus per-axis noise."""
        if len(self._visible_geometry(state, t)) < 4:
            raise NoFix(f"receiver {self.name!r} sees fewer than 4 "
                        f"satellites at {t} ns")
        cfg = self.config
        draws = self._pvt_stream.standard_normal(6)
        pos = [p + cfg.sigma_pvt_pos * float(z)
               for p, z in zip(state.position, draws[:3])]
        vel = [v + cfg.sigma_pvt_vel * float(z)
               for v, z in zip(state.velocity, draws[3:])]
        return {"t": t, "position": pos, "velocity": vel}


def _segment_hits_earth(rx, ry, rz, dx, dy, dz,
                        radius: float = orbits.R_EARTH) -> bool:
    """True when the receiver-to-satellite segment crosses the sphere."""
    # closest approach of the segment parameterized r + s*d, s in [0, 1]
    dd = dx * dx + dy * dy + dz * dz
    s = -(rx * dx + ry * dy + rz * dz) / dd
    if s <= 0.0:
        return False   # receiver is the closest point; it sits above ground
    s = min(s, 1.0)
    cx, cy, cz = rx + s * dx, ry + s * dy, rz + s * dz
    return cx * cx + cy * cy + cz * cz < radius * radius
