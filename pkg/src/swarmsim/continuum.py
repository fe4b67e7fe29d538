"""Ground-truth continuous states, propagated lazily on request.

Bodies live as Cartesian inertial states stamped with an integer epoch.
Nothing moves until someone asks: request_state advances the stored
state to the requested time with fixed-step RK4 and returns it. Because
the step partition of an interval is a pure function of (epoch, t),
interleaving unrelated discrete events between requests cannot change a
single returned bit, which is what makes lazy propagation equivalent to
eager stepping.

States are frozen dataclasses with tuple vectors, so a returned state is
immutable and two requests at the same time return identical objects.
"""

import math
from dataclasses import dataclass, replace

from . import orbits
from ._kernels import accel as _accel_kernel
from ._kernels import rk4_span
from .faults import ConfigError, ReentryFault, TimeReversal
from .kernel import NS_PER_S, ns_from_s

Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class BodyState:
    body_id: str
    epoch: int                # SimTime, ns
    position: Vec3            # m, Earth-centered inertial
    velocity: Vec3            # m/s
    mass: float = 10.0        # kg
    drag_area: float = 0.05   # m^2
    cd: float = 2.2
    srp_area: float = 0.05    # m^2 (carried for config completeness)
    cr: float = 1.8


@dataclass(frozen=True)
class ForceModelConfig:
    mu: float = orbits.MU_EARTH
    include_j2: bool = True
    j2: float = orbits.J2_EARTH
    include_drag: bool = False
    # exponential atmosphere rho(alt) = rho0 * exp(-(alt - h0)/hscale);
    # defaults are the 500 km band of the standard exponential table
    rho0: float = 6.967e-13   # kg/m^3
    h0: float = 500e3         # m
    hscale: float = 63.822e3  # m
    integrator_step: float = 5.0   # s, fixed RK4 step
    r_earth: float = orbits.R_EARTH
    omega_earth: float = orbits.OMEGA_EARTH

    def __post_init__(self):
        if not 1.0 <= self.integrator_step <= 10.0:
            raise ConfigError(
                f"integrator_step must be in [1, 10] s, got {self.integrator_step}")


class Continuum:
    """Holds every body's ground truth and serves time queries.

    `propagator` selects the advance rule: "rk4" integrates the force
    model; "identity" advances only the epoch, which reduces the hybrid
    simulation to a pure discrete-event one for equivalence testing.
    """

    def __init__(self, force_model: ForceModelConfig | None = None,
                 kernel=None, propagator: str = "rk4"):
        if propagator not in ("rk4", "identity"):
            raise ConfigError(f"unknown propagator {propagator!r}")
        self.force_model = force_model or ForceModelConfig()
        self.kernel = kernel
        self.propagator = propagator
        self._bodies: dict[str, BodyState] = {}
        self.dv_applied: dict[str, float] = {}   # total |dv| per body, m/s

    # -- setup -------------------------------------------------------------

    def add_body(self, state: BodyState):
        if state.body_id in self._bodies:
            raise ConfigError(f"body {state.body_id!r} already exists")
        self._bodies[state.body_id] = state
        self.dv_applied[state.body_id] = 0.0

    def body_ids(self):
        return list(self._bodies)

    # -- queries -----------------------------------------------------------

    def request_state(self, body_id: str, t: int) -> BodyState:
        """State of a body at time t; advances the stored state to t."""
        state = self._bodies[body_id]
        if t < state.epoch:
            raise TimeReversal(
                f"body {body_id!r} requested at {t} ns, epoch {state.epoch} ns")
        if t == state.epoch:
            return state
        dt = (t - state.epoch) / NS_PER_S
        advanced = self._advance(state, dt, t)
        self._bodies[body_id] = advanced
        if self.kernel is not None:
            self.kernel.note_propagation()
        return advanced

    def propagate(self, state: BodyState, dt: float) -> BodyState:
        """Pure propagation of a state by dt seconds (state not stored)."""
        if dt < 0:
            raise TimeReversal(f"negative propagation interval {dt} s")
        if dt == 0:
            return state
        return self._advance(state, dt, state.epoch + ns_from_s(dt))

    def acceleration(self, position: Vec3, velocity: Vec3, *,
                     mass: float = 10.0, drag_area: float = 0.05,
                     cd: float = 2.2) -> Vec3:
        """Force-model acceleration at one point, m/s^2."""
        fm = self.force_model
        j2 = fm.j2 if fm.include_j2 else 0.0
        drag_k = 0.5 * cd * drag_area / mass if fm.include_drag else 0.0
        return _accel_kernel(position[0], position[1], position[2],
                             velocity[0], velocity[1], velocity[2],
                             fm.mu, j2, fm.r_earth, drag_k,
                             fm.rho0, fm.h0, fm.hscale, fm.omega_earth)

    def apply_impulse(self, body_id: str, t: int, dv_rtn: Vec3) -> BodyState:
        """Instantaneous velocity change at t, given in the body's
        radial/transverse/normal frame."""
        state = self.request_state(body_id, t)
        rx, ry, rz = state.position
        vx, vy, vz = state.velocity
        rmag = math.sqrt(rx * rx + ry * ry + rz * rz)
        ux, uy, uz = rx / rmag, ry / rmag, rz / rmag          # R
        hx = ry * vz - rz * vy
        hy = rz * vx - rx * vz
        hz = rx * vy - ry * vx
        hmag = math.sqrt(hx * hx + hy * hy + hz * hz)
        nx, ny, nz = hx / hmag, hy / hmag, hz / hmag          # N
        tx = ny * uz - nz * uy                                # T = N x R
        ty = nz * ux - nx * uz
        tz = nx * uy - ny * ux
        dr, dt_, dn = dv_rtn
        dvx = dr * ux + dt_ * tx + dn * nx
        dvy = dr * uy + dt_ * ty + dn * ny
        dvz = dr * uz + dt_ * tz + dn * nz
        bumped = replace(state, velocity=(vx + dvx, vy + dvy, vz + dvz))
        self._bodies[body_id] = bumped
        self.dv_applied[body_id] += math.sqrt(dr * dr + dt_ * dt_ + dn * dn)
        return bumped

    def to_relative_elements(self, chief: BodyState,
                             deputy: BodyState) -> orbits.RelativeElements:
        """Quasi-nonsingular relative elements of deputy wrt chief."""
        orbits.check_epochs(chief.epoch, deputy.epoch)
        return orbits.relative_elements(chief.position, chief.velocity,
                                        deputy.position, deputy.velocity,
                                        self.force_model.mu)

    # -- internals ----------------------------------------------------------

    def _advance(self, state: BodyState, dt: float, new_epoch: int) -> BodyState:
        if self.propagator == "identity":
            return replace(state, epoch=new_epoch)
        fm = self.force_model
        j2 = fm.j2 if fm.include_j2 else 0.0
        drag_k = 0.5 * state.cd * state.drag_area / state.mass \
            if fm.include_drag else 0.0
        px, py, pz = state.position
        vx, vy, vz = state.velocity
        px, py, pz, vx, vy, vz, reentered = rk4_span(
            px, py, pz, vx, vy, vz, dt, fm.integrator_step,
            fm.mu, j2, fm.r_earth, drag_k,
            fm.rho0, fm.h0, fm.hscale, fm.omega_earth, fm.r_earth)
        if reentered:
            raise ReentryFault(
                f"body {state.body_id!r} descended below the Earth surface "
                f"radius {fm.r_earth:.0f} m during propagation")
        return replace(state, epoch=new_epoch,
                       position=(px, py, pz), velocity=(vx, vy, vz))


def body_from_elements(body_id: str, epoch: int, el: orbits.ClassicalElements,
                       mu: float = orbits.MU_EARTH, **ballistic) -> BodyState:
    """Convenience constructor: BodyState from classical elements."""
    r, v = orbits.elements_to_rv(el, mu)
    return BodyState(body_id, epoch, r, v, **ballistic)
