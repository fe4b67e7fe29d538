"""Orbit mechanics helpers: element conversions and relative elements.

Everything here is pure computation on floats, shared by the continuum
(metrics conversions), the GNSS constellation (almanac propagation), and
tests (as independent oracles for the round-trip properties).

Angles are radians everywhere in this module. The quasi-nonsingular
formulation keeps all quantities smooth as eccentricity approaches zero:
instead of (e, argp, M) it works with (e*cos(argp), e*sin(argp),
u = argp + M), each well conditioned for near-circular orbits.
"""

import math
from dataclasses import dataclass

from ._kernels import kepler_to_rv, solve_kepler
from .faults import EpochMismatch, HyperbolicChief

# Physical constants (standard WGS-84 / EGM values).
MU_EARTH = 3.986004418e14      # m^3/s^2
R_EARTH = 6378137.0            # m
J2_EARTH = 1.08262668e-3
OMEGA_EARTH = 7.2921150e-5     # rad/s
TWO_PI = 2.0 * math.pi


def wrap_pi(x: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return (x + math.pi) % TWO_PI - math.pi


def mean_motion(a: float, mu: float = MU_EARTH) -> float:
    return math.sqrt(mu / (a * a * a))


def kepler_period(a: float, mu: float = MU_EARTH) -> float:
    """Two-body orbital period T = 2*pi*sqrt(a^3/mu), seconds."""
    return TWO_PI * math.sqrt(a * a * a / mu)


@dataclass(frozen=True)
class ClassicalElements:
    a: float
    e: float
    inc: float
    raan: float
    argp: float
    M: float


@dataclass(frozen=True)
class RelativeElements:
    """Quasi-nonsingular relative orbital elements of deputy wrt chief."""
    da: float      # (a_d - a_c) / a_c
    dlambda: float  # (u_d - u_c) + (raan_d - raan_c) * cos(i_c)
    dex: float     # e_d*cos(argp_d) - e_c*cos(argp_c)
    dey: float     # e_d*sin(argp_d) - e_c*sin(argp_c)
    dix: float     # i_d - i_c
    diy: float     # (raan_d - raan_c) * sin(i_c)

    def as_tuple(self):
        return (self.da, self.dlambda, self.dex, self.dey, self.dix, self.diy)


def elements_to_rv(el: ClassicalElements, mu: float = MU_EARTH):
    """Cartesian inertial (position, velocity) tuples from elements."""
    px, py, pz, vx, vy, vz = kepler_to_rv(
        el.a, el.e, el.inc, el.raan, el.argp, el.M, mu)
    return (px, py, pz), (vx, vy, vz)


def _qns_from_rv(r, v, mu):
    """(a, u, ex, ey, inc, raan) from Cartesian state.

    ex/ey are the eccentricity vector components in the node frame
    (e*cos(argp), e*sin(argp)); u is the mean argument of latitude
    argp + M. All six stay well defined and smooth for e -> 0.
    """
    rx, ry, rz = r
    vx, vy, vz = v
    rmag = math.sqrt(rx * rx + ry * ry + rz * rz)
    v2 = vx * vx + vy * vy + vz * vz
    energy = 0.5 * v2 - mu / rmag
    if energy >= 0.0:
        raise HyperbolicChief(f"orbit is not elliptical (energy {energy:.3e} J/kg)")
    a = -mu / (2.0 * energy)
    # angular momentum and node direction
    hx = ry * vz - rz * vy
    hy = rz * vx - rx * vz
    hz = rx * vy - ry * vx
    hmag = math.sqrt(hx * hx + hy * hy + hz * hz)
    inc = math.acos(max(-1.0, min(1.0, hz / hmag)))
    # ascending node: z_hat x h; degenerate for equatorial orbits
    nx, ny = -hy, hx
    nmag = math.hypot(nx, ny)
    if nmag < 1e-12 * hmag:
        raan = 0.0
        nux, nuy, nuz = 1.0, 0.0, 0.0
    else:
        raan = math.atan2(ny, nx)
        nux, nuy, nuz = nx / nmag, ny / nmag, 0.0
    # in-plane axis perpendicular to the node: m = h_hat x n_hat
    hux, huy, huz = hx / hmag, hy / hmag, hz / hmag
    mux = huy * nuz - huz * nuy
    muy = huz * nux - hux * nuz
    muz = hux * nuy - huy * nux
    # eccentricity vector
    rv = rx * vx + ry * vy + rz * vz
    c1 = v2 - mu / rmag
    ex_v = (c1 * rx - rv * vx) / mu
    ey_v = (c1 * ry - rv * vy) / mu
    ez_v = (c1 * rz - rv * vz) / mu
    ex = ex_v * nux + ey_v * nuy + ez_v * nuz   # e*cos(argp)
    ey = ex_v * mux + ey_v * muy + ez_v * muz   # e*sin(argp)
    e = math.hypot(ex, ey)
    # argument of latitude from the node (exact even for tiny e)
    theta = math.atan2(rx * mux + ry * muy + rz * muz,
                       rx * nux + ry * nuy + rz * nuz)
    argp = math.atan2(ey, ex)
    nu = theta - argp
    # mean argument of latitude u = argp + M; the conversion nu -> M uses
    # E = atan2(...) which is exact for all elliptic e
    E = math.atan2(math.sqrt(1.0 - e * e) * math.sin(nu), e + math.cos(nu))
    M = E - e * math.sin(E)
    u = argp + M
    return a, u, ex, ey, inc, raan


def rv_to_classical(r, v, mu: float = MU_EARTH) -> ClassicalElements:
    """Osculating classical elements from Cartesian state."""
    a, u, ex, ey, inc, raan = _qns_from_rv(r, v, mu)
    argp = math.atan2(ey, ex)
    e = math.hypot(ex, ey)
    M = wrap_pi(u - argp)
    return ClassicalElements(a, e, inc, wrap_pi(raan), wrap_pi(argp), M)


def relative_elements(chief_r, chief_v, deputy_r, deputy_v,
                      mu: float = MU_EARTH) -> RelativeElements:
    """Quasi-nonsingular relative elements of deputy with respect to chief."""
    ac, uc, exc, eyc, ic, raanc = _qns_from_rv(chief_r, chief_v, mu)
    ad, ud, exd, eyd, id_, raand = _qns_from_rv(deputy_r, deputy_v, mu)
    draan = wrap_pi(raand - raanc)
    return RelativeElements(
        da=(ad - ac) / ac,
        dlambda=wrap_pi(ud - uc) + draan * math.cos(ic),
        dex=exd - exc,
        dey=eyd - eyc,
        dix=id_ - ic,
        diy=draan * math.sin(ic),
    )


def deputy_from_roe(chief: ClassicalElements, roe: RelativeElements,
                    mu: float = MU_EARTH) -> ClassicalElements:
    """Deputy classical elements realizing the given relative elements.

    Exact inverse of `relative_elements` (up to angle wrapping); used to
    initialize formations from a chief orbit plus a small separation, and
    as the independent oracle for the round-trip property.
    """
    a_d = chief.a * (1.0 + roe.da)
    inc_d = chief.inc + roe.dix
    if abs(math.sin(chief.inc)) < 1e-12:
        raise ValueError("chief inclination too close to zero to place dRAAN")
    draan = roe.diy / math.sin(chief.inc)
    raan_d = chief.raan + draan
    ex_d = chief.e * math.cos(chief.argp) + roe.dex
    ey_d = chief.e * math.sin(chief.argp) + roe.dey
    e_d = math.hypot(ex_d, ey_d)
    argp_d = math.atan2(ey_d, ex_d)
    u_c = chief.argp + chief.M
    u_d = u_c + roe.dlambda - draan * math.cos(chief.inc)
    M_d = wrap_pi(u_d - argp_d)
    return ClassicalElements(a_d, e_d, inc_d, wrap_pi(raan_d),
                             wrap_pi(argp_d), M_d)


def j2_secular_rates(a: float, e: float, inc: float,
                     mu: float = MU_EARTH, j2: float = J2_EARTH,
                     re: float = R_EARTH):
    """Closed-form secular rates (raan_dot, argp_dot, M_dot) under J2.

    rad/s; M_dot includes the Keplerian mean motion.
    """
    n = mean_motion(a, mu)
    p = a * (1.0 - e * e)
    k = j2 * n * (re / p) ** 2
    cos_i = math.cos(inc)
    raan_dot = -1.5 * k * cos_i
    argp_dot = 0.75 * k * (5.0 * cos_i * cos_i - 1.0)
    m_dot = n + 0.75 * k * math.sqrt(1.0 - e * e) * (3.0 * cos_i * cos_i - 1.0)
    return raan_dot, argp_dot, m_dot


def solve_mean_to_true(M: float, e: float) -> float:
    """True anomaly from mean anomaly (elliptic)."""
    E = solve_kepler(M, e)
    return math.atan2(math.sqrt(1.0 - e * e) * math.sin(E),
                      math.cos(E) - e)


def check_epochs(chief_epoch: int, deputy_epoch: int):
    if chief_epoch != deputy_epoch:
        raise EpochMismatch(
            f"states at different epochs: {chief_epoch} vs {deputy_epoch} ns")
