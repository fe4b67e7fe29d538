# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled propagation kernels.

Mirror of `_pure`; both must produce bit-identical results (same
expression structure and order, no FMA: built with -ffp-contract=off).
Any edit here must be made in `_pure.py` too.
"""

from libc.math cimport sqrt, exp, sin, cos

BACKEND = "compiled"


cdef inline void _accel(double px, double py, double pz,
                        double vx, double vy, double vz,
                        double mu, double j2, double re, double drag_k,
                        double rho0, double h0, double hscale, double omega_e,
                        double* ax, double* ay, double* az) noexcept nogil:
    cdef double r2 = px * px + py * py + pz * pz
    cdef double r = sqrt(r2)
    cdef double c = -mu / (r2 * r)
    cdef double x = c * px
    cdef double y = c * py
    cdef double z = c * pz
    cdef double r5, f, zz, g, wx, wy, wz, wmag, rho, d
    if j2 != 0.0:
        r5 = r2 * r2 * r
        f = -1.5 * j2 * mu * (re * re) / r5
        zz = pz * pz / r2
        g = 1.0 - 5.0 * zz
        x += f * px * g
        y += f * py * g
        z += f * pz * (3.0 - 5.0 * zz)
    if drag_k != 0.0:
        wx = vx + omega_e * py
        wy = vy - omega_e * px
        wz = vz
        wmag = sqrt(wx * wx + wy * wy + wz * wz)
        rho = rho0 * exp(-((r - re) - h0) / hscale)
        d = -drag_k * rho * wmag
        x += d * wx
        y += d * wy
        z += d * wz
    ax[0] = x
    ay[0] = y
    az[0] = z


def accel(double px, double py, double pz, double vx, double vy, double vz,
          double mu, double j2, double re, double drag_k,
          double rho0, double h0, double hscale, double omega_e):
    """Acceleration (m/s^2); see the pure-Python twin for the contract."""
    cdef double ax, ay, az
    _accel(px, py, pz, vx, vy, vz, mu, j2, re, drag_k,
           rho0, h0, hscale, omega_e, &ax, &ay, &az)
    return ax, ay, az


def rk4_span(double px, double py, double pz,
             double vx, double vy, double vz, double dt, double h,
             double mu, double j2, double re, double drag_k,
             double rho0, double h0, double hscale, double omega_e,
             double min_r):
    """Advance a state dt seconds with fixed-step RK4; see the pure twin."""
    cdef long long n_full = <long long>(dt / h)
    cdef double rem = dt - n_full * h
    cdef double step = h
    cdef long long i = 0
    cdef long long total = n_full + (1 if rem > 0.0 else 0)
    cdef double a1x, a1y, a1z, a2x, a2y, a2z, a3x, a3y, a3z, a4x, a4y, a4z
    cdef double p2x, p2y, p2z, v2x, v2y, v2z
    cdef double p3x, p3y, p3z, v3x, v3y, v3z
    cdef double p4x, p4y, p4z, v4x, v4y, v4z
    cdef double hh, s
    while i < total:
        if i == n_full:
            step = rem
        _accel(px, py, pz, vx, vy, vz, mu, j2, re, drag_k,
               rho0, h0, hscale, omega_e, &a1x, &a1y, &a1z)
        hh = 0.5 * step
        p2x = px + hh * vx
        p2y = py + hh * vy
        p2z = pz + hh * vz
        v2x = vx + hh * a1x
        v2y = vy + hh * a1y
        v2z = vz + hh * a1z
        _accel(p2x, p2y, p2z, v2x, v2y, v2z, mu, j2, re, drag_k,
               rho0, h0, hscale, omega_e, &a2x, &a2y, &a2z)
        p3x = px + hh * v2x
        p3y = py + hh * v2y
        p3z = pz + hh * v2z
        v3x = vx + hh * a2x
        v3y = vy + hh * a2y
        v3z = vz + hh * a2z
        _accel(p3x, p3y, p3z, v3x, v3y, v3z, mu, j2, re, drag_k,
               rho0, h0, hscale, omega_e, &a3x, &a3y, &a3z)
        p4x = px + step * v3x
        p4y = py + step * v3y
        p4z = pz + step * v3z
        v4x = vx + step * a3x
        v4y = vy + step * a3y
        v4z = vz + step * a3z
        _accel(p4x, p4y, p4z, v4x, v4y, v4z, mu, j2, re, drag_k,
               rho0, h0, hscale, omega_e, &a4x, &a4y, &a4z)
        s = step / 6.0
        px = px + s * (vx + 2.0 * v2x + 2.0 * v3x + v4x)
        py = py + s * (vy + 2.0 * v2y + 2.0 * v3y + v4y)
        pz = pz + s * (vz + 2.0 * v2z + 2.0 * v3z + v4z)
        vx = vx + s * (a1x + 2.0 * a2x + 2.0 * a3x + a4x)
        vy = vy + s * (a1y + 2.0 * a2y + 2.0 * a3y + a4y)
        vz = vz + s * (a1z + 2.0 * a2z + 2.0 * a3z + a4z)
        if sqrt(px * px + py * py + pz * pz) < min_r:
            return px, py, pz, vx, vy, vz, 1
        i += 1
    return px, py, pz, vx, vy, vz, 0


def solve_kepler(double M, double e):
    """Eccentric anomaly from mean anomaly by Newton iteration."""
    cdef double E = M + e * sin(M)
    cdef double f, d
    cdef int i = 0
    while i < 32:
        f = E - e * sin(E) - M
        d = f / (1.0 - e * cos(E))
        E = E - d
        if d < 1e-13 and d > -1e-13:
            break
        i += 1
    return E


def kepler_to_rv(double a, double e, double inc, double raan,
                 double argp, double M, double mu):
    """Cartesian inertial state from classical elements (angles in rad)."""
    cdef double E = solve_kepler(M, e)
    cdef double ce = cos(E)
    cdef double se = sin(E)
    cdef double ome2 = sqrt(1.0 - e * e)
    cdef double r = a * (1.0 - e * ce)
    cdef double xp = a * (ce - e)
    cdef double yp = a * ome2 * se
    cdef double vf = sqrt(mu * a) / r
    cdef double vxp = -vf * se
    cdef double vyp = vf * ome2 * ce
    cdef double cr = cos(raan)
    cdef double sr = sin(raan)
    cdef double ci = cos(inc)
    cdef double si = sin(inc)
    cdef double cw = cos(argp)
    cdef double sw = sin(argp)
    cdef double r11 = cr * cw - sr * sw * ci
    cdef double r12 = -cr * sw - sr * cw * ci
    cdef double r21 = sr * cw + cr * sw * ci
    cdef double r22 = -sr * sw + cr * cw * ci
    cdef double r31 = sw * si
    cdef double r32 = cw * si
    return (r11 * xp + r12 * yp,
            r21 * xp + r22 * yp,
            r31 * xp + r32 * yp,
            r11 * vxp + r12 * vyp,
            r21 * vxp + r22 * vyp,
            r31 * vxp + r32 * vyp)
