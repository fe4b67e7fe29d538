"""Pure-Python propagation kernels.

Mirror of the compiled module `_core`. Both implementations must produce
bit-identical results: identical expression structure and operation
order, no fused multiply-adds, the same libm calls. Any edit here must be
made in `_core.pyx` too; tests compare the two paths float for float.

All functions are scalar and allocation-light so they stay fast under
plain CPython when the extension is unavailable.
"""

from math import sqrt, exp, sin, cos

BACKEND = "pure"


def accel(px, py, pz, vx, vy, vz,
          mu, j2, re, drag_k, rho0, h0, hscale, omega_e):
    """Acceleration (m/s^2) for point-mass gravity + optional J2 + drag.

    j2 == 0.0 disables the J2 term, drag_k == 0.0 disables drag.
    drag_k is Cd*A/(2m); rho0/h0/hscale define the exponential
    atmosphere rho(alt) = rho0 * exp(-(alt - h0)/hscale).
    """
    r2 = px * px + py * py + pz * pz
    r = sqrt(r2)
    c = -mu / (r2 * r)
    ax = c * px
    ay = c * py
    az = c * pz
    if j2 != 0.0:
        r5 = r2 * r2 * r
        f = -1.5 * j2 * mu * (re * re) / r5
        zz = pz * pz / r2
        g = 1.0 - 5.0 * zz
        ax += f * px * g
        ay += f * py * g
        az += f * pz * (3.0 - 5.0 * zz)
    if drag_k != 0.0:
        # wind-relative velocity: atmosphere co-rotates with the Earth
        wx = vx + omega_e * py
        wy = vy - omega_e * px
        wz = vz
        wmag = sqrt(wx * wx + wy * wy + wz * wz)
        rho = rho0 * exp(-((r - re) - h0) / hscale)
        d = -drag_k * rho * wmag
        ax += d * wx
        ay += d * wy
        az += d * wz
    return ax, ay, az


def rk4_span(px, py, pz, vx, vy, vz, dt, h,
             mu, j2, re, drag_k, rho0, h0, hscale, omega_e, min_r):
    """Advance a Cartesian state dt seconds with fixed-step RK4.

    The interval is covered by floor(dt/h) full steps plus one final
    partial step (skipped when the remainder is zero), so the partition
    depends only on dt, never on how the caller got here.

    Returns (px, py, pz, vx, vy, vz, reentered) where reentered is 1 if
    the radius fell below min_r at any step boundary (integration stops
    there) and 0 otherwise.
    """
    # Truncating the rounded quotient matches the compiled kernel's C cast.
    n_full = int(dt / h)
    rem = dt - n_full * h
    step = h
    i = 0
    total = n_full + (1 if rem > 0.0 else 0)
    while i < total:
        if i == n_full:
            step = rem
        # k1
        a1x, a1y, a1z = accel(px, py, pz, vx, vy, vz,
                              mu, j2, re, drag_k, rho0, h0, hscale, omega_e)
        hh = 0.5 * step
        # k2 at midpoint using k1
        p2x = px + hh * vx
        p2y = py + hh * vy
        p2z = pz + hh * vz
        v2x = vx + hh * a1x
        v2y = vy + hh * a1y
        v2z = vz + hh * a1z
        a2x, a2y, a2z = accel(p2x, p2y, p2z, v2x, v2y, v2z,
                              mu, j2, re, drag_k, rho0, h0, hscale, omega_e)
        # k3 at midpoint using k2
        p3x = px + hh * v2x
        p3y = py + hh * v2y
        p3z = pz + hh * v2z
        v3x = vx + hh * a2x
        v3y = vy + hh * a2y
        v3z = vz + hh * a2z
        a3x, a3y, a3z = accel(p3x, p3y, p3z, v3x, v3y, v3z,
                              mu, j2, re, drag_k, rho0, h0, hscale, omega_e)
        # k4 at endpoint using k3
        p4x = px + step * v3x
        p4y = py + step * v3y
        p4z = pz + step * v3z
        v4x = vx + step * a3x
        v4y = vy + step * a3y
        v4z = vz + step * a3z
        a4x, a4y, a4z = accel(p4x, p4y, p4z, v4x, v4y, v4z,
                              mu, j2, re, drag_k, rho0, h0, hscale, omega_e)
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


def solve_kepler(M, e):
    """Eccentric anomaly from mean anomaly by Newton iteration."""
    E = M + e * sin(M)
    i = 0
    while i < 32:
        f = E - e * sin(E) - M
        d = f / (1.0 - e * cos(E))
        E = E - d
        if d < 1e-13 and d > -1e-13:
            break
        i += 1
    return E


def kepler_to_rv(a, e, inc, raan, argp, M, mu):
    """Cartesian inertial state from classical elements (angles in rad)."""
    E = solve_kepler(M, e)
    ce = cos(E)
    se = sin(E)
    ome2 = sqrt(1.0 - e * e)
    r = a * (1.0 - e * ce)
    # perifocal position and velocity
    xp = a * (ce - e)
    yp = a * ome2 * se
    vf = sqrt(mu * a) / r
    vxp = -vf * se
    vyp = vf * ome2 * ce
    # rotate perifocal -> inertial: Rz(raan) Rx(inc) Rz(argp)
    cr = cos(raan)
    sr = sin(raan)
    ci = cos(inc)
    si = sin(inc)
    cw = cos(argp)
    sw = sin(argp)
    r11 = cr * cw - sr * sw * ci
    r12 = -cr * sw - sr * cw * ci
    r21 = sr * cw + cr * sw * ci
    r22 = -sr * sw + cr * cw * ci
    r31 = sw * si
    r32 = cw * si
    px = r11 * xp + r12 * yp
    py = r21 * xp + r22 * yp
    pz = r31 * xp + r32 * yp
    vx = r11 * vxp + r12 * vyp
    vy = r21 * vxp + r22 * vyp
    vz = r31 * vxp + r32 * vyp
    return px, py, pz, vx, vy, vz
