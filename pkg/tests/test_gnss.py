import math
import statistics

import pytest

from swarmsim import orbits
from swarmsim.continuum import BodyState
from swarmsim.faults import ConfigError, EpochMisaligned, NoFix
from swarmsim.gnss import (GnssConstellation, L1_WAVELENGTH, Receiver,
                           ReceiverConfig, SIGMA_CP_BOUNDS, SIGMA_PR_BOUNDS,
                           elevation_sigma, load_almanac,
                           satellite_from_elements)
from swarmsim.kernel import NS_PER_S
from swarmsim.rng import RngRoot

LEO_R = 6_878_137.0
GPS_A = 26_560_000.0


def leo_state(x=LEO_R, epoch=0):
    return BodyState(body_id="rcv", epoch=epoch, position=(x, 0.0, 0.0),
                     velocity=(0.0, 7612.0, 0.0))


def ring_sat(prn, m0_deg, a=GPS_A):
    # equatorial circular satellite: position a*(cos m0, sin m0, 0)
    return satellite_from_elements(prn, a, 0.0, 0.0, 0.0, 0.0,
                                   math.radians(m0_deg))


def zero_noise_config(**kw):
    kw.setdefault("sigma_pr_bounds", (0.0, 0.0))
    kw.setdefault("sigma_cp_bounds", (0.0, 0.0))
    kw.setdefault("sigma_pvt_pos", 0.0)
    kw.setdefault("sigma_pvt_vel", 0.0)
    kw.setdefault("ambiguity_range", 0)
    return ReceiverConfig(**kw)


# -- almanac ------------------------------------------------------------------


def test_bundled_almanac_shape():
    sats = load_almanac()
    assert len(sats) == 31
    assert [s.prn for s in sats] == list(range(1, 32))
    planes = {round(math.degrees(s.raan), 3) for s in sats}
    assert len(planes) == 6
    for s in sats:
        assert 0.0 <= s.e < 0.1
        assert abs(s.a - GPS_A) < 10_000.0
        assert abs(math.degrees(s.inc) - 55.0) < 1.0
        # loader attached nonzero secular rates
        assert s.raan_dot < 0.0
        assert s.m_dot > 0.0


def test_almanac_rejects_malformed(tmp_path):
    bad = tmp_path / "alm.txt"
    bad.write_text("epoch 0\n1 26560000.0 0.01 55.0 0.0\n")
    with pytest.raises(ConfigError):
        load_almanac(bad)
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n")
    with pytest.raises(ConfigError):
        load_almanac(empty)
    dup = tmp_path / "dup.txt"
    dup.write_text("epoch 0\n"
                   "1 26560000.0 0.01 55.0 0.0 0.0 0.0\n"
                   "1 26560000.0 0.01 55.0 0.0 0.0 10.0\n")
    with pytest.raises(ConfigError):
        load_almanac(dup)


def test_user_almanac_replaces_bundled(tmp_path):
    alt = tmp_path / "alm.txt"
    alt.write_text("epoch 5000000000\n"
                   "7 26560000.0 0.010000 55.0 120.0 10.0 42.0\n")
    sats = load_almanac(alt)
    assert len(sats) == 1
    assert sats[0].prn == 7
    assert sats[0].epoch == 5_000_000_000
    assert sats[0].inc == pytest.approx(math.radians(55.0))


def test_satellite_eccentricity_bound():
    with pytest.raises(ConfigError):
        satellite_from_elements(1, GPS_A, 0.2, 1.0, 0.0, 0.0, 0.0)


# -- constellation ------------------------------------------------------------


def test_states_at_epoch_match_element_conversion_exactly():
    rng = RngRoot(1)
    con = GnssConstellation(rng, rtn_sigma=0.0)
    got = dict(con.constellation_states(0))
    for sat in con.satellites:
        el = orbits.ClassicalElements(a=sat.a, e=sat.e, inc=sat.inc,
                                      raan=sat.raan, argp=sat.argp, M=sat.m0)
        want, _ = orbits.elements_to_rv(el)
        assert got[sat.prn] == want


def test_secular_drift_matches_closed_form_rates():
    rng = RngRoot(1)
    con = GnssConstellation(rng, rtn_sigma=0.0)
    sat = con.satellite(2)
    period = 2.0 * math.pi / sat.m_dot   # mean anomaly returns to m0
    t1, t2 = 0, int(round(period * NS_PER_S))
    (r1, v1), (r2, v2) = sat.state_at(t1), sat.state_at(t2)
    e1 = orbits.rv_to_classical(r1, v1)
    e2 = orbits.rv_to_classical(r2, v2)
    dt = (t2 - t1) / NS_PER_S
    assert e2.a == pytest.approx(e1.a, abs=1e-4)
    assert e2.e == pytest.approx(e1.e, abs=1e-10)
    assert e2.inc == pytest.approx(e1.inc, abs=1e-11)
    assert orbits.wrap_pi(e2.raan - e1.raan) == \
        pytest.approx(sat.raan_dot * dt, rel=1e-6, abs=1e-12)
    # M wraps to its start value by construction of the period, so the
    # composite in-plane drift reduces to the perigee rate alone
    assert orbits.wrap_pi((e2.argp + e2.M) - (e1.argp + e1.M)) == \
        pytest.approx(sat.argp_dot * dt, rel=1e-5, abs=1e-12)
    # one anomalistic period later the satellite is close to where it
    # started, displaced only by the slow node/perigee drift
    gap = math.dist(r1, r2)
    assert 0.0 < gap < 30_000.0


def test_rtn_perturbation_statistics():
    rng = RngRoot(7)
    con = GnssConstellation(rng, rtn_sigma=1.0)
    prn = 5
    dr, dt_, dn = [], [], []
    for sec in range(10_000):
        t = sec * NS_PER_S
        r, v = con.unperturbed_state(prn, t)
        p = con.position(prn, t)
        delta = (p[0] - r[0], p[1] - r[1], p[2] - r[2])
        rn = math.sqrt(sum(x * x for x in r))
        u = tuple(x / rn for x in r)
        h = (r[1] * v[2] - r[2] * v[1], r[2] * v[0] - r[0] * v[2],
             r[0] * v[1] - r[1] * v[0])
        hn = math.sqrt(sum(x * x for x in h))
        n = tuple(x / hn for x in h)
        tvec = (n[1] * u[2] - n[2] * u[1], n[2] * u[0] - n[0] * u[2],
                n[0] * u[1] - n[1] * u[0])
        dr.append(sum(a * b for a, b in zip(delta, u)))
        dt_.append(sum(a * b for a, b in zip(delta, tvec)))
        dn.append(sum(a * b for a, b in zip(delta, n)))
    for axis in (dr, dt_, dn):
        assert abs(statistics.mean(axis)) < 0.05
        assert abs(statistics.stdev(axis) - 1.0) < 0.05


def test_perturbation_replayable_per_epoch_key():
    con_a = GnssConstellation(RngRoot(3), rtn_sigma=1.0)
    con_b = GnssConstellation(RngRoot(3), rtn_sigma=1.0)
    t = 1234 * NS_PER_S
    # same (seed, prn, second) -> same value, regardless of call history
    for _ in range(3):
        assert con_a.position(9, t) == con_b.position(9, t)
    assert con_a.position(9, t + NS_PER_S) != con_a.position(9, t)


# -- visibility ---------------------------------------------------------------


def test_satellite_behind_earth_excluded():
    con = GnssConstellation(RngRoot(1), satellites=[ring_sat(1, 180.0)],
                            rtn_sigma=0.0)
    rcv = Receiver("r", con, RngRoot(1))
    assert rcv.visible_set(leo_state(), 0) == set()


def test_satellite_along_boresight_is_at_ninety_degrees():
    con = GnssConstellation(RngRoot(1), satellites=[ring_sat(1, 0.0)],
                            rtn_sigma=0.0)
    rcv = Receiver("r", con, RngRoot(1))
    geom = rcv._visible_geometry(leo_state(), 0)
    assert [prn for prn, _ in geom] == [1]
    assert geom[0][1] == pytest.approx(90.0)


def test_flipped_antenna_sees_nothing():
    con = GnssConstellation(RngRoot(1), satellites=[ring_sat(1, 0.0)],
                            rtn_sigma=0.0)
    flipped = ReceiverConfig(
        boresight=(0.0, 0.0, 1.0),
        attitude=lambda t: ((0.0, 0.0, -1.0),
                            (0.0, 1.0, 0.0),
                            (1.0, 0.0, 0.0)))
    rcv = Receiver("r", con, RngRoot(1), flipped)
    assert rcv.visible_set(leo_state(), 0) == set()


def test_mask_angle_thresholds_horizon_satellite():
    # satellite placed so the line of sight is exactly tangent to the
    # boresight plane: elevation about zero
    a = GPS_A
    u = math.degrees(math.acos(LEO_R / a))
    con = GnssConstellation(RngRoot(1), satellites=[ring_sat(1, u)],
                            rtn_sigma=0.0)
    masked = Receiver("r", con, RngRoot(1), ReceiverConfig(mask_angle=5.0))
    open_sky = Receiver("r2", con, RngRoot(1), ReceiverConfig(mask_angle=-10.0))
    assert masked.visible_set(leo_state(), 0) == set()
    assert open_sky.visible_set(leo_state(), 0) == {1}


def test_leo_receiver_sees_a_working_constellation():
    con = GnssConstellation(RngRoot(1), rtn_sigma=0.0)
    rcv = Receiver("r", con, RngRoot(1))
    assert len(rcv.visible_set(leo_state(), 0)) >= 4


def test_visibility_is_rng_independent():
    state = leo_state()
    seen = []
    for seed in (1, 2, 3):
        con = GnssConstellation(RngRoot(seed), rtn_sigma=1.0)
        rcv = Receiver("r", con, RngRoot(seed))
        seen.append(rcv.visible_set(state, 60 * NS_PER_S))
    assert seen[0] == seen[1] == seen[2]


# -- sigma interpolation ------------------------------------------------------


def test_elevation_sigma_endpoints_and_midpoint():
    assert elevation_sigma(90.0, SIGMA_PR_BOUNDS) == 0.1437
    assert elevation_sigma(0.0, SIGMA_PR_BOUNDS) == 2.2769
    assert elevation_sigma(90.0, SIGMA_CP_BOUNDS) == 0.659e-3
    assert elevation_sigma(0.0, SIGMA_CP_BOUNDS) == 10.45e-3
    assert elevation_sigma(45.0, SIGMA_PR_BOUNDS) == pytest.approx(1.2103)
    assert elevation_sigma(45.0, SIGMA_CP_BOUNDS) == pytest.approx(5.5545e-3)


def test_elevation_sigma_domain():
    with pytest.raises(ConfigError):
        elevation_sigma(-1.0, SIGMA_PR_BOUNDS)
    with pytest.raises(ConfigError):
        elevation_sigma(90.5, SIGMA_PR_BOUNDS)


def test_receiver_config_validates_bounds():
    with pytest.raises(ConfigError):
        ReceiverConfig(sigma_pr_bounds=(2.0, 1.0))


# -- measurements -------------------------------------------------------------


def test_measure_off_grid_rejected():
    con = GnssConstellation(RngRoot(1), satellites=[ring_sat(1, 0.0)])
    rcv = Receiver("r", con, RngRoot(1))
    with pytest.raises(EpochMisaligned):
        rcv.measure(leo_state(), NS_PER_S // 2)


def test_zero_noise_measurement_equals_true_range():
    con = GnssConstellation(RngRoot(1), satellites=[ring_sat(1, 0.0)],
                            rtn_sigma=0.0)
    rcv = Receiver("r", con, RngRoot(1), zero_noise_config())
    state = leo_state()
    (m,) = rcv.measure(state, 0)
    true_range = GPS_A - LEO_R
    assert m.pseudorange == pytest.approx(true_range, abs=1e-9)
    assert m.carrier_phase == m.pseudorange
    assert m.prn == 1
    assert m.epoch == 0
    assert m.sigma_pr == 0.0


def test_pseudorange_residual_std_tracks_sigma():
    rng = RngRoot(11)
    con = GnssConstellation(rng, satellites=[ring_sat(1, 0.0)],
                            rtn_sigma=0.0)
    rcv = Receiver("r", con, rng)
    state = leo_state()
    true_range = GPS_A - LEO_R
    pr_res, cp_res = [], []
    for _ in range(10_000):
        (m,) = rcv.measure(state, 0)
        pr_res.append(m.pseudorange - true_range)
        cp_res.append(m.carrier_phase - true_range
                      - L1_WAVELENGTH * rcv.ambiguity(1))
    assert abs(statistics.stdev(pr_res) - 0.1437) < 0.1 * 0.1437
    assert abs(statistics.stdev(cp_res) - 0.659e-3) < 0.1 * 0.659e-3
    # elevation here is exactly 90 deg, the lower sigma bound
    assert m.sigma_pr == 0.1437
    assert m.elevation == pytest.approx(90.0)


def test_ambiguity_constant_within_pass_redrawn_after_loss():
    rng = RngRoot(4)
    con = GnssConstellation(rng, satellites=[ring_sat(1, 0.0)],
                            rtn_sigma=0.0)
    blocked = {"on": False}

    def attitude(t):
        if blocked["on"]:
            return ((0.0, 0.0, -1.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0))
        return ((0.0, 0.0, 1.0), (0.0, 1.0, 0.0), (-1.0, 0.0, 0.0))

    cfg = ReceiverConfig(boresight=(0.0, 0.0, 1.0), attitude=attitude)
    rcv = Receiver("r", con, rng, cfg)
    state = leo_state()
    rcv.measure(state, 0)
    first = rcv.ambiguity(1)
    rcv.measure(state, NS_PER_S)
    assert rcv.ambiguity(1) == first
    assert first == 2
    blocked["on"] = True
    assert rcv.measure(state, 2 * NS_PER_S) == []
    assert rcv.ambiguity(1) is None
    blocked["on"] = False
    rcv.measure(state, 3 * NS_PER_S)
    assert rcv.ambiguity(1) == -1   # freshly drawn, not the pass-1 value


def test_measurements_replay_bit_identically():
    def run(seed):
        rng = RngRoot(seed)
        con = GnssConstellation(rng, rtn_sigma=1.0)
        rcv = Receiver("sat-a", con, rng)
        out = []
        for sec in range(5):
            out.extend(rcv.measure(leo_state(), sec * NS_PER_S))
        return out

    assert run(42) == run(42)
    assert run(42) != run(43)


# -- pvt ----------------------------------------------------------------------


def four_sat_constellation(rng):
    sats = [ring_sat(1, 0.0), ring_sat(2, 20.0), ring_sat(3, -20.0),
            ring_sat(4, 35.0)]
    return GnssConstellation(rng, satellites=sats, rtn_sigma=0.0)


def test_pvt_zero_noise_returns_truth():
    rng = RngRoot(1)
    con = four_sat_constellation(rng)
    rcv = Receiver("r", con, rng, zero_noise_config(mask_angle=0.0))
    state = leo_state()
    sol = rcv.pvt_solution(state, 0)
    assert tuple(sol["position"]) == state.position
    assert tuple(sol["velocity"]) == state.velocity
    assert sol["t"] == 0


def test_pvt_requires_four_satellites():
    rng = RngRoot(1)
    sats = [ring_sat(1, 0.0), ring_sat(2, 20.0), ring_sat(3, -20.0)]
    con = GnssConstellation(rng, satellites=sats, rtn_sigma=0.0)
    rcv = Receiver("r", con, rng, ReceiverConfig(mask_angle=0.0))
    with pytest.raises(NoFix):
        rcv.pvt_solution(leo_state(), 0)


def test_pvt_noise_statistics():
    rng = RngRoot(13)
    con = four_sat_constellation(rng)
    rcv = Receiver("r", con, rng, ReceiverConfig(mask_angle=0.0))
    state = leo_state()
    xs, vxs = [], []
    for _ in range(10_000):
        sol = rcv.pvt_solution(state, 0)
        xs.append(sol["position"][0] - state.position[0])
        vxs.append(sol["velocity"][0] - state.velocity[0])
    assert abs(statistics.stdev(xs) - 1.5) < 0.05 * 1.5
    assert abs(statistics.stdev(vxs) - 0.030) < 0.05 * 0.030


# -- carrier minus pseudorange ------------------------------------------------


def test_ambiguity_recovery_from_pass_average():
    rng = RngRoot(21)
    con = GnssConstellation(rng, satellites=[ring_sat(1, 0.0)],
                            rtn_sigma=0.0)
    recovered = 0
    passes = 200
    for i in range(passes):
        rcv = Receiver(f"r{i}", con, rng)
        diffs = []
        truth = None
        for sec in range(60):
            (m,) = rcv.measure(leo_state(), sec * NS_PER_S)
            truth = rcv.ambiguity(1)
            diffs.append(m.carrier_phase - m.pseudorange)
        estimate = round(statistics.mean(diffs) / L1_WAVELENGTH)
        recovered += (estimate == truth)
    assert recovered / passes > 0.99
