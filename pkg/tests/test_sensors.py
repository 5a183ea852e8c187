import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from delaynav.exceptions import OutOfWindow, ZenithSingularity
from delaynav.geo import WGS84, EarthModel, GeodeticPosition, dcm_e_to_n, geodetic_to_ecef, radii_of_curvature, wrap_to_pi
from delaynav.sensors import (GYRO, AcousticSpec, DelayKind, DepthSeries, ImuErrorSpec, corrupt_imu,
                              delay_model, depth_series, measure_acoustic, measure_depth, read_fixes_csv,
                              retime, simulate_fixes, stream, true_geometry, write_fixes_csv)
from delaynav.trajectory import HelixParams, ImuIncrements, generate_helix

ORIGIN = GeodeticPosition.from_degrees(30.0, 120.0, 0.0)
# metric examples need the true ellipsoid; the default conversion scales z with R_M
STANDARD = EarthModel.wgs84(paper_faithful=False)


def offset(p: GeodeticPosition, north: float, east: float, up: float = 0.0) -> GeodeticPosition:
    rm, rn = radii_of_curvature(p.lat)
    return GeodeticPosition(p.lat + north / (rm + p.alt), p.lon + east / ((rn + p.alt) * np.cos(p.lat)),
                            p.alt + up)


@pytest.fixture(scope="module")
def static_traj():
    return generate_helix(HelixParams(start=ORIGIN, turn_rate=0.0, pitch=0.0, target_speed=0.0, duration=30.0))


class TestImu:
    def test_zero_spec_is_identity(self, static_traj):
        out = corrupt_imu(static_traj.imu, ImuErrorSpec(), seed=1)
        np.testing.assert_array_equal(out.dtheta, static_traj.imu.dtheta)
        np.testing.assert_array_equal(out.dvel, static_traj.imu.dvel)

    def test_bias_mean(self):
        n, dt = 200_000, 0.005
        ideal = ImuIncrements(0.0, dt, np.zeros((n, 3)), np.zeros((n, 3)))
        spec = ImuErrorSpec(gyro_bias=np.array([1e-5, -2e-5, 3e-5]), gyro_arw=1e-4)
        out = corrupt_imu(ideal, spec, seed=3)
        mean = out.dtheta.mean(axis=0) / dt
        sigma = spec.gyro_arw / np.sqrt(dt)
        assert np.all(np.abs(mean - spec.gyro_bias) < 3 * sigma / np.sqrt(n))

    def test_random_walk_variance(self):
        n, dt = 1_000_000, 0.005
        ideal = ImuIncrements(0.0, dt, np.zeros((n, 3)), np.zeros((n, 3)))
        spec = ImuErrorSpec(gyro_arw=2e-5, accel_vrw=3e-4)
        out = corrupt_imu(ideal, spec, seed=4)
        np.testing.assert_allclose(out.dtheta.var(axis=0), spec.gyro_arw ** 2 * dt, rtol=0.1)
        np.testing.assert_allclose(out.dvel.var(axis=0), spec.accel_vrw ** 2 * dt, rtol=0.1)

    def test_streams_are_keyed(self):
        a = stream(5, GYRO, 2).standard_normal(4)
        np.testing.assert_array_equal(a, stream(5, GYRO, 2).standard_normal(4))
        assert not np.allclose(a, stream(5, GYRO, 3).standard_normal(4))
        assert not np.allclose(a, stream(6, GYRO, 2).standard_normal(4))

    def test_realize_shapes(self):
        r = ImuErrorSpec.table1().realize(np.random.default_rng(0))
        assert np.shape(r.gyro_bias) == (3,) and np.shape(r.accel_scale) == (3,)

    def test_negative_density_rejected(self):
        with pytest.raises(ValueError):
            ImuErrorSpec(gyro_arw=-1.0)


class TestGeometry:
    def test_beacon_ahead(self):
        r, a, _ = true_geometry(ORIGIN, np.eye(3), offset(ORIGIN, 100.0, 0.0), np.zeros(3), np.eye(3), STANDARD)
        assert r == pytest.approx(100.0, abs=1e-4)
        assert a == pytest.approx(0.0, abs=1e-10)

    def test_beacon_to_the_right(self):
        p = GeodeticPosition(0.0, 0.5, 0.0)
        r, a, _ = true_geometry(p, np.eye(3), offset(p, 0.0, 100.0), np.zeros(3), np.eye(3), STANDARD)
        assert r == pytest.approx(100.0, abs=1e-6)
        assert a == pytest.approx(np.pi / 2, abs=1e-12)

    def test_first_epoch_of_scenario(self):
        beacon = offset(ORIGIN, 250.0, 250.0)
        r, a, p_u = true_geometry(ORIGIN, np.eye(3), beacon, np.zeros(3), np.eye(3))
        d = dcm_e_to_n(ORIGIN.lat, ORIGIN.lon) @ (geodetic_to_ecef(beacon) - geodetic_to_ecef(ORIGIN))
        assert a == pytest.approx(np.arctan2(d[1], d[0]), abs=1e-12)
        r, a, _ = true_geometry(ORIGIN, np.eye(3), beacon, np.zeros(3), np.eye(3), STANDARD)
        assert a == pytest.approx(np.pi / 4, abs=1e-4)
        assert r == pytest.approx(np.hypot(250.0, 250.0), rel=1e-5)

    def test_default_conversion_distorts_north_offsets(self):
        r, _, _ = true_geometry(ORIGIN, np.eye(3), offset(ORIGIN, 100.0, 0.0), np.zeros(3), np.eye(3))
        assert r == pytest.approx(100.0, rel=5e-3)

    def test_zenith(self):
        with pytest.raises(ZenithSingularity):
            true_geometry(ORIGIN, np.eye(3), GeodeticPosition(ORIGIN.lat, ORIGIN.lon, 100.0), np.zeros(3),
                          np.eye(3))


class TestAcoustic:
    beacon = offset(ORIGIN, 400.0, 0.0)

    def test_noiseless(self, static_traj):
        spec = AcousticSpec(azimuth_sigma=0.0, range_scale_sigma=0.0, processing_jitter=0.0)
        fix = measure_acoustic(static_traj, 1.0, spec, DelayKind.PIUSBL, 1, self.beacon, np.zeros(3), np.eye(3))
        pos, _, cbn = static_traj.state_at(fix.t1)
        r, a, _ = true_geometry(pos, cbn, self.beacon, np.zeros(3), np.eye(3))
        assert fix.r == pytest.approx(r, abs=1e-9)
        assert fix.alpha == pytest.approx(a, abs=1e-12)
        assert fix.tof == pytest.approx(r / spec.sound_speed, abs=1e-12)

    def test_tof_arithmetic(self):
        assert 500.0 / AcousticSpec().sound_speed == pytest.approx(0.3333, abs=1e-4)

    def test_range_sigma_scaling(self, static_traj):
        spec = AcousticSpec(azimuth_sigma=0.0)
        r = np.array([measure_acoustic(static_traj, 1.0, spec, DelayKind.PIUSBL, 9, self.beacon, np.zeros(3),
                                       np.eye(3), index=i).r for i in range(10_000)])
        assert np.std(r) == pytest.approx(0.4, rel=0.1)

    def test_out_of_window(self, static_traj):
        spec = AcousticSpec(sampling_window=0.2)
        with pytest.raises(OutOfWindow):
            measure_acoustic(static_traj, 1.0, spec, DelayKind.PIUSBL, 1, self.beacon, np.zeros(3), np.eye(3))

    def test_every_kind_sees_the_same_measurement(self, static_traj):
        spec = AcousticSpec()
        fixes = [measure_acoustic(static_traj, 2.0, spec, k, 3, self.beacon, np.zeros(3), np.eye(3), index=2)
                 for k in DelayKind]
        assert len({(f.r, f.alpha, f.t1) for f in fixes}) == 1

    def test_retime_matches_direct_simulation(self, static_traj):
        spec = AcousticSpec()
        pi = measure_acoustic(static_traj, 2.0, spec, DelayKind.PIUSBL, 3, self.beacon, np.zeros(3), np.eye(3))
        for k in DelayKind:
            direct = measure_acoustic(static_traj, 2.0, spec, k, 3, self.beacon, np.zeros(3), np.eye(3))
            re = retime(pi, k, spec)
            assert (re.r, re.alpha, re.t1, re.t3, re.system_kind) == (direct.r, direct.alpha, direct.t1, direct.t3,
                                                                      direct.system_kind)
            assert re.t4 == pytest.approx(direct.t4, abs=1e-12)


class TestDelayModel:
    def test_paper_example(self):
        spec = AcousticSpec(sampling_window=2.0, processing_delay=0.010)
        t1, _, t4 = delay_model(DelayKind.PIUSBL, 0.3333, spec)
        assert t4 - t1 == pytest.approx(1.6767, abs=1e-12)

    def test_zero_tof(self):
        spec = AcousticSpec()
        t1, _, t4 = delay_model(DelayKind.PIUSBL, 0.0, spec, t0=5.0)
        assert t1 == 5.0
        assert t4 - t1 == pytest.approx(spec.sampling_window + spec.processing_delay)

    @given(st.floats(0.0, 1.5), st.floats(1e-3, 0.4))
    def test_monotonicity(self, tof, step):
        spec = AcousticSpec()
        d = {k: [delay_model(k, x, spec)[2] - delay_model(k, x, spec)[0] for x in (tof, tof + step)]
             for k in DelayKind}
        assert d[DelayKind.PIUSBL][1] < d[DelayKind.PIUSBL][0]
        assert d[DelayKind.IUSBL][1] > d[DelayKind.IUSBL][0]
        assert d[DelayKind.USBL][1] > d[DelayKind.USBL][0]
        assert d[DelayKind.USBL][0] > d[DelayKind.IUSBL][0]

    @given(st.sampled_from(list(DelayKind)), st.floats(0.0, 1.9), st.floats(-1e4, 1e4), st.floats(0, 0.05))
    def test_timeline_ordering(self, kind, tof, t0, proc):
        t1, t3, t4 = delay_model(kind, tof, AcousticSpec(), t0, proc)
        assert t0 <= t1 <= t3 <= t4

    def test_negative_tof(self):
        with pytest.raises(ValueError):
            delay_model(DelayKind.IUSBL, -0.1, AcousticSpec())

    @given(st.floats(-1e3, 1e3), st.floats(0.0, 0.1))
    def test_azimuth_wrap(self, alpha, sigma):
        assert -np.pi < wrap_to_pi(alpha + sigma) <= np.pi


class TestDepth:
    def test_exact(self):
        p = np.array([0.5, 1.0, -123.0])
        assert measure_depth(p, np.eye(3), 0.0, np.zeros(3)) == 123.0

    def test_lever_arm(self):
        p = np.array([0.5, 1.0, -123.0])
        assert measure_depth(p, np.eye(3), 0.0, [0.0, 0.0, 1.0]) == pytest.approx(124.0)

    def test_noise(self):
        rng = np.random.default_rng(1)
        d = [measure_depth(np.array([0.5, 1.0, -10.0]), np.eye(3), 0.1, np.zeros(3), rng) for _ in range(10_000)]
        assert np.std(d) == pytest.approx(0.1, rel=0.1)

    def test_series_lookup(self):
        s = DepthSeries(np.array([0.0, 0.1, 0.2]), np.array([1.0, 2.0, 3.0]))
        assert s.nearest(0.14) == (0.1, 2.0)
        assert s.nearest(0.16) == (0.2, 3.0)
        assert s.nearest(0.16, causal=True) == (0.1, 2.0)
        assert s.nearest(0.5) is None
        t, d = s.interpolate(0.15)
        assert (t, d) == (0.15, pytest.approx(2.5))
        assert s.interpolate(0.25) == (0.2, 3.0)

    def test_series_matches_trajectory(self, static_traj):
        s = depth_series(static_traj, 10.0, 0.0, np.zeros(3), seed=1, bias=0.5)
        np.testing.assert_allclose(s.depth, 0.5, atol=1e-9)
        assert len(s.t) == 301


def test_fix_csv_round_trip(tmp_path, static_traj):
    beacon = offset(ORIGIN, 300.0, 100.0)
    fixes, dropped = simulate_fixes(static_traj, AcousticSpec(), DelayKind.PIUSBL, 2, beacon, np.zeros(3), np.eye(3))
    assert dropped == 0 and len(fixes) == 30
    p = tmp_path / "fixes.csv"
    write_fixes_csv(p, fixes)
    back = read_fixes_csv(p)
    for a, b in zip(fixes, back):
        assert (a.r, a.alpha, a.t0, a.t1, a.t3, a.t4, a.system_kind) == (b.r, b.alpha, b.t0, b.t1, b.t3, b.t4,
                                                                      b.system_kind)
        assert b.tof == pytest.approx(a.tof, abs=1e-12)
