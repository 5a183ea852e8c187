import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from delaynav.exceptions import PolarSingularity
from delaynav.geo import (WGS84, EarthModel, GeodeticPosition, dcm_e_to_n, dcm_e_to_n_error, dcm_to_euler,
                          dcm_to_rotvec, dr, dr_inv, euler_to_dcm, geodetic_to_ecef, is_rotation,
                          orthonormalize, radii_of_curvature, rotvec_to_dcm, skew, wrap_to_pi)

lats = st.floats(-1.5, 1.5)
lons = st.floats(-np.pi, np.pi)
vec3 = st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3).map(np.array)
small_vec3 = st.lists(st.floats(-3.0, 3.0), min_size=3, max_size=3).map(np.array)


class TestRadii:
    def test_equator_prime_vertical_is_semi_major_axis(self):
        assert radii_of_curvature(0.0)[1] == WGS84.semi_major_axis

    @given(st.floats(0, 1.5))
    def test_even_in_latitude(self, lat):
        assert radii_of_curvature(lat) == radii_of_curvature(-lat)

    def test_mid_latitude_extended_precision(self):
        mpmath.mp.dps = 40
        a, e2 = mpmath.mpf(WGS84.semi_major_axis), mpmath.mpf(WGS84.eccentricity_sq)
        s2 = mpmath.sin(mpmath.pi / 4) ** 2
        rm = a * (1 - e2) / (1 - e2 * s2) ** mpmath.mpf(1.5)
        rn = a / mpmath.sqrt(1 - e2 * s2)
        got = radii_of_curvature(np.pi / 4)
        assert got[0] == pytest.approx(float(rm), rel=1e-14)
        assert got[1] == pytest.approx(float(rn), rel=1e-14)


class TestDcm:
    def test_origin(self):
        np.testing.assert_array_equal(dcm_e_to_n(0.0, 0.0), [[0, 0, 1], [0, 1, 0], [-1, 0, 0]])

    @given(lats, lons)
    def test_orthonormal(self, lat, lon):
        c = dcm_e_to_n(lat, lon)
        np.testing.assert_allclose(c.T @ c, np.eye(3), atol=1e-12)

    def test_elementwise_formula(self):
        lat, lon = np.radians(30.0), np.radians(120.0)
        sl, cl, so, co = np.sin(lat), np.cos(lat), np.sin(lon), np.cos(lon)
        ref = [[-sl * co, -sl * so, cl], [-so, co, 0.0], [-cl * co, -cl * so, -sl]]
        np.testing.assert_allclose(dcm_e_to_n(lat, lon), ref, atol=1e-15)

    def test_north_axis_points_to_pole(self):
        # the n-frame north axis expressed in ECEF must have a positive z part
        assert dcm_e_to_n(0.3, 1.0)[0, 2] > 0


class TestDcmError:
    def test_zero(self):
        np.testing.assert_array_equal(dcm_e_to_n_error(0.4, 1.2, 0.0, 0.0), np.zeros((3, 3)))

    def test_origin_latitude_step(self):
        eps = 1e-6
        ref = np.array([[-eps, 0, 0], [0, 0, 0], [0, 0, -eps]])
        np.testing.assert_allclose(dcm_e_to_n_error(0.0, 0.0, eps, 0.0), ref, atol=1e-20)

    @given(st.floats(-1.4, 1.4), lons, st.floats(-1, 1), st.floats(-1, 1))
    def test_central_difference(self, lat, lon, a, b):
        d = 1e-7
        dl, dn = a * d, b * d
        fd = 0.5 * (dcm_e_to_n(lat + dl, lon + dn) - dcm_e_to_n(lat - dl, lon - dn))
        np.testing.assert_allclose(dcm_e_to_n_error(lat, lon, dl, dn), fd, atol=1e-14)


class TestEcef:
    def test_equator_prime_meridian(self):
        np.testing.assert_allclose(geodetic_to_ecef((0.0, 0.0, 0.0)), [WGS84.semi_major_axis, 0, 0], atol=1e-9)

    def test_equator_ninety_east(self):
        np.testing.assert_allclose(geodetic_to_ecef((0.0, np.pi / 2, 0.0)), [0, WGS84.semi_major_axis, 0],
                                   atol=1e-9)

    @pytest.mark.parametrize("faithful", [True, False])
    def test_formula(self, faithful):
        earth = EarthModel.wgs84(paper_faithful=faithful)
        lat, lon, h = np.radians(30.0), np.radians(120.0), -100.0
        e2, a = earth.eccentricity_sq, earth.semi_major_axis
        rn = a / np.sqrt(1 - e2 * np.sin(lat) ** 2)
        rm = rn * (1 - e2) / (1 - e2 * np.sin(lat) ** 2)
        zr = rm if faithful else rn * (1 - e2)
        ref = [(rn + h) * np.cos(lat) * np.cos(lon), (rn + h) * np.cos(lat) * np.sin(lon),
               (zr + h) * np.sin(lat)]
        np.testing.assert_allclose(geodetic_to_ecef(GeodeticPosition(lat, lon, h), earth), ref, rtol=1e-14)

    def test_variants_agree_on_sphere(self):
        p = (0.5, 1.0, -30.0)
        s = EarthModel.sphere()
        np.testing.assert_allclose(geodetic_to_ecef(p, s),
                                   geodetic_to_ecef(p, EarthModel(s.semi_major_axis, 0.0, paper_faithful=False)))


class TestSkew:
    def test_zero(self):
        np.testing.assert_array_equal(skew(np.zeros(3)), np.zeros((3, 3)))

    def test_unit(self):
        np.testing.assert_array_equal(skew([1, 0, 0]) @ np.array([0, 1, 0]), [0, 0, 1])

    @given(vec3, vec3)
    def test_cross(self, v, w):
        np.testing.assert_allclose(skew(v) @ w, np.cross(v, w), atol=1e-9)


class TestDr:
    def test_equator(self):
        rm, rn = radii_of_curvature(0.0)
        np.testing.assert_allclose(dr_inv(0.0, 0.0), np.diag([1 / rm, 1 / rn, -1.0]))

    @pytest.mark.parametrize("lat", [np.pi / 2, -np.pi / 2])
    def test_pole(self, lat):
        with pytest.raises(PolarSingularity):
            dr_inv(lat, 0.0)

    def test_formula(self):
        lat, h = np.radians(30.0), -470.0
        rm, rn = radii_of_curvature(lat)
        np.testing.assert_allclose(dr_inv(lat, h), np.diag([1 / (rm + h), 1 / ((rn + h) * np.cos(lat)), -1.0]))
        np.testing.assert_allclose(dr(lat, h) @ dr_inv(lat, h), np.eye(3), atol=1e-15)


class TestRotations:
    @given(small_vec3)
    def test_rotvec_round_trip(self, v):
        c = rotvec_to_dcm(v)
        assert is_rotation(c)
        np.testing.assert_allclose(rotvec_to_dcm(dcm_to_rotvec(c)), c, atol=1e-10)

    @given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(-3.1, 3.1))
    def test_euler_round_trip(self, r, p, y):
        np.testing.assert_allclose(dcm_to_euler(euler_to_dcm(r, p, y)), [r, p, y], atol=1e-9)

    @given(small_vec3, st.floats(-1e-6, 1e-6))
    def test_orthonormalize_restores_rotation(self, v, eps):
        c = rotvec_to_dcm(v) * (1.0 + eps)
        assert is_rotation(orthonormalize(c), tol=1e-11)

    @given(st.floats(-1e4, 1e4))
    def test_wrap_bounds(self, a):
        w = wrap_to_pi(a)
        assert -np.pi < w <= np.pi
        assert np.isclose(np.cos(w), np.cos(a), atol=1e-9)

    def test_wrap_at_pi(self):
        assert wrap_to_pi(np.pi) == np.pi
        assert wrap_to_pi(-np.pi) == np.pi
