"""Earth model, frame conventions and direction cosine matrices.

Frames: ``e`` is ECEF, ``n`` is local-level north-east-down, ``b`` is the
vehicle body (forward-right-down), ``u`` is the receiver array.  All angles
are radians; degrees appear only at I/O boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels as K
from .exceptions import PolarSingularity

__all__ = [
    "EarthModel",
    "GeodeticPosition",
    "WGS84",
    "radii_of_curvature",
    "dcm_e_to_n",
    "dcm_e_to_n_error",
    "geodetic_to_ecef",
    "skew",
    "dr_inv",
    "dr",
    "gravity",
    "wrap_to_pi",
    "rotvec_to_dcm",
    "dcm_to_rotvec",
    "euler_to_dcm",
    "dcm_to_euler",
    "orthonormalize",
    "is_rotation",
]


@dataclass(frozen=True)
class EarthModel:
    """Reference ellipsoid, rotation rate and normal gravity.

    ``gravity_coeffs`` are ``(g0, c1, c2, h1, h0, hh)`` in
    ``g0*(1 + c1*s2 + c2*s2**2) + h*(h1*s2 - h0) + hh*h**2`` with
    ``s2 = sin(lat)**2``.

    ``paper_faithful`` selects the ECEF conversion that scales the z
    component with the meridian radius ``R_M``; ``False`` gives the usual
    ``R_N*(1 - e2)``.
    """

    semi_major_axis: float = 6378137.0
    eccentricity_sq: float = 0.00669437999013
    earth_rate: float = 7.292115e-5
    gravity_coeffs: tuple = (9.7803267715, 0.0052790414, 0.0000232718,
                             0.0000000043977311, 0.0000030876910891,
                             0.0000000000007211)
    paper_faithful: bool = True

    def __post_init__(self):
        if not self.semi_major_axis > 0:
            raise ValueError("semi_major_axis must be positive")
        if not 0.0 <= self.eccentricity_sq < 1.0:
            raise ValueError("eccentricity_sq must lie in [0, 1)")

    @classmethod
    def wgs84(cls, paper_faithful: bool = True) -> "EarthModel":
        return cls(paper_faithful=paper_faithful)

    @classmethod
    def sphere(cls, radius: float = 6371000.0, g0: float = 9.80665,
               earth_rate: float = 7.292115e-5) -> "EarthModel":
        """Spherical earth with a free-air gravity gradient."""
        return cls(semi_major_axis=radius, eccentricity_sq=0.0,
                   earth_rate=earth_rate,
                   gravity_coeffs=(g0, 0.0, 0.0, 0.0, 2.0 * g0 / radius, 0.0))

    @cached_property
    def params(self) -> np.ndarray:
        """Flat parameter vector consumed by the compiled kernels."""
        return np.array([self.semi_major_axis, self.eccentricity_sq,
                         self.earth_rate, *self.gravity_coeffs,
                         1.0 if self.paper_faithful else 0.0])


WGS84 = EarthModel()


def wrap_to_pi(angle):
    """Wrap angle(s) to (-pi, pi]."""
    a = np.asarray(angle, dtype=float)
    out = np.pi - np.mod(np.pi - a, 2.0 * np.pi)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GeodeticPosition:
    """Latitude/longitude in radians, altitude in metres (positive up).

    Longitude is wrapped to (-pi, pi] on construction.
    """

    lat: float
    lon: float
    alt: float = 0.0

    def __post_init__(self):
        if not np.isfinite([self.lat, self.lon, self.alt]).all():
            raise ValueError("geodetic coordinates must be finite")
        if abs(self.lat) > np.pi / 2 + 1e-12:
            raise ValueError(f"latitude {self.lat} rad outside [-pi/2, pi/2]")
        object.__setattr__(self, "lat", float(self.lat))
        object.__setattr__(self, "lon", wrap_to_pi(self.lon))
        object.__setattr__(self, "alt", float(self.alt))

    @classmethod
    def from_degrees(cls, lat_deg, lon_deg, alt=0.0):
        return cls(np.radians(lat_deg), np.radians(lon_deg), alt)

    @classmethod
    def from_array(cls, a):
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.lat, self.lon, self.alt])

    @property
    def depth(self) -> float:
        return -self.alt


def radii_of_curvature(lat: float, earth: EarthModel = WGS84):
    """Return ``(R_M, R_N)``: meridian and prime-vertical radii in metres."""
    return K.radii(float(lat), earth.params)


def gravity(lat: float, alt: float, earth: EarthModel = WGS84) -> float:
    """Normal gravity magnitude (m/s^2), positive down."""
    return K.gravity(float(lat), float(alt), earth.params)


def skew(v) -> np.ndarray:
    """Cross-product matrix: ``skew(v) @ w == np.cross(v, w)``."""
    v = np.asarray(v, dtype=float)
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def dcm_e_to_n(lat: float, lon: float) -> np.ndarray:
    """C_e^n for a north-east-down frame at (lat, lon)."""
    sl, cl = np.sin(lat), np.cos(lat)
    so, co = np.sin(lon), np.cos(lon)
    return np.array([[-sl * co, -sl * so, cl],
                     [-so, co, 0.0],
                     [-cl * co, -cl * so, -sl]])


def dcm_e_to_n_error(lat: float, lon: float, dlat: float, dlon: float) -> np.ndarray:
    """First-order change of :func:`dcm_e_to_n` for small (dlat, dlon)."""
    sl, cl = np.sin(lat), np.cos(lat)
    so, co = np.sin(lon), np.cos(lon)
    return np.array([
        [-dlat * cl * co + dlon * so * sl, -dlon * co * sl - dlat * cl * so, -dlat * sl],
        [-dlon * co, -dlon * so, 0.0],
        [dlat * sl * co + dlon * so * cl, dlat * sl * so - dlon * co * cl, -dlat * cl],
    ])


def geodetic_to_ecef(p, earth: EarthModel = WGS84, radii=None) -> np.ndarray:
    """ECEF position of a geodetic point.

    With ``earth.paper_faithful`` the z component is ``(R_M + h) sin(lat)``,
    otherwise the standard ``(R_N (1 - e2) + h) sin(lat)``.  ``radii`` may
    pin ``(R_M, R_N)`` instead of evaluating them at ``p.lat``; the
    Jacobian oracles use this to hold the curvature radii fixed.
    """
    lat, lon, h = _llh(p)
    rm, rn = radii if radii is not None else K.radii(lat, earth.params)
    sl, cl = np.sin(lat), np.cos(lat)
    zr = rm if earth.paper_faithful else rn * (1.0 - earth.eccentricity_sq)
    return np.array([(rn + h) * cl * np.cos(lon),
                     (rn + h) * cl * np.sin(lon),
                     (zr + h) * sl])


def dr_inv(lat: float, alt: float, earth: EarthModel = WGS84) -> np.ndarray:
    """Map NED metre errors to (dlat, dlon, dalt)."""
    cl = np.cos(lat)
    if abs(cl) < 1e-9:
        raise PolarSingularity(f"cos(lat) = {cl:.3g}; local-level model invalid at the pole")
    rm, rn = K.radii(float(lat), earth.params)
    return np.diag([1.0 / (rm + alt), 1.0 / ((rn + alt) * cl), -1.0])


def dr(lat: float, alt: float, earth: EarthModel = WGS84) -> np.ndarray:
    """Inverse of :func:`dr_inv`."""
    cl = np.cos(lat)
    if abs(cl) < 1e-9:
        raise PolarSingularity(f"cos(lat) = {cl:.3g}; local-level model invalid at the pole")
    rm, rn = K.radii(float(lat), earth.params)
    return np.diag([rm + alt, (rn + alt) * cl, -1.0])


def rotvec_to_dcm(v) -> np.ndarray:
    """Rodrigues formula, ``exp(skew(v))``."""
    return K.rotvec_to_dcm(np.asarray(v, dtype=float))


def dcm_to_rotvec(c) -> np.ndarray:
    return K.dcm_to_rotvec(np.ascontiguousarray(c, dtype=float))


def orthonormalize(c) -> np.ndarray:
    """One step of the symmetric correction ``C (3I - C^T C) / 2``."""
    return K.orthonormalize(np.ascontiguousarray(c, dtype=float))


def euler_to_dcm(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """C_b^n from ZYX Euler angles."""
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    return np.array([
        [cp * cy, -cr * sy + sr * sp * cy, sr * sy + cr * sp * cy],
        [cp * sy, cr * cy + sr * sp * sy, -sr * cy + cr * sp * sy],
        [-sp, sr * cp, cr * cp],
    ])


def dcm_to_euler(c) -> np.ndarray:
    """(roll, pitch, yaw) from C_b^n."""
    c = np.asarray(c)
    pitch = np.arctan2(-c[2, 0], np.hypot(c[2, 1], c[2, 2]))
    roll = np.arctan2(c[2, 1], c[2, 2])
    yaw = np.arctan2(c[1, 0], c[0, 0])
    return np.array([roll, pitch, yaw])


def is_rotation(c, tol: float = 1e-9) -> bool:
    c = np.asarray(c)
    return bool(np.allclose(c.T @ c, np.eye(3), atol=tol, rtol=0)
                and abs(np.linalg.det(c) - 1.0) < tol)


def _llh(p):
    if isinstance(p, GeodeticPosition):
        return p.lat, p.lon, p.alt
    lat, lon, h = p
    return float(lat), float(lon), float(h)
