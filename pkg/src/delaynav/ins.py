"""Strapdown mechanization and the 26-state error model.

Error-state ordering (frozen; the measurement matrix layout depends on it)::

    dp(3) dv(3) phi(3) g_b(3) a_b(3) g_s(3) a_s(3) dtheta(3) dk dh

Position, velocity and attitude errors are estimate minus truth, with
``C_n^b_hat = C_n^b (I + phi x)``.  Sensor and installation errors are
truth minus estimate so that :func:`apply_correction` adds them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from .exceptions import CovarianceBlowup
from .geo import (WGS84, EarthModel, GeodeticPosition, dcm_to_euler, dcm_to_rotvec, dr, dr_inv,
                  rotvec_to_dcm)

N_STATES = K.N_ERR

STATE_BLOCKS = {
    "dp": slice(0, 3),
    "dv": slice(3, 6),
    "phi": slice(6, 9),
    "g_b": slice(9, 12),
    "a_b": slice(12, 15),
    "g_s": slice(15, 18),
    "a_s": slice(18, 21),
    "dtheta": slice(21, 24),
    "dk": slice(24, 25),
    "dh": slice(25, 26),
}

STATE_NAMES = [
    "dp_n", "dp_e", "dp_d",
    "dv_n", "dv_e", "dv_d",
    "phi_n", "phi_e", "phi_d",
    "gb_x", "gb_y", "gb_z",
    "ab_x", "ab_y", "ab_z",
    "gs_x", "gs_y", "gs_z",
    "as_x", "as_y", "as_z",
    "dtheta_x", "dtheta_y", "dtheta_z",
    "dk",
    "dh",
]


@dataclass
class NavState:
    """Full navigation solution plus every correctable sensor estimate.

    Scale-factor estimates are stored as fractions (1 ppm = 1e-6).
    ``misalign_est`` is a rotation vector: the estimated array mounting is
    ``rotvec_to_dcm(misalign_est) @ C_b^u_nominal``.
    """

    time: float
    pos: GeodeticPosition
    vel_ned: np.ndarray = field(default_factory=lambda: np.zeros(3))
    att_bn: np.ndarray = field(default_factory=lambda: np.eye(3))
    gyro_bias_est: np.ndarray = field(default_factory=lambda: np.zeros(3))
    accel_bias_est: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gyro_scale_est: np.ndarray = field(default_factory=lambda: np.zeros(3))
    accel_scale_est: np.ndarray = field(default_factory=lambda: np.zeros(3))
    misalign_est: np.ndarray = field(default_factory=lambda: np.zeros(3))
    range_scale_est: float = 0.0
    depth_bias_est: float = 0.0

    def to_vector(self) -> np.ndarray:
        v = np.empty(K.NAV_LEN)
        v[0:3] = self.pos.as_array()
        v[3:6] = self.vel_ned
        v[6:15] = np.asarray(self.att_bn, dtype=float).reshape(9)
        v[15:18] = self.gyro_bias_est
        v[18:21] = self.accel_bias_est
        v[21:24] = self.gyro_scale_est
        v[24:27] = self.accel_scale_est
        v[27:30] = self.misalign_est
        v[30] = self.range_scale_est
        v[31] = self.depth_bias_est
        return v

    @classmethod
    def from_vector(cls, time: float, v) -> "NavState":
        v = np.asarray(v, dtype=float)
        return cls(
            time=float(time),
            pos=GeodeticPosition(v[0], v[1], v[2]),
            vel_ned=v[3:6].copy(),
            att_bn=v[6:15].reshape(3, 3).copy(),
            gyro_bias_est=v[15:18].copy(),
            accel_bias_est=v[18:21].copy(),
            gyro_scale_est=v[21:24].copy(),
            accel_scale_est=v[24:27].copy(),
            misalign_est=v[27:30].copy(),
            range_scale_est=float(v[30]),
            depth_bias_est=float(v[31]),
        )


@dataclass
class ErrorState26:
    """Error mean ``x`` and covariance ``P``."""

    x: np.ndarray = field(default_factory=lambda: np.zeros(N_STATES))
    P: np.ndarray = field(default_factory=lambda: np.zeros((N_STATES, N_STATES)))

    def check(self, tol: float = 1e-9) -> None:
        P = self.P
        scale = max(np.abs(P).max(), 1e-300)
        if np.abs(P - P.T).max() > tol * scale:
            raise AssertionError("covariance not symmetric")
        if np.linalg.eigvalsh(P).min() < -tol * max(np.trace(P), 1e-300):
            raise AssertionError("covariance not positive semidefinite")


@dataclass(frozen=True)
class ProcessNoiseSpec:
    """Continuous white-noise densities driving the error states.

    ``vrw`` in (m/s)/sqrt(s), ``arw`` in rad/sqrt(s); the random-walk
    entries are standard deviations per sqrt(s) of the respective state.
    The last three entries keep the constant installation states from
    collapsing to zero covariance on long runs.
    """

    vrw: float = 0.0
    arw: float = 0.0
    gyro_bias_rw: float = 0.0
    accel_bias_rw: float = 0.0
    gyro_scale_rw: float = 0.0
    accel_scale_rw: float = 0.0
    misalign_psd: float = 1e-12
    range_scale_psd: float = 1e-12
    depth_bias_psd: float = 1e-12

    def continuous(self) -> np.ndarray:
        q = np.zeros(N_STATES)
        q[3:6] = self.vrw ** 2
        q[6:9] = self.arw ** 2
        q[9:12] = self.gyro_bias_rw ** 2
        q[12:15] = self.accel_bias_rw ** 2
        q[15:18] = self.gyro_scale_rw ** 2
        q[18:21] = self.accel_scale_rw ** 2
        q[21:24] = self.misalign_psd
        q[24] = self.range_scale_psd
        q[25] = self.depth_bias_psd
        return np.diag(q)

    @classmethod
    def zero(cls) -> "ProcessNoiseSpec":
        return cls(misalign_psd=0.0, range_scale_psd=0.0, depth_bias_psd=0.0)


def mechanize_step(state: NavState, gyro_inc, accel_inc, dt: float,
                   earth: EarthModel = WGS84) -> NavState:
    """Advance ``state`` by one IMU interval.

    Increments are raw sensor outputs; the bias and scale estimates carried
    in ``state`` are removed before integration.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    dr_inv(state.pos.lat, state.pos.alt, earth)  # pole check
    v = state.to_vector()
    K.mech_step(v, np.asarray(gyro_inc, dtype=float),
                np.asarray(accel_inc, dtype=float), float(dt), earth.params)
    return NavState.from_vector(state.time + dt, v)


def mechanize(state: NavState, dtheta, dvel, dt: float,
              earth: EarthModel = WGS84) -> NavState:
    """Run :func:`mechanize_step` over arrays of increments."""
    dtheta = np.ascontiguousarray(dtheta, dtype=float)
    dvel = np.ascontiguousarray(dvel, dtype=float)
    v = state.to_vector()
    acc = np.zeros(7)
    K.mech_span(v, dtheta, dvel, float(dt), 0, 0.0, len(dtheta), 0.0,
                earth.params, acc)
    return NavState.from_vector(state.time + dt * len(dtheta), v)


def error_transition(state: NavState, earth: EarthModel = WGS84,
                     specific_force=None, angular_rate=None) -> np.ndarray:
    """Continuous-time 26x26 ``F``.

    The velocity and attitude couplings depend on the body-frame specific
    force and angular rate; when omitted the vehicle is taken to be at rest
    in the local level frame.
    """
    if specific_force is None:
        specific_force = np.asarray(state.att_bn).T @ np.array(
            [0.0, 0.0, -K.gravity(state.pos.lat, state.pos.alt, earth.params)])
    if angular_rate is None:
        angular_rate = np.zeros(3)
    return K.error_transition(state.to_vector(), np.asarray(specific_force, dtype=float),
                              np.asarray(angular_rate, dtype=float), earth.params)


def discretize(F, q, dt: float):
    """Second-order transition matrix and trapezoidal discrete noise.

    ``q`` is a :class:`ProcessNoiseSpec` or a continuous PSD matrix.
    """
    if not 0 < dt <= 0.1:
        raise ValueError("discretize expects 0 < dt <= 0.1 s")
    Qc = q.continuous() if isinstance(q, ProcessNoiseSpec) else np.asarray(q, dtype=float)
    return K.discretize(np.ascontiguousarray(F, dtype=float), Qc, float(dt))


def propagate(err: ErrorState26, phi, qd, trace_ceiling: float = 1e12) -> ErrorState26:
    """Kalman time update ``P <- Phi P Phi^T + Q_d``."""
    P = phi @ err.P @ phi.T + qd
    P = 0.5 * (P + P.T)
    if np.trace(P) > trace_ceiling:
        raise CovarianceBlowup(f"trace(P) = {np.trace(P):.3g} exceeds {trace_ceiling:.3g}")
    return ErrorState26(phi @ err.x, P)


def correct_vector(v: np.ndarray, dx, earth: EarthModel = WGS84) -> None:
    """In-place feedback of ``dx`` into a flat navigation vector."""
    phi = dx[6:9]
    if np.linalg.norm(phi) >= 0.1:
        raise ValueError("attitude correction outside the small-angle regime")
    v[0:3] -= dr_inv(v[0], v[2], earth) @ dx[0:3]
    v[3:6] -= dx[3:6]
    c = rotvec_to_dcm(phi) @ v[6:15].reshape(3, 3)
    v[6:15] = K.orthonormalize(c).reshape(9)
    v[15:27] += dx[9:21]
    v[27:30] = dcm_to_rotvec(rotvec_to_dcm(dx[21:24]) @ rotvec_to_dcm(v[27:30]))
    v[30] += dx[24]
    v[31] += dx[25]


def apply_correction(state: NavState, dx, earth: EarthModel = WGS84) -> NavState:
    """Feed an error estimate back into the navigation state."""
    v = state.to_vector()
    correct_vector(v, np.asarray(dx, dtype=float), earth)
    return NavState.from_vector(state.time, v)


def inject_error(truth: NavState, dx, earth: EarthModel = WGS84) -> NavState:
    """State whose error relative to ``truth`` is ``dx`` (to first order).

    The counterpart of :func:`apply_correction`, used to seed filters and by
    the numerical Jacobian checks.
    """
    dx = np.asarray(dx, dtype=float)
    v = truth.to_vector()
    v[0:3] += dr_inv(v[0], v[2], earth) @ dx[0:3]
    v[3:6] += dx[3:6]
    v[6:15] = (rotvec_to_dcm(-dx[6:9]) @ v[6:15].reshape(3, 3)).reshape(9)
    v[15:27] -= dx[9:21]
    v[27:30] = dcm_to_rotvec(rotvec_to_dcm(-dx[21:24]) @ rotvec_to_dcm(v[27:30]))
    v[30] -= dx[24]
    v[31] -= dx[25]
    return NavState.from_vector(truth.time, v)


def state_error(est: NavState, truth: NavState, earth: EarthModel = WGS84) -> np.ndarray:
    """26-vector error of ``est`` relative to ``truth``."""
    a, b = est.to_vector(), truth.to_vector()
    e = np.zeros(N_STATES)
    dllh = a[0:3] - b[0:3]
    dllh[1] = (dllh[1] + np.pi) % (2 * np.pi) - np.pi
    e[0:3] = dr(b[0], b[2], earth) @ dllh
    e[3:6] = a[3:6] - b[3:6]
    ca, cb = a[6:15].reshape(3, 3), b[6:15].reshape(3, 3)
    e[6:9] = -dcm_to_rotvec(ca @ cb.T)
    e[9:21] = b[15:27] - a[15:27]
    e[21:24] = dcm_to_rotvec(rotvec_to_dcm(b[27:30]) @ rotvec_to_dcm(a[27:30]).T)
    e[24] = b[30] - a[30]
    e[25] = b[31] - a[31]
    return e


NAV_CSV_HEADER = ["t", "lat", "lon", "alt", "vn", "ve", "vd", "roll", "pitch", "yaw", "trace_P"]


def write_nav_csv(path, times, navs, trace_p) -> None:
    """Export navigation snapshots; angles in degrees.

    ``navs`` is an ``(N, 32)`` array of flat navigation vectors.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(NAV_CSV_HEADER)
        for t, v, tr in zip(times, navs, trace_p):
            rpy = np.degrees(dcm_to_euler(v[6:15].reshape(3, 3)))
            w.writerow([repr(float(t)), repr(float(np.degrees(v[0]))), repr(float(np.degrees(v[1]))),
                        repr(float(v[2])), *(repr(float(x)) for x in v[3:6]),
                        *(repr(float(x)) for x in rpy), repr(float(tr))])
