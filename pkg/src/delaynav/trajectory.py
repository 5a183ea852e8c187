"""Ground-truth trajectories and their ideal inertial measurements.

Velocity and attitude are prescribed analytically; position is integrated
with the same trapezoidal rule the mechanization uses, and the IMU
increments are obtained by inverting the mechanization step exactly.  The
generator/mechanizer pair therefore closes to round-off.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels as K
from .exceptions import NonTerminating, NonUniformRate
from .geo import WGS84, EarthModel, GeodeticPosition, dcm_to_euler, euler_to_dcm

KNOT = 1852.0 / 3600.0

TRAJECTORY_CSV_HEADER = ["t", "lat_deg", "lon_deg", "alt_m", "vn", "ve", "vd",
                         "roll_deg", "pitch_deg", "yaw_deg"]


@dataclass(frozen=True)
class TrajectorySample:
    time: float
    pos: GeodeticPosition
    vel_ned: np.ndarray
    att: np.ndarray
    specific_force_b: np.ndarray
    angular_rate_b: np.ndarray


@dataclass(frozen=True)
class ImuIncrements:
    """Uniform-rate gyro/accelerometer increments.

    Row ``k`` integrates over ``[t0 + k*dt, t0 + (k+1)*dt]``.
    """

    t0: float
    dt: float
    dtheta: np.ndarray
    dvel: np.ndarray

    def __len__(self):
        return len(self.dtheta)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * len(self.dtheta)


@dataclass(frozen=True)
class HelixParams:
    """Helical descent.  Defaults reproduce the published scenario geometry;
    the turn rate and acceleration profile are free choices."""

    start: GeodeticPosition = GeodeticPosition.from_degrees(30.0, 120.0, 0.0)
    pitch: float = np.radians(-15.0)
    target_speed: float = 6.0 * KNOT
    final_depth: float = 470.0
    turn_rate: float | None = None
    accel_duration: float = 60.0
    imu_rate: float = 200.0
    heading: float = 0.0
    duration: float | None = None
    radius: float = 150.0

    def __post_init__(self):
        if self.imu_rate <= 0:
            raise ValueError("imu_rate must be positive")
        if self.target_speed < 0:
            raise ValueError("target_speed must be non-negative")
        if self.duration is None and self.final_depth <= 0:
            raise ValueError("final_depth must be positive")

    @property
    def effective_turn_rate(self) -> float:
        if self.turn_rate is not None:
            return self.turn_rate
        return self.target_speed * np.cos(self.pitch) / self.radius


class Trajectory:
    """Immutable sampled trajectory with its ideal IMU increments."""

    def __init__(self, t, pos, vel, cbn, imu: ImuIncrements, earth: EarthModel):
        self.t = np.asarray(t, dtype=float)
        self.pos = np.asarray(pos, dtype=float)
        self.vel = np.asarray(vel, dtype=float)
        self.cbn = np.asarray(cbn, dtype=float)
        self.imu = imu
        self.earth = earth
        for a in (self.t, self.pos, self.vel, self.cbn, imu.dtheta, imu.dvel):
            a.setflags(write=False)

    def __len__(self):
        return len(self.t)

    def __getitem__(self, k) -> TrajectorySample:
        n = len(self)
        if k < 0:
            k += n
        if not 0 <= k < n:
            raise IndexError(k)
        j = min(k, n - 2)
        return TrajectorySample(
            time=float(self.t[k]),
            pos=GeodeticPosition.from_array(self.pos[k]),
            vel_ned=self.vel[k].copy(),
            att=self.cbn[k].copy(),
            specific_force_b=self.imu.dvel[j] / self.imu.dt,
            angular_rate_b=self.imu.dtheta[j] / self.imu.dt,
        )

    def __iter__(self) -> Iterator[TrajectorySample]:
        for k in range(len(self)):
            yield self[k]

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def state_at(self, t: float):
        """Interpolated (pos, vel, C_b^n) at an arbitrary time."""
        x = (t - self.t[0]) / self.imu.dt
        k = int(np.clip(np.floor(x), 0, len(self) - 2))
        f = x - k
        pos = self.pos[k] + f * (self.pos[k + 1] - self.pos[k])
        vel = self.vel[k] + f * (self.vel[k + 1] - self.vel[k])
        c0 = self.cbn[k]
        rel = K.dcm_to_rotvec(np.ascontiguousarray(c0.T @ self.cbn[k + 1]))
        cbn = c0 @ K.rotvec_to_dcm(f * rel)
        return pos, vel, cbn

    def to_csv(self, path, stride: int = 1) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRAJECTORY_CSV_HEADER)
            for k in range(0, len(self), stride):
                r, p, y = np.degrees(dcm_to_euler(self.cbn[k]))
                lat, lon, alt = self.pos[k]
                w.writerow([f"{self.t[k]:.6f}", f"{np.degrees(lat):.10f}",
                            f"{np.degrees(lon):.10f}", f"{alt:.6f}",
                            *(f"{x:.6f}" for x in self.vel[k]),
                            f"{r:.8f}", f"{p:.8f}", f"{y:.8f}"])


def read_trajectory_csv(path, earth: EarthModel = WGS84) -> Trajectory:
    """Load a trajectory CSV and rebuild its ideal IMU.

    Positions after the first row are re-integrated from the velocities so
    that the result is self-consistent with the mechanization.
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    start = GeodeticPosition.from_degrees(data[0, 1], data[0, 2], data[0, 3])
    euler = np.radians(data[:, 7:10])
    cbn = np.array([euler_to_dcm(*e) for e in euler])
    return from_profile(t, data[:, 4:7], cbn, start, earth)


def from_profile(t, vel, cbn, start: GeodeticPosition,
                 earth: EarthModel = WGS84) -> Trajectory:
    """Build a trajectory from prescribed velocity and attitude histories."""
    t = np.asarray(t, dtype=float)
    _check_uniform(t)
    dt = float(t[1] - t[0])
    vel = np.ascontiguousarray(vel, dtype=float)
    cbn = np.ascontiguousarray(cbn, dtype=float)
    pos = np.zeros((len(t), 3))
    pos[0] = start.as_array()
    dtheta, dvel = K.inverse_mech(pos, vel, cbn, dt, earth.params)
    return Trajectory(t, pos, vel, cbn, ImuIncrements(float(t[0]), dt, dtheta, dvel), earth)


def ideal_imu(traj, earth: EarthModel | None = None) -> ImuIncrements:
    """Gyro and accelerometer increments that reproduce ``traj``.

    ``traj`` may be a :class:`Trajectory` or any sequence of
    :class:`TrajectorySample`.
    """
    if isinstance(traj, Trajectory):
        t, pos, vel, cbn = traj.t, traj.pos, traj.vel, traj.cbn
        earth = earth or traj.earth
    else:
        samples = list(traj)
        if len(samples) < 2:
            raise ValueError("need at least two samples")
        t = np.array([s.time for s in samples])
        pos = np.array([s.pos.as_array() for s in samples])
        vel = np.array([s.vel_ned for s in samples])
        cbn = np.array([s.att for s in samples])
        earth = earth or WGS84
    if len(t) < 2:
        raise ValueError("need at least two samples")
    _check_uniform(t)
    dt = float(t[1] - t[0])
    p = np.zeros_like(pos)
    p[0] = pos[0]
    dtheta, dvel = K.inverse_mech(p, np.ascontiguousarray(vel),
                                  np.ascontiguousarray(cbn), dt, earth.params)
    return ImuIncrements(float(t[0]), dt, dtheta, dvel)


def _check_uniform(t):
    if len(t) < 2:
        raise ValueError("need at least two samples")
    d = np.diff(t)
    step = (t[-1] - t[0]) / (len(t) - 1)
    if step <= 0 or np.abs(d - step).max() > 1e-6:
        raise NonUniformRate("timestamps deviate from uniform spacing by more than 1e-6 s")


def _distance(t, v, ta):
    """Path length under the cosine speed ramp."""
    t = np.asarray(t, dtype=float)
    if ta <= 0:
        return v * t
    ramp = v * (0.5 * t - ta / (2 * np.pi) * np.sin(np.pi * t / ta))
    return np.where(t < ta, ramp, v * (0.5 * ta + (t - ta)))


def _speed(t, v, ta):
    if ta <= 0:
        return np.full_like(t, v)
    return np.where(t < ta, 0.5 * v * (1.0 - np.cos(np.pi * t / ta)), v)


def generate_helix(params: HelixParams = HelixParams(),
                   earth: EarthModel = WGS84) -> Trajectory:
    """Helical descent at constant pitch with a smooth speed ramp.

    Heading rate scales with speed so the horizontal radius stays constant
    while accelerating; once at ``target_speed`` the heading advances at the
    (effective) turn rate.  Generation stops when the depth below the start
    reaches ``final_depth``, or after ``duration`` seconds if given.
    """
    v, ta, pitch = params.target_speed, params.accel_duration, params.pitch
    dt = 1.0 / params.imu_rate
    if params.duration is not None:
        t_end = float(params.duration)
    else:
        sink = -np.sin(pitch)
        if sink <= 0 or v <= 0:
            raise NonTerminating("pitch >= 0 or zero speed never reaches the final depth")
        # distance along the path needed, then invert the monotone profile
        need = params.final_depth / sink
        if need <= _distance(ta, v, ta):
            lo, hi = 0.0, ta
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                lo, hi = (mid, hi) if _distance(mid, v, ta) < need else (lo, mid)
            t_end = hi
        else:
            t_end = ta + (need - 0.5 * v * ta) / v
    n = int(np.ceil(t_end / dt - 1e-9)) + 1
    t = np.arange(n) * dt
    s = _speed(t, v, ta)
    w = params.effective_turn_rate
    if v > 0:
        yaw = params.heading + w * _distance(t, v, ta) / v
    else:
        yaw = params.heading + w * t
    cp, sp = np.cos(pitch), np.sin(pitch)
    vel = np.stack([s * cp * np.cos(yaw), s * cp * np.sin(yaw), -s * sp], axis=1)
    cy, sy = np.cos(yaw), np.sin(yaw)
    cbn = np.zeros((n, 3, 3))
    cbn[:, 0, 0], cbn[:, 0, 1], cbn[:, 0, 2] = cp * cy, -sy, sp * cy
    cbn[:, 1, 0], cbn[:, 1, 1], cbn[:, 1, 2] = cp * sy, cy, sp * sy
    cbn[:, 2, 0], cbn[:, 2, 2] = -sp, cp
    return from_profile(t, vel, cbn, params.start, earth)
