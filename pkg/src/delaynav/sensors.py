"""Sensor error models and acoustic timing for USBL, iUSBL and piUSBL.

Random draws come from Philox streams keyed by ``(seed, sensor, index)`` so
every stream is reproducible regardless of the order in which sensors are
simulated.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import OutOfWindow, ZenithSingularity
from .geo import WGS84, EarthModel, GeodeticPosition, dcm_e_to_n, geodetic_to_ecef, wrap_to_pi
from .trajectory import ImuIncrements, Trajectory

DEG = np.pi / 180.0
DEG_PER_HOUR = DEG / 3600.0
DEG_PER_SQRT_HOUR = DEG / 60.0
MPS_PER_SQRT_HOUR = 1.0 / 60.0
MICRO_G = 9.80665e-6

# stream identifiers
GYRO, ACCEL, ACOUSTIC, DEPTH, INIT, TRUTH = range(1, 7)

FIX_CSV_HEADER = ["t0", "t1", "t3", "t4", "r", "alpha_rad", "kind"]


def stream(seed: int, sensor: int, index: int = 0) -> np.random.Generator:
    """Counter-based generator for one (seed, sensor, index) key."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), sensor, index])))


class DelayKind(str, enum.Enum):
    USBL = "USBL"
    IUSBL = "iUSBL"
    PIUSBL = "piUSBL"


@dataclass(frozen=True)
class ImuErrorSpec:
    """IMU error magnitudes in SI units (scale factors in ppm).

    Biases and scale factors may be scalars (same on every axis) or
    3-vectors.  Use :meth:`realize` to draw a per-run constant error set.
    """

    gyro_bias: object = 0.0
    gyro_arw: float = 0.0
    gyro_scale: object = 0.0
    accel_bias: object = 0.0
    accel_vrw: float = 0.0
    accel_scale: object = 0.0

    def __post_init__(self):
        for name in ("gyro_arw", "accel_vrw"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def table1(cls) -> "ImuErrorSpec":
        """Navigation-grade simulation IMU."""
        return cls(gyro_bias=0.01 * DEG_PER_HOUR, gyro_arw=0.01 * DEG_PER_SQRT_HOUR,
                   gyro_scale=50.0, accel_bias=50.0 * MICRO_G,
                   accel_vrw=0.01 * MPS_PER_SQRT_HOUR, accel_scale=100.0)

    def realize(self, rng: np.random.Generator) -> "ImuErrorSpec":
        """Draw zero-mean Gaussian constant errors with these sigmas."""
        def draw(sigma):
            return rng.standard_normal(3) * np.broadcast_to(np.abs(sigma), (3,))
        return replace(self, gyro_bias=draw(self.gyro_bias), accel_bias=draw(self.accel_bias),
                       gyro_scale=draw(self.gyro_scale), accel_scale=draw(self.accel_scale))


@dataclass(frozen=True)
class AcousticSpec:
    """Acoustic sensor parameters.

    ``sampling_window`` is ``t3 - t0``.  The USBL relay leg costs
    ``usbl_comm_tof_factor * tof + usbl_handshake`` on top of the two-way
    interrogation.
    """

    azimuth_sigma: float = 0.1 * DEG
    range_scale_sigma: float = 1e-3
    range_noise_floor: float = 0.0
    fix_rate: float = 1.0
    sound_speed: float = 1500.0
    signal_length: float = 0.020
    sampling_window: float = 2.0
    processing_delay: float = 0.010
    processing_jitter: float = 0.004
    usbl_comm_tof_factor: float = 1.0
    usbl_handshake: float = 0.5

    def __post_init__(self):
        if self.fix_rate <= 0:
            raise ValueError("fix_rate must be positive")
        if self.sound_speed <= 0:
            raise ValueError("sound_speed must be positive")
        if not self.sampling_window > self.signal_length:
            raise ValueError("sampling_window must exceed signal_length")
        for name in ("azimuth_sigma", "range_scale_sigma", "range_noise_floor",
                     "processing_delay", "processing_jitter",
                     "usbl_comm_tof_factor", "usbl_handshake"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def range_sigma(self, r: float) -> float:
        return float(np.hypot(self.range_scale_sigma * r, self.range_noise_floor))


@dataclass(frozen=True)
class AcousticFix:
    """One acoustic output with its timeline.

    ``t0`` transmit/PPS epoch, ``t1`` arrival, ``t3`` end of the sampling
    window (or of the two-way exchange), ``t4`` delivery to the navigator.
    """

    r: float
    alpha: float
    t0: float
    tof: float
    t1: float
    t3: float
    t4: float
    system_kind: DelayKind = DelayKind.PIUSBL
    index: int = 0

    @property
    def delay(self) -> float:
        return self.t4 - self.t1


def corrupt_imu(ideal: ImuIncrements, spec: ImuErrorSpec, seed: int) -> ImuIncrements:
    """measured = (1 + scale) * ideal + bias * dt + white noise."""
    dt = ideal.dt
    n = len(ideal)
    out = []
    for inc, bias, scale, dens, sid in (
            (ideal.dtheta, spec.gyro_bias, spec.gyro_scale, spec.gyro_arw, GYRO),
            (ideal.dvel, spec.accel_bias, spec.accel_scale, spec.accel_vrw, ACCEL)):
        m = inc * (1.0 + np.asarray(scale, dtype=float) * 1e-6) + np.asarray(bias, dtype=float) * dt
        if dens > 0:
            m = m + stream(seed, sid).standard_normal((n, 3)) * (dens * np.sqrt(dt))
        out.append(np.ascontiguousarray(m))
    return ImuIncrements(ideal.t0, dt, out[0], out[1])


def receiver_ecef(pos, cbn, lever_bu, earth: EarthModel = WGS84) -> np.ndarray:
    """ECEF position of the array phase centre."""
    lat, lon = pos[0], pos[1]
    return geodetic_to_ecef(pos, earth) + dcm_e_to_n(lat, lon).T @ (cbn @ np.asarray(lever_bu, float))


def true_geometry(pos, cbn, beacon: GeodeticPosition, lever_bu, c_bu,
                  earth: EarthModel = WGS84):
    """Slant range, azimuth and the beacon vector in the array frame.

    Computed as the difference of absolute ECEF positions of beacon and
    array phase centre, rotated into the array frame.
    """
    pos = np.asarray(pos.as_array() if isinstance(pos, GeodeticPosition) else pos, float)
    p_e = geodetic_to_ecef(beacon, earth) - receiver_ecef(pos, cbn, lever_bu, earth)
    p_u = np.asarray(c_bu) @ (np.asarray(cbn).T @ (dcm_e_to_n(pos[0], pos[1]) @ p_e))
    if p_u[0] ** 2 + p_u[1] ** 2 < 1e-12:
        raise ZenithSingularity("beacon on the array axis; azimuth undefined")
    return float(np.linalg.norm(p_u)), float(np.arctan2(p_u[1], p_u[0])), p_u


def delay_model(kind: DelayKind, tof: float, spec: AcousticSpec, t0: float = 0.0,
                processing: float | None = None):
    """Return ``(t1, t3, t4)`` for a signal transmitted at ``t0``."""
    kind = DelayKind(kind)
    if tof < 0:
        raise ValueError("tof must be non-negative")
    proc = spec.processing_delay if processing is None else processing
    t1 = t0 + tof
    if kind is DelayKind.PIUSBL:
        t3 = t0 + spec.sampling_window
        t4 = t3 + proc
    else:
        # two-way interrogation: the reply needs one more travel time
        t3 = t1 + tof
        t4 = t3 + proc
        if kind is DelayKind.USBL:
            t4 += spec.usbl_comm_tof_factor * tof + spec.usbl_handshake
    return t1, t3, t4


def solve_arrival(range_at, t0: float, sound_speed: float, iterations: int = 6) -> float:
    """Time of flight satisfying ``c * tof == range_at(t0 + tof)``."""
    tof = range_at(t0) / sound_speed
    for _ in range(iterations):
        tof = range_at(t0 + tof) / sound_speed
    return tof


def measure_acoustic(traj: Trajectory, t0: float, spec: AcousticSpec, kind: DelayKind,
                     seed: int, beacon: GeodeticPosition, lever_bu, c_bu,
                     range_scale: float = 0.0, index: int = 0,
                     earth: EarthModel | None = None) -> AcousticFix:
    """Simulate the fix for the ping transmitted at ``t0``.

    Geometry is evaluated at the arrival epoch; noise draws are keyed by
    ``index`` so every delay kind sees the same measurement noise.
    """
    earth = earth or traj.earth

    def geom(t):
        pos, _, cbn = traj.state_at(t)
        return true_geometry(pos, cbn, beacon, lever_bu, c_bu, earth)

    tof_true = solve_arrival(lambda t: geom(t)[0], t0, spec.sound_speed)
    if tof_true > spec.sampling_window - spec.signal_length:
        raise OutOfWindow(f"tof {tof_true:.3f} s exceeds the sampling window")
    r, alpha, _ = geom(t0 + tof_true)
    rng = stream(seed, ACOUSTIC, index)
    w = rng.standard_normal(2)
    jitter = rng.uniform(-1.0, 1.0)
    r_m = (1.0 + range_scale) * r + w[0] * spec.range_sigma(r)
    a_m = wrap_to_pi(alpha + w[1] * spec.azimuth_sigma)
    tof = r_m / spec.sound_speed
    proc = spec.processing_delay + spec.processing_jitter * jitter
    t1, t3, t4 = delay_model(kind, tof, spec, t0, proc)
    return AcousticFix(r_m, a_m, t0, tof, t1, t3, t4, DelayKind(kind), index)


def retime(fix: AcousticFix, kind: DelayKind, spec: AcousticSpec) -> AcousticFix:
    """Same measurement delivered through another architecture.

    The processing delay of ``fix`` (``t4 - t3`` of a piUSBL fix) is reused
    so that only the delay structure differs.
    """
    if fix.system_kind is not DelayKind.PIUSBL:
        raise ValueError("retime expects a piUSBL fix")
    t1, t3, t4 = delay_model(kind, fix.tof, spec, fix.t0, fix.t4 - fix.t3)
    return replace(fix, t1=t1, t3=t3, t4=t4, system_kind=DelayKind(kind))


def measure_depth(pos, cbn, sigma: float, lever_bd, rng: np.random.Generator | None = None,
                  bias: float = 0.0) -> float:
    """Depth of the gauge (IMU position plus the rotated lever arm)."""
    pos = np.asarray(pos.as_array() if isinstance(pos, GeodeticPosition) else pos, float)
    d = -pos[2] + (np.asarray(cbn) @ np.asarray(lever_bd, float))[2] + bias
    if sigma > 0:
        if rng is None:
            raise ValueError("an rng is required when sigma > 0")
        d += sigma * rng.standard_normal()
    return float(d)


@dataclass(frozen=True)
class DepthSeries:
    t: np.ndarray
    depth: np.ndarray

    def nearest(self, t: float, max_gap: float = 0.1, causal: bool = False):
        """Sample nearest ``t`` (or latest not after ``t`` when causal)."""
        if len(self.t) == 0:
            return None
        i = int(np.searchsorted(self.t, t, side="right"))
        cands = [i - 1] if causal else [i - 1, i]
        best = None
        for j in cands:
            if 0 <= j < len(self.t) and (best is None or abs(self.t[j] - t) < abs(self.t[best] - t)):
                best = j
        if best is None or abs(self.t[best] - t) > max_gap:
            return None
        return float(self.t[best]), float(self.depth[best])

    def interpolate(self, t: float, max_gap: float = 0.1):
        """Linear interpolation between the samples bracketing ``t``.

        Falls back to :meth:`nearest` when ``t`` is not bracketed by samples
        within ``max_gap``.  Returns ``(t, depth)`` or ``None``.
        """
        i = int(np.searchsorted(self.t, t, side="right"))
        if 0 < i < len(self.t):
            t0, t1 = self.t[i - 1], self.t[i]
            if t - t0 <= max_gap and t1 - t <= max_gap:
                w = (t - t0) / (t1 - t0)
                return float(t), float((1.0 - w) * self.depth[i - 1] + w * self.depth[i])
        return self.nearest(t, max_gap)


def depth_series(traj: Trajectory, rate: float, sigma: float, lever_bd, seed: int,
                 bias: float = 0.0) -> DepthSeries:
    t = np.arange(traj.t[0], traj.t[-1] + 1e-9, 1.0 / rate)
    noise = stream(seed, DEPTH).standard_normal(len(t)) * sigma
    d = np.empty(len(t))
    for i, ti in enumerate(t):
        pos, _, cbn = traj.state_at(ti)
        d[i] = measure_depth(pos, cbn, 0.0, lever_bd, bias=bias) + noise[i]
    return DepthSeries(t, d)


def simulate_fixes(traj: Trajectory, spec: AcousticSpec, kind: DelayKind, seed: int,
                   beacon: GeodeticPosition, lever_bu, c_bu, range_scale: float = 0.0,
                   earth: EarthModel | None = None):
    """All fixes for pings on the PPS grid, dropping out-of-window ones.

    Returns ``(fixes, dropped)``; fixes are ordered by transmit epoch.
    """
    period = 1.0 / spec.fix_rate
    t0s = np.arange(np.ceil(traj.t[0]), traj.t[-1], period)
    fixes, dropped = [], 0
    for i, t0 in enumerate(t0s):
        try:
            fix = measure_acoustic(traj, float(t0), spec, kind, seed, beacon, lever_bu, c_bu,
                                   range_scale, i, earth)
        except (OutOfWindow, ZenithSingularity):
            dropped += 1
            continue
        if fix.t1 < traj.t[-1]:
            fixes.append(fix)
    return fixes, dropped


def write_fixes_csv(path, fixes) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FIX_CSV_HEADER)
        for f in fixes:
            w.writerow([*(repr(float(x)) for x in (f.t0, f.t1, f.t3, f.t4, f.r, f.alpha)),
                        f.system_kind.value])


def read_fixes_csv(path, sound_speed: float = 1500.0):
    """Parse fixes; ``tof`` is recovered as ``t1 - t0``."""
    out = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.DictReader(fh)):
            t0, t1 = float(row["t0"]), float(row["t1"])
            out.append(AcousticFix(float(row["r"]), float(row["alpha_rad"]), t0, t1 - t0, t1,
                                   float(row["t3"]), float(row["t4"]), DelayKind(row["kind"]), i))
    return out
