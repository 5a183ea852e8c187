"""Tightly coupled range/azimuth/depth measurement model and the filter engine.

The engine runs a closed-loop error-state filter over a fixed IMU record and
accepts acoustic fixes in one of three ways:

``compensate``
    Each fix is applied at its reconstructed arrival epoch ``t1`` by rewinding
    to a buffered snapshot and replaying the inertial data.
``naive``
    Each fix is applied when it is delivered (``t4``) as if it were current.
``oracle``
    Fixes are applied in arrival-time order at ``t1`` without any delay; this
    is the reference the replay must reproduce.

Covariance is propagated over segments that end on a fixed grid of IMU
epochs and at update epochs.  Snapshots are stored on the grid, before any
update at that epoch.
"""

from __future__ import annotations

import csv
import enum
from bisect import insort
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .exceptions import BufferUnderrun, CovarianceBlowup, IllConditioned, NegativeTof, ZenithSingularity
from .geo import (WGS84, EarthModel, GeodeticPosition, dcm_e_to_n, dr_inv, geodetic_to_ecef, is_rotation,
                  rotvec_to_dcm, skew, wrap_to_pi)
from .ins import ErrorState26, NavState, ProcessNoiseSpec, correct_vector
from .sensors import AcousticFix, DepthSeries, ImuErrorSpec
from .trajectory import ImuIncrements

DIAG_CSV_HEADER = ["t4", "t1", "delta_t", "z_r", "z_alpha", "z_h", "accepted", "nees"]


@dataclass(frozen=True)
class CalibrationSet:
    """Installation geometry shared by truth simulation and filter."""

    beacon: GeodeticPosition
    lever_bu: np.ndarray = field(default_factory=lambda: np.zeros(3))
    lever_bd: np.ndarray = field(default_factory=lambda: np.zeros(3))
    c_bu_nominal: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        for name in ("lever_bu", "lever_bd"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,):
                raise ValueError(f"{name} must be a 3-vector")
            object.__setattr__(self, name, v)
        c = np.asarray(self.c_bu_nominal, dtype=float)
        if not is_rotation(c):
            raise ValueError("c_bu_nominal must be a proper rotation")
        object.__setattr__(self, "c_bu_nominal", c)


@dataclass(frozen=True)
class MeasurementNoise:
    """Diagonal measurement noise for (range, azimuth, depth).

    The range variance scales with the slant range:
    ``(range_scale_sigma * r)**2 + range_floor**2``.
    """

    range_scale_sigma: float = 1e-3
    range_floor: float = 0.0
    azimuth_sigma: float = np.radians(0.1)
    depth_sigma: float = 0.1

    def __post_init__(self):
        if not (self.azimuth_sigma > 0 and self.depth_sigma > 0):
            raise ValueError("azimuth and depth sigmas must be positive")
        if self.range_scale_sigma < 0 or self.range_floor < 0:
            raise ValueError("range sigmas must be non-negative")
        if self.range_scale_sigma == 0 and self.range_floor == 0:
            raise ValueError("range variance must be positive")

    def matrix(self, r: float) -> np.ndarray:
        return np.diag([(self.range_scale_sigma * r) ** 2 + self.range_floor ** 2,
                        self.azimuth_sigma ** 2, self.depth_sigma ** 2])


@dataclass(frozen=True)
class StateSnapshot:
    """Filter state at a grid epoch, before any update at that epoch.

    ``imu_index`` is the first IMU sample not yet integrated; the pending
    increments are ``imu.dtheta[imu_index:]``.
    """

    time: float
    nav: NavState
    err: ErrorState26
    imu_index: int


@dataclass(frozen=True)
class Observation:
    """Predicted measurement and the intermediate quantities of the chain."""

    r: float
    alpha: float
    h: float
    rho: float
    p_u: np.ndarray
    p_bt_e: np.ndarray
    c_en: np.ndarray
    c_nb: np.ndarray
    c_bu: np.ndarray

    @property
    def zenith(self) -> bool:
        return bool(np.isnan(self.alpha))


def _vec(state) -> np.ndarray:
    return state.to_vector() if isinstance(state, NavState) else np.asarray(state, dtype=float)


def _observe(v, calib: CalibrationSet, earth: EarthModel, strict: bool, radii=None) -> Observation:
    lat, lon = v[0], v[1]
    cbn = v[6:15].reshape(3, 3)
    c_en = dcm_e_to_n(lat, lon)
    c_nb = cbn.T
    c_bu = rotvec_to_dcm(v[27:30]) @ calib.c_bu_nominal
    p_bt_e = geodetic_to_ecef(calib.beacon, earth, radii=None) - geodetic_to_ecef(v[0:3], earth, radii=radii)
    p_u = c_bu @ (c_nb @ (c_en @ p_bt_e)) - c_bu @ calib.lever_bu
    rho = float(np.linalg.norm(p_u))
    if rho < 1e-6:
        raise ZenithSingularity("receiver coincides with the beacon")
    if p_u[0] ** 2 + p_u[1] ** 2 < 1e-12:
        if strict:
            raise ZenithSingularity("beacon on the array axis; azimuth undefined")
        alpha = float("nan")
    else:
        alpha = float(np.arctan2(p_u[1], p_u[0]))
    h = -v[2] + (cbn @ calib.lever_bd)[2] + v[31]
    return Observation((1.0 + v[30]) * rho, alpha, float(h), rho, p_u, p_bt_e, c_en, c_nb, c_bu)


def predict_observation(state, calib: CalibrationSet, earth: EarthModel = WGS84,
                        strict: bool = True, radii=None) -> Observation:
    """Predicted slant range, azimuth and gauge depth.

    The range includes the current scale-factor estimate and the depth the
    current gauge bias estimate, so both predict the raw sensor outputs.
    ``radii`` pins the curvature radii of the vehicle position.  With
    ``strict=False`` a zenith geometry returns ``alpha = nan`` instead of
    raising.
    """
    return _observe(_vec(state), calib, earth, strict, radii)


def jac_Ha(p_u) -> np.ndarray:
    """d(r, alpha)/dP for the array-frame beacon vector ``P``."""
    x, y, z = np.asarray(p_u, dtype=float)
    rho2 = x * x + y * y
    if rho2 < 1e-12:
        raise ZenithSingularity("azimuth Jacobian undefined on the array axis")
    r = np.sqrt(rho2 + z * z)
    return np.array([[x / r, y / r, z / r],
                     [-y / rho2, x / rho2, 0.0]])


def jac_Hb(pos, earth: EarthModel = WGS84) -> np.ndarray:
    """d r_b^e / d(lat, lon, h) with the curvature radii held fixed."""
    lat, lon, h = (pos.lat, pos.lon, pos.alt) if isinstance(pos, GeodeticPosition) else pos
    rm, rn = K.radii(float(lat), earth.params)
    sl, cl = np.sin(lat), np.cos(lat)
    so, co = np.sin(lon), np.cos(lon)
    zr = rm if earth.paper_faithful else rn * (1.0 - earth.eccentricity_sq)
    return np.array([[-(rn + h) * sl * co, -(rn + h) * cl * so, cl * co],
                     [-(rn + h) * sl * so, (rn + h) * cl * co, cl * so],
                     [(zr + h) * cl, 0.0, sl]])


def jac_Hc(pos, p_bt_e) -> np.ndarray:
    """d(C_e^n(lat, lon) P)/d(lat, lon, h) at fixed ``P``."""
    lat, lon = (pos.lat, pos.lon) if isinstance(pos, GeodeticPosition) else (pos[0], pos[1])
    x, y, z = np.asarray(p_bt_e, dtype=float)
    sl, cl = np.sin(lat), np.cos(lat)
    so, co = np.sin(lon), np.cos(lon)
    return np.array([
        [-cl * co * x - cl * so * y - sl * z, so * sl * x - co * sl * y, 0.0],
        [0.0, -co * x - so * y, 0.0],
        [sl * co * x + sl * so * y - cl * z, so * cl * x - co * cl * y, 0.0],
    ])


def jac_Hc_printed(pos, p_bt_e) -> np.ndarray:
    """The published form of :func:`jac_Hc`, read with ``t_bt -> y_bt``."""
    lat, lon = (pos.lat, pos.lon) if isinstance(pos, GeodeticPosition) else (pos[0], pos[1])
    x, y, z = np.asarray(p_bt_e, dtype=float)
    sl, cl = np.sin(lat), np.cos(lat)
    so, co = np.sin(lon), np.cos(lon)
    return np.array([
        [-cl * co * x - cl * so * y - sl * z, so * sl * x - co * sl * y, 0.0],
        [0.0, -co * x - so * y, 0.0],
        [-sl * co * x + sl * so * y - cl * z, so * cl * x - co * cl * y, 0.0],
    ])


def hc_print_diff(pos, p_bt_e) -> np.ndarray:
    """Elementwise ``jac_Hc - jac_Hc_printed``; nonzero only at (2, 0)."""
    return jac_Hc(pos, p_bt_e) - jac_Hc_printed(pos, p_bt_e)


def _assemble(v, obs: Observation, calib: CalibrationSet, earth: EarthModel) -> np.ndarray:
    H = np.zeros((3, K.N_ERR))
    A = obs.c_bu @ obs.c_nb
    Hb = jac_Hb(v[0:3], earth)
    Hc = jac_Hc(v[0:3], obs.p_bt_e)
    d_p = A @ (Hc - obs.c_en @ Hb) @ dr_inv(v[0], v[2], earth)
    d_phi = -A @ skew(obs.c_en @ obs.p_bt_e)
    d_th = skew(A @ (obs.c_en @ obs.p_bt_e)) - skew(obs.c_bu @ calib.lever_bu)
    scale = 1.0 + v[30]
    if obs.zenith:
        Ha = np.array([obs.p_u / obs.rho, np.zeros(3)])
    else:
        Ha = jac_Ha(obs.p_u)
    Ha[0] *= scale
    H[0:2, 0:3] = Ha @ d_p
    H[0:2, 6:9] = Ha @ d_phi
    H[0:2, 21:24] = Ha @ d_th
    H[0, 24] = -obs.rho
    cl = v[6:15].reshape(3, 3) @ calib.lever_bd
    H[2, 2] = 1.0
    H[2, 6:9] = skew(cl)[2]
    H[2, 25] = -1.0
    return H


def assemble_H(state, calib: CalibrationSet, earth: EarthModel = WGS84) -> np.ndarray:
    """Measurement matrix for (range, azimuth, depth) over the 26 error states.

    The range row carries the factor ``1 + k_hat`` of the predicted range and
    its scale-factor column is the geometric range.  In a zenith geometry the
    azimuth row is dropped and a 2x26 matrix (range, depth) is returned.
    """
    v = _vec(state)
    obs = _observe(v, calib, earth, strict=False)
    H = _assemble(v, obs, calib, earth)
    return H[[0, 2]] if obs.zenith else H


def innovation(pred, fix: AcousticFix | None = None, depth: float | None = None,
               r_meas: float | None = None, alpha_meas: float | None = None) -> np.ndarray:
    """``[r_hat - r, wrap(alpha_hat - alpha), h_hat - h]``.

    ``pred`` is an :class:`Observation` or an ``(r, alpha, h)`` triple.
    Missing measurements give ``nan`` in the corresponding slot.
    """
    r_hat, a_hat, h_hat = (pred.r, pred.alpha, pred.h) if isinstance(pred, Observation) else pred
    r = fix.r if fix is not None else r_meas
    a = fix.alpha if fix is not None else alpha_meas
    return np.array([r_hat - r if r is not None else np.nan,
                     wrap_to_pi(a_hat - a) if a is not None else np.nan,
                     h_hat - depth if depth is not None else np.nan])


def _kalman(P, H, R, z):
    S = H @ P @ H.T + R
    if np.linalg.cond(S) > 1e12:
        raise IllConditioned("innovation covariance condition number exceeds 1e12")
    PHt = P @ H.T
    Kg = np.linalg.solve(S, PHt.T).T
    dx = Kg @ z
    IKH = np.eye(P.shape[0]) - Kg @ H
    P = IKH @ P @ IKH.T + Kg @ R @ Kg.T
    return dx, 0.5 * (P + P.T), S


def kalman_update(err: ErrorState26, H, R, z):
    """Joseph-form update.  Returns ``(dx, posterior ErrorState26)``."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    dx, P, _ = _kalman(err.P, H, R, z)
    return dx, ErrorState26(np.zeros_like(dx), P)


def reconstruct_timestamp(fix: AcousticFix) -> float:
    """Arrival epoch from the synchronized transmit epoch and time of flight."""
    if fix.tof < 0:
        raise NegativeTof(f"time of flight {fix.tof} s is negative")
    return fix.t0 + fix.tof


def project_fix(r: float, alpha: float, h: float):
    """Cartesian array-frame fix from (r, alpha, h).

    Returns ``(P, clamped)``; ``clamped`` flags noise driving ``r < |h|``.
    """
    d2 = r * r - h * h
    clamped = d2 < 0
    rho = np.sqrt(max(d2, 0.0))
    return np.array([rho * np.cos(alpha), rho * np.sin(alpha), h]), bool(clamped)


def default_initial_covariance(imu: ImuErrorSpec, pos_sigma: float = 1.0, vel_sigma: float = 0.1,
                               att_sigma_deg=(0.1, 0.1, 0.5), misalign_sigma_deg: float = 0.2,
                               range_scale_sigma: float = 2e-3, depth_bias_sigma: float = 0.2) -> np.ndarray:
    s = np.zeros(K.N_ERR)
    s[0:3] = pos_sigma
    s[3:6] = vel_sigma
    s[6:9] = np.radians(att_sigma_deg)
    s[9:12] = np.broadcast_to(imu.gyro_bias, (3,))
    s[12:15] = np.broadcast_to(imu.accel_bias, (3,))
    s[15:18] = np.broadcast_to(imu.gyro_scale, (3,)) * 1e-6
    s[18:21] = np.broadcast_to(imu.accel_scale, (3,)) * 1e-6
    s[21:24] = np.radians(misalign_sigma_deg)
    s[24] = range_scale_sigma
    s[25] = depth_bias_sigma
    return np.diag(np.abs(s) ** 2)


def process_noise_for(imu: ImuErrorSpec, drift_fraction: float = 0.1,
                      horizon: float = 3600.0) -> ProcessNoiseSpec:
    """White-noise densities plus slow random walks on the sensor errors.

    The random walks let each constant error wander by ``drift_fraction`` of
    its specified magnitude over ``horizon`` seconds.
    """
    def rw(x):
        return float(np.max(np.abs(x))) * drift_fraction / np.sqrt(horizon)
    return ProcessNoiseSpec(vrw=imu.accel_vrw, arw=imu.gyro_arw,
                            gyro_bias_rw=rw(imu.gyro_bias), accel_bias_rw=rw(imu.accel_bias),
                            gyro_scale_rw=rw(imu.gyro_scale) * 1e-6,
                            accel_scale_rw=rw(imu.accel_scale) * 1e-6)


class FusionMode(str, enum.Enum):
    COMPENSATE = "compensate"
    NAIVE = "naive"
    ORACLE = "oracle"


@dataclass
class DiagnosticRecord:
    t4: float
    t1: float
    delta_t: float
    z: np.ndarray
    accepted: bool
    nees: float


@dataclass
class _Pending:
    key: tuple
    pos: tuple
    fix: AcousticFix
    depth: float | None


@dataclass
class FilterOutput:
    """Real-time estimates sampled on the output grid."""

    t: np.ndarray
    nav: np.ndarray
    P: np.ndarray
    diagnostics: list
    rejected: int = 0
    underruns: int = 0

    @property
    def trace_p(self) -> np.ndarray:
        return np.trace(self.P, axis1=1, axis2=2)


class FusionFilter:
    """Closed-loop error-state filter over a recorded IMU stream.

    Parameters
    ----------
    imu : ImuIncrements
        Measured increments; the filter time axis is ``imu.t0 + k * imu.dt``.
    nav0 : NavState
        Initial estimate at ``imu.t0``.
    P0 : ndarray
        Initial 26x26 covariance.
    mode : FusionMode
        How delivered fixes are applied (see module docstring).
    grid_stride : int
        IMU samples between covariance-propagation and snapshot epochs.
    buffer_seconds : float
        Snapshot history length; fixes older than this raise
        :class:`BufferUnderrun`.
    gate_sigma : float or None
        Reject updates whose normalized innovation exceeds this on any row.
    """

    def __init__(self, imu: ImuIncrements, nav0: NavState, P0, process_noise: ProcessNoiseSpec,
                 calib: CalibrationSet, noise: MeasurementNoise, depth: DepthSeries | None = None,
                 mode: FusionMode = FusionMode.COMPENSATE, earth: EarthModel = WGS84,
                 grid_stride: int = 20, buffer_seconds: float = 5.0,
                 gate_sigma: float | None = None, trace_ceiling: float = 1e12):
        if grid_stride < 1:
            raise ValueError("grid_stride must be >= 1")
        self.imu = imu
        self.calib = calib
        self.noise = noise
        self.depth = depth
        self.mode = FusionMode(mode)
        self.earth = earth
        self.stride = int(grid_stride)
        self.buffer_seconds = float(buffer_seconds)
        self.gate_sigma = gate_sigma
        self.trace_ceiling = trace_ceiling
        self._Qc = process_noise.continuous()
        self._dth = np.ascontiguousarray(imu.dtheta)
        self._dv = np.ascontiguousarray(imu.dvel)
        self.nav = nav0.to_vector()
        self.P = np.array(P0, dtype=float)
        self.pos = (0, 0.0)
        self._snaps = [(self.pos, self.nav.copy(), self.P.copy())]
        self._history: list = []
        self._seq = 0
        self.diagnostics: list[DiagnosticRecord] = []
        self.rejected = 0
        self.underruns = 0

    # time axis -------------------------------------------------------------

    def time_of(self, pos) -> float:
        return self.imu.t0 + (pos[0] + pos[1]) * self.imu.dt

    def pos_of(self, t: float):
        x = (t - self.imu.t0) / self.imu.dt
        k = int(np.floor(x))
        f = x - k
        if f < 1e-9:
            f = 0.0
        elif f > 1.0 - 1e-9:
            k, f = k + 1, 0.0
        if k < 0 or (k, f) > (len(self.imu), 0.0):
            raise ValueError(f"time {t} outside the IMU record")
        return (k, f)

    @property
    def time(self) -> float:
        return self.time_of(self.pos)

    def state(self):
        """Current committed ``(NavState, ErrorState26)``."""
        return (NavState.from_vector(self.time, self.nav),
                ErrorState26(np.zeros(K.N_ERR), self.P.copy()))

    @property
    def snapshots(self) -> list[StateSnapshot]:
        return [StateSnapshot(self.time_of(p), NavState.from_vector(self.time_of(p), v),
                              ErrorState26(np.zeros(K.N_ERR), P.copy()), p[0])
                for p, v, P in self._snaps]

    # propagation -----------------------------------------------------------

    def _advance(self, target) -> None:
        ep = self.earth.params
        while self.pos < target:
            k, f = self.pos
            g = (k // self.stride + 1) * self.stride
            end = min(target, (g, 0.0))
            start = self.nav.copy()
            acc = np.zeros(7)
            K.mech_span(self.nav, self._dth, self._dv, self.imu.dt, k, f, end[0], end[1], ep, acc)
            self.P = K.propagate_cov(self.P, start, acc, self._Qc, ep)
            self.pos = end
            if end[1] == 0.0 and end[0] % self.stride == 0:
                self._snaps.append((end, self.nav.copy(), self.P.copy()))
        tr = np.trace(self.P)
        if not tr <= self.trace_ceiling:
            raise CovarianceBlowup(f"trace(P) = {tr:.3g} exceeds {self.trace_ceiling:.3g}")

    def _prune(self) -> None:
        horizon = self.time - self.buffer_seconds
        i = 0
        while i + 1 < len(self._snaps) and self.time_of(self._snaps[i + 1][0]) <= horizon:
            i += 1
        if i:
            del self._snaps[:i]
        oldest = self._snaps[0][0]
        self._history = [m for m in self._history if m.pos >= oldest]

    def advance_to(self, t: float) -> None:
        """Propagate the committed state forward to time ``t``."""
        target = self.pos_of(t)
        if target < self.pos:
            raise ValueError("cannot advance backwards")
        self._advance(target)
        self._prune()

    # measurement update ----------------------------------------------------

    def _update(self, m: _Pending, log: bool) -> None:
        v = self.nav
        obs = _observe(v, self.calib, self.earth, strict=False)
        H = _assemble(v, obs, self.calib, self.earth)
        z = innovation(obs, m.fix, m.depth)
        R = self.noise.matrix(obs.r)
        rows = [i for i in range(3) if np.isfinite(z[i]) and not (i == 1 and obs.zenith)]
        H, R, zz = H[rows], R[np.ix_(rows, rows)], z[rows]
        S = H @ self.P @ H.T + R
        nees = float(zz @ np.linalg.solve(S, zz))
        accepted = True
        if self.gate_sigma is not None and np.any(np.abs(zz) > self.gate_sigma * np.sqrt(np.diag(S))):
            accepted = False
        if accepted:
            dx, self.P, _ = _kalman(self.P, H, R, zz)
            correct_vector(self.nav, dx, self.earth)
        if log:
            if not accepted:
                self.rejected += 1
            self.diagnostics.append(DiagnosticRecord(m.fix.t4, m.fix.t1, m.fix.t4 - m.fix.t1,
                                                     z, accepted, nees))

    def _depth_for(self, fix: AcousticFix):
        if self.depth is None:
            return None
        if self.mode is FusionMode.NAIVE:
            s = self.depth.nearest(fix.t4, 0.1, causal=True)
        else:
            s = self.depth.interpolate(reconstruct_timestamp(fix), 0.1)
        return None if s is None else s[1]

    def deliver(self, fix: AcousticFix) -> None:
        """Hand a fix to the filter at the current committed time."""
        if self.mode is FusionMode.NAIVE:
            t_apply = max(fix.t4, self.time)
        else:
            t_apply = reconstruct_timestamp(fix)
        pos = self.pos_of(t_apply)
        self._seq += 1
        m = _Pending((pos, self._seq), pos, fix, self._depth_for(fix))
        if pos >= self.pos:
            self._advance(pos)
            self._update(m, log=True)
            self._history.append(m)
        else:
            self._replay(m)
        self._prune()

    def delayed_update(self, fix: AcousticFix):
        """Apply a late fix at its arrival epoch and return the current state."""
        self.deliver(fix)
        return self.state()

    def _replay(self, m: _Pending) -> None:
        if m.pos < self._snaps[0][0]:
            self.underruns += 1
            raise BufferUnderrun(f"fix at t1={m.fix.t1:.3f} predates the snapshot buffer")
        i = len(self._snaps) - 1
        while self._snaps[i][0] > m.pos:
            i -= 1
        spos, snav, sP = self._snaps[i]
        target = self.pos
        del self._snaps[i + 1:]
        self.nav, self.P, self.pos = snav.copy(), sP.copy(), spos
        insort(self._history, m, key=lambda h: h.key)
        for h in self._history:
            if h.pos < spos:
                continue
            self._advance(h.pos)
            self._update(h, log=h is m)
        self._advance(target)

    # driver ----------------------------------------------------------------

    def run(self, fixes, output_period: float = 1.0, until: float | None = None) -> FilterOutput:
        """Process a list of fixes and sample the real-time solution.

        Fixes are delivered at ``t4`` (``t1`` in oracle mode).  Outputs are
        taken on the grid every ``output_period`` seconds, after all
        deliveries up to that epoch.
        """
        t_end = self.imu.t_end if until is None else min(until, self.imu.t_end)
        key = (lambda f: f.t1) if self.mode is FusionMode.ORACLE else (lambda f: f.t4)
        queue = sorted((f for f in fixes if key(f) <= t_end), key=key)
        out_stride = max(1, int(round(output_period / (self.imu.dt * self.stride))))
        last = self.pos_of(t_end)[0] // self.stride
        ts, navs, Ps = [], [], []
        j = 0
        for g in range(self.pos[0] // self.stride + 1, last + 1):
            tg = self.time_of((g * self.stride, 0.0))
            while j < len(queue) and key(queue[j]) <= tg:
                try:
                    self.deliver(queue[j])
                except BufferUnderrun:
                    pass
                j += 1
            self._advance((g * self.stride, 0.0))
            self._prune()
            if g % out_stride == 0:
                ts.append(tg)
                navs.append(self.nav.copy())
                Ps.append(self.P.copy())
        return FilterOutput(np.array(ts), np.array(navs).reshape(-1, K.NAV_LEN),
                            np.array(Ps).reshape(-1, K.N_ERR, K.N_ERR),
                            self.diagnostics, self.rejected, self.underruns)


def delayed_update(filt: FusionFilter, fix: AcousticFix):
    """Functional form of :meth:`FusionFilter.delayed_update`."""
    return filt.delayed_update(fix)


def write_diagnostics_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DIAG_CSV_HEADER)
        for d in records:
            w.writerow([*(repr(float(x)) for x in (d.t4, d.t1, d.delta_t, *d.z)),
                        int(d.accepted), repr(float(d.nees))])
