"""Finite-difference checks of the measurement Jacobians."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .fusion import (CalibrationSet, assemble_H, hc_print_diff, jac_Ha, jac_Hb, jac_Hc,
                     predict_observation)
from .geo import WGS84, EarthModel, GeodeticPosition, dcm_e_to_n, euler_to_dcm, geodetic_to_ecef, wrap_to_pi
from .ins import N_STATES, NavState, inject_error

TOLERANCES = {"Ha": 1e-6, "Hb": 1e-5, "Hc": 1e-6, "H": 1e-4}

# central-difference steps per error channel (m, m/s, rad, rad/s, m/s^2, -, -, rad, -, m)
_STEPS = np.r_[[0.05] * 3, [1e-3] * 3, [1e-5] * 3, [1e-6] * 3, [1e-4] * 3,
               [1e-6] * 6, [1e-5] * 3, 1e-6, 1e-3]


@dataclass
class JacobianReport:
    """Worst relative error per block over all sampled states."""

    samples: int
    max_error: dict
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCES))
    unfrozen_radii_error: float = float("nan")
    printed_hc_max_diff: float = float("nan")

    @property
    def passed(self) -> bool:
        return all(self.max_error[k] < self.tolerances[k] for k in self.tolerances)

    def lines(self) -> list[str]:
        out = [f"{k:>3}: max rel err {self.max_error[k]:.3e}  tol {self.tolerances[k]:.0e}  "
               f"{'PASS' if self.max_error[k] < self.tolerances[k] else 'FAIL'}"
               for k in self.tolerances]
        out.append(f"end-to-end with latitude-dependent radii: {self.unfrozen_radii_error:.3e} (informational)")
        out.append(f"printed H_c form, max |diff|: {self.printed_hc_max_diff:.3e} (informational)")
        return out


def random_geometry(rng: np.random.Generator, earth: EarthModel = WGS84):
    """A random navigation state and installation with a well-posed azimuth."""
    while True:
        pos = GeodeticPosition(np.radians(rng.uniform(-70, 70)), np.radians(rng.uniform(-180, 180)),
                               -rng.uniform(0, 1000))
        cbn = euler_to_dcm(*np.radians([rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(-180, 180)]))
        nav = NavState(0.0, pos, rng.normal(0, 2, 3), cbn,
                       misalign_est=rng.normal(0, np.radians(1.0), 3),
                       range_scale_est=float(rng.normal(0, 1e-3)),
                       depth_bias_est=float(rng.normal(0, 0.5)))
        dn, de = rng.uniform(-1000, 1000, 2)
        rm, rn = K.radii(pos.lat, earth.params)
        beacon = GeodeticPosition(pos.lat + dn / (rm + pos.alt),
                                  pos.lon + de / ((rn + pos.alt) * np.cos(pos.lat)), rng.uniform(-50, 0))
        euler = np.radians(rng.normal(0, 2, 3))
        calib = CalibrationSet(beacon, rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3), euler_to_dcm(*euler))
        obs = predict_observation(nav, calib, earth, strict=False)
        if np.hypot(obs.p_u[0], obs.p_u[1]) > 0.05 * obs.rho:
            return nav, calib


def _rel(a, b, floor: float = 1e-12) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), floor))


def _fd(f, x, steps):
    cols = []
    for i, h in enumerate(steps):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((f(x + e) - f(x - e)) / (2 * h))
    return np.column_stack(cols)


def check_Ha(p_u) -> float:
    def f(p):
        return np.array([np.linalg.norm(p), np.arctan2(p[1], p[0])])
    p = np.asarray(p_u, dtype=float)
    fd = _fd(f, p, np.full(3, 1e-5 * np.linalg.norm(p)))
    return _rel(jac_Ha(p), fd)


def check_Hb(pos, earth: EarthModel = WGS84) -> float:
    x = np.asarray(pos, dtype=float)
    radii = K.radii(x[0], earth.params)
    fd = _fd(lambda p: geodetic_to_ecef(p, earth, radii=radii), x, [1e-7, 1e-7, 1e-2])
    return _rel(jac_Hb(x, earth), fd)


def check_Hc(pos, p_bt_e) -> float:
    x = np.asarray(pos, dtype=float)
    fd = _fd(lambda p: dcm_e_to_n(p[0], p[1]) @ p_bt_e, x, [1e-7, 1e-7, 1.0])
    return _rel(jac_Hc(x, p_bt_e), fd)


def end_to_end_columns(nav: NavState, calib: CalibrationSet, earth: EarthModel = WGS84,
                       freeze_radii: bool = True) -> np.ndarray:
    """Directional derivatives of the predicted (r, alpha, h) along each error channel."""
    radii = K.radii(nav.pos.lat, earth.params) if freeze_radii else None

    def pred(dx):
        o = predict_observation(inject_error(nav, dx, earth), calib, earth, radii=radii)
        return np.array([o.r, o.alpha, o.h])

    cols = np.zeros((3, N_STATES))
    for i, h in enumerate(_STEPS):
        e = np.zeros(N_STATES)
        e[i] = h
        d = pred(e) - pred(-e)
        d[1] = wrap_to_pi(d[1])
        cols[:, i] = d / (2 * h)
    return cols


def check_H(nav: NavState, calib: CalibrationSet, earth: EarthModel = WGS84,
            freeze_radii: bool = True) -> float:
    """Worst per-channel relative error of :func:`assemble_H`.

    The azimuth row is scaled by the horizontal range so all rows are in
    metres; channels with an identically zero column are compared absolutely.
    """
    H = assemble_H(nav, calib, earth)
    fd = end_to_end_columns(nav, calib, earth, freeze_radii)
    obs = predict_observation(nav, calib, earth)
    w = np.array([1.0, obs.rho, 1.0])[:, None]
    H, fd = w * H, w * fd
    worst = 0.0
    for i in range(N_STATES):
        worst = max(worst, _rel(fd[:, i], H[:, i], floor=1.0))
    return worst


def jacobian_check(samples: int = 100, seed: int = 0, earth: EarthModel = WGS84) -> JacobianReport:
    """Run every Jacobian oracle over ``samples`` random geometries."""
    rng = np.random.default_rng(seed)
    worst = dict.fromkeys(TOLERANCES, 0.0)
    unfrozen = 0.0
    printed = 0.0
    for _ in range(samples):
        nav, calib = random_geometry(rng, earth)
        pos = nav.pos.as_array()
        obs = predict_observation(nav, calib, earth)
        worst["Ha"] = max(worst["Ha"], check_Ha(obs.p_u))
        worst["Hb"] = max(worst["Hb"], check_Hb(pos, earth))
        worst["Hc"] = max(worst["Hc"], check_Hc(pos, obs.p_bt_e))
        worst["H"] = max(worst["H"], check_H(nav, calib, earth))
        unfrozen = max(unfrozen, check_H(nav, calib, earth, freeze_radii=False))
        printed = max(printed, float(np.abs(hc_print_diff(pos, obs.p_bt_e)).max()))
    return JacobianReport(samples, worst, unfrozen_radii_error=unfrozen, printed_hc_max_diff=printed)
