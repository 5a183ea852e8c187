"""Compiled inner loops: strapdown mechanization, its exact inverse, and the
26-state error dynamics.

Everything here works on flat float64 arrays so that numba can compile it.
The public wrappers live in :mod:`delaynav.geo`, :mod:`delaynav.ins` and
:mod:`delaynav.trajectory`.

Earth parameter vector ``ep``::

    [a, e2, omega, g0, c1, c2, h1, h0, hh, paper_faithful]

with normal gravity ``g0*(1 + c1*s2 + c2*s2**2) + h*(h1*s2 - h0) + hh*h**2``.

Navigation vector layout (``NAV_LEN`` entries)::

    0:3   lat, lon, alt              rad, rad, m
    3:6   v_n, v_e, v_d              m/s
    6:15  C_b^n, row-major
    15:18 gyro bias estimate         rad/s
    18:21 accel bias estimate        m/s^2
    21:24 gyro scale estimate        fraction
    24:27 accel scale estimate       fraction
    27:30 array misalignment         rotation vector, rad
    30    range scale estimate       fraction
    31    depth-gauge bias estimate  m
"""

import numpy as np
from numba import njit

NAV_LEN = 32
N_ERR = 26

# error-state column offsets
P_ID, V_ID, PHI_ID, BG_ID, BA_ID, SG_ID, SA_ID, TH_ID, K_ID, DH_ID = (
    0, 3, 6, 9, 12, 15, 18, 21, 24, 25)


@njit(cache=True)
def radii(lat, ep):
    a, e2 = ep[0], ep[1]
    s = np.sin(lat)
    w = 1.0 - e2 * s * s
    rn = a / np.sqrt(w)
    rm = a * (1.0 - e2) / (w * np.sqrt(w))
    return rm, rn


@njit(cache=True)
def gravity(lat, h, ep):
    s2 = np.sin(lat) ** 2
    return (ep[3] * (1.0 + ep[4] * s2 + ep[5] * s2 * s2)
            + h * (ep[6] * s2 - ep[7]) + ep[8] * h * h)


@njit(cache=True)
def gravity_dh(lat, h, ep):
    s2 = np.sin(lat) ** 2
    return ep[6] * s2 - ep[7] + 2.0 * ep[8] * h


@njit(cache=True)
def gravity_dlat(lat, h, ep):
    s2 = np.sin(lat) ** 2
    ds2 = np.sin(2.0 * lat)
    return ep[3] * (ep[4] + 2.0 * ep[5] * s2) * ds2 + h * ep[6] * ds2


@njit(cache=True)
def skew3(v):
    m = np.zeros((3, 3))
    m[0, 1] = -v[2]
    m[0, 2] = v[1]
    m[1, 0] = v[2]
    m[1, 2] = -v[0]
    m[2, 0] = -v[1]
    m[2, 1] = v[0]
    return m


@njit(cache=True)
def cross3(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def rotvec_to_dcm(v):
    th2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
    k = skew3(v)
    if th2 < 1e-16:
        # series to third order avoids 0/0
        a = 1.0 - th2 / 6.0
        b = 0.5 - th2 / 24.0
    else:
        th = np.sqrt(th2)
        a = np.sin(th) / th
        b = (1.0 - np.cos(th)) / th2
    return np.eye(3) + a * k + b * (k @ k)


@njit(cache=True)
def dcm_to_rotvec(c):
    tr = c[0, 0] + c[1, 1] + c[2, 2]
    cos_th = min(1.0, max(-1.0, 0.5 * (tr - 1.0)))
    th = np.arccos(cos_th)
    w = np.empty(3)
    w[0] = c[2, 1] - c[1, 2]
    w[1] = c[0, 2] - c[2, 0]
    w[2] = c[1, 0] - c[0, 1]
    if th < 1e-6:
        return 0.5 * w * (1.0 + th * th / 6.0)
    if np.pi - th < 1e-6:
        # near pi: axis from the symmetric part
        m = 0.5 * (c + np.eye(3))
        i = 0
        if m[1, 1] > m[i, i]:
            i = 1
        if m[2, 2] > m[i, i]:
            i = 2
        axis = m[:, i] / np.sqrt(m[i, i])
        if axis @ w < 0.0:
            axis = -axis
        return th * axis / np.linalg.norm(axis)
    return 0.5 * th / np.sin(th) * w


@njit(cache=True)
def orthonormalize(c):
    return 0.5 * c @ (3.0 * np.eye(3) - c.T @ c)


@njit(cache=True)
def earth_and_transport(lat, h, v, ep):
    rm, rn = radii(lat, ep)
    we = ep[2]
    wie = np.array([we * np.cos(lat), 0.0, -we * np.sin(lat)])
    wen = np.array([v[1] / (rn + h), -v[0] / (rm + h),
                    -v[1] * np.tan(lat) / (rn + h)])
    return wie, wen, rm, rn


@njit(cache=True)
def position_step(pos, v_old, v_new, dt, ep):
    """Trapezoidal position update shared by mechanization and generator."""
    lat, lon, h = pos[0], pos[1], pos[2]
    rm, rn = radii(lat, ep)
    vn = 0.5 * (v_old[0] + v_new[0])
    ve = 0.5 * (v_old[1] + v_new[1])
    vd = 0.5 * (v_old[2] + v_new[2])
    h_new = h - vd * dt
    hm = 0.5 * (h + h_new)
    lat_new = lat + vn / (rm + hm) * dt
    latm = 0.5 * (lat + lat_new)
    lon_new = lon + ve / ((rn + hm) * np.cos(latm)) * dt
    out = np.empty(3)
    out[0] = lat_new
    out[1] = lon_new
    out[2] = h_new
    return out


@njit(cache=True)
def velocity_forcing(lat, h, v, ep):
    """Gravity minus Coriolis/centripetal terms, m/s^2."""
    wie, wen, rm, rn = earth_and_transport(lat, h, v, ep)
    g = np.array([0.0, 0.0, gravity(lat, h, ep)])
    return g - cross3(2.0 * wie + wen, v)


@njit(cache=True)
def mech_raw(nav, dth, dv, dt, ep):
    """One strapdown step with already-compensated increments (in place)."""
    lat, h = nav[0], nav[2]
    v = nav[3:6].copy()
    c = nav[6:15].copy().reshape(3, 3)
    wie, wen, rm, rn = earth_and_transport(lat, h, v, ep)
    dvb = dv + 0.5 * cross3(dth, dv)
    v_new = v + c @ dvb + velocity_forcing(lat, h, v, ep) * dt
    pos_new = position_step(nav[0:3], v, v_new, dt, ep)
    zeta = (wie + wen) * dt
    c_new = rotvec_to_dcm(-zeta) @ c @ rotvec_to_dcm(dth)
    c_new = orthonormalize(c_new)
    nav[0:3] = pos_new
    nav[3:6] = v_new
    nav[6:15] = c_new.reshape(9)


@njit(cache=True)
def compensate(nav, dth_raw, dv_raw, dt):
    dth = (dth_raw - nav[15:18] * dt) / (1.0 + nav[21:24])
    dv = (dv_raw - nav[18:21] * dt) / (1.0 + nav[24:27])
    return dth, dv


@njit(cache=True)
def mech_step(nav, dth_raw, dv_raw, dt, ep):
    dth, dv = compensate(nav, dth_raw, dv_raw, dt)
    mech_raw(nav, dth, dv, dt, ep)


@njit(cache=True)
def mech_span(nav, dtheta, dvel, dt, k0, f0, k1, f1, ep, acc):
    """Mechanize from sample position (k0, f0) to (k1, f1).

    Sample ``k`` covers the interval fraction [0, 1); a pair (k, f) denotes
    the instant ``f`` of the way through sample ``k``.  Partial samples are
    split linearly.  ``acc`` receives the summed raw increments
    (dtheta, dvel) and the elapsed time.
    """
    k = k0
    f = f0
    while k < k1 or (k == k1 and f < f1):
        end = 1.0 if k < k1 else f1
        frac = end - f
        th = dtheta[k] * frac
        dv = dvel[k] * frac
        tau = dt * frac
        mech_step(nav, th, dv, tau, ep)
        acc[0:3] += th
        acc[3:6] += dv
        acc[6] += tau
        if end >= 1.0:
            k += 1
            f = 0.0
        else:
            f = end


@njit(cache=True)
def inverse_mech(pos, vel, cbn, dt, ep):
    """Increments that make :func:`mech_raw` reproduce the given samples.

    ``vel`` and ``cbn`` are prescribed at every epoch; positions are
    integrated here with :func:`position_step` so the pair is exactly
    self-consistent.  ``pos`` must have its first row filled; the rest is
    overwritten.
    """
    n = vel.shape[0]
    dtheta = np.zeros((n - 1, 3))
    dvel = np.zeros((n - 1, 3))
    for k in range(n - 1):
        lat, h = pos[k, 0], pos[k, 2]
        v0 = vel[k]
        wie, wen, rm, rn = earth_and_transport(lat, h, v0, ep)
        zeta = (wie + wen) * dt
        rot_b = cbn[k].T @ rotvec_to_dcm(zeta) @ cbn[k + 1]
        th = dcm_to_rotvec(rot_b)
        u = cbn[k].T @ (vel[k + 1] - v0 - velocity_forcing(lat, h, v0, ep) * dt)
        a = np.eye(3) + 0.5 * skew3(th)
        dvel[k] = np.linalg.solve(a, u)
        dtheta[k] = th
        pos[k + 1] = position_step(pos[k], v0, vel[k + 1], dt, ep)
    return dtheta, dvel


@njit(cache=True)
def error_transition(nav, f_b, w_b, ep):
    """Continuous-time 26x26 error dynamics at ``nav``.

    Position/velocity/attitude errors are estimate minus truth (NED metres,
    m/s, phi with C_b^n_hat = (I - phi x) C_b^n); sensor error states are
    truth minus estimate so that the feedback adds them.
    """
    lat, h = nav[0], nav[2]
    vn, ve, vd = nav[3], nav[4], nav[5]
    c = nav[6:15].reshape(3, 3)
    rm, rn = radii(lat, ep)
    rmh = rm + h
    rnh = rn + h
    we = ep[2]
    sl = np.sin(lat)
    cl = np.cos(lat)
    tl = np.tan(lat)
    v = nav[3:6]
    wie = np.array([we * cl, 0.0, -we * sl])
    wen = np.array([ve / rnh, -vn / rmh, -ve * tl / rnh])

    F = np.zeros((N_ERR, N_ERR))
    # position
    F[0, 0] = -vd / rmh
    F[0, 2] = vn / rmh
    F[1, 0] = ve * tl / rnh
    F[1, 1] = -(vd + vn * tl) / rnh
    F[1, 2] = ve / rnh
    for i in range(3):
        F[P_ID + i, V_ID + i] = 1.0
    # velocity
    F[3, 0] = (-2.0 * ve * we * cl / rmh
               - ve * ve / (rmh * rnh * cl * cl))
    F[3, 2] = vn * vd / (rmh * rmh) - ve * ve * tl / (rnh * rnh)
    F[4, 0] = (2.0 * we * (vn * cl - vd * sl) / rmh
               + vn * ve / (rmh * rnh * cl * cl))
    F[4, 2] = (ve * vd + vn * ve * tl) / (rnh * rnh)
    F[5, 0] = 2.0 * we * ve * sl / rmh + gravity_dlat(lat, h, ep) / rmh
    F[5, 2] = (-ve * ve / (rnh * rnh) - vn * vn / (rmh * rmh)
               - gravity_dh(lat, h, ep))
    F[3, 3] = vd / rmh
    F[3, 4] = -2.0 * (we * sl + ve * tl / rnh)
    F[3, 5] = vn / rmh
    F[4, 3] = 2.0 * we * sl + ve * tl / rnh
    F[4, 4] = (vd + vn * tl) / rnh
    F[4, 5] = 2.0 * we * cl + ve / rnh
    F[5, 3] = -2.0 * vn / rmh
    F[5, 4] = -2.0 * (we * cl + ve / rnh)
    fn = c @ f_b
    F[V_ID:V_ID + 3, PHI_ID:PHI_ID + 3] = skew3(fn)
    F[V_ID:V_ID + 3, BA_ID:BA_ID + 3] = c
    F[V_ID:V_ID + 3, SA_ID:SA_ID + 3] = c * f_b  # C @ diag(f)
    # attitude
    F[6, 0] = -we * sl / rmh
    F[6, 2] = ve / (rnh * rnh)
    F[7, 2] = -vn / (rmh * rmh)
    F[8, 0] = -we * cl / rmh - ve / (rmh * rnh * cl * cl)
    F[8, 2] = -ve * tl / (rnh * rnh)
    F[6, 4] = 1.0 / rnh
    F[7, 3] = -1.0 / rmh
    F[8, 4] = -tl / rnh
    F[PHI_ID:PHI_ID + 3, PHI_ID:PHI_ID + 3] = -skew3(wie + wen)
    F[PHI_ID:PHI_ID + 3, BG_ID:BG_ID + 3] = -c
    F[PHI_ID:PHI_ID + 3, SG_ID:SG_ID + 3] = -(c * w_b)
    return F


@njit(cache=True)
def discretize(F, Qc, dt):
    n = F.shape[0]
    Fdt = F * dt
    phi = np.eye(n) + Fdt + 0.5 * (Fdt @ Fdt)
    qd = 0.5 * (phi @ Qc @ phi.T + Qc) * dt
    return phi, 0.5 * (qd + qd.T)


@njit(cache=True)
def propagate_cov(P, nav_start, acc, Qc, ep):
    """Propagate P over a segment using F at the segment start."""
    tau = acc[6]
    if tau <= 0.0:
        return P
    f_b = acc[3:6] / tau
    w_b = acc[0:3] / tau
    F = error_transition(nav_start, f_b, w_b, ep)
    phi, qd = discretize(F, Qc, tau)
    P = phi @ P @ phi.T + qd
    return 0.5 * (P + P.T)
