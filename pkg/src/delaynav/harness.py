"""Scenario configuration, Monte Carlo orchestration and metrics."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import sensors as S
from .exceptions import ConfigError, EmptyOverlap
from .fusion import (CalibrationSet, FusionFilter, FusionMode, MeasurementNoise,
                     default_initial_covariance, process_noise_for)
from .geo import WGS84, EarthModel, GeodeticPosition, dr, euler_to_dcm, radii_of_curvature, rotvec_to_dcm
from .ins import NavState, inject_error
from .trajectory import HelixParams, Trajectory, generate_helix, read_trajectory_csv

SCHEMA = 1
VARIANTS = {
    "USBL": (S.DelayKind.USBL, FusionMode.NAIVE),
    "iUSBL": (S.DelayKind.IUSBL, FusionMode.NAIVE),
    "piUSBL": (S.DelayKind.PIUSBL, FusionMode.NAIVE),
    "piUSBL+comp": (S.DelayKind.PIUSBL, FusionMode.COMPENSATE),
    "piUSBL+oracle": (S.DelayKind.PIUSBL, FusionMode.ORACLE),
}


def _section_defaults():
    return {
        "trajectory": {
            "start_lat_deg": 30.0, "start_lon_deg": 120.0, "start_alt_m": 0.0,
            "pitch_deg": -15.0, "target_speed_mps": 6.0 * 1852.0 / 3600.0,
            "final_depth_m": 470.0, "turn_radius_m": 150.0, "turn_rate_dps": None,
            "accel_duration_s": 60.0, "heading_deg": 0.0, "duration_s": None,
            "imu_rate_hz": 200.0, "csv_path": None,
        },
        "imu": {
            "gyro_bias_deg_per_h": 0.01, "gyro_arw_deg_per_sqrt_h": 0.01, "gyro_scale_ppm": 50.0,
            "accel_bias_ug": 50.0, "accel_vrw_mps_per_sqrt_h": 0.01, "accel_scale_ppm": 100.0,
        },
        "acoustic": {
            "azimuth_sigma_deg": 0.1, "range_scale_sigma_frac": 1e-3, "range_noise_floor_m": 0.0,
            "fix_rate_hz": 1.0, "sound_speed_mps": 1500.0, "signal_length_s": 0.020,
            "sampling_window_s": 0.45, "processing_delay_s": 0.010, "processing_jitter_s": 0.004,
            "usbl_comm_tof_factor": 1.0, "usbl_handshake_s": 0.5,
        },
        "depth": {"sigma_m": 0.1, "rate_hz": 10.0},
        "calib": {
            "beacon_north_m": 250.0, "beacon_east_m": 250.0, "beacon_alt_m": 0.0,
            "lever_bu_m": [0.0, 0.0, 0.0], "lever_bd_m": [0.0, 0.0, 0.0],
            "c_bu_nominal_euler_deg": [0.0, 0.0, 0.0],
        },
        "truth_errors": {
            "misalign_sigma_deg": 0.1, "range_scale_sigma_frac": 1e-3, "depth_bias_sigma_m": 0.1,
            "initial_error": True, "init_pos_sigma_m": 0.3, "init_vel_sigma_mps": 0.01,
            "init_att_sigma_deg": [0.005, 0.005, 0.02],
        },
        "filter": {
            "grid_stride": 20, "buffer_s": 5.0, "gate_sigma": None, "output_period_s": 1.0,
            "range_floor_m": 0.01, "azimuth_floor_deg": 0.01, "depth_floor_m": 0.01,
            "pos_sigma_m": 1.0, "vel_sigma_mps": 0.1, "att_sigma_deg": [0.1, 0.1, 0.5],
            "misalign_sigma_deg": 0.2, "range_scale_sigma_frac": 2e-3, "depth_bias_sigma_m": 0.2,
        },
    }


@dataclass
class ScenarioConfig:
    """Declarative scenario.  Units are explicit in every field name."""

    trajectory: dict
    imu: dict
    acoustic: dict
    depth: dict
    calib: dict
    truth_errors: dict
    filter: dict
    variants: list = field(default_factory=lambda: ["USBL", "iUSBL", "piUSBL", "piUSBL+comp"])
    runs: int = 50
    seed: int = 1
    schema: int = SCHEMA

    def __post_init__(self):
        self.validate()

    @classmethod
    def paper(cls, **overrides) -> "ScenarioConfig":
        """Helical-descent scenario with the navigation-grade IMU."""
        return cls.from_dict(overrides)

    @classmethod
    def noiseless(cls, **overrides) -> "ScenarioConfig":
        """All sensor and initial errors zeroed; filter noise floors only."""
        base = {
            "imu": {k: 0.0 for k in _section_defaults()["imu"]},
            "acoustic": {"azimuth_sigma_deg": 0.0, "range_scale_sigma_frac": 0.0,
                         "processing_jitter_s": 0.0},
            "depth": {"sigma_m": 0.0},
            "truth_errors": {"misalign_sigma_deg": 0.0, "range_scale_sigma_frac": 0.0,
                             "depth_bias_sigma_m": 0.0, "initial_error": False},
            "runs": 1,
        }
        for k, v in overrides.items():
            if isinstance(v, dict) and isinstance(base.get(k), dict):
                base[k] = {**base[k], **v}
            else:
                base[k] = v
        return cls.from_dict(base)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        errors = {}
        schema = d.get("schema", SCHEMA)
        if schema != SCHEMA:
            errors["schema"] = f"unsupported schema {schema!r}; expected {SCHEMA}"
        defaults = _section_defaults()
        sections = {}
        for name, dflt in defaults.items():
            given = d.get(name, {})
            if not isinstance(given, dict):
                errors[name] = "must be an object"
                continue
            for k in given:
                if k not in dflt:
                    errors[f"{name}.{k}"] = "unknown field"
            sections[name] = {**dflt, **given}
        known = set(defaults) | {"variants", "runs", "seed", "schema"}
        for k in d:
            if k not in known:
                errors[k] = "unknown field"
        if errors:
            raise ConfigError(errors)
        return cls(**sections, variants=list(d.get("variants", ["USBL", "iUSBL", "piUSBL", "piUSBL+comp"])),
                   runs=d.get("runs", 50), seed=d.get("seed", 1), schema=schema)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except OSError as exc:
            raise ConfigError({"path": f"cannot read {path}: {exc.strerror}"}) from exc
        except json.JSONDecodeError as exc:
            raise ConfigError({"path": f"invalid JSON: {exc}"}) from exc
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return asdict(self)

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    def validate(self) -> None:
        e = {}
        if not isinstance(self.runs, int) or isinstance(self.runs, bool) or self.runs < 1:
            e["runs"] = "must be an integer >= 1"
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            e["seed"] = "must be a non-negative integer"
        if not self.variants:
            e["variants"] = "must list at least one variant"
        for v in self.variants:
            if v not in VARIANTS:
                e["variants"] = f"unknown variant {v!r}; choose from {sorted(VARIANTS)}"

        def num(sec, key, lo=None, strict=False, optional=False):
            val = getattr(self, sec).get(key)
            if val is None and optional:
                return
            if not isinstance(val, (int, float)) or isinstance(val, bool) or not np.isfinite(val):
                e[f"{sec}.{key}"] = "must be a finite number"
            elif lo is not None and (val <= lo if strict else val < lo):
                e[f"{sec}.{key}"] = f"must be {'>' if strict else '>='} {lo}"

        tr = self.trajectory
        if tr.get("csv_path") is None:
            num("trajectory", "start_lat_deg")
            if isinstance(tr.get("start_lat_deg"), (int, float)) and abs(tr["start_lat_deg"]) >= 90:
                e["trajectory.start_lat_deg"] = "must lie strictly inside (-90, 90)"
            num("trajectory", "start_lon_deg")
            num("trajectory", "start_alt_m")
            num("trajectory", "pitch_deg")
            num("trajectory", "target_speed_mps", 0.0)
            num("trajectory", "final_depth_m", 0.0, strict=True)
            num("trajectory", "turn_radius_m", 0.0, strict=True)
            num("trajectory", "turn_rate_dps", optional=True)
            num("trajectory", "accel_duration_s", 0.0)
            num("trajectory", "heading_deg")
            num("trajectory", "duration_s", 0.0, strict=True, optional=True)
            num("trajectory", "imu_rate_hz", 0.0, strict=True)
        for k in self.imu:
            num("imu", k, 0.0)
        for k in self.acoustic:
            num("acoustic", k, 0.0)
        for k in ("fix_rate_hz", "sound_speed_mps"):
            num("acoustic", k, 0.0, strict=True)
        a = self.acoustic
        if all(isinstance(a.get(k), (int, float)) for k in ("sampling_window_s", "signal_length_s")):
            if not a["sampling_window_s"] > a["signal_length_s"]:
                e["acoustic.sampling_window_s"] = "must exceed signal_length_s"
        num("depth", "sigma_m", 0.0)
        num("depth", "rate_hz", 0.0, strict=True)
        for k in ("beacon_north_m", "beacon_east_m", "beacon_alt_m"):
            num("calib", k)
        for k in ("lever_bu_m", "lever_bd_m", "c_bu_nominal_euler_deg"):
            val = self.calib.get(k)
            if not (isinstance(val, (list, tuple)) and len(val) == 3
                    and all(isinstance(x, (int, float)) for x in val)):
                e[f"calib.{k}"] = "must be a list of three numbers"
        for k in ("misalign_sigma_deg", "range_scale_sigma_frac", "depth_bias_sigma_m",
                  "init_pos_sigma_m", "init_vel_sigma_mps"):
            num("truth_errors", k, 0.0)
        if not isinstance(self.truth_errors.get("initial_error"), bool):
            e["truth_errors.initial_error"] = "must be true or false"
        for sec, k in (("truth_errors", "init_att_sigma_deg"), ("filter", "att_sigma_deg")):
            val = getattr(self, sec).get(k)
            if not (isinstance(val, (list, tuple)) and len(val) == 3
                    and all(isinstance(x, (int, float)) and x >= 0 for x in val)):
                e[f"{sec}.{k}"] = "must be a list of three non-negative numbers"
        f = self.filter
        if not isinstance(f.get("grid_stride"), int) or f["grid_stride"] < 1:
            e["filter.grid_stride"] = "must be an integer >= 1"
        num("filter", "buffer_s", 0.0, strict=True)
        num("filter", "gate_sigma", 0.0, strict=True, optional=True)
        num("filter", "output_period_s", 0.0, strict=True)
        for k in ("range_floor_m", "azimuth_floor_deg", "depth_floor_m"):
            num("filter", k, 0.0, strict=True)
        if e:
            raise ConfigError(e)

    # builders -----------------------------------------------------------------

    def helix_params(self) -> HelixParams:
        t = self.trajectory
        return HelixParams(
            start=GeodeticPosition.from_degrees(t["start_lat_deg"], t["start_lon_deg"], t["start_alt_m"]),
            pitch=np.radians(t["pitch_deg"]), target_speed=float(t["target_speed_mps"]),
            final_depth=float(t["final_depth_m"]),
            turn_rate=None if t["turn_rate_dps"] is None else np.radians(t["turn_rate_dps"]),
            accel_duration=float(t["accel_duration_s"]), imu_rate=float(t["imu_rate_hz"]),
            heading=np.radians(t["heading_deg"]), duration=t["duration_s"],
            radius=float(t["turn_radius_m"]))

    def imu_spec(self) -> S.ImuErrorSpec:
        i = self.imu
        return S.ImuErrorSpec(gyro_bias=i["gyro_bias_deg_per_h"] * S.DEG_PER_HOUR,
                              gyro_arw=i["gyro_arw_deg_per_sqrt_h"] * S.DEG_PER_SQRT_HOUR,
                              gyro_scale=float(i["gyro_scale_ppm"]),
                              accel_bias=i["accel_bias_ug"] * S.MICRO_G,
                              accel_vrw=i["accel_vrw_mps_per_sqrt_h"] * S.MPS_PER_SQRT_HOUR,
                              accel_scale=float(i["accel_scale_ppm"]))

    def acoustic_spec(self) -> S.AcousticSpec:
        a = self.acoustic
        return S.AcousticSpec(azimuth_sigma=np.radians(a["azimuth_sigma_deg"]),
                              range_scale_sigma=a["range_scale_sigma_frac"],
                              range_noise_floor=a["range_noise_floor_m"], fix_rate=a["fix_rate_hz"],
                              sound_speed=a["sound_speed_mps"], signal_length=a["signal_length_s"],
                              sampling_window=a["sampling_window_s"],
                              processing_delay=a["processing_delay_s"],
                              processing_jitter=a["processing_jitter_s"],
                              usbl_comm_tof_factor=a["usbl_comm_tof_factor"],
                              usbl_handshake=a["usbl_handshake_s"])

    def calibration(self, start: GeodeticPosition, earth: EarthModel = WGS84) -> CalibrationSet:
        c = self.calib
        rm, rn = radii_of_curvature(start.lat, earth)
        beacon = GeodeticPosition(start.lat + c["beacon_north_m"] / (rm + start.alt),
                                  start.lon + c["beacon_east_m"] / ((rn + start.alt) * np.cos(start.lat)),
                                  c["beacon_alt_m"])
        return CalibrationSet(beacon, np.array(c["lever_bu_m"], float), np.array(c["lever_bd_m"], float),
                              euler_to_dcm(*np.radians(c["c_bu_nominal_euler_deg"])))

    def measurement_noise(self) -> MeasurementNoise:
        a, f = self.acoustic, self.filter
        return MeasurementNoise(range_scale_sigma=a["range_scale_sigma_frac"],
                                range_floor=float(np.hypot(a["range_noise_floor_m"], f["range_floor_m"])),
                                azimuth_sigma=np.radians(max(a["azimuth_sigma_deg"], f["azimuth_floor_deg"])),
                                depth_sigma=max(self.depth["sigma_m"], f["depth_floor_m"]))

    def initial_covariance(self) -> np.ndarray:
        f = self.filter
        return default_initial_covariance(self.imu_spec(), f["pos_sigma_m"], f["vel_sigma_mps"],
                                          tuple(f["att_sigma_deg"]), f["misalign_sigma_deg"],
                                          f["range_scale_sigma_frac"], f["depth_bias_sigma_m"])


@dataclass
class RunMetrics:
    """Position-error statistics of one run and variant (metres, seconds)."""

    rmse_n: float
    rmse_e: float
    rmse_d: float
    maxerr_n: float
    maxerr_e: float
    maxerr_d: float
    rmse_3d: float
    maxerr_3d: float
    delay_mean: float = float("nan")
    delay_min: float = float("nan")
    delay_max: float = float("nan")
    n_epochs: int = 0
    n_fixes: int = 0
    nees_mean: float = float("nan")

    def to_dict(self) -> dict:
        return {k: (None if isinstance(v, float) and np.isnan(v) else v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "RunMetrics":
        return cls(**{k: (float("nan") if v is None else v) for k, v in d.items()})


def ned_errors(est_llh, truth_llh, earth: EarthModel = WGS84) -> np.ndarray:
    """Per-epoch NED position error (estimate minus truth)."""
    est_llh = np.atleast_2d(est_llh)
    truth_llh = np.atleast_2d(truth_llh)
    d = est_llh - truth_llh
    d[:, 1] = (d[:, 1] + np.pi) % (2 * np.pi) - np.pi
    out = np.empty_like(d)
    for i, (p, dd) in enumerate(zip(truth_llh, d)):
        out[i] = dr(p[0], p[2], earth) @ dd
    return out


def compute_metrics(est_t, est_llh, truth_t, truth_llh, earth: EarthModel = WGS84) -> tuple[RunMetrics, np.ndarray, np.ndarray]:
    """Error statistics of ``est`` linearly interpolated to truth epochs.

    Returns ``(metrics, t, ned_errors)`` over the overlapping epochs.
    """
    est_t = np.asarray(est_t, float)
    truth_t = np.asarray(truth_t, float)
    est_llh = np.atleast_2d(np.asarray(est_llh, float))
    truth_llh = np.atleast_2d(np.asarray(truth_llh, float))
    if len(est_t) == 0 or len(truth_t) == 0:
        raise EmptyOverlap("empty series")
    tol = 1e-9
    mask = (truth_t >= est_t[0] - tol) & (truth_t <= est_t[-1] + tol)
    if not mask.any():
        raise EmptyOverlap("estimate and truth do not overlap in time")
    t = truth_t[mask]
    if len(est_t) == 1:
        est_i = np.repeat(est_llh, len(t), axis=0)
    else:
        lon = np.unwrap(est_llh[:, 1])
        est_i = np.column_stack([np.interp(t, est_t, est_llh[:, 0]), np.interp(t, est_t, lon),
                                 np.interp(t, est_t, est_llh[:, 2])])
    e = ned_errors(est_i, truth_llh[mask], earth)
    n3 = np.linalg.norm(e, axis=1)
    rm = np.sqrt(np.mean(e ** 2, axis=0))
    mx = np.max(np.abs(e), axis=0)
    m = RunMetrics(float(rm[0]), float(rm[1]), float(rm[2]), float(mx[0]), float(mx[1]), float(mx[2]),
                   float(np.sqrt(np.mean(n3 ** 2))), float(n3.max()), n_epochs=int(len(t)))
    return m, t, e


# simulation -------------------------------------------------------------------


@lru_cache(maxsize=4)
def _trajectory(key: str) -> Trajectory:
    cfg = ScenarioConfig.from_dict(json.loads(key))
    if cfg.trajectory["csv_path"]:
        return read_trajectory_csv(cfg.trajectory["csv_path"])
    return generate_helix(cfg.helix_params())


def scenario_trajectory(cfg: ScenarioConfig) -> Trajectory:
    key = json.dumps({"trajectory": cfg.trajectory}, sort_keys=True)
    return _trajectory(key)


def run_seed(cfg: ScenarioConfig, run: int) -> int:
    return int(np.random.SeedSequence([cfg.seed, run]).generate_state(1, dtype=np.uint64)[0] >> 1)


@dataclass
class RunInputs:
    """Everything a filter needs for one Monte Carlo run (shared by variants)."""

    traj: Trajectory
    imu: object
    fixes: list
    depth: S.DepthSeries
    calib: CalibrationSet
    nav0: NavState
    truth_errors: dict


def prepare_run(cfg: ScenarioConfig, run: int) -> RunInputs:
    traj = scenario_trajectory(cfg)
    seed = run_seed(cfg, run)
    earth = traj.earth
    start = GeodeticPosition.from_array(traj.pos[0])
    calib = cfg.calibration(start, earth)
    init = S.stream(seed, S.INIT)
    imu_true = cfg.imu_spec().realize(init)
    imu = S.corrupt_imu(traj.imu, imu_true, seed)
    te = cfg.truth_errors
    rng = S.stream(seed, S.TRUTH)
    theta = rng.standard_normal(3) * np.radians(te["misalign_sigma_deg"])
    dk = float(rng.standard_normal() * te["range_scale_sigma_frac"])
    hbias = float(rng.standard_normal() * te["depth_bias_sigma_m"])
    c_bu_true = rotvec_to_dcm(theta) @ calib.c_bu_nominal
    spec = cfg.acoustic_spec()
    fixes, _ = S.simulate_fixes(traj, spec, S.DelayKind.PIUSBL, seed, calib.beacon,
                                calib.lever_bu, c_bu_true, dk, earth)
    depth = S.depth_series(traj, cfg.depth["rate_hz"], cfg.depth["sigma_m"], calib.lever_bd, seed, hbias)
    truth0 = NavState(float(traj.t[0]), start, traj.vel[0].copy(), traj.cbn[0].copy())
    dx0 = np.zeros(26)
    if te["initial_error"]:
        sig = np.concatenate([np.full(3, te["init_pos_sigma_m"]), np.full(3, te["init_vel_sigma_mps"]),
                              np.radians(te["init_att_sigma_deg"])])
        dx0[0:9] = rng.standard_normal(9) * sig
    nav0 = inject_error(truth0, dx0, earth)
    return RunInputs(traj, imu, fixes, depth, calib, nav0,
                     {"misalign": theta, "range_scale": dk, "depth_bias": hbias,
                      "imu": imu_true})


@dataclass
class VariantRun:
    variant: str
    metrics: RunMetrics
    t: np.ndarray
    errors: np.ndarray
    delays: np.ndarray
    ranges: np.ndarray
    nees: np.ndarray
    trace_p: np.ndarray


def make_filter(cfg: ScenarioConfig, inputs: RunInputs, variant: str) -> tuple[FusionFilter, list]:
    """Filter and retimed fixes for one variant of a prepared run."""
    kind, mode = VARIANTS[variant]
    spec = cfg.acoustic_spec()
    fixes = [S.retime(f, kind, spec) for f in inputs.fixes]
    f = cfg.filter
    filt = FusionFilter(inputs.imu, inputs.nav0, cfg.initial_covariance(),
                        process_noise_for(cfg.imu_spec()), inputs.calib, cfg.measurement_noise(),
                        inputs.depth, mode, inputs.traj.earth, f["grid_stride"],
                        max(f["buffer_s"], 2.0 * spec.sampling_window), f["gate_sigma"])
    return filt, fixes


def run_variant(cfg: ScenarioConfig, inputs: RunInputs, variant: str) -> VariantRun:
    filt, fixes = make_filter(cfg, inputs, variant)
    out = filt.run(fixes, cfg.filter["output_period_s"])
    traj = inputs.traj
    k = np.rint((out.t - traj.t[0]) / traj.imu.dt).astype(int)
    m, t, e = compute_metrics(out.t, out.nav[:, 0:3], traj.t[k], traj.pos[k], traj.earth)
    nees = np.array([ei @ np.linalg.solve(P[0:3, 0:3], ei) for ei, P in zip(e, out.P)])
    delays = np.array([x.t4 - x.t1 for x in fixes])
    ranges = np.array([x.r for x in fixes])
    m.delay_mean = float(delays.mean()) if len(delays) else float("nan")
    m.delay_min = float(delays.min()) if len(delays) else float("nan")
    m.delay_max = float(delays.max()) if len(delays) else float("nan")
    m.n_fixes = len(fixes)
    m.nees_mean = float(nees.mean())
    return VariantRun(variant, m, t, e, delays, ranges, nees, out.trace_p)


def _one_run(args):
    cfg_dict, run = args
    cfg = ScenarioConfig.from_dict(cfg_dict)
    inputs = prepare_run(cfg, run)
    return run, {v: run_variant(cfg, inputs, v) for v in cfg.variants}


def max_workers() -> int:
    cap = os.environ.get("DELAYNAV_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ConfigError({"DELAYNAV_THREADS": f"not an integer: {cap!r}"}) from None
    return n


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    runs: list  # runs[i][variant] -> VariantRun

    def metrics(self, variant: str) -> list[RunMetrics]:
        return [r[variant].metrics for r in self.runs]

    def median(self, variant: str, key: str = "rmse_3d") -> float:
        return float(np.median([getattr(m, key) for m in self.metrics(variant)]))


def run_scenario(cfg: ScenarioConfig, runs: int | None = None, workers: int | None = None) -> ScenarioResult:
    """Run every variant on ``runs`` Monte Carlo draws.

    Within a run all variants share the truth trajectory, IMU record, fixes
    and depth samples; only the delivery timing and compensation differ.
    """
    n = cfg.runs if runs is None else runs
    if n < 1:
        raise ConfigError({"runs": "must be an integer >= 1"})
    workers = min(max_workers() if workers is None else workers, n)
    jobs = [(cfg.to_dict(), i) for i in range(n)]
    if workers <= 1:
        done = [_one_run(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            done = list(ex.map(_one_run, jobs))
    done.sort(key=lambda x: x[0])
    return ScenarioResult(cfg, [d[1] for d in done])


def metrics_document(result: ScenarioResult) -> dict:
    doc = {"schema": SCHEMA, "seed": result.config.seed, "runs": len(result.runs), "variants": {}}
    for v in result.config.variants:
        ms = result.metrics(v)
        doc["variants"][v] = {
            "median_rmse_3d": result.median(v),
            "median_maxerr_3d": result.median(v, "maxerr_3d"),
            "runs": [m.to_dict() for m in ms],
        }
    return doc


def emit_report(result: ScenarioResult, out_dir, run: int = 0) -> list[Path]:
    """Write ``metrics.json`` and per-variant error/delay CSVs for ``run``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = [out / "metrics.json"]
        written[0].write_text(json.dumps(metrics_document(result), indent=2, sort_keys=True))
        for v in result.config.variants:
            vr = result.runs[run][v]
            p = out / f"errors_{v}.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["t", "e_n", "e_e", "e_d"])
                for t, e in zip(vr.t, vr.errors):
                    w.writerow([repr(float(t)), *(repr(float(x)) for x in e)])
            written.append(p)
            p = out / f"delays_{v}.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["range", "delta_t"])
                for r, d in zip(vr.ranges, vr.delays):
                    w.writerow([repr(float(r)), repr(float(d))])
            written.append(p)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write report: {exc.strerror}", exc.filename) from exc
    return written


def load_metrics(path) -> dict:
    doc = json.loads(Path(path).read_text())
    for v in doc["variants"].values():
        v["runs"] = [RunMetrics.from_dict(m) for m in v["runs"]]
    return doc
