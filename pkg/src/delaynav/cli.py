"""Command line entry point: ``delaynav <command> ...``.

Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numerical
failure (including a failed Jacobian check).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import numpy as np

from .exceptions import ConfigError, DelayNavError

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def read_position_csv(path):
    """``(t, llh)`` from a CSV with ``t`` and latitude/longitude in degrees.

    Accepts both the trajectory export (``lat_deg, lon_deg, alt_m``) and the
    navigation export (``lat, lon, alt``).
    """
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError({path: "no data rows"})

    def col(*names):
        for n in names:
            if n in rows[0]:
                return np.array([float(r[n]) for r in rows])
        raise ConfigError({path: f"missing column {names[0]!r}"})

    t = col("t")
    llh = np.column_stack([np.radians(col("lat_deg", "lat")), np.radians(col("lon_deg", "lon")),
                           col("alt_m", "alt")])
    return t, llh


def _cmd_simulate(args) -> int:
    from .harness import ScenarioConfig, emit_report, run_scenario
    d = ScenarioConfig.load(args.config).to_dict()
    if args.runs is not None:
        d["runs"] = args.runs
    if args.seed is not None:
        d["seed"] = args.seed
    cfg = ScenarioConfig.from_dict(d)
    t0 = time.perf_counter()
    result = run_scenario(cfg)
    paths = emit_report(result, args.out)
    print(f"{cfg.runs} run(s) in {time.perf_counter() - t0:.1f} s")
    for v in cfg.variants:
        print(f"{v:>14}: median rmse_3d {result.median(v):8.3f} m   "
              f"median maxerr_3d {result.median(v, 'maxerr_3d'):8.3f} m")
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def _cmd_jacobian_check(args) -> int:
    from .checks import jacobian_check
    if args.samples < 1:
        raise ConfigError({"samples": "must be >= 1"})
    t0 = time.perf_counter()
    report = jacobian_check(args.samples, args.seed)
    for line in report.lines():
        print(line)
    print(f"{report.samples} states in {time.perf_counter() - t0:.2f} s: "
          f"{'PASS' if report.passed else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_NUMERIC


def _cmd_metrics(args) -> int:
    from .harness import compute_metrics
    est_t, est = read_position_csv(args.est)
    tru_t, tru = read_position_csv(args.truth)
    m, _, _ = compute_metrics(est_t, est, tru_t, tru)
    print(json.dumps(m.to_dict(), indent=2))
    return EXIT_OK


def _cmd_config(args) -> int:
    from .harness import ScenarioConfig
    cfg = ScenarioConfig.noiseless() if args.noiseless else ScenarioConfig.paper()
    cfg.dump(args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="delaynav", description="Delay-compensated acoustic/inertial navigation.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run the Monte Carlo scenario and write a report")
    s.add_argument("--config", required=True, help="scenario JSON")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--runs", type=int)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=_cmd_simulate)

    s = sub.add_parser("jacobian-check", help="finite-difference check of the measurement Jacobians")
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_cmd_jacobian_check)

    s = sub.add_parser("metrics", help="position error statistics of an estimate against truth")
    s.add_argument("--est", required=True, help="estimated positions CSV")
    s.add_argument("--truth", required=True, help="reference positions CSV")
    s.set_defaults(func=_cmd_metrics)

    s = sub.add_parser("config", help="write a default scenario JSON")
    s.add_argument("--out", required=True)
    s.add_argument("--noiseless", action="store_true")
    s.set_defaults(func=_cmd_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DelayNavError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
