"""Command-line entry point.

Exit codes: 0 success, 2 usage error (bad flags, missing config file),
3 configuration validation failure, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, astuple
from pathlib import Path

from . import config as cfgmod
from .errors import ConfigError
from .mobility import calibrate, read_labelled_traces
from .power import analytic_curves
from .sim import RECORD_FIELDS, SWEEP_FIELDS, calibrate_default, run_replication, run_sweep

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3, 4
ANALYTIC_FIELDS = ("lambda", "v", "e_n_wlan", "e_n_gps", "e_p_wlan", "e_p_gps", "e_p_conventional")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(path, header, rows, config_sha: str, seed) -> None:
    """CSV with one ``#`` comment line (config hash and seed), a header row and the data rows."""
    buf = io.StringIO()
    buf.write(f"# config_sha256={config_sha} seed={seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wlan-discovery", description="Energy-aware WLAN discovery simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out=True):
        sp.add_argument("--config", default="default",
                        help=f"YAML file, a name in ${cfgmod.CONFIG_DIR_ENV}, or 'default'")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted override, e.g. thresholds.d1=15 (repeatable)")
        if out:
            sp.add_argument("--out", default="-", help="output path ('-' for stdout)")

    sp = sub.add_parser("run", help="one replication, per-scan CSV")
    common(sp)
    sp.add_argument("--scheme")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--density", type=float, help="total WAP density (WAPs/m^2)")

    sp = sub.add_parser("sweep", help="replicated density sweep, one row per (density, scheme)")
    common(sp)
    sp.add_argument("--lambdas", type=float, nargs="+")
    sp.add_argument("--schemes", nargs="+")
    sp.add_argument("--replications", type=int)
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("analytic", help="closed-form channel counts and power over a density grid")
    common(sp)
    sp.add_argument("--lambdas", type=float, nargs="+")
    sp.add_argument("--speeds", type=float, nargs="+")

    sp = sub.add_parser("calibrate-mobility", help="fit the estimator constants, write JSON")
    common(sp)
    sp.add_argument("--traces", help="labelled CSV (time_s,station_id,rssi_dbm,label); synthetic if omitted")
    sp.add_argument("--windows", type=int, default=500, help="window pairs per class for synthetic traces")
    sp.add_argument("--seed", type=int, default=2024)

    sp = sub.add_parser("validate-config", help="check a config file and print its hash")
    common(sp, out=False)
    return p


def _load(args):
    path = cfgmod.resolve_config_path(args.config)
    overrides = list(args.overrides)
    if getattr(args, "scheme", None):
        overrides.append(f"scheme={args.scheme}")
    if getattr(args, "seed", None) is not None and args.command in ("run", "sweep"):
        overrides.append(f"seed={args.seed}")
    if getattr(args, "density", None) is not None:
        overrides += [f"deployment.total_density={args.density}", "deployment.densities=null"]
    if getattr(args, "replications", None) is not None:
        overrides.append(f"replications={args.replications}")
    # list flags go through the config so they are covered by the config hash
    for flag, key in (("lambdas", "sweep.lambdas"), ("schemes", "sweep.schemes"), ("speeds", "analytic.speeds")):
        vals = getattr(args, flag, None)
        if vals:
            overrides.append(f"{key}=[{', '.join(map(str, vals))}]")
    raw = cfgmod.load_config(path, overrides)
    return raw, cfgmod.build_sim_config(raw)


def _run(args, raw, sim) -> None:
    records = run_replication(sim, sim.seed)
    write_csv(args.out, RECORD_FIELDS, (astuple(r) for r in records), cfgmod.config_hash(raw), sim.seed)


def _sweep(args, raw, sim) -> None:
    lambdas, schemes = cfgmod.sweep_settings(raw)
    report = run_sweep(sim, lambdas, schemes)
    write_csv(args.out, SWEEP_FIELDS, (astuple(r) for r in report.rows), cfgmod.config_hash(raw), sim.seed)


def _analytic(args, raw, sim) -> None:
    lambdas = [float(x) for x in raw["sweep"]["lambdas"]]
    speeds = [float(v) for v in raw["analytic"]["speeds"]]
    if any(lam < 0 for lam in lambdas) or any(v < 0 for v in speeds):
        raise ConfigError("densities and speeds must be non-negative")
    s = sim.scheme
    rows = analytic_curves(lambdas, speeds, len(s.channels), a=sim.a, b=sim.b, p_gps=sim.p_gps, t_s=s.t_s,
                           d_r=s.d_r, d_h=sim.d_h, d1=s.d1, d2=s.d2)
    write_csv(args.out, ANALYTIC_FIELDS, ([r[k] for k in ANALYTIC_FIELDS] for r in rows),
              cfgmod.config_hash(raw), sim.seed)


def _calibrate(args, raw, sim) -> None:
    if args.traces:
        traces = read_labelled_traces(args.traces)
        missing = {"static", "mobile"} - set(traces)
        if missing:
            raise ConfigError(f"{args.traces}: no {', '.join(sorted(missing))} samples")
        cal = calibrate([traces["static"]], [traces["mobile"]], sim.scheme.t_s)
    else:
        cal = calibrate_default(sim, args.windows, args.seed)
    if args.out == "-":
        print(json.dumps(asdict(cal), indent=2, sort_keys=True))
    else:
        cal.save(args.out)


COMMANDS = {"run": _run, "sweep": _sweep, "analytic": _analytic, "calibrate-mobility": _calibrate}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        raw, sim = _load(args)
    except cfgmod.ConfigFileNotFound as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate-config":
        print(f"ok config_sha256={cfgmod.config_hash(raw)}")
        return EXIT_OK
    if args.out != "-" and not Path(args.out).parent.exists():
        print(f"runtime error: output directory does not exist: {Path(args.out).parent}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        COMMANDS[args.command](args, raw, sim)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
