"""Command line: run scenarios, sweep movement speeds, check invariants.

Exit codes: 0 success, 1 failed check, 2 invalid input, 3 simulation abort.
"""

import argparse
import csv
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .chain import BINDINGS, N_JOINTS
from .classify import CHANNELS
from .config import ScenarioFileError, load_scenario, parse_modes
from .controller import ControllerMode
from .errors import ConfigurationError, DomainError, SimulationAbort
from .sim.library import MOVEMENTS, SPEED_GRID, sweep_movement
from .sim.metrics import compute_metrics, signal, window
from .sim.scenario import ScenarioRunner

log = logging.getLogger("exoflex")

OUT_ENV = "EXOFLEX_OUT"
EXIT_OK, EXIT_CHECK, EXIT_INVALID, EXIT_ABORT = 0, 1, 2, 3


def _joint_cols(prefix):
    return [f"{prefix}{i}" for i in range(1, N_JOINTS + 1)]


TRACE_COLUMNS = (
    ["tick", "t"]
    + _joint_cols("q")
    + _joint_cols("qd")
    + _joint_cols("tau_cmd")
    + _joint_cols("tau_bas")
    + _joint_cols("tau_fcm")
    + [f"{b}_{c}" for b in BINDINGS for c in CHANNELS]
    + ["elbow_mode", "wrist_mode", "k_e", "k_w"]
    + [f"{b}_{g}" for b in BINDINGS for g in ("kf_Fy", "kt_Fy", "kf_Fz", "kt_Fz")]
    + _joint_cols("tau_sat")
    + [f"{b}_sensor_sat" for b in BINDINGS]
)

METRICS_COLUMNS = ["channel", "MAV", "MAD", "max", "mode", "scenario"]
SWEEP_COLUMNS = ["movement", "speed", "mode", "channels", "max_ac", "n_channels"]


def fmt(x):
    """Round-trip exact text for a float, stable across runs."""
    return "%.17g" % float(x)


def trace_rows(trace):
    n = len(trace.t)
    filt = trace.filtered.reshape(n, -1)
    gains = trace.bas_gains.reshape(n, -1)
    sens = trace.sensor_saturated.any(axis=2)
    for k in range(n):
        row = [str(k), fmt(trace.t[k])]
        for arr in (trace.q, trace.qd, trace.tau_cmd, trace.tau_bas, trace.tau_fcm, filt):
            row.extend(fmt(v) for v in arr[k])
        row += [str(int(trace.elbow_mode[k])), str(int(trace.wrist_mode[k])), fmt(trace.k_e[k]), fmt(trace.k_w[k])]
        row.extend(fmt(v) for v in gains[k])
        row.extend(str(int(v)) for v in trace.torque_saturated[k])
        row.extend(str(int(v)) for v in sens[k])
        yield row


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def metrics_rows(metrics, mode, scenario):
    for ch, st in metrics.rows():
        yield [ch, fmt(st.mav), fmt(st.mad), fmt(st.max), mode, scenario]


def _run_one(cfg, mode):
    trace = ScenarioRunner(cfg).run(mode)
    return mode, trace


def _default_out():
    return os.environ.get(OUT_ENV, "results")


def cmd_run(args):
    cfg, modes, doc = load_scenario(args.scenario, mode=args.mode, seed=args.seed)
    out = Path(args.out or doc.output_dir or _default_out())
    started = time.perf_counter()
    if args.jobs > 1 and len(modes) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, [cfg] * len(modes), modes))
    else:
        runner = ScenarioRunner(cfg)
        results = [(m, runner.run(m)) for m in modes]
    # merged by sorted mode name so the output does not depend on scheduling
    results.sort(key=lambda r: r[0].value)
    metric_rows = []
    for mode, trace in results:
        name = "trace.csv" if len(modes) == 1 else f"trace-{mode.value}.csv"
        write_csv(out / name, TRACE_COLUMNS, trace_rows(trace))
        metric_rows.extend(metrics_rows(compute_metrics(trace), mode.value, cfg.name))
    write_csv(out / "metrics.csv", METRICS_COLUMNS, metric_rows)
    elapsed = time.perf_counter() - started
    print(f"{cfg.name}: {len(results)} run(s), {cfg.n_ticks} ticks each, {elapsed:.1f} s -> {out}")
    return EXIT_OK


def movement_ac(trace, movement, window_start=0.0):
    """Peak over time of the summed |AC| channels a movement loads."""
    m = window(trace, window_start)
    total = sum(np.abs(signal(trace, b, c)[m]) for b, c in movement.ac_channels)
    return float(total.max())


def _parse_floats(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigurationError(f"speeds: cannot parse {text!r} as a comma-separated list") from None


def sweep_table(movements, speeds, modes, seed=0):
    rows = []
    for name in movements:
        mv = MOVEMENTS[name]
        for mode in modes:
            for speed in speeds:
                trace = ScenarioRunner(sweep_movement(name, speed, mode, seed=seed)).run(mode)
                parts = "+".join(f"{b}.{c}" for b, c in mv.ac_channels)
                rows.append((name, speed, mode.value, parts, movement_ac(trace, mv), len(mv.ac_channels)))
    return rows


def cmd_sweep(args):
    movements = args.movements.split(",") if args.movements else list(MOVEMENTS)
    for name in movements:
        if name not in MOVEMENTS:
            raise ConfigurationError(f"movements: unknown movement {name!r}; expected one of {list(MOVEMENTS)}")
    speeds = _parse_floats(args.speeds) if args.speeds else SPEED_GRID
    if any(not s > 0 for s in speeds):
        raise ConfigurationError("speeds: must be > 0")
    modes = parse_modes(args.modes.split(","))
    rows = sweep_table(movements, speeds, modes, seed=args.seed)
    out = Path(args.out or _default_out())
    write_csv(
        out / "sweep.csv",
        SWEEP_COLUMNS,
        ([m, fmt(s), mode, ch, fmt(v), str(n)] for m, s, mode, ch, v, n in rows),
    )
    print(f"{'movement':9s} {'speed':>5s} {'mode':7s} {'max AC':>8s}")
    for m, s, mode, _, v, _ in rows:
        print(f"{m:9s} {s:5.2f} {mode:7s} {v:8.4f}")
    return EXIT_OK


def cmd_check(args):
    from . import checks

    if args.list:
        for name, fn in checks.SUITES.items():
            print(f"{name:12s} {fn.__doc__.strip().splitlines()[0]}")
        return EXIT_OK
    names = args.suite or list(checks.SUITES)
    failed = 0
    for name in names:
        if name not in checks.SUITES:
            raise ConfigurationError(f"suite: unknown suite {name!r}; expected one of {list(checks.SUITES)}")
        ok, detail = checks.run_suite(name)
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed += not ok
    print(f"{len(names) - failed}/{len(names)} suites passed")
    return EXIT_OK if not failed else EXIT_CHECK


def build_parser():
    p = argparse.ArgumentParser(prog="exoflex", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario file in one or more controller modes")
    r.add_argument("--scenario", required=True, help="JSON scenario document")
    r.add_argument("--mode", help="ff, bas, fcm, bas-fcm, a comma list, or all (overrides the file)")
    r.add_argument("--seed", type=int, help="overrides the file's seed")
    r.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./results)")
    r.add_argument("--jobs", type=int, default=1, help="worker processes for --mode all")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="peak assistant torques over a movement speed grid")
    s.add_argument("--movements", help=f"comma list from {','.join(MOVEMENTS)} (default: all)")
    s.add_argument("--speeds", help="comma list of peak joint speeds in rad/s (default: 0.5..3.5)")
    s.add_argument("--modes", default="ff,bas", help="comma list of controller modes")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./results)")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("check", help="run the invariant suites")
    c.add_argument("--list", action="store_true", help="list suites without running them")
    c.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage already; keep 0 for --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ScenarioFileError as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SimulationAbort as exc:
        print(f"error: simulation aborted at tick {exc.tick} ({exc.quantity}): {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
