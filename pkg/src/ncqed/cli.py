"""Command-line interface: ``ncqed {run,sweep,preset,rates,calibrate,presets}``.

Errors are reported on stderr as a single machine-parsable line::

    error kind=<ExceptionName> [guard=<tail|norm> t=<time> value=<v> limit=<l>] msg="..."

and the process exits with status 2 (configuration) or 3 (numerical guard).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .effective import calibrate_shift, rate_report
from .errors import ConfigError, GuardViolation, NCQEDError, NumericalBlowupError
from .presets import PRESETS, get_preset
from .scenario import SweepConfig, load_config, load_sweep, resolve, run_scenario, run_sweep, shift_objective

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def parse_grid(spec: str) -> list[float]:
    """Grid from ``"a,b,c"`` or ``"start:stop:count"`` (inclusive linspace)."""
    spec = spec.strip()
    try:
        if ":" in spec:
            start, stop, count = spec.split(":")
            return [float(v) for v in np.linspace(float(start), float(stop), int(count))]
        return [float(v) for v in spec.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid spec {spec!r}") from exc


def _error_line(exc: Exception) -> str:
    parts = [f"error kind={type(exc).__name__}"]
    if isinstance(exc, GuardViolation):
        parts.append(f"guard={exc.kind} t={exc.time:.6e} value={exc.magnitude:.6e} limit={exc.limit:.6e}")
    msg = str(exc).replace('"', "'")
    parts.append(f'msg="{msg}"')
    return " ".join(parts)


def _print_rows(rows, parameter, objective):
    print(f"{parameter}\t{objective}\tcsv\terror")
    for r in rows:
        obj = "" if r["objective"] is None else f"{r['objective']:.8g}"
        print(f"{r['value']}\t{obj}\t{r['csv']}\t{r['error']}")


def cmd_run(args):
    cfg, _ = load_config(args.config)
    result = run_scenario(cfg, args.out)
    print(f"wrote {result.csv_path} ({result.series.times.size} rows)")
    return 0


def cmd_sweep(args):
    sweep = load_sweep(args.config)
    rows = run_sweep(sweep, args.out, jobs=args.jobs)
    _print_rows(rows, sweep.parameter, sweep.objective)
    return 0 if all(not r["error"] for r in rows) else 1


def cmd_preset(args):
    cfg = get_preset(args.name)
    if isinstance(cfg, SweepConfig):
        rows = run_sweep(cfg, args.out, jobs=args.jobs)
        _print_rows(rows, cfg.parameter, cfg.objective)
        return 0 if all(not r["error"] for r in rows) else 1
    result = run_scenario(cfg, args.out)
    print(f"wrote {result.csv_path} ({result.series.times.size} rows)")
    return 0


def cmd_presets(args):
    for name, p in PRESETS.items():
        print(f"{name}\t{p.panel}\t{p.description}")
    return 0


def cmd_rates(args):
    cfg, _ = load_config(args.config)
    res = resolve(cfg)
    report = rate_report(res.derived, args.kappa, args.gamma, args.gamma_ph)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_calibrate(args):
    cfg, _ = load_config(args.config)
    grid = parse_grid(args.grid)
    run = shift_objective(cfg, args.parameter, args.objective)
    best, scores = calibrate_shift(run, grid, jobs=args.jobs, return_scores=True)
    for x, s in zip(grid, scores):
        print(f"{x:.10g}\t{s:.10g}")
    print(f"best {args.parameter} = {best:.10g}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "calibration.json").write_text(
            json.dumps({"parameter": args.parameter, "objective": args.objective, "grid": grid,
                        "scores": scores, "best": best}, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps and calibration")
    common.add_argument("--seed", type=int, default=None, help="reserved; the dynamics is deterministic")

    p = argparse.ArgumentParser(prog="ncqed", description="Modulated atom-cavity photon creation simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", parents=[common], help="run one scenario")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", parents=[common], help="run a parameter sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("preset", parents=[common], help="run a named figure scenario")
    s.add_argument("--name", required=True, choices=sorted(PRESETS))
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_preset)

    s = sub.add_parser("presets", parents=[common], help="list named scenarios")
    s.set_defaults(func=cmd_presets)

    s = sub.add_parser("rates", parents=[common], help="DCE and AJC photon-creation rates")
    s.add_argument("--config", required=True)
    s.add_argument("--kappa", type=float, default=0.0, help="cavity damping rate")
    s.add_argument("--gamma", type=float, default=0.0, help="atomic relaxation rate")
    s.add_argument("--gamma-ph", dest="gamma_ph", type=float, default=0.0, help="atomic dephasing rate")
    s.set_defaults(func=cmd_rates)

    s = sub.add_parser("calibrate", parents=[common], help="grid search for the best resonance shift")
    s.add_argument("--config", required=True)
    s.add_argument("--grid", required=True, help='"a,b,c" or "start:stop:count"')
    s.add_argument("--parameter", default="modulation.xi", help="dotted config key to scan")
    s.add_argument("--objective", default="peak_N", choices=("peak_N", "final_N", "peak_Pe"))
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GuardViolation, NumericalBlowupError) as exc:
        print(_error_line(exc), file=sys.stderr)
        return EXIT_NUMERIC
    except (NCQEDError, OSError, KeyError) as exc:
        print(_error_line(exc), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
