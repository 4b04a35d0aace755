"""Command line: ``capops run|suite|plot``."""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from capops.harness.config import OUT_ENV, ConfigError, default_out_root, load_config
from capops.harness.experiments import run_experiment
from capops.harness.plotting import emit_plots, render_plots
from capops.harness.report import load_report


def _summary(report) -> str:
    status = "PASS" if report.passed else "FAIL"
    lines = [f"[{status}] {report.name} ({report.kind}, {report.runtime_s:.2f}s) -> {report.directory}"]
    for v in report.verdicts:
        mark = "ok " if v.passed else "BAD"
        detail = ""
        if v.value is not None and v.target is not None:
            detail = f" value={v.value:.6g} target={v.target:.6g}"
            if v.tolerance is not None:
                detail += f" tol={v.tolerance:g}"
        lines.append(f"    {mark} {v.name}{detail}")
    if report.error:
        lines.append(f"    error: {report.error}")
    return "\n".join(lines)


def _run_one(args):
    path, out, seed, plots = args
    return run_experiment(load_config(path, seed), out, plots)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="capops", description=__doc__)
    ap.add_argument("--out", type=Path, default=None,
                    help=f"output root (default: ${OUT_ENV} or ./capops_out)")
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    ap.add_argument("--no-plots", action="store_true", help="skip plot scripts and PNGs")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("run", help="run one experiment config")
    p.add_argument("config", type=Path)
    p = sub.add_parser("suite", help="run every *.ini in a directory")
    p.add_argument("directory", type=Path)
    p.add_argument("--workers", type=int, default=1)
    p = sub.add_parser("plot", help="(re)generate plots for a report")
    p.add_argument("report", type=Path)
    args = ap.parse_args(argv)

    out = args.out or default_out_root()
    plots = False if args.no_plots else None
    try:
        if args.cmd == "run":
            reports = [_run_one((args.config, out, args.seed, plots))]
        elif args.cmd == "suite":
            configs = sorted(args.directory.glob("*.ini"))
            if not configs:
                print(f"no *.ini files in {args.directory}", file=sys.stderr)
                return 2
            # validate everything before spending time on any run
            for c in configs:
                load_config(c)
            jobs = [(c, out, args.seed, plots) for c in configs]
            if args.workers > 1:
                with ProcessPoolExecutor(max_workers=args.workers) as ex:
                    reports = list(ex.map(_run_one, jobs))
            else:
                reports = [_run_one(j) for j in jobs]
        else:
            report = load_report(args.report)
            pngs = render_plots(emit_plots(report))
            for png in pngs:
                print(png)
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for r in reports:
        print(_summary(r))
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
