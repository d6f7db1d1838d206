"""
Command line entry point.

Subcommands::

    maxwell-dilation run <config>
    maxwell-dilation verify <config>
    maxwell-dilation sweep <config> --dt-ladder 0.04,0.02,0.01
    maxwell-dilation resources <config> --n-range 4..8

Exit codes: 0 success, 1 a self-check failed, 2 usage or configuration error.
Log verbosity comes from ``MAXWELL_DILATION_LOG`` (e.g. ``INFO``, ``DEBUG``).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, load_config
from .evolution import NonPositiveRate
from .kraus import DimensionTooLarge
from .operators import LayoutMismatch
from .report import table_text, write_json, write_table
from .scenario import resource_report, run_scenario, sweep_convergence, verify_invariants

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2
LOG_ENV = "MAXWELL_DILATION_LOG"

log = logging.getLogger("maxwell_dilation")


def _float_list(text: str) -> list:
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _n_range(text: str) -> range:
    try:
        lo, hi = (int(x) for x in text.split(".."))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a..b, got {text!r}") from exc
    if lo > hi or lo < 1:
        raise argparse.ArgumentTypeError(f"empty or invalid range {text!r}")
    return range(lo, hi + 1)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maxwell-dilation",
                                description="Dilated-circuit simulation of lossy dispersive Maxwell systems.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the configured plan and write its outputs")
    run.add_argument("config")

    ver = sub.add_parser("verify", help="run the invariant suite only")
    ver.add_argument("config")
    ver.add_argument("--seed", type=int, default=0)

    sw = sub.add_parser("sweep", help="measured Trotter error over a dt ladder")
    sw.add_argument("config")
    sw.add_argument("--dt-ladder", type=_float_list, required=True)
    sw.add_argument("--out", help="CSV path for the table")

    res = sub.add_parser("resources", help="gate counts per method over register sizes")
    res.add_argument("config")
    res.add_argument("--n-range", type=_n_range, required=True)
    res.add_argument("--out", help="CSV path for the table")
    return p


def _print_checks(checks) -> bool:
    ok = True
    for c in checks:
        ok &= c["passed"]
        value = "" if c.get("value") is None else f" ({c['value']:.3g})"
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}{value}")
    return ok


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get(LOG_ENV, "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.command == "run":
            report = run_scenario(config)
            ok = _print_checks(report.checks)
            last = report.records[-1]
            print(f"steps={len(report.records) - 1} cumulative_p0={report.cumulative_p0:.12g} "
                  f"E_total={last.E_total:.12g}")
            if report.fidelity is not None:
                print(f"fidelity={report.fidelity:.15g} state_error={report.state_error:.3e}")
            if report.gate_counts:
                print(f"gate_counts={report.gate_counts}")
            if not report.success:
                print(f"trajectory discarded at step {report.failed_at_step} (ancilla measured 1)")
            return EXIT_OK if ok else EXIT_CHECK

        if args.command == "verify":
            checks = verify_invariants(config, seed=args.seed)
            if config.outputs.report:
                write_json(config.outputs.report, {"checks": checks})
            return EXIT_OK if _print_checks(checks) else EXIT_CHECK

        if args.command == "sweep":
            table = sweep_convergence(config, args.dt_ladder)
            cols = ("dt", "steps", "measured", "analytic")
            print(table_text(table.rows, cols), end="")
            print(f"slope={table.slope}")
            if args.out:
                write_table(args.out, table.rows, cols)
            ok = table.monotone and (table.slope is None or 0.8 <= table.slope <= 1.2)
            return EXIT_OK if ok else EXIT_CHECK

        rows = resource_report(config, args.n_range)
        cols = ("n", "cells", "r", "method", "cnot_count", "rotation_count", "total", "lcu_le_kraus")
        print(table_text(rows, cols), end="")
        if args.out:
            write_table(args.out, rows, cols)
        return EXIT_OK if all(r["lcu_le_kraus"] is not False for r in rows) else EXIT_CHECK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, LayoutMismatch, DimensionTooLarge, NonPositiveRate) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
