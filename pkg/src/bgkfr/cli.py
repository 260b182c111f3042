"""Command-line front end: ``solver run | validate | tabulate-zeta``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import macro
from .config import ConfigError, parse_config, serialize
from .phase_grid import compute_zeta_max
from .solver import DIAG_COLUMNS, run, setup

PROFILE_COLUMNS = ("x", "rho", "u", "p", "e", "theta")


def _num(v) -> str:
    return format(float(v), ".17g")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) for v in row])


def profile_rows(result):
    disc = result.problem.disc
    Q = disc.moments(result.f)
    q = macro.conserved_to_primitive(Q, disc.gamma, check=False)
    x = disc.nodes().ravel()
    theta = q[:, 2] / q[:, 0]
    e = theta / (disc.gamma - 1.0)
    order = np.argsort(x, kind="stable")
    return np.column_stack([x, q[:, 0], q[:, 1], q[:, 2], e, theta])[order]


def run_case(config, out_dir) -> int:
    """Run ``config`` and write its CSV artifacts into ``out_dir``; 0 on success."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(serialize(config))
    rows: list = []
    status = 0
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            problem = setup(config)
        for w in caught:
            logging.warning("%s", w.message)
        result = run(config, problem=problem, rows=rows, progress_every=1000)
    except Exception as exc:  # partial log still goes out
        logging.error("run failed: %s", exc)
        status = 1
        result = None
    write_csv(out / "timeseries.csv", DIAG_COLUMNS, rows)
    if result is None:
        return status
    write_csv(out / "profile.csv", PROFILE_COLUMNS, profile_rows(result))
    if config.fu_locations:
        disc = result.problem.disc
        fu_rows = []
        for xl in config.fu_locations:
            u, fu = macro.extract_fu(result.f, xl, disc.mesh, disc.basis, disc.op.vgrid)
            fu_rows += [(xl, a, b) for a, b in zip(u, fu)]
        write_csv(out / "fu_slice.csv", ("x", "u", "f_u"), fu_rows)
    return status


def _cmd_run(args) -> int:
    try:
        config = parse_config(args.config)
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.threads is not None:
        config.threads = args.threads
    out = args.out or Path(args.config).with_suffix("")
    return run_case(config, out)


def _cmd_validate(args) -> int:
    from .validation import run_suite

    checks = run_suite(args.suite)
    report = Path(args.report or f"validate_{args.suite}.jsonl")
    with open(report, "w") as fh:
        for c in checks:
            print(c.line())
            fh.write(json.dumps(c.as_dict(), default=str) + "\n")
    n_fail = sum(not c.passed for c in checks)
    print(f"{len(checks) - n_fail}/{len(checks)} checks passed; report in {report}")
    return 0 if n_fail == 0 else 1


def _cmd_zeta(args) -> int:
    print(format(compute_zeta_max(args.delta, args.eps, 1.0), ".6f"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    from .validation import SUITES

    parser = argparse.ArgumentParser(prog="solver", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a configured case")
    p.add_argument("config")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("validate", help="run a reference validation suite")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--report", default=None, help="JSON-lines output path")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("tabulate-zeta", help="print zeta_max / theta_max")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.set_defaults(func=_cmd_zeta)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
