"""Command-line entry point: simulate, monitor, verify, info."""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys

from . import config as cfgmod
from .criteria import CONTRAPOSITIVE_NOTICE, TORUS_NOTICE, MonotonicityError, criteria_series
from .dyadic import build_bank
from .harness import LEMMA_IDS, verify_lemma
from .io import (REPORT_SCHEMA, code_version, iter_snapshots, read_manifest, write_csv, write_json,
                 write_trajectory)
from .solver import CFLError, simulate
from .spectral import make_grid

log = logging.getLogger("lpns")

EXIT_USAGE = 2
EXIT_INTERNAL = 3


class CliError(Exception):
    """User-facing failure; the message names the offending flag or key."""


def _header(kind: str, config_sha256: str, grid) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "kind": kind,
        "code_version": code_version(),
        "config_sha256": config_sha256,
        "grid": [list(g) for g in grid] if grid and isinstance(grid[0], (tuple, list)) else list(grid),
        "notice": TORUS_NOTICE,
    }


def cmd_simulate(args) -> int:
    raw = cfgmod.load(args.config)
    sc = cfgmod.solver_config(raw)
    try:
        traj = simulate(sc)
    except CFLError as exc:
        raise CliError(f"dt: {exc}") from None
    write_trajectory(args.out, traj, raw.normalized(), raw.sha256)
    last = traj.steps[-1]
    print(f"wrote {len(traj.snapshots)} snapshots to {args.out}; final t={last.t:g} energy={last.energy:.12g}")
    return 0


def _grids_arg(text: str) -> list:
    try:
        sizes = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise CliError(f"--grid: expected N or N1,N2,..., got {text!r}") from None
    if not sizes:
        raise CliError("--grid: empty")
    if len(sizes) == 1:
        # a single size is compared against the half-resolution companion
        sizes = [sizes[0] // 2, sizes[0]]
    return sizes


def cmd_monitor(args) -> int:
    man = read_manifest(args.traj)
    raw = cfgmod.load(args.criteria)
    ccfg = cfgmod.criteria_config(raw)
    try:
        rep = criteria_series(man["times"], iter_snapshots(args.traj, man), ccfg)
    except MonotonicityError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    combined = hashlib.sha256((man["config_sha256"] + raw.sha256).encode()).hexdigest()
    report = _header("criteria", combined, man["grid"])
    report.update({
        "contrapositive_notice": CONTRAPOSITIVE_NOTICE,
        "trajectory": {"config_sha256": man["config_sha256"], "viscosity": man["viscosity"],
                       "box_length": man["box_length"], "samples": len(man["times"])},
        "criteria_config": raw.normalized(),
        "criteria_config_sha256": raw.sha256,
        "report": rep.to_dict(),
    })
    write_json(args.out, report)
    stem, _ = os.path.splitext(args.out)
    header, rows = rep.csv_rows()
    write_csv(stem + ".csv", header, rows)
    print(f"wrote {args.out} and {stem}.csv; finite={rep.all_finite} gronwall_dominates={rep.gronwall_ok}")
    return 0


def cmd_verify(args) -> int:
    if args.samples < 1:
        raise CliError(f"--samples: must be positive, got {args.samples}")
    grids = _grids_arg(args.grid)
    try:
        hr = verify_lemma(args.lemma, grids, args.samples, args.seed, args.jobs)
    except ValueError as exc:
        flag = "--lemma" if "lemma" in str(exc) else "--grid"
        raise CliError(f"{flag}: {exc}") from None
    cfg_text = f"lemma={args.lemma}\ngrids={grids}\nsamples={args.samples}\nseed={args.seed}\n"
    report = _header("harness", hashlib.sha256(cfg_text.encode()).hexdigest(), [make_grid(n).n for n in grids])
    report["harness"] = hr.to_dict()
    write_json(args.out, report)
    print(f"{args.lemma}: max_ratio={hr.max_ratio:.6g} passed={hr.passed}")
    return 0 if hr.passed else 1


def cmd_info(args) -> int:
    try:
        grid = make_grid(args.bank, args.box_length)
    except ValueError as exc:
        raise CliError(f"--bank: {exc}") from None
    print(json.dumps(build_bank(grid).describe(), indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lpns", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run the solver and write a trajectory directory")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("monitor", help="criterion series along a trajectory")
    m.add_argument("--traj", required=True, help="trajectory directory written by simulate")
    m.add_argument("--criteria", required=True, help="criteria config file")
    m.add_argument("--out", required=True, help="report JSON path; the CSV series goes next to it")
    m.set_defaults(func=cmd_monitor)

    v = sub.add_parser("verify", help="empirical constants of one inequality")
    v.add_argument("--lemma", required=True, help=", ".join(LEMMA_IDS))
    v.add_argument("--grid", default="32", help="N (compared with N/2) or a comma list of sizes")
    v.add_argument("--samples", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--jobs", type=int, default=1)
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_verify)

    i = sub.add_parser("info", help="print the dyadic filter bank of a grid")
    i.add_argument("--bank", type=int, required=True, metavar="N")
    i.add_argument("--box-length", type=float, default=1.0)
    i.set_defaults(func=cmd_info)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, cfgmod.ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
