"""Trajectory directories and deterministic report files.

A trajectory directory holds ``manifest.json`` (grid, viscosity, sample
times, snapshot file names, config and its sha256), one LPNS1 snapshot per
sample and ``scalars.csv`` with the per-step log.  Every file is written
atomically.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from importlib import metadata

from .snapshot import atomic_write_bytes, read_snapshot, write_snapshot
from .solver import Trajectory
from .spectral import VectorField, make_grid

TRAJECTORY_FORMAT = "lpns-trajectory/1"
REPORT_SCHEMA = "lpns-report/1"
SCALAR_HEADER = ("t", "energy", "enstrophy", "max_div", "dt")


def code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        from . import __version__

        return __version__


def _clean(obj):
    """Replace non-finite floats with strings so the JSON stays standard."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj):
    atomic_write_bytes(path, dumps(obj).encode())


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])
    atomic_write_bytes(path, buf.getvalue().encode())


def read_csv(path) -> tuple[list, list]:
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [[float(x) for x in row] for row in r]


def write_trajectory(out_dir, traj: Trajectory, config: dict, config_sha256: str):
    os.makedirs(out_dir, exist_ok=True)
    files = []
    for i, u in enumerate(traj.snapshots):
        name = f"snap_{i:05d}.lpns"
        write_snapshot(os.path.join(out_dir, name), u)
        files.append(name)
    write_csv(os.path.join(out_dir, "scalars.csv"), SCALAR_HEADER,
              [(s.t, s.energy, s.enstrophy, s.max_div, s.dt) for s in traj.steps])
    g = traj.grid
    write_json(os.path.join(out_dir, "manifest.json"), {
        "format": TRAJECTORY_FORMAT,
        "grid": list(g.n),
        "box_length": g.box_length,
        "viscosity": traj.viscosity,
        "times": traj.times,
        "files": files,
        "config": config,
        "config_sha256": config_sha256,
        "code_version": code_version(),
    })


def read_manifest(traj_dir) -> dict:
    path = os.path.join(traj_dir, "manifest.json")
    try:
        with open(path, encoding="utf-8") as fh:
            man = json.load(fh)
    except FileNotFoundError:
        raise FileNotFoundError(f"--traj: no manifest.json in {traj_dir}") from None
    if man.get("format") != TRAJECTORY_FORMAT:
        raise ValueError(f"--traj: {path} is not a {TRAJECTORY_FORMAT} manifest")
    if len(man["times"]) != len(man["files"]):
        raise ValueError(f"--traj: manifest lists {len(man['times'])} times but {len(man['files'])} files")
    return man


def iter_snapshots(traj_dir, man: dict):
    """Yield the velocity snapshots lazily, checking grid consistency."""
    grid = make_grid(tuple(man["grid"]), man["box_length"])
    for name in man["files"]:
        path = os.path.join(traj_dir, name)
        if not os.path.exists(path):
            raise FileNotFoundError(f"--traj: missing snapshot {path}")
        u = read_snapshot(path)
        if not isinstance(u, VectorField) or u.grid != grid:
            raise ValueError(f"--traj: snapshot {path} does not hold a velocity on grid {grid.n}")
        yield u
