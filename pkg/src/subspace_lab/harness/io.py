"""Atomic file output: trajectory/basis CSVs and the run manifest."""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path

import numpy as np

from ..model import RNG_ALGORITHM, MacroState, Trajectory

MANIFEST_NAME = "manifest.txt"


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def format_rows(matrix, header=None) -> str:
    lines = [",".join(header)] if header is not None else []
    lines += [",".join(repr(float(v)) for v in row) for row in np.atleast_2d(matrix)]
    return "\n".join(lines) + "\n"


def trajectory_csv(traj: Trajectory) -> str:
    if not len(traj):
        raise ValueError("cannot write an empty trajectory")
    d, p, q = traj.states[0].dims
    return format_rows(traj.as_matrix(), ["t"] + MacroState.column_names(d, p, q))


def write_trajectory(path, traj: Trajectory) -> Path:
    return atomic_write_text(path, trajectory_csv(traj))


def write_matrix(path, matrix, header=None) -> Path:
    return atomic_write_text(path, format_rows(matrix, header))


def read_trajectory(path) -> Trajectory:
    """Inverse of :func:`write_trajectory`."""
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    counts = {s: sum(1 for h in header if h.startswith(s + "_")) for s in "PQRSZ"}
    q = int(round(counts["Z"] ** 0.5))
    p = int(round(counts["S"] ** 0.5))
    d = counts["P"] // p
    traj = Trajectory()
    for line in lines[1:]:
        vals = [float(x) for x in line.split(",")]
        traj.append(vals[0], MacroState.from_flat(vals[1:], d, p, q))
    return traj


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, config_lines: list[str], seeds, duration: float, extra: dict | None = None) -> Path:
    """Key-per-line manifest followed by a ``sha256  file`` table of every output file."""
    from .. import __version__

    out_dir = Path(out_dir)
    files = sorted(p for p in out_dir.rglob("*") if p.is_file() and p.name != MANIFEST_NAME and not p.name.startswith("."))
    lines = [
        f"version = {__version__}",
        f"rng = {RNG_ALGORITHM}",
        f"seeds = [{', '.join(str(s) for s in seeds)}]",
        f"wall_clock_seconds = {duration:.3f}",
    ]
    for k, v in sorted((extra or {}).items()):
        lines.append(f"{k} = {v}")
    lines.append("[config]")
    lines += config_lines
    lines.append("[files]")
    lines += [f"{sha256(p)}  {p.relative_to(out_dir).as_posix()}" for p in files]
    return atomic_write_text(out_dir / MANIFEST_NAME, "\n".join(lines) + "\n")


def verify_manifest(out_dir) -> list[str]:
    """Files whose checksum does not match the manifest (empty when all match)."""
    out_dir = Path(out_dir)
    text = (out_dir / MANIFEST_NAME).read_text().splitlines()
    bad = []
    table = text[text.index("[files]") + 1:]
    for line in table:
        digest, name = line.split("  ", 1)
        path = out_dir / name
        if not path.is_file() or sha256(path) != digest:
            bad.append(name)
    return bad
