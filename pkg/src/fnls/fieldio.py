"""Binary field format and simulation checkpoints.

Layout: one UTF-8 JSON header line (newline-terminated) with dim, M, L,
space, and scalar width, followed by little-endian IEEE-754 doubles as
interleaved (re, im) pairs in row-major axis order.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .grids import FREQUENCY, PHYSICAL, Field, Grid

_SCALAR = "f8"


def write_field(path: str | os.PathLike, f: Field) -> None:
    header = {
        "dim": f.grid.dim,
        "points_per_dim": f.grid.points_per_dim,
        "box_length": f.grid.box_length,
        "space": f.space,
        "scalar": _SCALAR,
    }
    flat = np.ascontiguousarray(f.values).ravel()
    inter = np.empty(2 * flat.size, dtype="<f8")
    inter[0::2] = flat.real
    inter[1::2] = flat.imag
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        fh.write(inter.tobytes())
    os.replace(tmp, path)


def read_field(path: str | os.PathLike) -> Field:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        header = json.loads(header_line.decode("utf-8"))
        if header.get("scalar") != _SCALAR:
            raise ValueError(f"unsupported scalar width {header.get('scalar')!r}")
        if header["space"] not in (PHYSICAL, FREQUENCY):
            raise ValueError(f"unknown space {header['space']!r}")
        grid = Grid(header["dim"], header["box_length"], header["points_per_dim"])
        count = 2 * grid.points_per_dim**grid.dim
        inter = np.frombuffer(fh.read(count * 8), dtype="<f8", count=count)
    vals = (inter[0::2] + 1j * inter[1::2]).reshape(grid.shape)
    return Field(grid, vals, header["space"])


def write_checkpoint(
    directory: str | os.PathLike,
    name: str,
    f: Field,
    t: float,
    step_count: int,
    config_hash: str,
) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_field(directory / f"{name}.field", f)
    sidecar = {"t": t, "step_count": step_count, "config_hash": config_hash}
    tmp = directory / f"{name}.state.json.tmp"
    tmp.write_text(json.dumps(sidecar, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, directory / f"{name}.state.json")


def read_checkpoint(directory: str | os.PathLike, name: str) -> tuple[Field, dict]:
    directory = Path(directory)
    f = read_field(directory / f"{name}.field")
    sidecar = json.loads((directory / f"{name}.state.json").read_text(encoding="utf-8"))
    return f, sidecar
