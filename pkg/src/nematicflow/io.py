"""Checkpoint files and CSV output.

Checkpoints are binary: a magic tag, a format version, the full
parameter set echoed as config text, then raw little-endian float64
arrays for the state and the convolution coefficients.  Restarting from
a checkpoint is bit-exact, which the flow-composition tests rely on.

CSV files carry a header row and shortest-round-trip decimal floats
(Python's repr), so parsing a file back yields the in-memory values
exactly while staying human-readable.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .grid import State, VectorField2, VectorField3
from .params import SimulationParams, parse_config, format_config
from . import noise

MAGIC = b"NEMF"
VERSION = 1


class CheckpointError(ValueError):
    """Corrupt, truncated, or version-mismatched checkpoint file."""


def save_checkpoint(path, state: State, p: SimulationParams,
                    ou: noise.OUState | None = None) -> None:
    """Write state (+ optional convolution coefficients) bit-exactly."""
    cfg = format_config(p).encode("utf-8")
    grid = state.grid
    ncoef = 0 if ou is None else len(ou.coeffs)
    bin_origin = round(state.t / p.dt)
    head = struct.pack("<4sI I d q q I", MAGIC, VERSION, len(cfg),
                       float(state.t), int(p.seed), int(bin_origin), ncoef)
    body = [head, cfg,
            np.ascontiguousarray(state.v.data, dtype="<f8").tobytes(),
            np.ascontiguousarray(state.d.data, dtype="<f8").tobytes()]
    if ou is not None:
        body.append(np.ascontiguousarray(ou.coeffs, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(body))


def load_checkpoint(path):
    """Read back (state, params, ou-state-or-None); hard error on mismatch."""
    raw = Path(path).read_bytes()
    headfmt = "<4sI I d q q I"
    headlen = struct.calcsize(headfmt)
    if len(raw) < headlen:
        raise CheckpointError("file too short for a checkpoint header")
    magic, version, cfglen, t, seed, bin_origin, ncoef = struct.unpack(
        headfmt, raw[:headlen])
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"format version {version}, expected {VERSION}")
    off = headlen
    p = parse_config(raw[off:off + cfglen].decode("utf-8"))
    if p.seed != seed:
        raise CheckpointError("seed header disagrees with the parameter echo")
    off += cfglen
    grid = p.grid
    nv, nd = 2 * grid.ncells, 3 * grid.ncells
    want = off + 8 * (nv + nd + ncoef)
    if len(raw) != want:
        raise CheckpointError(f"payload is {len(raw)} bytes, expected {want}")
    v = np.frombuffer(raw, dtype="<f8", count=nv, offset=off)
    off += 8 * nv
    d = np.frombuffer(raw, dtype="<f8", count=nd, offset=off)
    off += 8 * nd
    state = State(t=t,
                  v=VectorField2(grid, v.reshape(2, grid.ny, grid.nx)),
                  d=VectorField3(grid, d.reshape(3, grid.ny, grid.nx)))
    ou = None
    if ncoef:
        coeffs = np.frombuffer(raw, dtype="<f8", count=ncoef, offset=off)
        ou = noise.OUState(t=t, coeffs=coeffs.copy())
    return state, p, ou


def _format_cell(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(rows, path, header=None) -> None:
    """Write records (dicts, or objects with FIELDS/as_row) as RFC-4180 CSV."""
    rows = list(rows)
    if header is None:
        if not rows:
            raise ValueError("cannot infer a header from an empty record list")
        first = rows[0]
        header = list(first.keys()) if isinstance(first, dict) else list(first.FIELDS)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            vals = ([row[k] for k in header] if isinstance(row, dict)
                    else row.as_row())
            writer.writerow([_format_cell(x) for x in vals])


def read_csv(path):
    """Read a CSV written by write_csv back into (header, list of dicts)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for rec in reader:
            row = {}
            for key, val in zip(header, rec):
                try:
                    row[key] = int(val)
                except ValueError:
                    try:
                        row[key] = float(val)
                    except ValueError:
                        row[key] = val
            rows.append(row)
    return header, rows
