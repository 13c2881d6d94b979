"""BRILL1 containers and CSV tables.

A BRILL1 file is one tag line, one JSON header line and then the fields as
little-endian float64 arrays in row-major order (rho outer, z inner).
Leading component axes of a field are recorded in the header.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataIntegrityError
from .grid import Grid2D

TAG = b"BRILL1\n"


def write_brill1(path, grid: Grid2D, n: int, fields: dict, meta=None):
    names = list(fields)
    shapes = []
    for k in names:
        arr = np.asarray(fields[k], dtype=np.float64)
        if arr.shape[-2:] != grid.shape:
            raise ConfigError(f"field {k} does not match the grid")
        shapes.append(list(arr.shape[:-2]))
    header = {"format": "BRILL1", "n": int(n), "grid": grid.descriptor(),
              "fields": [{"name": k, "components": s} for k, s in zip(names, shapes)],
              "meta": meta or {}}
    with open(path, "wb") as fh:
        fh.write(TAG)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for k in names:
            fh.write(np.ascontiguousarray(fields[k], dtype="<f8").tobytes())


def read_brill1(path):
    """(grid, n, {name: array}, meta)."""
    with open(path, "rb") as fh:
        if fh.readline() != TAG:
            raise DataIntegrityError(f"{path}: not a BRILL1 container")
        header = json.loads(fh.readline())
        payload = fh.read()
    grid = Grid2D.from_descriptor(header["grid"])
    out, pos = {}, 0
    for f in header["fields"]:
        shape = tuple(f["components"]) + grid.shape
        count = int(np.prod(shape))
        if pos + 8 * count > len(payload):
            raise DataIntegrityError(f"{path}: truncated field {f['name']}")
        out[f["name"]] = np.frombuffer(payload, "<f8", count, pos).reshape(shape).copy()
        pos += 8 * count
    if pos != len(payload):
        raise DataIntegrityError(f"{path}: trailing bytes after the last field")
    return grid, int(header["n"]), out, header.get("meta", {})


def save_data(path, data, pots=None, fields=None, extra=None):
    """Brill data with optional potentials, frame fields and extra named arrays."""
    f = {"U": data.U, "alpha": data.alpha, "S": data.S, "A": data.A}
    if pots is not None:
        f.update(zeta=pots.zeta, chi=pots.chi, psi=pots.psi)
    if fields is not None:
        f.update(k=fields.k, E=fields.E, B=fields.B)
    f.update(extra or {})
    write_brill1(path, data.grid, data.n, f, {"label": data.label, "puncture": data.puncture})


def load_data(path):
    """(BrillData, PotentialSet or None, Fields or None, extra dict)."""
    from .brill import BrillData, Fields
    from .potentials import PotentialSet

    grid, n, f, meta = read_brill1(path)
    data = BrillData(grid, n, f.pop("U"), f.pop("alpha"), f.pop("S"), f.pop("A"),
                     label=meta.get("label", ""), puncture=float(meta.get("puncture", 0.0)))
    pots = fields = None
    if {"zeta", "chi", "psi"} <= f.keys():
        pots = PotentialSet(f.pop("zeta"), f.pop("chi"), f.pop("psi"))
    if {"k", "E", "B"} <= f.keys():
        fields = Fields(f.pop("k"), f.pop("E"), f.pop("B"))
    return data, pots, fields, f


# -- csv -------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def csv_text(header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        if len(r) != len(header):
            raise ConfigError("row length does not match the header")
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def write_csv(path, header, rows):
    Path(path).write_text(csv_text(header, rows))


def read_csv(path):
    """List of dicts; numeric-looking cells become floats."""
    with open(path, newline="") as fh:
        out = []
        for row in csv.DictReader(fh):
            conv = {}
            for k, v in row.items():
                try:
                    conv[k] = float(v)
                except (TypeError, ValueError):
                    conv[k] = v
            out.append(conv)
    return out
