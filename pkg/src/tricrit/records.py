"""Columnar text output: one JSON metadata line, one header line, then comma-separated rows."""
from __future__ import annotations

from dataclasses import dataclass, field
import json
import sys

import numpy as np

from . import __version__


@dataclass
class OutputRecord:
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)

    def column(self, name):
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows])


def _fmt(v):
    if isinstance(v, str):
        if "," in v or "\n" in v:
            raise ValueError(f"string cell {v!r} contains a separator")
        return v
    if v is None:
        return "nan"
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.16e}"


def make_meta(config_hash: str, preset: str, command: str, **extra) -> dict:
    meta = {"config_hash": config_hash, "version": __version__, "preset": preset, "command": command}
    meta.update(extra)
    return meta


def write_record(rec: OutputRecord, fh=None):
    fh = sys.stdout if fh is None else fh
    fh.write("# " + json.dumps(rec.meta, sort_keys=True, default=_jsonable) + "\n")
    fh.write(",".join(rec.columns) + "\n")
    for r in rec.rows:
        if len(r) != len(rec.columns):
            raise ValueError("row length does not match the column count")
        fh.write(",".join(_fmt(v) for v in r) + "\n")


def save_record(rec: OutputRecord, path):
    with open(path, "w") as fh:
        write_record(rec, fh)


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _parse(s):
    try:
        return float(s)
    except ValueError:
        return s


def read_record(path) -> OutputRecord:
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError("missing metadata line")
        meta = json.loads(first[2:])
        cols = fh.readline().strip().split(",")
        rows = [[_parse(x) for x in line.strip().split(",")] for line in fh if line.strip()]
    return OutputRecord(cols, rows, meta)
