"""Readers for the exported result files that need only numpy.

The plotting side uses these so it can run without the compiled module.
"""

import csv
import io
import math
import struct

import numpy as np

MAGIC = b"XXZCOL01"
SWEEP_SCHEMA = "# xxz-sweep v1"

_DTYPES = {1: "<f8", 2: "<i8"}


def read_columnar(path):
    """Return {name: ndarray or list[str]} from a columnar file."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != MAGIC:
        raise ValueError(f"{path}: not a columnar file")
    version, n_columns = struct.unpack_from("<II", data, 8)
    if version != 1:
        raise ValueError(f"{path}: unsupported version {version}")
    pos = 16
    out = {}
    for _ in range(n_columns):
        (name_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos : pos + name_len].decode("utf-8")
        pos += name_len
        dtype, ndim = struct.unpack_from("<BB", data, pos)
        pos += 2
        shape = struct.unpack_from("<" + "Q" * ndim, data, pos)
        pos += 8 * ndim
        count = math.prod(shape)
        if dtype in _DTYPES:
            arr = np.frombuffer(data, dtype=_DTYPES[dtype], count=count, offset=pos).reshape(shape)
            pos += 8 * count
            out[name] = arr.copy()
        elif dtype == 3:
            strings = []
            for _ in range(count):
                (n,) = struct.unpack_from("<I", data, pos)
                pos += 4
                strings.append(data[pos : pos + n].decode("utf-8"))
                pos += n
            out[name] = strings
        else:
            raise ValueError(f"{path}: column {name!r} has unknown dtype {dtype}")
        if pos > len(data):
            raise ValueError(f"{path}: truncated")
    return out


def read_sweep_csv(path):
    """Return the rows of a sweep CSV as dicts; empty numeric fields become NaN."""
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    first, _, rest = text.partition("\n")
    if first.rstrip("\r") != SWEEP_SCHEMA:
        raise ValueError(f"{path}: expected schema line {SWEEP_SCHEMA!r}")
    rows = []
    text_columns = {"run_id", "status", "preferred", "message"}
    for row in csv.DictReader(io.StringIO(rest)):
        parsed = {}
        for key, value in row.items():
            if key in text_columns:
                parsed[key] = value
            else:
                parsed[key] = float(value) if value != "" else math.nan
        rows.append(parsed)
    return rows
