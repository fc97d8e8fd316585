"""CSV / JSON artifacts: time series, inversion snapshots, manifests."""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np
import yaml

from .ensemble import TWO_PI, to_hz
from .series import TimeSeries

TIMESERIES_COLUMNS = ("t_s", "re_a", "im_a", "abs_a", "p", "pbarC")


class SchemaError(ValueError):
    """A CSV file does not have the expected columns."""


def _fmt(values) -> list[str]:
    # Python float repr is the shortest string that round-trips exactly
    return [repr(v) for v in np.asarray(values, dtype=float).tolist()]


def write_timeseries_csv(series: TimeSeries, path) -> Path:
    path = Path(path)
    n = len(series)
    nan = np.full(n, math.nan)
    cols = [
        _fmt(series.t),
        _fmt(series.a.real),
        _fmt(series.a.imag),
        _fmt(series.abs_a),
        _fmt(series.p if series.p is not None else nan),
        _fmt(series.pbarC if series.pbarC is not None else nan),
    ]
    with path.open("w", newline="\n") as fh:
        fh.write(",".join(TIMESERIES_COLUMNS) + "\n")
        for row in zip(*cols):
            fh.write(",".join(row) + "\n")
    return path


def read_timeseries_csv(path) -> TimeSeries:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
        expected = list(TIMESERIES_COLUMNS)
        for i, name in enumerate(expected):
            if i >= len(header):
                raise SchemaError(f"{path}: missing column {name!r} (expected {expected})")
            if header[i] != name:
                raise SchemaError(f"{path}: column {i + 1} is {header[i]!r}, expected {name!r}")
        if len(header) > len(expected):
            raise SchemaError(f"{path}: unexpected column {header[len(expected)]!r}")
        rows = [line.split(",") for line in fh if line.strip()]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    for k, row in enumerate(rows, start=2):
        if len(row) != len(expected):
            raise SchemaError(f"{path}: line {k} has {len(row)} fields, expected {len(expected)}")
    data = np.array([[float(x) for x in row] for row in rows])
    p = data[:, 4] if not np.all(np.isnan(data[:, 4])) else None
    pbarC = data[:, 5] if not np.all(np.isnan(data[:, 5])) else None
    return TimeSeries(t=data[:, 0], a=data[:, 1] + 1j * data[:, 2], p=p, pbarC=pbarC,
                      metadata={"source": str(path)})


def write_sigma_z_csv(series: TimeSeries, path) -> Path:
    """Header ``t_s`` followed by packet detunings in Hz; one row per snapshot."""
    path = Path(path)
    det = [to_hz(d) for d in series.detunings]
    with path.open("w", newline="\n") as fh:
        fh.write(",".join(["t_s"] + [repr(float(d)) for d in det]) + "\n")
        for t, row in zip(series.snapshot_t, series.sigma_z):
            fh.write(",".join(_fmt([t]) + _fmt(row)) + "\n")
    return path


def read_sigma_z_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (snapshot times, detunings in rad/s, snapshot matrix)."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
        if not header or header[0] != "t_s":
            raise SchemaError(f"{path}: first column must be 't_s', got {header[0]!r}")
        try:
            det = np.array([float(h) for h in header[1:]]) * TWO_PI
        except ValueError as exc:
            raise SchemaError(f"{path}: header must list packet detunings in Hz ({exc})") from None
        rows = [[float(x) for x in line.split(",")] for line in fh if line.strip()]
    data = np.array(rows).reshape(len(rows), det.size + 1)
    return data[:, 0], det, data[:, 1:]


def sha256(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def file_entry(path, root) -> dict:
    path = Path(path)
    return {"path": str(path.relative_to(root)), "sha256": sha256(path), "bytes": path.stat().st_size}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(data, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=False) + "\n")
    return path


def load_document(path) -> dict:
    """Read a YAML (or JSON) document; parse errors report line and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {path}: {exc}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ValueError(f"{path}: parse error{where}: {getattr(exc, 'problem', exc)}") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: top level must be a mapping")
    return doc
