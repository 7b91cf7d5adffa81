"""Deterministic CSV time series and the binary snapshot container."""

from __future__ import annotations

import os
import struct

import numpy as np

from .diagnostics import CSV_COLUMNS, DiagnosticsRecord
from .errors import IoError
from .state import SimState

CSV_HEADER = ",".join(CSV_COLUMNS)
MAGIC = b"SDML1\n"
NAME_LEN = 16
SNAPSHOT_FIELDS = ("rho", "s1", "s2", "s3", "E1", "E2", "E3", "H1", "H2", "H3", "m1", "m2", "m3")


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def format_row(rec: DiagnosticsRecord) -> str:
    return ",".join(format_value(v) for v in rec.row())


class CsvSink:
    """Append-only writer; the header is written on open."""

    def __init__(self, path):
        self.path = os.fspath(path)
        try:
            self._fh = open(self.path, "w", encoding="ascii", newline="\n")
            self._fh.write(CSV_HEADER + "\n")
        except OSError as exc:
            raise IoError(f"cannot write {self.path}: {exc}") from exc

    def __call__(self, rec: DiagnosticsRecord):
        self._fh.write(format_row(rec) + "\n")

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_csv(path, records) -> None:
    with CsvSink(path) as sink:
        for r in records:
            sink(r)


def read_csv(path):
    """Return (header, rows) with rows as float arrays; for tests and scripts."""
    with open(path, encoding="ascii") as fh:
        header = fh.readline().rstrip("\n")
        rows = [np.array([float(x) for x in line.split(",")]) for line in fh if line.strip()]
    return header, rows


def state_fields(state: SimState) -> dict:
    out = {"rho": state.rho}
    for name, arr in (("s", state.s), ("E", state.E), ("H", state.H), ("m", state.m)):
        for i in range(3):
            out[f"{name}{i + 1}"] = arr[i]
    return out


def write_snapshot(path, fields: dict) -> None:
    """Write named (ny, nx) float64 arrays in the SDML1 container."""
    arrays = list(fields.items())
    if not arrays:
        raise IoError("snapshot needs at least one field")
    ny, nx = np.shape(arrays[0][1])
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<iii", nx, ny, len(arrays)))
            for name, arr in arrays:
                raw = name.encode("ascii")
                if len(raw) > NAME_LEN:
                    raise IoError(f"field name too long: {name}")
                a = np.ascontiguousarray(arr, dtype="<f8")
                if a.shape != (ny, nx):
                    raise IoError(f"field {name} has shape {a.shape}, expected {(ny, nx)}")
                fh.write(raw.ljust(NAME_LEN, b"\0"))
                fh.write(a.tobytes(order="C"))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_snapshot(path):
    """Inverse of :func:`write_snapshot`; returns ``(nx, ny, {name: array})``."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if not data.startswith(MAGIC):
        raise IoError(f"{path}: not an SDML1 snapshot")
    off = len(MAGIC)
    nx, ny, nf = struct.unpack_from("<iii", data, off)
    off += 12
    size = nx * ny * 8
    out = {}
    for _ in range(nf):
        if off + NAME_LEN + size > len(data):
            raise IoError(f"{path}: truncated snapshot")
        name = data[off:off + NAME_LEN].rstrip(b"\0").decode("ascii")
        off += NAME_LEN
        out[name] = np.frombuffer(data, dtype="<f8", count=nx * ny, offset=off).reshape(ny, nx).copy()
        off += size
    return nx, ny, out


def emit_outputs(records, snapshots, directory, csv_name="diagnostics.csv"):
    """Write a record list and (step, state) snapshots into ``directory``; returns the paths."""
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {directory}: {exc}") from exc
    csv_path = os.path.join(directory, csv_name)
    write_csv(csv_path, records)
    paths = [csv_path]
    for step, state in snapshots:
        p = os.path.join(directory, f"snap_{step:06d}.sdml")
        write_snapshot(p, state_fields(state))
        paths.append(p)
    return paths
