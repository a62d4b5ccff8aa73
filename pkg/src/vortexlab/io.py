"""Artifact writers: CSV with comment headers, trajectory exports, binary snapshots."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

SNAPSHOT_MAGIC = b"YUDO1"
TRAJECTORY_COLUMNS = ["time", "label_id", "label_x", "label_y", "pos_x", "pos_y", "weight", "omega"]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def atomic_write_bytes(path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def csv_text(columns, rows, header_lines=()) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, columns, rows, header_lines=()) -> Path:
    return atomic_write_text(path, csv_text(columns, rows, header_lines))


def read_csv(path):
    """Return ``(header_lines, columns, rows)``; rows remain strings."""
    header, body = [], []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                header.append(line[1:].strip())
            else:
                body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    return header, columns, list(reader)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def header_lines(version: str, config: dict, seed: int) -> list[str]:
    return [f"vortexlab {version}", f"config_hash {config_hash(config)}", f"seed {seed}"]


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def write_json(path, obj) -> Path:
    return atomic_write_text(path, json_text(obj))


def trajectory_rows(traj, every: int = 1):
    """Rows of the trajectory export, one per (grid time, label)."""
    labels = traj.labels
    n = labels.shape[0]
    for k in range(0, traj.positions.shape[0], every):
        t = traj.times[k]
        pos = traj.positions[k]
        for i in range(n):
            yield (t, i, labels[i, 0], labels[i, 1], pos[i, 0], pos[i, 1], traj.weights[i], traj.values[i])


def write_trajectory_csv(path, traj, header=(), every: int = 1) -> Path:
    return write_csv(path, TRAJECTORY_COLUMNS, trajectory_rows(traj, every), header)


def snapshot_bytes(positions) -> bytes:
    """``YUDO1``, u64 N, u64 steps, then float64 positions ``[steps, N, 2]`` row-major."""
    p = np.ascontiguousarray(positions, dtype="<f8")
    if p.ndim != 3 or p.shape[2] != 2:
        raise ValueError("positions must have shape (steps, N, 2)")
    steps, n, _ = p.shape
    return SNAPSHOT_MAGIC + struct.pack("<QQ", n, steps) + p.tobytes(order="C")


def write_snapshot(path, positions) -> Path:
    return atomic_write_bytes(path, snapshot_bytes(positions))


def read_snapshot(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:5] != SNAPSHOT_MAGIC:
        raise ValueError("not a YUDO1 snapshot")
    n, steps = struct.unpack("<QQ", data[5:21])
    arr = np.frombuffer(data, dtype="<f8", offset=21)
    if arr.size != n * steps * 2:
        raise ValueError("truncated snapshot")
    return arr.reshape(steps, n, 2).copy()
