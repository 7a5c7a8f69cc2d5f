"""Persistence: ZKF1 field snapshots, CSV tables and key = value summaries.

A ZKF1 file is the magic ``b"ZKF1"``, the little-endian u32 triple
``(n_x, n_y1, n_y2)``, the f64 triple ``(L_x, L_y1, L_y2)``, an f64 time
stamp and then the ``n_x * n_y1 * n_y2`` f64 samples in row-major order with
x slowest.  Floats are written as raw IEEE bits, so a round trip is exact.
"""

from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np

from .spectral import Grid3, RealField

MAGIC = b"ZKF1"
_HEADER = struct.Struct("<4s3I3dd")


class SnapshotFormatError(ValueError):
    pass


def encode_snapshot(u: RealField, t: float = 0.0) -> bytes:
    g = u.grid
    head = _HEADER.pack(MAGIC, g.n_x, g.n_y1, g.n_y2, g.L_x, g.L_y1, g.L_y2, float(t))
    return head + np.ascontiguousarray(u.values, dtype="<f8").tobytes()


def decode_snapshot(data: bytes) -> tuple[RealField, float]:
    if len(data) < _HEADER.size:
        raise SnapshotFormatError("truncated header")
    magic, nx, ny1, ny2, lx, ly1, ly2, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    n = nx * ny1 * ny2
    body = data[_HEADER.size:]
    if len(body) != 8 * n:
        raise SnapshotFormatError(f"expected {8 * n} payload bytes, found {len(body)}")
    grid = Grid3(nx, ny1, ny2, lx, ly1, ly2)
    values = np.frombuffer(body, dtype="<f8").reshape(grid.shape).astype(float)
    return RealField(grid, values), t


def write_snapshot(path, u: RealField, t: float = 0.0) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_snapshot(u, t))
    return path


def read_snapshot(path) -> tuple[RealField, float]:
    return decode_snapshot(Path(path).read_bytes())


# -- text outputs ----------------------------------------------------------------


def format_value(v) -> str:
    """Shortest text that parses back to the same value."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (list, tuple)):
        return ", ".join(format_value(x) for x in v)
    if v is None:
        return ""
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} entries, header has {len(header)}")
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(header, rows))
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def summary_text(items: dict) -> str:
    return "".join(f"{k} = {format_value(v)}\n" for k, v in items.items())


def write_summary(path, items: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(summary_text(items))
    return path


def read_summary(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


# -- ground state and checkpoints --------------------------------------------------


def save_ground_state(directory, gs) -> tuple[Path, Path]:
    """Profile as ``phi.zkf`` plus a ``phi.csv`` sidecar of its derived numbers."""
    directory = Path(directory)
    snap = write_snapshot(directory / "phi.zkf", gs.phi, 0.0)
    summary = gs.summary()
    side = write_csv(directory / "phi.csv", list(summary), [list(summary.values())])
    return snap, side


def load_ground_state(directory):
    from .ground_state import ground_state_from_field

    directory = Path(directory)
    phi, _ = read_snapshot(directory / "phi.zkf")
    pad = 1.5
    side = directory / "phi.csv"
    converged = True
    if side.exists():
        header, rows = read_csv(side)
        rec = dict(zip(header, rows[0]))
        pad = float(rec.get("pad", pad))
        converged = rec.get("converged", "1") == "1"
    return ground_state_from_field(phi, pad=pad, converged=converged)


def write_checkpoint(directory, u: RealField, t: float, step: int, config_text: str) -> Path:
    """Snapshot ``checkpoint.zkf`` with the config echo and step counter beside it."""
    directory = Path(directory)
    write_snapshot(directory / "checkpoint.zkf", u, t)
    (directory / "checkpoint.cfg").write_text(config_text)
    write_summary(directory / "checkpoint.txt", {"step": step, "time": t})
    return directory


def read_checkpoint(directory) -> tuple[RealField, float, int, str]:
    directory = Path(directory)
    if directory.is_file():
        directory = directory.parent
    u, t = read_snapshot(directory / "checkpoint.zkf")
    meta = read_summary(directory / "checkpoint.txt")
    return u, t, int(meta["step"]), (directory / "checkpoint.cfg").read_text()
