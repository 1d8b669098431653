"""Frame snapshots (binary and PLY), diagnostics CSV and the background writer.

Binary layout, all little-endian::

    b"NNS1" | u32 frame | f64 time | u32 count
    f32 position[3N] | f32 velocity[3N] | f32 T[N] | f32 mu[N] | f32 plastic[N]
    u16 material[N]
"""
from __future__ import annotations

import csv
import queue
import struct
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import DIAGNOSTIC_COLUMNS

MAGIC = b"NNS1"
HEADER = struct.Struct("<4sIdI")
HEADER_SIZE = HEADER.size
RECORD_SIZE = 4 * (3 + 3 + 1 + 1 + 1) + 2


class IoError(OSError):
    """A frame or diagnostics file could not be written or read."""

    def __init__(self, path, reason):
        super().__init__(f"{path}: {reason}")
        self.path = Path(path)


@dataclass
class FrameRecord:
    frame: int
    time: float
    position: np.ndarray
    velocity: np.ndarray
    temperature: np.ndarray
    mu: np.ndarray
    plastic_norm: np.ndarray
    material_id: np.ndarray
    diagnostics: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        n = len(self.position)
        self.position = np.asarray(self.position, dtype=np.float32).reshape(n, 3)
        self.velocity = np.asarray(self.velocity, dtype=np.float32).reshape(n, 3)
        for name in ("temperature", "mu", "plastic_norm"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float32).reshape(n))
        self.material_id = np.asarray(self.material_id, dtype=np.uint16).reshape(n)

    @property
    def count(self) -> int:
        return len(self.position)

    @classmethod
    def from_world(cls, world) -> "FrameRecord":
        row = world.diagnostics[-1] if world.diagnostics else None
        return cls(world.frame, world.time, world.x, world.v, world.T, world.mu, world.plastic_norm,
                   world.material_ids, row)


def encode_frame(rec: FrameRecord) -> bytes:
    parts = [HEADER.pack(MAGIC, rec.frame, float(rec.time), rec.count)]
    for arr in (rec.position, rec.velocity, rec.temperature, rec.mu, rec.plastic_norm):
        parts.append(arr.astype("<f4").tobytes())
    parts.append(rec.material_id.astype("<u2").tobytes())
    return b"".join(parts)


def decode_frame(data: bytes) -> FrameRecord:
    if len(data) < HEADER_SIZE:
        raise ValueError("truncated frame header")
    magic, frame, time, n = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if len(data) != HEADER_SIZE + n * RECORD_SIZE:
        raise ValueError(f"frame size {len(data)} does not match count {n}")
    off = HEADER_SIZE

    def take(count, dtype):
        nonlocal off
        arr = np.frombuffer(data, dtype=dtype, count=count, offset=off)
        off += arr.nbytes
        return arr.copy()

    pos = take(3 * n, "<f4").reshape(n, 3)
    vel = take(3 * n, "<f4").reshape(n, 3)
    T, mu, ep = take(n, "<f4"), take(n, "<f4"), take(n, "<f4")
    mat = take(n, "<u2")
    return FrameRecord(frame, time, pos, vel, T, mu, ep, mat)


def ply_text(rec: FrameRecord) -> str:
    head = ["ply", "format ascii 1.0", f"element vertex {rec.count}",
            "property float x", "property float y", "property float z",
            "property float vx", "property float vy", "property float vz",
            "property float temperature", "property float mu", "property float plastic",
            "property ushort material", "end_header"]
    cols = np.column_stack([rec.position, rec.velocity, rec.temperature, rec.mu, rec.plastic_norm])
    lines = [" ".join(f"{v:.7g}" for v in row) + f" {m}" for row, m in zip(cols.tolist(), rec.material_id.tolist())]
    return "\n".join(head + lines) + "\n"


def frame_path(directory, frame: int, fmt: str = "binary") -> Path:
    ext = "bin" if fmt == "binary" else "ply"
    return Path(directory) / f"frame_{frame:05d}.{ext}"


def write_frame(rec: FrameRecord, path, fmt: str = "binary") -> Path:
    """Write one frame in ``binary`` or ``ply`` format."""
    path = Path(path)
    try:
        if fmt == "binary":
            path.write_bytes(encode_frame(rec))
        elif fmt == "ply":
            path.write_text(ply_text(rec))
        else:
            raise ValueError(f"unknown frame format {fmt!r}")
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from exc
    return path


def read_frame(path) -> FrameRecord:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from exc
    try:
        return decode_frame(data)
    except ValueError as exc:
        raise IoError(path, str(exc)) from exc


class DiagnosticsWriter:
    """Appends per-step diagnostics rows to a CSV file."""

    def __init__(self, path):
        self.path = Path(path)
        try:
            self._fh = self.path.open("w", newline="")
        except OSError as exc:
            raise IoError(self.path, exc.strerror or str(exc)) from exc
        self._csv = csv.writer(self._fh)
        self._csv.writerow(DIAGNOSTIC_COLUMNS)

    def write(self, row: dict):
        self._csv.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in DIAGNOSTIC_COLUMNS])

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_diagnostics(path) -> dict:
    """Column name -> float array."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {c: np.array([float(r[c]) for r in rows]) for c in DIAGNOSTIC_COLUMNS}


class FrameWriter:
    """Writes frames on a background thread.

    At most two frames are in flight (one being written, one queued);
    :meth:`submit` blocks beyond that. The first write error is re-raised
    from the next ``submit`` or from :meth:`close`.
    """

    def __init__(self, directory, formats=("binary",)):
        self.directory = Path(directory)
        self.formats = tuple(formats)
        self._queue: queue.Queue = queue.Queue(maxsize=1)
        self._error: BaseException | None = None
        self.written: list = []
        self._thread = threading.Thread(target=self._run, name="frame-writer", daemon=True)
        self._thread.start()

    def _run(self):
        while True:
            rec = self._queue.get()
            if rec is None:
                return
            if self._error is None:
                try:
                    for fmt in self.formats:
                        self.written.append(write_frame(rec, frame_path(self.directory, rec.frame, fmt), fmt))
                except BaseException as exc:  # surfaced to the caller thread
                    self._error = exc

    def _raise(self):
        if self._error is not None:
            err, self._error = self._error, None
            raise err

    def submit(self, rec: FrameRecord):
        self._raise()
        self._queue.put(rec)

    def close(self):
        if self._thread.is_alive():
            self._queue.put(None)
            self._thread.join()
        self._raise()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
