"""Reading and writing event streams.

Two interchange forms:

* A little-endian binary container (magic ``EGVDEVT1``) holding the sensor
  size, the stream's time range, an event count, and one packed 13-byte
  record per event: ``u64 t, u16 x, u16 y, i8 p``.
* A plain CSV with header ``t,x,y,p`` plus the geometry/time range carried in
  ``# key=value`` comment lines, for eyeballing and spreadsheet import.

Writes are canonical: a stream round-trips byte-identically through either
form.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from .events import EventStream

__all__ = [
    "FormatError",
    "serialize_events",
    "write_events",
    "read_events",
    "write_events_csv",
    "read_events_csv",
]

_MAGIC = b"EGVDEVT1"
_HEADER = struct.Struct("<HHQQQ")  # width, height, t_start, t_end, count
_RECORD_DTYPE = np.dtype([("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "i1")])


class FormatError(ValueError):
    """Raised when a stream file is malformed; the message carries the byte
    offset (binary) or line number (CSV) of the problem."""


def serialize_events(stream: EventStream) -> bytes:
    """Binary container bytes for a stream (the canonical on-disk form)."""
    if stream.width > 0xFFFF or stream.height > 0xFFFF:
        raise ValueError("sensor size exceeds u16 range")
    if stream.t_start < 0 or stream.t_end < 0:
        raise ValueError("binary container requires non-negative timestamps")
    records = np.empty(len(stream), dtype=_RECORD_DTYPE)
    records["t"] = stream.t
    records["x"] = stream.x
    records["y"] = stream.y
    records["p"] = stream.p
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(_HEADER.pack(stream.width, stream.height, stream.t_start, stream.t_end, len(stream)))
    buf.write(records.tobytes())
    return buf.getvalue()


def write_events(stream: EventStream, path: str | Path) -> None:
    """Write a stream to the binary container."""
    Path(path).write_bytes(serialize_events(stream))


def read_events(path: str | Path) -> EventStream:
    """Read a stream from the binary container, validating as it goes."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(_MAGIC):
        raise FormatError(f"{path}: truncated at byte {len(data)}: magic missing")
    if data[: len(_MAGIC)] != _MAGIC:
        raise FormatError(f"{path}: bad magic at byte 0: {data[:len(_MAGIC)]!r}")
    header_end = len(_MAGIC) + _HEADER.size
    if len(data) < header_end:
        raise FormatError(f"{path}: truncated at byte {len(data)}: header incomplete")
    width, height, t_start, t_end, count = _HEADER.unpack(data[len(_MAGIC) : header_end])
    expected = header_end + count * _RECORD_DTYPE.itemsize
    if len(data) != expected:
        raise FormatError(
            f"{path}: body is {len(data) - header_end} bytes at byte {header_end}, "
            f"expected {count} records ({expected - header_end} bytes)"
        )
    records = np.frombuffer(data, dtype=_RECORD_DTYPE, count=count, offset=header_end)
    try:
        return EventStream(
            width,
            height,
            t_start,
            t_end,
            records["t"].astype(np.int64),
            records["x"].astype(np.int32),
            records["y"].astype(np.int32),
            records["p"].astype(np.int8),
        )
    except ValueError as exc:
        raise FormatError(f"{path}: invalid stream at byte {header_end}: {exc}") from exc


def write_events_csv(stream: EventStream, path: str | Path) -> None:
    """Write a stream as CSV with geometry in comment lines."""
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# width={stream.width}\n")
        fh.write(f"# height={stream.height}\n")
        fh.write(f"# t_start={stream.t_start}\n")
        fh.write(f"# t_end={stream.t_end}\n")
        fh.write("t,x,y,p\n")
        for i in range(len(stream)):
            fh.write(f"{stream.t[i]},{stream.x[i]},{stream.y[i]},{stream.p[i]}\n")


def read_events_csv(path: str | Path) -> EventStream:
    """Read a stream from the CSV form."""
    meta: dict[str, int] = {}
    ts: list[int] = []
    xs: list[int] = []
    ys: list[int] = []
    ps: list[int] = []
    with open(path, "r") as fh:
        header_seen = False
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    try:
                        meta[key.strip()] = int(value.strip())
                    except ValueError as exc:
                        raise FormatError(f"{path}:{lineno}: bad metadata {body!r}") from exc
                continue
            if not header_seen:
                if line != "t,x,y,p":
                    raise FormatError(f"{path}:{lineno}: expected header 't,x,y,p', got {line!r}")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise FormatError(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
            try:
                ts.append(int(parts[0]))
                xs.append(int(parts[1]))
                ys.append(int(parts[2]))
                ps.append(int(parts[3]))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-integer field in {line!r}") from exc
    if not header_seen:
        raise FormatError(f"{path}: missing 't,x,y,p' header")
    missing = [k for k in ("width", "height", "t_start", "t_end") if k not in meta]
    if missing:
        raise FormatError(f"{path}: missing metadata: {', '.join(missing)}")
    try:
        return EventStream(
            meta["width"],
            meta["height"],
            meta["t_start"],
            meta["t_end"],
            np.asarray(ts, dtype=np.int64),
            np.asarray(xs, dtype=np.int32),
            np.asarray(ys, dtype=np.int32),
            np.asarray(ps, dtype=np.int8),
        )
    except ValueError as exc:
        raise FormatError(f"{path}: invalid stream: {exc}") from exc
