"""Stream ingestion and count-based window segmentation.

A stream is an ordered sequence of readings. A reading carries an integer
timestamp (milliseconds) and either a float value or ``None`` when the
measurement is absent. Windows are fixed-count slices of the stream; the
trailing slice may be shorter and is flagged terminal.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import StreamOrderError


@dataclass(frozen=True)
class Reading:
    """One timestamped measurement; ``value`` is ``None`` when missing."""

    timestamp: int
    value: float | None


@dataclass(eq=False)
class DataWindow:
    """A fixed-count slice of the stream.

    ``terminal`` marks the trailing partial window of a finite stream; for
    every other window ``n == window_len`` of the segmentation that made it.
    """

    window_id: int
    readings: tuple[Reading, ...]
    terminal: bool = False

    @property
    def n(self) -> int:
        return len(self.readings)

    @cached_property
    def present_values(self) -> np.ndarray:
        """Float array of the values that are actually present, in order."""
        return np.array(
            [r.value for r in self.readings if r.value is not None], dtype=np.float64
        )

    @property
    def missing_count(self) -> int:
        return self.n - self.present_values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, DataWindow):
            return NotImplemented
        return (
            self.window_id == other.window_id
            and self.terminal == other.terminal
            and self.readings == other.readings
        )


def check_ordering(readings: Sequence[Reading]) -> None:
    """Reject streams whose timestamps are not monotonically non-decreasing."""
    for i in range(1, len(readings)):
        if readings[i].timestamp < readings[i - 1].timestamp:
            raise StreamOrderError(
                f"timestamp at index {i} ({readings[i].timestamp}) is earlier than "
                f"its predecessor ({readings[i - 1].timestamp})"
            )


def segment_stream(readings: Sequence[Reading], window_len: int) -> list[DataWindow]:
    """Split a finite ordered stream into consecutive count-based windows.

    Window ids are consecutive from 0. A trailing partial window is emitted
    with ``terminal=True``; exact multiples produce no partial window.
    """
    if window_len < 1:
        raise ValueError(f"window_len must be >= 1, got {window_len}")
    readings = tuple(readings)
    check_ordering(readings)
    windows: list[DataWindow] = []
    for wid, start in enumerate(range(0, len(readings), window_len)):
        chunk = readings[start : start + window_len]
        windows.append(
            DataWindow(
                window_id=wid,
                readings=chunk,
                terminal=len(chunk) < window_len,
            )
        )
    return windows


def flatten_windows(windows: Iterable[DataWindow]) -> list[Reading]:
    """Concatenate window readings back into a flat stream."""
    out: list[Reading] = []
    for w in windows:
        out.extend(w.readings)
    return out


def window_values(window: DataWindow) -> tuple[np.ndarray, int]:
    """Return (present values as float array, count of missing readings)."""
    return window.present_values, window.missing_count


# ---------------------------------------------------------------------------
# Ingestion / emission
# ---------------------------------------------------------------------------


def read_csv_stream(source) -> list[Reading]:
    """Read readings from CSV with header ``timestamp,value``.

    ``source`` is a path, ``"-"`` for stdin, or an open text file. An empty
    value field marks a missing reading.
    """
    with _open_text(source) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["timestamp", "value"]:
            raise ValueError(f"expected CSV header 'timestamp,value', got {header!r}")
        readings = []
        for row in reader:
            if not row:
                continue
            ts = int(row[0])
            raw = row[1].strip() if len(row) > 1 else ""
            readings.append(Reading(ts, float(raw) if raw else None))
    check_ordering(readings)
    return readings


def read_jsonl_stream(source) -> list[Reading]:
    """Read readings from line-delimited JSON ``{"t": int, "v": number|null}``."""
    with _open_text(source) as fh:
        readings = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            v = rec["v"]
            readings.append(Reading(int(rec["t"]), None if v is None else float(v)))
    check_ordering(readings)
    return readings


def read_stream(source, fmt: str | None = None) -> list[Reading]:
    """Read a stream, inferring csv/jsonl from the file extension if needed."""
    if fmt is None:
        name = source if isinstance(source, str) else getattr(source, "name", "")
        if str(name).endswith(".jsonl"):
            fmt = "jsonl"
        else:
            fmt = "csv"
    if fmt == "csv":
        return read_csv_stream(source)
    if fmt == "jsonl":
        return read_jsonl_stream(source)
    raise ValueError(f"unknown stream format {fmt!r}")


def write_csv_stream(readings: Iterable[Reading], sink) -> None:
    """Write readings as CSV with header ``timestamp,value``."""
    with _open_text(sink, "w") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["timestamp", "value"])
        for r in readings:
            writer.writerow([r.timestamp, "" if r.value is None else repr(r.value)])


def write_jsonl_stream(readings: Iterable[Reading], sink) -> None:
    """Write readings as line-delimited JSON records."""
    with _open_text(sink, "w") as fh:
        for r in readings:
            fh.write(json.dumps({"t": r.timestamp, "v": r.value}) + "\n")


def write_stream(readings: Iterable[Reading], sink, fmt: str | None = None) -> None:
    if fmt is None:
        name = sink if isinstance(sink, str) else getattr(sink, "name", "")
        fmt = "jsonl" if str(name).endswith(".jsonl") else "csv"
    if fmt == "csv":
        write_csv_stream(readings, sink)
    elif fmt == "jsonl":
        write_jsonl_stream(readings, sink)
    else:
        raise ValueError(f"unknown stream format {fmt!r}")


class _open_text:
    """Context manager over a path, ``"-"``, or an already-open text file."""

    def __init__(self, source, mode: str = "r"):
        self.source = source
        self.mode = mode
        self._fh = None
        self._owned = False

    def __enter__(self):
        if isinstance(self.source, (str, bytes)):
            if self.source == "-":
                self._fh = sys.stdin if "r" in self.mode else sys.stdout
            else:
                self._fh = open(self.source, self.mode, encoding="utf-8", newline="")
                self._owned = True
        elif isinstance(self.source, io.TextIOBase) or hasattr(self.source, "read") or hasattr(self.source, "write"):
            self._fh = self.source
        else:
            raise TypeError(f"cannot open {type(self.source).__name__} as a text stream")
        return self._fh

    def __exit__(self, *exc):
        if self._owned:
            self._fh.close()
        return False
