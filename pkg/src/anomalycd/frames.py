"""Regular-interval sensor frames: CSV loading, masking, and gap interpolation.

Missing values are represented by NaN throughout; CSV serialization writes an
empty cell for NaN and ``repr(float)`` otherwise, so finite values round-trip
bit-exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import InputError

__all__ = [
    "TimeFrame",
    "OperationMask",
    "load_csv",
    "load_mask_csv",
    "write_csv",
    "apply_mask",
    "interpolate_gaps",
]


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeFrame:
    """Multivariate series on a shared, strictly increasing time index.

    ``values`` has shape (T, N): one row per timestamp, one column per
    channel, NaN marking missing cells. ``interval`` is the nominal sampling
    period in seconds.
    """

    timestamps: np.ndarray
    channels: tuple[str, ...]
    values: np.ndarray
    interval: float

    def __post_init__(self):
        ts = _frozen_array(self.timestamps, float)
        vals = _frozen_array(self.values, float)
        channels = tuple(self.channels)
        if ts.ndim != 1:
            raise InputError("timestamps must be a 1-D sequence")
        if np.any(np.diff(ts) <= 0):
            raise InputError("timestamps must be strictly increasing")
        if vals.shape != (ts.size, len(channels)):
            raise InputError(
                f"values shape {vals.shape} does not match "
                f"{ts.size} timestamps x {len(channels)} channels"
            )
        if len(set(channels)) != len(channels):
            raise InputError("channel names must be unique")
        if not self.interval > 0:
            raise InputError("interval must be positive")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "interval", float(self.interval))

    @property
    def n_samples(self) -> int:
        return self.timestamps.size

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def channel_values(self, name: str) -> np.ndarray:
        return self.values[:, self.channels.index(name)]


@dataclass(frozen=True)
class OperationMask:
    """Per-timestamp activity flags aligned with a frame (1 = keep the row)."""

    timestamps: np.ndarray
    active: np.ndarray

    def __post_init__(self):
        ts = _frozen_array(self.timestamps, float)
        act = _frozen_array(self.active, np.uint8)
        if ts.shape != act.shape or ts.ndim != 1:
            raise InputError("mask timestamps and active flags must be aligned 1-D arrays")
        if not np.isin(act, (0, 1)).all():
            raise InputError("mask values must be 0 or 1")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "active", act)


def _parse_timestamp(cell: str) -> float:
    text = cell.strip()
    try:
        return float(text)
    except ValueError:
        pass
    try:
        stamp = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise InputError(f"unparseable timestamp {cell!r}") from exc
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.timestamp()


def _parse_value(cell: str) -> float:
    text = cell.strip()
    if not text:
        return math.nan
    try:
        return float(text)
    except ValueError:
        return math.nan


def _infer_interval(timestamps: np.ndarray) -> float:
    if timestamps.size < 2:
        return 1.0
    return float(np.median(np.diff(timestamps)))


def load_csv(path: str | Path, timestamp_column: str = "timestamp") -> TimeFrame:
    """Load a header + rows CSV into a frame, one channel per non-timestamp column.

    Timestamps parse as numbers or ISO-8601 instants (naive taken as UTC);
    unparseable numeric cells become NaN.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if timestamp_column not in header:
            raise InputError(f"{path}: no timestamp column {timestamp_column!r}")
        ts_idx = header.index(timestamp_column)
        channels = tuple(h for i, h in enumerate(header) if i != ts_idx)
        timestamps: list[float] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(
                    f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}"
                )
            timestamps.append(_parse_timestamp(row[ts_idx]))
            rows.append([_parse_value(c) for i, c in enumerate(row) if i != ts_idx])
    if not rows:
        raise InputError(f"{path}: zero data rows")
    ts = np.asarray(timestamps)
    return TimeFrame(ts, channels, np.asarray(rows), _infer_interval(ts))


def load_mask_csv(path: str | Path) -> OperationMask:
    """Load a two-column ``timestamp,active`` CSV."""
    frame = load_csv(path)
    if frame.channels != ("active",):
        raise InputError(f"{path}: mask CSV must have exactly the columns timestamp,active")
    active = frame.values[:, 0]
    if np.isnan(active).any() or not np.isin(active, (0.0, 1.0)).all():
        raise InputError(f"{path}: mask 'active' values must be 0 or 1")
    return OperationMask(frame.timestamps, active.astype(np.uint8))


def _format_value(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def write_csv(frame: TimeFrame, path: str | Path, timestamp_column: str = "timestamp") -> None:
    """Write a frame back to CSV; NaN cells are emitted empty."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([timestamp_column, *frame.channels])
        for t, row in zip(frame.timestamps, frame.values):
            writer.writerow([repr(float(t)), *(_format_value(v) for v in row)])


def apply_mask(frame: TimeFrame, mask: OperationMask, allow_empty: bool = False) -> TimeFrame:
    """Drop rows whose mask is inactive; surviving timestamps are unchanged."""
    if mask.active.size != frame.n_samples:
        raise InputError(
            f"mask length {mask.active.size} does not match frame length {frame.n_samples}"
        )
    if not np.array_equal(mask.timestamps, frame.timestamps):
        raise InputError("mask timestamps are not aligned with the frame")
    keep = mask.active.astype(bool)
    if not keep.any() and not allow_empty:
        raise InputError("mask removes every row (pass allow_empty to permit)")
    if keep.all():
        return frame
    return TimeFrame(frame.timestamps[keep], frame.channels, frame.values[keep], frame.interval)


def interpolate_gaps(frame: TimeFrame, max_gap: float, interval: float) -> TimeFrame:
    """Resample onto a regular grid, linearly filling missing runs up to ``max_gap``.

    The grid runs from the first to the last timestamp with the given step.
    Runs bounded by known samples further than ``max_gap`` apart stay missing,
    and values are never extrapolated beyond a channel's first or last known
    sample.
    """
    if not interval > 0:
        raise InputError("interval must be positive")
    if max_gap < interval:
        raise InputError("max_gap must be at least the sampling interval")
    ts = frame.timestamps
    n_steps = int(math.floor((ts[-1] - ts[0]) / interval + 1e-9))
    grid = ts[0] + interval * np.arange(n_steps + 1)
    out = np.full((grid.size, frame.n_channels), np.nan)
    atol = 1e-9 * max(interval, 1.0)
    for j in range(frame.n_channels):
        col = frame.values[:, j]
        known = ~np.isnan(col)
        if not known.any():
            continue
        kt, kv = ts[known], col[known]
        inside = (grid >= kt[0] - atol) & (grid <= kt[-1] + atol)
        filled = np.interp(grid, kt, kv)
        # Mask grid points strictly inside a gap wider than max_gap.
        left = np.clip(np.searchsorted(kt, grid, side="right") - 1, 0, kt.size - 1)
        right = np.clip(left + 1, 0, kt.size - 1)
        on_knot = (np.abs(grid - kt[left]) <= atol) | (np.abs(grid - kt[right]) <= atol)
        gap = kt[right] - kt[left]
        long_gap = ~on_knot & (gap > max_gap)
        out[inside & ~long_gap, j] = filled[inside & ~long_gap]
    return TimeFrame(grid, frame.channels, out, interval)
