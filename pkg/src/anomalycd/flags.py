"""Binary anomaly-flag matrices, the exchange type between pipeline stages."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError

__all__ = ["FlagMatrix", "load_flags_csv", "write_flags_csv"]


@dataclass(frozen=True)
class FlagMatrix:
    """0/1 flags for N channels over a shared time index, shape (T, N)."""

    timestamps: np.ndarray
    channels: tuple[str, ...]
    flags: np.ndarray

    def __post_init__(self):
        ts = np.array(self.timestamps, dtype=float)
        flags = np.array(self.flags, dtype=np.uint8)
        channels = tuple(self.channels)
        if ts.ndim != 1 or ts.size == 0:
            raise InputError("need at least one sample")
        if flags.shape != (ts.size, len(channels)):
            raise InputError(
                f"flags shape {flags.shape} does not match "
                f"{ts.size} timestamps x {len(channels)} channels"
            )
        if np.any(np.diff(ts) <= 0):
            raise InputError("timestamps must be strictly increasing")
        if len(set(channels)) != len(channels):
            raise InputError("channel names must be unique")
        if not np.isin(flags, (0, 1)).all():
            raise InputError("flags must be 0 or 1")
        ts.setflags(write=False)
        flags.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "flags", flags)
        object.__setattr__(self, "channels", channels)

    @property
    def n_samples(self) -> int:
        return self.timestamps.size

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def channel_flags(self, name: str) -> np.ndarray:
        return self.flags[:, self.channels.index(name)]

    def select_rows(self, indices: np.ndarray) -> "FlagMatrix":
        return FlagMatrix(self.timestamps[indices], self.channels, self.flags[indices])


def load_flags_csv(path: str | Path) -> FlagMatrix:
    """Load a ``timestamp`` + one 0/1 column per channel CSV."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        if not header or header[0] != "timestamp":
            raise InputError(f"{path}: first column must be 'timestamp'")
        channels = tuple(header[1:])
        timestamps: list[float] = []
        rows: list[list[int]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(
                    f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}"
                )
            try:
                timestamps.append(float(row[0]))
                parsed = [int(c) for c in row[1:]]
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: unparseable cell") from exc
            rows.append(parsed)
    if not rows:
        raise InputError(f"{path}: zero data rows")
    return FlagMatrix(np.asarray(timestamps), channels, np.asarray(rows))


def write_flags_csv(flags: FlagMatrix, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", *flags.channels])
        for t, row in zip(flags.timestamps, flags.flags):
            writer.writerow([repr(float(t)), *(int(v) for v in row)])
