"""Computational-efficiency levers for sparse flag data.

``compress_sparse`` squeezes long runs of an unchanged joint flag state down
to their first ``l_m`` samples, preserving every state transition.
``compute_prior_links`` scores time-extended overlap between channel pairs and
rules out lagged links between channels whose anomaly activity never
co-occurs, shrinking the causal search space before skeleton learning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .flags import FlagMatrix

__all__ = ["CompressionReport", "PriorLinkSet", "compress_sparse", "compute_prior_links"]


@dataclass(frozen=True)
class CompressionReport:
    original_length: int
    compressed_length: int
    kept_indices: np.ndarray
    l_m: int

    def __post_init__(self):
        kept = np.array(self.kept_indices, dtype=np.int64)
        if kept.size and np.any(np.diff(kept) <= 0):
            raise InputError("kept_indices must be strictly increasing")
        kept.setflags(write=False)
        object.__setattr__(self, "kept_indices", kept)

    @property
    def ratio(self) -> float:
        return self.compressed_length / self.original_length

    def kept_index_ranges(self) -> list[tuple[int, int]]:
        """Kept indices condensed to half-open [start, stop) ranges."""
        if self.kept_indices.size == 0:
            return []
        breaks = np.flatnonzero(np.diff(self.kept_indices) > 1) + 1
        ranges = []
        for block in np.split(self.kept_indices, breaks):
            ranges.append((int(block[0]), int(block[-1]) + 1))
        return ranges


def _run_starts_ends(flags: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Half-open bounds of maximal runs with an identical joint state."""
    t = flags.shape[0]
    change = np.any(flags[1:] != flags[:-1], axis=1)
    starts = np.r_[0, np.flatnonzero(change) + 1]
    ends = np.r_[starts[1:], t]
    return starts, ends


def compress_sparse(flags: FlagMatrix, l_m: int) -> tuple[FlagMatrix, CompressionReport]:
    """Keep only the first ``l_m`` samples of each uniform joint-state run.

    Pure row selection: retained flag values and their timestamps are
    untouched, and the first sample of every run (each state transition)
    always survives.
    """
    if l_m < 1:
        raise InputError("l_m must be at least 1")
    starts, ends = _run_starts_ends(flags.flags)
    kept_lengths = np.minimum(ends - starts, l_m)
    block_offsets = np.cumsum(kept_lengths) - kept_lengths
    positions = np.arange(int(kept_lengths.sum()))
    kept = np.repeat(starts, kept_lengths) + positions - np.repeat(
        block_offsets, kept_lengths
    )
    report = CompressionReport(
        original_length=flags.n_samples,
        compressed_length=int(kept.size),
        kept_indices=kept,
        l_m=int(l_m),
    )
    return flags.select_rows(kept), report


@dataclass(frozen=True)
class PriorLinkSet:
    """Ordered lagged links admitted into the causal search.

    ``allowed`` holds (source, target, lag) triples with lag in
    {0, -1, ..., -tau_max}; self-links are never present. ``overlap_scores``
    maps ordered channel pairs to the normalized co-activity score in [0, 1]
    that admitted or rejected them.
    """

    channels: tuple[str, ...]
    tau_max: int
    allowed: frozenset[tuple[str, str, int]]
    overlap_scores: dict[tuple[str, str], float]

    def __post_init__(self):
        for src, tgt, lag in self.allowed:
            if src == tgt:
                raise InputError("self-links are never allowed")
            if not -self.tau_max <= lag <= 0:
                raise InputError(f"lag {lag} outside [-{self.tau_max}, 0]")
        for score in self.overlap_scores.values():
            if not 0.0 <= score <= 1.0:
                raise InputError("overlap scores must lie in [0, 1]")

    def allows(self, source: str, target: str, lag: int) -> bool:
        return (source, target, lag) in self.allowed

    def allowed_pairs(self) -> set[tuple[str, str]]:
        return {(s, t) for s, t, _ in self.allowed}

    @classmethod
    def full(cls, channels, tau_max: int) -> "PriorLinkSet":
        """Unrestricted prior: every cross-channel link at every lag."""
        channels = tuple(channels)
        allowed = frozenset(
            (src, tgt, -lag)
            for src in channels
            for tgt in channels
            if src != tgt
            for lag in range(tau_max + 1)
        )
        scores = {(s, t): 1.0 for s in channels for t in channels if s != t}
        return cls(channels, tau_max, allowed, scores)


def compute_prior_links(flags: FlagMatrix, tau_max: int, alpha_tau: float = 0.01) -> PriorLinkSet:
    """Score pairwise time-extended overlap and drop non-overlapping links.

    Each channel's 0-to-1 transitions (onsets; a series starting at 1 counts
    as an onset at its first sample) are rolled into trailing sums of length
    ``tau_max``, marking the window after each onset as active. Clamping to
    onsets, rather than summing the signed difference, keeps an episode's own
    offset from cancelling its onset inside the window, which would blind the
    overlap score to transient single-sample episodes at any nonzero lag.
    For an ordered pair the overlap count is normalized by the source's own
    activity count, and the pair's links (all lags) are removed when the
    count is zero or the score falls below ``alpha_tau``. Removal is per
    direction: dropping i->j never forces dropping j->i.
    """
    if tau_max < 1:
        raise InputError("tau_max must be at least 1")
    if flags.n_samples < 2:
        raise InputError("need at least 2 samples")
    diff = np.diff(flags.flags.astype(np.int64), axis=0, prepend=0)
    onsets = (diff > 0).astype(np.int64)
    cum = np.cumsum(onsets, axis=0)
    rolled = cum.copy()
    if onsets.shape[0] > tau_max:
        rolled[tau_max:] = cum[tau_max:] - cum[:-tau_max]
    extended = rolled > 0
    counts = extended.sum(axis=0)
    co_occurrence = extended.T.astype(np.int64) @ extended.astype(np.int64)

    channels = flags.channels
    scores: dict[tuple[str, str], float] = {}
    allowed = set()
    for i, src in enumerate(channels):
        for j, tgt in enumerate(channels):
            if i == j:
                continue
            overlap = int(co_occurrence[i, j])
            score = overlap / counts[i] if counts[i] > 0 else 0.0
            scores[(src, tgt)] = float(score)
            if overlap > 0 and score >= alpha_tau:
                for lag in range(tau_max + 1):
                    allowed.add((src, tgt, -lag))
    return PriorLinkSet(channels, int(tau_max), frozenset(allowed), scores)
