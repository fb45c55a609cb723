"""Ensemble online anomaly detection for univariate sensor series.

Three detectors run per channel on additively decomposed data and their binary
flags are OR-ed together:

* a moving-SD z-score on the decomposition residual, robustified with a
  median center and a [10%, 90%] quantile-band standard deviation,
* a cumulative-sum drift detector on the first difference of the trend,
* a spectral-residual saliency detector on the raw signal.

Detectors reinitialize at user-supplied change points and at timestamp gaps
left by masking; each segment of a channel is processed independently and the
results concatenated.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NoPeriodError
from .flags import FlagMatrix
from .frames import TimeFrame

__all__ = [
    "DetectorConfig",
    "Decomposition",
    "DetectorScores",
    "estimate_period",
    "decompose",
    "moving_sd_detect",
    "trend_drift_detect",
    "spectral_detect",
    "detect",
    "detect_with_scores",
]

logger = logging.getLogger(__name__)

_AMP_FLOOR = 1e-12  # amplitude floor before log; constant signals otherwise hit -inf


@dataclass(frozen=True)
class DetectorConfig:
    """Hyperparameters of the three-detector ensemble.

    Defaults correspond to one-minute sampling of slowly varying hardware
    sensors; ``p_iota=None`` requests automatic period estimation.
    """

    alpha_theta: float = 10.0
    w_theta: int = 5760
    alpha_iota: float = 20.0
    k_iota: float = 5.0
    p_iota: int | None = 5760
    alpha_eta: float = 35.0
    q_eta: int = 1440
    change_points: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for name in ("alpha_theta", "alpha_iota", "alpha_eta", "k_iota"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        for name in ("w_theta", "q_eta"):
            if getattr(self, name) < 2:
                raise InputError(f"{name} must be at least 2")
        if self.p_iota is not None and self.p_iota < 2:
            raise InputError("p_iota must be at least 2")
        object.__setattr__(self, "change_points", tuple(self.change_points))


@dataclass(frozen=True)
class Decomposition:
    """Additive split x = trend + seasonal + resid (exact by construction)."""

    trend: np.ndarray
    seasonal: np.ndarray
    resid: np.ndarray


@dataclass(frozen=True)
class DetectorScores:
    """Per-detector score and flag streams for one channel."""

    lambda_theta: np.ndarray
    lambda_iota: np.ndarray
    lambda_eta: np.ndarray
    flags_theta: np.ndarray
    flags_iota: np.ndarray
    flags_eta: np.ndarray

    @property
    def flags_union(self) -> np.ndarray:
        return self.flags_theta | self.flags_iota | self.flags_eta


def estimate_period(x: np.ndarray) -> int:
    """Dominant period (samples) from the spectrum of the differenced series.

    Differencing suppresses additive-trend leakage; the DC bin is excluded and
    the result is clamped to [2, len(x) // 2]. Raises NoPeriodError when no
    nonzero-frequency bin carries energy (constant or purely linear input).
    """
    x = np.asarray(x, dtype=float)
    if x.size < 16:
        raise InputError("period estimation needs at least 16 samples")
    dx = np.diff(x)
    mag = np.abs(np.fft.rfft(dx))
    mag[0] = 0.0
    peak = int(np.argmax(mag))
    if mag[peak] <= 1e-12 * max(1.0, float(np.abs(dx).sum())):
        raise NoPeriodError("no dominant nonzero frequency")
    freq = peak / dx.size
    period = int(round(1.0 / freq))
    return int(np.clip(period, 2, x.size // 2))


def decompose(x: np.ndarray, p: int) -> Decomposition:
    """Classical additive decomposition with a centered moving-average trend.

    Even periods use the standard half-weighted window of length p + 1 so the
    filter stays symmetric. Positions where the centered window is incomplete
    carry the nearest valid trend value; the per-phase seasonal means are taken
    over the valid interior only to keep edge effects out of the cycle
    estimate.
    """
    x = np.asarray(x, dtype=float)
    p = int(p)
    if p < 2:
        raise InputError("period must be at least 2")
    if x.size < 2 * p:
        raise InputError(f"need at least 2*p={2 * p} samples, got {x.size}")
    if p % 2:
        kernel = np.full(p, 1.0 / p)
    else:
        kernel = np.r_[0.5, np.ones(p - 1), 0.5] / p
    valid = np.convolve(x, kernel, mode="valid")
    start = p // 2
    trend = np.empty_like(x)
    trend[start : start + valid.size] = valid
    trend[:start] = valid[0]
    trend[start + valid.size :] = valid[-1]

    detrended = x - trend
    interior = np.arange(start, start + valid.size)
    phase_sums = np.bincount(interior % p, weights=detrended[interior], minlength=p)
    phase_counts = np.bincount(interior % p, minlength=p)
    phase_means = phase_sums / phase_counts
    phase_means -= phase_means.mean()
    seasonal = phase_means[np.arange(x.size) % p]
    return Decomposition(trend=trend, seasonal=seasonal, resid=x - trend - seasonal)


def _window_stats(window: np.ndarray) -> tuple[float, float]:
    """Median center and standard deviation of the [10%, 90%] quantile band."""
    q10, q90 = np.quantile(window, (0.1, 0.9))
    band = window[(window >= q10) & (window <= q90)]
    if band.size == 0:
        return float(np.median(window)), 0.0
    return float(np.median(window)), float(band.std())


def moving_sd_detect(
    x_eps: np.ndarray, alpha_theta: float, w_theta: int
) -> tuple[np.ndarray, np.ndarray]:
    """Robust sliding z-score on the residual; trailing windows, step 1.

    The first w-1 positions use expanding windows. Degenerate windows (zero
    band deviation) score 0 rather than raising.
    """
    x = np.asarray(x_eps, dtype=float)
    w = int(w_theta)
    if w < 8:
        raise InputError("w_theta must be at least 8")
    n = x.size
    scores = np.zeros(n)
    head = min(w - 1, n)
    for t in range(head):
        center, sd = _window_stats(x[: t + 1])
        scores[t] = abs(x[t] - center) / sd if sd > 0 else 0.0
    if n >= w:
        windows = np.lib.stride_tricks.sliding_window_view(x, w)
        chunk = max(1, int(4e6) // w)
        for lo in range(0, windows.shape[0], chunk):
            block = windows[lo : lo + chunk]
            q10, q90 = np.quantile(block, (0.1, 0.9), axis=1)
            med = np.median(block, axis=1)
            in_band = (block >= q10[:, None]) & (block <= q90[:, None])
            cnt = in_band.sum(axis=1)
            cnt_safe = np.maximum(cnt, 1)
            mean_band = (block * in_band).sum(axis=1) / cnt_safe
            var_band = ((block - mean_band[:, None]) ** 2 * in_band).sum(axis=1) / cnt_safe
            sd = np.sqrt(var_band)
            current = x[w - 1 + lo : w - 1 + lo + block.shape[0]]
            with np.errstate(divide="ignore", invalid="ignore"):
                s = np.abs(current - med) / sd
            s[(sd <= 0) | (cnt == 0)] = 0.0
            scores[w - 1 + lo : w - 1 + lo + block.shape[0]] = s
    return scores, scores > alpha_theta


def trend_drift_detect(
    x_iota: np.ndarray, alpha_iota: float, k_iota: float
) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative-sum drift score over runs of above-typical trend steps.

    Steps larger than k times the median absolute step are masked; within each
    maximal masked run the score is the running sum of the signed steps, zero
    elsewhere. Flags fire on the magnitude of the score so downward drifts are
    caught too. A zero median (more than half the steps flat) falls back to a
    threshold below the smallest nonzero step, so any nonzero run is scored.
    """
    x = np.asarray(x_iota, dtype=float)
    if x.size < 3:
        raise InputError("trend drift detection needs at least 3 samples")
    scores = np.zeros(x.size)
    d = np.diff(x)
    abs_d = np.abs(d)
    mu = float(np.median(abs_d))
    if mu == 0.0:
        nonzero = abs_d[abs_d > 0]
        if nonzero.size == 0:
            return scores, scores > alpha_iota
        mu = float(nonzero.min()) / (2.0 * k_iota)
    mask = abs_d > k_iota * mu
    boundaries = np.flatnonzero(np.diff(mask.astype(np.int8))) + 1
    edges = np.r_[0, boundaries, mask.size]
    for lo, hi in zip(edges[:-1], edges[1:]):
        if mask[lo]:
            scores[lo + 1 : hi + 1] = np.cumsum(d[lo:hi])
    return scores, np.abs(scores) > alpha_iota


def spectral_detect(
    x: np.ndarray, alpha_eta: float, q_eta: float
) -> tuple[np.ndarray, np.ndarray]:
    """Spectral-residual saliency: log spectrum minus its local average,
    transformed back to the time domain and normalized around its mean."""
    x = np.asarray(x, dtype=float)
    q = int(q_eta)
    if q < 2:
        raise InputError("q_eta must be at least 2")
    if x.size < q:
        raise InputError(f"spectral detection needs at least q_eta={q} samples")
    transform = np.fft.fft(x)
    amplitude = np.abs(transform)
    phase = np.angle(transform)
    log_amp = np.log(np.maximum(amplitude, _AMP_FLOOR))
    padded = np.pad(log_amp, (q // 2, q - 1 - q // 2), mode="edge")
    local_avg = np.convolve(padded, np.full(q, 1.0 / q), mode="valid")
    residual_spectrum = log_amp - local_avg
    saliency = np.abs(np.fft.ifft(np.exp(residual_spectrum + 1j * phase)))
    mean = saliency.mean()
    scores = (saliency - mean) / mean if mean > 0 else np.zeros_like(saliency)
    return scores, scores > alpha_eta


def _segment_bounds(
    timestamps: np.ndarray, change_points, interval: float | None = None
) -> list[tuple[int, int]]:
    """Split indices at change points and at timestamp discontinuities.

    Gaps wider than 1.5 nominal intervals (rows removed by masking) also
    reinitialize the detectors.
    """
    cuts = np.searchsorted(timestamps, np.asarray(sorted(change_points)))
    if interval is not None and timestamps.size > 1:
        gap_cuts = np.flatnonzero(np.diff(timestamps) > 1.5 * interval) + 1
        cuts = np.concatenate([cuts, gap_cuts])
    cuts = np.unique(cuts)
    cuts = cuts[(cuts > 0) & (cuts < timestamps.size)]
    edges = np.r_[0, cuts, timestamps.size]
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def _resolve_period(segment: np.ndarray, cfg: DetectorConfig) -> int:
    if cfg.p_iota is None:
        try:
            p = estimate_period(segment)
        except NoPeriodError:
            p = cfg.w_theta
    else:
        p = cfg.p_iota
    # Clamp so short change-point segments remain decomposable.
    return int(np.clip(p, 2, max(2, segment.size // 2)))


def _detect_segment(segment: np.ndarray, cfg: DetectorConfig) -> DetectorScores:
    if segment.size < 8:
        raise InputError(f"segment too short for detection ({segment.size} samples)")
    parts = decompose(segment, _resolve_period(segment, cfg))
    lam_t, fl_t = moving_sd_detect(parts.resid, cfg.alpha_theta, cfg.w_theta)
    lam_i, fl_i = trend_drift_detect(parts.trend, cfg.alpha_iota, cfg.k_iota)
    q_eff = min(cfg.q_eta, segment.size)
    lam_e, fl_e = spectral_detect(segment, cfg.alpha_eta, q_eff)
    return DetectorScores(lam_t, lam_i, lam_e, fl_t, fl_i, fl_e)


def _detect_channel(
    x: np.ndarray, timestamps: np.ndarray, cfg: DetectorConfig, interval: float | None
) -> DetectorScores:
    pieces = []
    for lo, hi in _segment_bounds(timestamps, cfg.change_points, interval):
        pieces.append(_detect_segment(x[lo:hi], cfg))
    return DetectorScores(
        *(np.concatenate([getattr(p, f) for p in pieces])
          for f in ("lambda_theta", "lambda_iota", "lambda_eta",
                    "flags_theta", "flags_iota", "flags_eta"))
    )


def _try_channel(
    x: np.ndarray, timestamps: np.ndarray, cfg: DetectorConfig, interval: float | None
) -> DetectorScores | Exception:
    try:
        if not np.isfinite(x).all():
            raise InputError("channel contains missing or non-finite values")
        return _detect_channel(x, timestamps, cfg, interval)
    except (InputError, NoPeriodError) as exc:
        return exc


def detect_with_scores(
    frame: TimeFrame, cfg: DetectorConfig, threads: int = 1
) -> tuple[FlagMatrix, dict[str, DetectorScores], list[str]]:
    """Run the ensemble over every channel of a regular-interval frame.

    A channel whose detection fails (non-finite values, too-short segment)
    contributes all-zero flags and a warning record instead of aborting.
    Rows removed by masking leave timestamp gaps, which reinitialize the
    detectors just like configured change points. Channels are independent,
    so ``threads`` > 1 evaluates them in parallel; results merge in channel
    order either way. Returns the union flag matrix, per-channel scores, and
    warnings.
    """
    if threads > 1 and frame.n_channels > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(
                pool.map(
                    lambda j: _try_channel(
                        frame.values[:, j], frame.timestamps, cfg, frame.interval
                    ),
                    range(frame.n_channels),
                )
            )
    else:
        outcomes = [
            _try_channel(frame.values[:, j], frame.timestamps, cfg, frame.interval)
            for j in range(frame.n_channels)
        ]

    scores: dict[str, DetectorScores] = {}
    warnings: list[str] = []
    columns = []
    for name, outcome in zip(frame.channels, outcomes):
        if isinstance(outcome, Exception):
            warnings.append(f"channel {name!r}: {outcome}; emitting zero flags")
            logger.warning("channel %r failed detection: %s", name, outcome)
            columns.append(np.zeros(frame.n_samples, dtype=np.uint8))
        else:
            scores[name] = outcome
            columns.append(outcome.flags_union.astype(np.uint8))
    matrix = FlagMatrix(frame.timestamps, frame.channels, np.column_stack(columns))
    return matrix, scores, warnings


def detect(frame: TimeFrame, cfg: DetectorConfig) -> FlagMatrix:
    """Union flag matrix of the three detectors over all channels."""
    matrix, _, _ = detect_with_scores(frame, cfg)
    return matrix
