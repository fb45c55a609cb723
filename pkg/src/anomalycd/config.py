"""Flat TOML configuration for the pipeline and its stages.

Keys mirror the detector parameter names (``alpha_theta``, ``w_theta``, ...)
plus the pipeline-level knobs (``l_m``, ``tau_max``, ``alpha``, ``alpha_tau``,
``ess``) and toggles (``use_priors``, ``use_compression``, ``direct_t0``).
Command-line flags override file values.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .detect import DetectorConfig
from .errors import InputError

__all__ = ["PipelineConfig", "load_config", "config_hash"]

_DETECTOR_KEYS = {
    "alpha_theta",
    "w_theta",
    "alpha_iota",
    "k_iota",
    "p_iota",
    "alpha_eta",
    "q_eta",
    "change_points",
}
_PIPELINE_KEYS = {
    "l_m",
    "tau_max",
    "alpha",
    "alpha_tau",
    "ess",
    "use_priors",
    "use_compression",
    "direct_t0",
}


@dataclass(frozen=True)
class PipelineConfig:
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    l_m: int = 10
    tau_max: int = 5
    alpha: float = 0.05
    alpha_tau: float = 0.01
    ess: float = 1.0
    use_priors: bool = True
    use_compression: bool = True
    direct_t0: bool = False

    def __post_init__(self):
        if self.l_m < 1:
            raise InputError("l_m must be at least 1")
        if self.tau_max < 1:
            raise InputError("tau_max must be at least 1")
        if not 0 < self.alpha <= 1:
            raise InputError("alpha must lie in (0, 1]")
        if not 0 <= self.alpha_tau <= 1:
            raise InputError("alpha_tau must lie in [0, 1]")
        if not self.ess > 0:
            raise InputError("ess must be positive")

    def as_flat_dict(self) -> dict:
        flat = asdict(self.detector)
        flat["change_points"] = list(flat["change_points"])
        for key in _PIPELINE_KEYS:
            flat[key] = getattr(self, key)
        return flat


def _build(settings: dict) -> PipelineConfig:
    unknown = set(settings) - _DETECTOR_KEYS - _PIPELINE_KEYS
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    detector_kwargs = {k: v for k, v in settings.items() if k in _DETECTOR_KEYS}
    if "change_points" in detector_kwargs:
        detector_kwargs["change_points"] = tuple(detector_kwargs["change_points"])
    pipeline_kwargs = {k: v for k, v in settings.items() if k in _PIPELINE_KEYS}
    return PipelineConfig(detector=DetectorConfig(**detector_kwargs), **pipeline_kwargs)


def load_config(path: str | Path | None, overrides: dict | None = None) -> PipelineConfig:
    """Merge a TOML file (optional) with non-None override values."""
    settings: dict = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise InputError(f"no such file: {path}")
        try:
            with path.open("rb") as fh:
                settings.update(tomllib.load(fh))
        except tomllib.TOMLDecodeError as exc:
            raise InputError(f"{path}: invalid TOML: {exc}") from exc
    for key, value in (overrides or {}).items():
        if value is not None:
            settings[key] = value
    try:
        return _build(settings)
    except TypeError as exc:
        raise InputError(f"bad config value: {exc}") from exc


def config_hash(cfg: PipelineConfig) -> str:
    canonical = json.dumps(cfg.as_flat_dict(), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()
