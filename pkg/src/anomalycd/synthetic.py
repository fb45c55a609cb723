"""Seeded generator of flag data with a known lagged causal structure.

Ground truth serves as the oracle for discovery tests: nodes fire
spontaneously at a base rate and fire with the propagation probability
whenever any parent fired at the edge's lag. Edges are sampled along a fixed
topological order, so the true summary graph is acyclic by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError
from .flags import FlagMatrix
from .graphs import LaggedLink, TemporalDag

__all__ = ["SyntheticSpec", "generate_synthetic", "load_spec_json"]


@dataclass(frozen=True)
class SyntheticSpec:
    n_nodes: int
    max_lag: int
    edge_probability: float
    propagation_probability: float
    base_rate: float
    n_samples: int
    seed: int
    lag0_probability: float = 0.0

    def __post_init__(self):
        if self.n_nodes < 1:
            raise InputError("n_nodes must be at least 1")
        if self.max_lag < 1:
            raise InputError("max_lag must be at least 1")
        if self.n_samples <= self.max_lag:
            raise InputError("n_samples must exceed max_lag")
        for name in ("edge_probability", "propagation_probability", "base_rate",
                     "lag0_probability"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InputError(f"{name} must lie in [0, 1]")


def generate_synthetic(spec: SyntheticSpec) -> tuple[FlagMatrix, TemporalDag]:
    """Sample a lagged DAG and simulate flag propagation along it."""
    rng = np.random.default_rng(spec.seed)
    names = tuple(f"X{i}" for i in range(spec.n_nodes))

    edges = []
    parents: dict[int, list[tuple[int, int]]] = {j: [] for j in range(spec.n_nodes)}
    for i in range(spec.n_nodes):
        for j in range(i + 1, spec.n_nodes):
            if rng.random() >= spec.edge_probability:
                continue
            if spec.lag0_probability > 0 and rng.random() < spec.lag0_probability:
                lag = 0
            else:
                lag = int(rng.integers(1, spec.max_lag + 1))
            parents[j].append((i, lag))
            edges.append(
                LaggedLink(
                    source=names[i],
                    target=names[j],
                    lag=-lag,
                    weight=max(spec.propagation_probability, 1e-6),
                    p_value=0.0,
                )
            )

    spontaneous = rng.random((spec.n_samples, spec.n_nodes)) < spec.base_rate
    accept = rng.random((spec.n_samples, spec.n_nodes)) < spec.propagation_probability
    fired = np.zeros((spec.n_samples, spec.n_nodes), dtype=np.uint8)
    for t in range(spec.n_samples):
        for j in range(spec.n_nodes):
            active = bool(spontaneous[t, j])
            if not active and parents[j]:
                triggered = any(
                    t - lag >= 0 and fired[t - lag, i] for i, lag in parents[j]
                )
                active = triggered and bool(accept[t, j])
            fired[t, j] = active

    flags = FlagMatrix(np.arange(spec.n_samples, dtype=float), names, fired)
    truth = TemporalDag(names, tuple(edges))
    return flags, truth


def load_spec_json(path: str | Path) -> SyntheticSpec:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    with path.open(encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return SyntheticSpec(**payload)
    except TypeError as exc:
        raise InputError(f"{path}: bad generator spec: {exc}") from exc
