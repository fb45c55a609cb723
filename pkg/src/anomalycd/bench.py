"""Runtime harness for the compression/skeleton-learning trade-off."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

from .flags import FlagMatrix
from .metrics import MetricsReport, evaluate_graphs
from .sparse import PriorLinkSet, compress_sparse, compute_prior_links
from .skeleton import learn_skeleton

__all__ = ["BenchRow", "benchmark", "write_bench_json"]


@dataclass(frozen=True)
class BenchRow:
    l_m: int
    compressed_size: int
    wall_time_s: float
    metrics: MetricsReport | None


def _timed_skeleton(flags, tau_max, alpha, priors, repeats: int):
    best = None
    skeleton = None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        skeleton = learn_skeleton(flags, tau_max, alpha, priors)
        elapsed = time.perf_counter() - t0
        best = elapsed if best is None else min(best, elapsed)
    return skeleton, best


def benchmark(
    flags: FlagMatrix,
    lm_values,
    tau_max: int,
    alpha: float = 0.05,
    alpha_tau: float = 0.01,
    reference=None,
    use_priors: bool = True,
    repeats: int = 1,
) -> list[BenchRow]:
    """Compress at each retention length, time skeleton learning, and score.

    Prior links are computed once on the raw matrix. ``repeats`` > 1 keeps the
    fastest of several timing runs to damp scheduler noise.
    """
    priors = (
        compute_prior_links(flags, tau_max, alpha_tau)
        if use_priors
        else PriorLinkSet.full(flags.channels, tau_max)
    )
    rows = []
    for l_m in lm_values:
        compressed, report = compress_sparse(flags, int(l_m))
        skeleton, elapsed = _timed_skeleton(compressed, tau_max, alpha, priors, repeats)
        metrics = evaluate_graphs(skeleton, reference) if reference is not None else None
        rows.append(
            BenchRow(
                l_m=int(l_m),
                compressed_size=report.compressed_length,
                wall_time_s=float(elapsed),
                metrics=metrics,
            )
        )
    return rows


def write_bench_json(rows: list[BenchRow], tau_max: int, path: str | Path) -> None:
    payload = {
        "tau_max": tau_max,
        "rows": [
            {
                "l_m": row.l_m,
                "compressed_size": row.compressed_size,
                "wall_time_s": row.wall_time_s,
                "metrics": row.metrics.to_json_dict() if row.metrics else None,
            }
            for row in rows
        ],
    }
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
