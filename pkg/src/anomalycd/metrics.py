"""Graph-accuracy metrics over summary (lag-free) graphs.

Temporal graphs are collapsed to summary graphs before comparison: lags drop,
duplicate ordered pairs merge keeping the strongest weight. Directed counts
treat a bidirected estimated pair as two directed edges. The false-positive
rate intentionally carries the reversed-edge count in its numerator alongside
the plain false positives.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .graphs import SkeletonGraph, TemporalDag

__all__ = [
    "SummaryGraph",
    "GraphDiff",
    "MetricsReport",
    "to_summary",
    "graph_diff",
    "shd",
    "shdu",
    "aprc",
    "evaluate_graphs",
    "write_metrics_json",
]


@dataclass(frozen=True)
class SummaryGraph:
    """Directed pairs with a ranking weight each; nodes may be isolated."""

    nodes: tuple[str, ...]
    edges: dict[tuple[str, str], float]

    def __post_init__(self):
        known = set(self.nodes)
        for src, tgt in self.edges:
            if src == tgt:
                raise ValueError(f"self-loop on {src!r}")
            if src not in known or tgt not in known:
                raise ValueError(f"edge ({src}, {tgt}) references unknown node")
        object.__setattr__(self, "nodes", tuple(self.nodes))

    @property
    def pairs(self) -> set[tuple[str, str]]:
        return set(self.edges)


def to_summary(graph: TemporalDag | SkeletonGraph | SummaryGraph) -> SummaryGraph:
    if isinstance(graph, SummaryGraph):
        return graph
    links = graph.edges if isinstance(graph, TemporalDag) else graph.links
    edges: dict[tuple[str, str], float] = {}
    for link in links:
        key = link.pair
        edges[key] = max(edges.get(key, 0.0), abs(link.weight))
    return SummaryGraph(tuple(graph.nodes), edges)


@dataclass(frozen=True)
class GraphDiff:
    tp: int
    tn: int
    fp: int
    fn: int
    rv: int
    ue: int
    um: int


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    fpr: float
    aprc: float
    shd: int
    shdu: int
    counts: GraphDiff

    def to_json_dict(self) -> dict:
        payload = asdict(self)
        payload["counts"] = asdict(self.counts)
        return payload


def _node_union(est: SummaryGraph, ref: SummaryGraph) -> list[str]:
    return sorted(set(est.nodes) | set(ref.nodes))


def graph_diff(est: SummaryGraph, ref: SummaryGraph) -> GraphDiff:
    """Directed edge counts plus per-unordered-pair skeleton/direction errors.

    ``rv`` counts each adjacent-in-both pair whose direction sets differ once,
    the counting SHDU and the false-positive rate share.
    """
    nodes = _node_union(est, ref)
    e_pairs, r_pairs = est.pairs, ref.pairs
    n_ordered = len(nodes) * (len(nodes) - 1)
    tp = len(e_pairs & r_pairs)
    fp = len(e_pairs - r_pairs)
    fn = len(r_pairs - e_pairs)
    tn = n_ordered - len(e_pairs | r_pairs)

    skel_e = {frozenset(p) for p in e_pairs}
    skel_r = {frozenset(p) for p in r_pairs}
    ue = len(skel_e - skel_r)
    um = len(skel_r - skel_e)
    rv = 0
    for pair in skel_e & skel_r:
        a, b = sorted(pair)
        if ({(a, b), (b, a)} & e_pairs) != ({(a, b), (b, a)} & r_pairs):
            rv += 1
    return GraphDiff(tp=tp, tn=tn, fp=fp, fn=fn, rv=rv, ue=ue, um=um)


def shd(est, ref) -> int:
    """Ordered-pair adjacency mismatches; a reversed edge contributes 2."""
    e, r = to_summary(est).pairs, to_summary(ref).pairs
    return len(e ^ r)


def shdu(est, ref) -> int:
    """Skeleton mismatches plus once-per-pair direction mismatches."""
    diff = graph_diff(to_summary(est), to_summary(ref))
    return diff.ue + diff.um + diff.rv


def _ranked_edges(est: SummaryGraph) -> list[tuple[str, str]]:
    return sorted(est.edges, key=lambda p: (-est.edges[p], p))


def aprc(est, ref) -> float:
    """Area under the precision-recall step curve over weight thresholds."""
    est, ref = to_summary(est), to_summary(ref)
    truth = ref.pairs
    if not truth:
        return 1.0 if not est.edges else 0.0
    hits = 0
    area = 0.0
    for rank, pair in enumerate(_ranked_edges(est), start=1):
        if pair in truth:
            hits += 1
            area += hits / rank
    return area / len(truth)


def _safe_div(num: float, den: float, empty: float = 0.0) -> float:
    return num / den if den > 0 else empty


def evaluate_graphs(est, ref) -> MetricsReport:
    est, ref = to_summary(est), to_summary(ref)
    diff = graph_diff(est, ref)
    both_empty = not est.pairs and not ref.pairs
    precision = 1.0 if both_empty else _safe_div(diff.tp, diff.tp + diff.fp)
    recall = 1.0 if both_empty else _safe_div(diff.tp, diff.tp + diff.fn)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    # Reversals ride along in the numerator next to the plain false positives.
    fpr = _safe_div(diff.rv + diff.fp, diff.tn + diff.fp)
    return MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1,
        fpr=fpr,
        aprc=aprc(est, ref),
        shd=shd(est, ref),
        shdu=diff.ue + diff.um + diff.rv,
        counts=diff,
    )


def write_metrics_json(report: MetricsReport, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
