"""Lagged causal-graph types shared by discovery, pruning, and evaluation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import InputError, InvariantViolation

__all__ = ["LaggedLink", "SkeletonGraph", "TemporalDag", "load_graph_json", "write_graph_json"]


@dataclass(frozen=True)
class LaggedLink:
    """Directed edge ``source -> target`` acting at ``lag`` samples (lag <= 0)."""

    source: str
    target: str
    lag: int
    weight: float
    p_value: float = 0.0

    def __post_init__(self):
        if self.source == self.target:
            raise InputError(f"self-link on {self.source!r}")
        if self.lag > 0:
            raise InputError(f"lag must be <= 0, got {self.lag}")
        if not self.weight > 0:
            raise InputError(f"link weight must be positive, got {self.weight}")

    @property
    def pair(self) -> tuple[str, str]:
        return (self.source, self.target)

    def sort_key(self):
        return (self.target, self.source, self.lag)


def _check_nodes_cover(nodes: tuple[str, ...], links) -> None:
    known = set(nodes)
    for link in links:
        if link.source not in known or link.target not in known:
            raise InputError(f"edge {link.source}->{link.target} references unknown node")


@dataclass(frozen=True)
class SkeletonGraph:
    """Pre-pruning link set: may hold several lags per pair and 2-cycles."""

    nodes: tuple[str, ...]
    links: tuple[LaggedLink, ...]

    def __post_init__(self):
        nodes = tuple(self.nodes)
        links = tuple(sorted(self.links, key=LaggedLink.sort_key))
        _check_nodes_cover(nodes, links)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "links", links)


def _summary_is_acyclic(nodes, pairs) -> bool:
    adjacency = {n: [] for n in nodes}
    for src, tgt in pairs:
        adjacency[src].append(tgt)
    state: dict[str, int] = {}

    def visit(n: str) -> bool:
        state[n] = 1
        for m in adjacency[n]:
            s = state.get(m, 0)
            if s == 1 or (s == 0 and not visit(m)):
                return False
        state[n] = 2
        return True

    return all(state.get(n, 0) == 2 or visit(n) for n in nodes)


@dataclass(frozen=True)
class TemporalDag:
    """Pruned graph: one edge per ordered pair, no 2-cycles, acyclic summary."""

    nodes: tuple[str, ...]
    edges: tuple[LaggedLink, ...]

    def __post_init__(self):
        nodes = tuple(self.nodes)
        edges = tuple(sorted(self.edges, key=LaggedLink.sort_key))
        _check_nodes_cover(nodes, edges)
        pairs = [e.pair for e in edges]
        if len(set(pairs)) != len(pairs):
            raise InvariantViolation("duplicate ordered pair in DAG edges")
        pair_set = set(pairs)
        for src, tgt in pairs:
            if (tgt, src) in pair_set:
                raise InvariantViolation(f"2-cycle between {src} and {tgt}")
        if not _summary_is_acyclic(nodes, pairs):
            raise InvariantViolation("summary graph contains a directed cycle")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    def parents_of(self, node: str) -> list[str]:
        return sorted(e.source for e in self.edges if e.target == node)


def _links_to_json(links) -> list[dict]:
    return [
        {
            "source": e.source,
            "target": e.target,
            "lag": e.lag,
            "weight": e.weight,
            "p_value": e.p_value,
        }
        for e in links
    ]


def write_graph_json(graph: SkeletonGraph | TemporalDag, path: str | Path) -> None:
    links = graph.links if isinstance(graph, SkeletonGraph) else graph.edges
    payload = {"nodes": list(graph.nodes), "edges": _links_to_json(links)}
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_graph_json(path: str | Path, as_dag: bool = False) -> SkeletonGraph | TemporalDag:
    """Read a graph JSON; missing edge attributes default to lag 0, weight 1."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    with path.open(encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, dict) or "nodes" not in payload or "edges" not in payload:
        raise InputError(f"{path}: graph JSON needs 'nodes' and 'edges'")
    links = []
    for raw in payload["edges"]:
        try:
            links.append(
                LaggedLink(
                    source=raw["source"],
                    target=raw["target"],
                    lag=int(raw.get("lag", 0)),
                    weight=float(raw.get("weight", 1.0)),
                    p_value=float(raw.get("p_value", 0.0)),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}: bad edge record {raw!r}") from exc
    nodes = tuple(payload["nodes"])
    cls = TemporalDag if as_dag else SkeletonGraph
    return cls(nodes, tuple(links))
