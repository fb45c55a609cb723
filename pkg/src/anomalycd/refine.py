"""Prune a learned skeleton into a DAG fit for Bayesian-network construction.

Steps: collapse multi-lag duplicates to the strongest lag, resolve mutually
directed pairs (weight, then earliest lag, then a contingency test on onset
precedence), orient what remains, and break any residual summary cycles by
discarding the weakest edge on each cycle.
"""

from __future__ import annotations

import networkx as nx
import numpy as np
from scipy import stats

from .errors import InputError
from .flags import FlagMatrix
from .graphs import LaggedLink, SkeletonGraph, TemporalDag

__all__ = [
    "group_max",
    "resolve_bidirected",
    "onset_precedence_stat",
    "enforce_dag",
    "prune",
]

_CHI2_SIG = 0.05  # significance for directing contemporaneous pairs


def group_max(edges) -> list[LaggedLink]:
    """One edge per ordered pair: max weight, ties to the most negative lag."""
    best: dict[tuple[str, str], LaggedLink] = {}
    for edge in sorted(edges, key=lambda e: (e.source, e.target, -e.weight, e.lag)):
        best.setdefault(edge.pair, edge)
    return [best[pair] for pair in sorted(best)]


def _onsets(column: np.ndarray) -> np.ndarray:
    onset = np.zeros_like(column, dtype=bool)
    onset[0] = column[0] == 1
    onset[1:] = (column[1:] == 1) & (column[:-1] == 0)
    return onset


def onset_precedence_stat(
    flags: FlagMatrix, source: str, target: str, tau_max: int
) -> tuple[float, float]:
    """Chi-square statistic and p-value for "source onsets precede target flags".

    Builds the 2x2 contingency of [any source onset within the tau_max window
    strictly before t] x [target flag at t]. Degenerate tables (a zero margin)
    return (0.0, 1.0).
    """
    if tau_max < 1:
        raise InputError("tau_max must be at least 1")
    src = _onsets(flags.channel_flags(source)).astype(np.int64)
    tgt = flags.channel_flags(target).astype(bool)
    cum = np.concatenate([[0], np.cumsum(src)])
    t = src.size
    idx = np.arange(t)
    recent = cum[np.maximum(idx, 0)] - cum[np.maximum(idx - tau_max, 0)]
    preceded = recent > 0
    table = np.array(
        [
            [np.sum(~preceded & ~tgt), np.sum(~preceded & tgt)],
            [np.sum(preceded & ~tgt), np.sum(preceded & tgt)],
        ],
        dtype=np.int64,
    )
    if (table.sum(axis=0) == 0).any() or (table.sum(axis=1) == 0).any():
        return 0.0, 1.0
    stat, p, _, _ = stats.chi2_contingency(table, correction=False)
    return float(stat), float(p)


def _pick_by_weight_then_lag(e_fwd: LaggedLink, e_rev: LaggedLink) -> LaggedLink | None:
    if e_fwd.weight != e_rev.weight:
        return e_fwd if e_fwd.weight > e_rev.weight else e_rev
    if e_fwd.lag != e_rev.lag:
        return e_fwd if e_fwd.lag < e_rev.lag else e_rev
    return None


def resolve_bidirected(
    edges,
    flags: FlagMatrix | None = None,
    tau_max: int = 5,
    use_chi2: bool = True,
) -> tuple[list[LaggedLink], list[tuple[LaggedLink, LaggedLink]]]:
    """Resolve mutually directed pairs among grouped edges.

    Higher weight wins, then the more negative lag; a full tie is put to the
    onset-precedence test when enabled and the flag data is available. Pairs
    the test cannot significantly direct are returned in the undirected bucket
    for later orientation.
    """
    by_pair = {e.pair: e for e in edges}
    kept: list[LaggedLink] = []
    undirected: list[tuple[LaggedLink, LaggedLink]] = []
    seen: set[frozenset[str]] = set()
    for edge in sorted(edges, key=lambda e: e.pair):
        reverse = by_pair.get((edge.target, edge.source))
        if reverse is None:
            kept.append(edge)
            continue
        key = frozenset(edge.pair)
        if key in seen:
            continue
        seen.add(key)
        winner = _pick_by_weight_then_lag(edge, reverse)
        if winner is None and use_chi2 and flags is not None:
            stat_fwd, p_fwd = onset_precedence_stat(flags, edge.source, edge.target, tau_max)
            stat_rev, p_rev = onset_precedence_stat(flags, reverse.source, reverse.target, tau_max)
            fwd_ok = p_fwd <= _CHI2_SIG
            rev_ok = p_rev <= _CHI2_SIG
            if fwd_ok and (not rev_ok or stat_fwd > stat_rev):
                winner = edge
            elif rev_ok and (not fwd_ok or stat_rev > stat_fwd):
                winner = reverse
        if winner is not None:
            kept.append(winner)
        else:
            undirected.append((edge, reverse))
    return kept, undirected


def _creates_cycle(pairs: set[tuple[str, str]], candidate: tuple[str, str]) -> bool:
    src, tgt = candidate
    stack = [tgt]
    seen = set()
    adjacency: dict[str, list[str]] = {}
    for a, b in pairs | {candidate}:
        adjacency.setdefault(a, []).append(b)
    while stack:
        node = stack.pop()
        if node == src:
            return True
        if node in seen:
            continue
        seen.add(node)
        stack.extend(adjacency.get(node, ()))
    return False


def _direct_edges(
    undirected: list[tuple[LaggedLink, LaggedLink]],
    kept: list[LaggedLink],
    flags: FlagMatrix | None,
    tau_max: int,
    orient: str,
) -> list[LaggedLink]:
    """Orient leftover pairs: precedence statistic, then acyclicity, then names."""
    chosen: list[LaggedLink] = []
    pairs = {e.pair for e in kept}
    for e_fwd, e_rev in sorted(undirected, key=lambda p: p[0].pair):
        pick: LaggedLink | None = None
        if orient == "chi2" and flags is not None:
            stat_fwd, _ = onset_precedence_stat(flags, e_fwd.source, e_fwd.target, tau_max)
            stat_rev, _ = onset_precedence_stat(flags, e_rev.source, e_rev.target, tau_max)
            if stat_fwd > stat_rev:
                pick = e_fwd
            elif stat_rev > stat_fwd:
                pick = e_rev
        if pick is None:
            fwd_cycles = _creates_cycle(pairs, e_fwd.pair)
            rev_cycles = _creates_cycle(pairs, e_rev.pair)
            if fwd_cycles != rev_cycles:
                pick = e_rev if fwd_cycles else e_fwd
            else:
                pick = min(e_fwd, e_rev, key=lambda e: e.pair)
        chosen.append(pick)
        pairs.add(pick.pair)
    return chosen


def enforce_dag(edges, nodes=None) -> TemporalDag:
    """Break directed summary cycles by dropping the weakest edge on each one."""
    edges = list(edges)
    by_pair = {e.pair: e for e in edges}
    if len(by_pair) != len(edges):
        raise InputError("edges must already be grouped to one per ordered pair")
    if nodes is None:
        node_set = sorted({n for e in edges for n in e.pair})
    else:
        node_set = list(nodes)
    graph = nx.DiGraph()
    graph.add_nodes_from(sorted(node_set))
    for pair in sorted(by_pair):
        graph.add_edge(*pair)
    while True:
        try:
            cycle = nx.find_cycle(graph)
        except nx.NetworkXNoCycle:
            break
        victim = min(
            (by_pair[(a, b)] for a, b, *_ in cycle),
            key=lambda e: (e.weight, e.source, e.target),
        )
        graph.remove_edge(*victim.pair)
        del by_pair[victim.pair]
    return TemporalDag(tuple(node_set), tuple(by_pair.values()))


def prune(
    skeleton: SkeletonGraph,
    flags: FlagMatrix | None = None,
    tau_max: int = 5,
    t0_orient: str = "chi2",
) -> TemporalDag:
    """Full pruning chain: group, resolve pairs, orient leftovers, break cycles.

    ``t0_orient`` selects how fully tied contemporaneous pairs are directed:
    ``chi2`` uses the onset-precedence statistic (requires flag data), ``lex``
    keeps orientation purely structural. Never adds edges and never alters a
    kept edge's lag or weight.
    """
    if t0_orient not in ("chi2", "lex"):
        raise InputError(f"unknown t0_orient {t0_orient!r}")
    if t0_orient == "chi2" and flags is None:
        raise InputError("chi2 orientation requires the flag matrix")
    grouped = group_max(skeleton.links)
    kept, undirected = resolve_bidirected(
        grouped, flags, tau_max, use_chi2=(t0_orient == "chi2")
    )
    directed = _direct_edges(undirected, kept, flags, tau_max, t0_orient)
    return enforce_dag(kept + directed, nodes=skeleton.nodes)
