"""Temporal Bayesian network: unrolling, smoothed CPD fitting, exact queries.

Lagged edges are materialized as extra data columns (``<channel>_lag<s>``
holding the channel shifted back by s samples) so every edge in the unrolled
graph acts contemporaneously. CPDs use Dirichlet smoothing with a uniform
equivalent sample size, which keeps every probability strictly inside (0, 1).
Conditional-probability queries run exact variable elimination; causal-path
queries test d-connection on the unrolled DAG.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError, InvariantViolation
from .flags import FlagMatrix
from .graphs import LaggedLink, TemporalDag

__all__ = [
    "UnrolledDataset",
    "Cpd",
    "BayesNetModel",
    "QueryResult",
    "unroll",
    "fit",
    "query_cp",
    "check_causal_path",
    "load_model_json",
    "write_model_json",
]


@dataclass(frozen=True)
class UnrolledDataset:
    """Aligned sample table over original and lag-shifted synthetic columns."""

    columns: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.uint8)
        if vals.ndim != 2 or vals.shape[1] != len(self.columns):
            raise InputError("values shape does not match column count")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "columns", tuple(self.columns))

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]


def _lag_column_name(channel: str, lag: int) -> str:
    return f"{channel}_lag{-lag}"


def unroll(flags: FlagMatrix, dag: TemporalDag) -> tuple[UnrolledDataset, TemporalDag]:
    """Shift lagged edge sources into synthetic root columns.

    Each distinct (source, lag < 0) pair becomes one column ``src_lag<s>``
    with values src(t - s); the first max-lag rows are dropped everywhere so
    all columns stay aligned. Contemporaneous edges keep their endpoints.
    """
    unknown = set(dag.nodes) - set(flags.channels)
    if unknown:
        raise InputError(f"graph nodes missing from flag data: {sorted(unknown)}")
    data = flags.flags
    lagged_sources = sorted({(e.source, -e.lag) for e in dag.edges if e.lag < 0})
    max_shift = max((s for _, s in lagged_sources), default=0)
    if max_shift >= flags.n_samples:
        raise InputError(f"lag {max_shift} is not smaller than the sample count")

    columns = list(flags.channels)
    cols = [data[max_shift:, i] for i in range(flags.n_channels)]
    for channel, shift in lagged_sources:
        columns.append(_lag_column_name(channel, -shift))
        idx = flags.channels.index(channel)
        cols.append(data[max_shift - shift : flags.n_samples - shift, idx])

    new_edges = []
    for e in dag.edges:
        source = e.source if e.lag == 0 else _lag_column_name(e.source, e.lag)
        new_edges.append(
            LaggedLink(source=source, target=e.target, lag=e.lag, weight=e.weight,
                       p_value=e.p_value)
        )
    unrolled_dag = TemporalDag(tuple(columns), tuple(new_edges))
    return UnrolledDataset(tuple(columns), np.column_stack(cols)), unrolled_dag


@dataclass(frozen=True)
class Cpd:
    """P(node = 1 | parent configuration) for all configurations.

    ``parents`` is sorted; configuration index bit m carries the state of
    ``parents[m]``.
    """

    node: str
    parents: tuple[str, ...]
    p_one: np.ndarray

    def __post_init__(self):
        table = np.array(self.p_one, dtype=float)
        if table.shape != (2 ** len(self.parents),):
            raise InputError(f"CPD for {self.node!r} has wrong table size")
        if not ((table > 0) & (table < 1)).all():
            raise InputError(f"CPD for {self.node!r} must lie strictly inside (0, 1)")
        table.setflags(write=False)
        object.__setattr__(self, "p_one", table)
        object.__setattr__(self, "parents", tuple(self.parents))


@dataclass(frozen=True)
class BayesNetModel:
    dag: TemporalDag
    cpds: dict[str, Cpd]
    ess: float

    def __post_init__(self):
        if set(self.cpds) != set(self.dag.nodes):
            raise InputError("CPDs must cover exactly the graph nodes")
        for node in self.dag.nodes:
            if tuple(self.dag.parents_of(node)) != self.cpds[node].parents:
                raise InputError(f"CPD parents for {node!r} disagree with the graph")


@dataclass(frozen=True)
class QueryResult:
    probability: float
    target: tuple[str, int]
    evidence: tuple[tuple[str, int], ...]


def fit(data: UnrolledDataset, dag: TemporalDag, ess: float = 1.0) -> BayesNetModel:
    """Smoothed conditional probability tables from counted configurations.

    P(node=1 | config) = (count(node=1, config) + ess / 2^(k+1))
                       / (count(config) + ess / 2^k)
    for k parents; configurations never seen fall back to the uniform 0.5.
    As ess approaches 0 the fit converges to the observed relative
    frequencies.
    """
    if not ess > 0:
        raise InputError("ess must be positive")
    missing = set(dag.nodes) - set(data.columns)
    if missing:
        raise InputError(f"graph nodes missing from data: {sorted(missing)}")
    cpds = {}
    for node in dag.nodes:
        parents = tuple(dag.parents_of(node))
        k = len(parents)
        node_col = data.column(node).astype(np.int64)
        config = np.zeros(data.values.shape[0], dtype=np.int64)
        for m, parent in enumerate(parents):
            config |= data.column(parent).astype(np.int64) << m
        cfg_counts = np.bincount(config, minlength=2**k).astype(float)
        one_counts = np.bincount(config, weights=node_col, minlength=2**k)
        table = (one_counts + ess / 2 ** (k + 1)) / (cfg_counts + ess / 2**k)
        cpds[node] = Cpd(node=node, parents=parents, p_one=table)
    return BayesNetModel(dag=dag, cpds=cpds, ess=float(ess))


# -- exact inference ----------------------------------------------------------


class _Factor:
    """Table over binary variables; axes follow the ``variables`` tuple."""

    __slots__ = ("variables", "table")

    def __init__(self, variables: tuple[str, ...], table: np.ndarray):
        self.variables = variables
        self.table = table

    @classmethod
    def from_cpd(cls, cpd: Cpd) -> "_Factor":
        k = len(cpd.parents)
        # Fortran order puts bit m of the config index on axis m.
        p_one = cpd.p_one.reshape((2,) * k, order="F") if k else cpd.p_one.reshape(())
        return cls(cpd.parents + (cpd.node,), np.stack([1.0 - p_one, p_one], axis=-1))

    def reduce(self, evidence: dict[str, int]) -> "_Factor":
        keep, index = [], []
        for var in self.variables:
            if var in evidence:
                index.append(evidence[var])
            else:
                keep.append(var)
                index.append(slice(None))
        return _Factor(tuple(keep), self.table[tuple(index)])

    def multiply(self, other: "_Factor") -> "_Factor":
        merged = tuple(sorted(set(self.variables) | set(other.variables)))
        return _Factor(merged, self._expand(merged) * other._expand(merged))

    def _expand(self, variables: tuple[str, ...]) -> np.ndarray:
        order = [self.variables.index(v) for v in variables if v in self.variables]
        table = np.transpose(self.table, order) if order else self.table
        shape = tuple(2 if v in self.variables else 1 for v in variables)
        return table.reshape(shape)

    def marginalize(self, var: str) -> "_Factor":
        axis = self.variables.index(var)
        rest = tuple(v for v in self.variables if v != var)
        return _Factor(rest, self.table.sum(axis=axis))


def _min_fill_order(scopes: list[set[str]], eliminate: set[str]) -> list[str]:
    neighbors: dict[str, set[str]] = {}
    for scope in scopes:
        for v in scope:
            neighbors.setdefault(v, set()).update(scope - {v})
    order = []
    remaining = set(eliminate)
    while remaining:
        def fill_cost(v: str) -> int:
            around = [u for u in neighbors.get(v, ()) if u in neighbors]
            return sum(
                1
                for i, a in enumerate(around)
                for b in around[i + 1 :]
                if b not in neighbors.get(a, ())
            )

        best = min(sorted(remaining), key=lambda v: (fill_cost(v), v))
        order.append(best)
        remaining.discard(best)
        around = {u for u in neighbors.pop(best, ()) if u in neighbors}
        for u in around:
            neighbors[u].discard(best)
            neighbors[u].update(around - {u})
    return order


def _posterior(model: BayesNetModel, target: str, evidence: dict[str, int]) -> np.ndarray:
    factors = [_Factor.from_cpd(cpd).reduce(evidence) for cpd in model.cpds.values()]
    hidden = {v for f in factors for v in f.variables} - {target}
    for var in _min_fill_order([set(f.variables) for f in factors], hidden):
        related = [f for f in factors if var in f.variables]
        if not related:
            continue
        product = related[0]
        for f in related[1:]:
            product = product.multiply(f)
        factors = [f for f in factors if var not in f.variables]
        factors.append(product.marginalize(var))
    result = _Factor((), np.array(1.0))
    for f in factors:
        result = result.multiply(f)
    if result.variables != (target,):
        raise InvariantViolation(
            f"elimination left variables {result.variables}, expected ({target},)"
        )
    total = result.table.sum()
    if not total > 0:
        raise InputError("evidence has probability zero under the model")
    return result.table / total


def _normalize_evidence(evidence) -> dict[str, int]:
    out: dict[str, int] = {}
    for node, state in evidence:
        state = int(state)
        if state not in (0, 1):
            raise InputError(f"evidence state for {node!r} must be 0 or 1")
        if node in out and out[node] != state:
            raise InputError(f"conflicting evidence for {node!r}")
        out[node] = state
    return out


def query_cp(model: BayesNetModel, target: tuple[str, int], evidence=()) -> QueryResult:
    """Exact posterior P(target | evidence) by variable elimination."""
    node, state = target[0], int(target[1])
    if state not in (0, 1):
        raise InputError("target state must be 0 or 1")
    if node not in model.cpds:
        raise InputError(f"unknown node {node!r}")
    ev = _normalize_evidence(evidence)
    if node in ev:
        raise InputError("target node cannot also be evidence")
    for name in ev:
        if name not in model.cpds:
            raise InputError(f"unknown evidence node {name!r}")
    dist = _posterior(model, node, ev)
    return QueryResult(
        probability=float(dist[state]),
        target=(node, state),
        evidence=tuple(sorted(ev.items())),
    )


def check_causal_path(model: BayesNetModel, source: str, target: str, evidence=()) -> bool:
    """True when source and target are d-connected given the evidence nodes."""
    ev_nodes = {e[0] if isinstance(e, tuple) else e for e in evidence}
    for name in (source, target, *ev_nodes):
        if name not in model.cpds:
            raise InputError(f"unknown node {name!r}")
    if source in ev_nodes or target in ev_nodes:
        raise InputError("source and target must not be observed")
    if source == target:
        raise InputError("source and target must differ")

    parents: dict[str, list[str]] = {n: [] for n in model.dag.nodes}
    children: dict[str, list[str]] = {n: [] for n in model.dag.nodes}
    for e in model.dag.edges:
        parents[e.target].append(e.source)
        children[e.source].append(e.target)

    ancestors = set()
    stack = list(ev_nodes)
    while stack:
        node = stack.pop()
        for p in parents[node]:
            if p not in ancestors:
                ancestors.add(p)
                stack.append(p)
    opened = ancestors | ev_nodes

    visited: set[tuple[str, bool]] = set()
    stack2: list[tuple[str, bool]] = [(source, True)]
    while stack2:
        node, upward = stack2.pop()
        if (node, upward) in visited:
            continue
        visited.add((node, upward))
        if node not in ev_nodes and node == target:
            return True
        if upward:
            if node not in ev_nodes:
                stack2.extend((p, True) for p in parents[node])
                stack2.extend((c, False) for c in children[node])
        else:
            if node not in ev_nodes:
                stack2.extend((c, False) for c in children[node])
            if node in opened:
                stack2.extend((p, True) for p in parents[node])
    return False


# -- serialization -------------------------------------------------------------


def write_model_json(model: BayesNetModel, path: str | Path) -> None:
    payload = {
        "nodes": list(model.dag.nodes),
        "edges": [
            {
                "source": e.source,
                "target": e.target,
                "lag": e.lag,
                "weight": e.weight,
                "p_value": e.p_value,
            }
            for e in model.dag.edges
        ],
        "ess": model.ess,
        "cpds": {
            node: {"parents": list(cpd.parents), "p_one": [float(v) for v in cpd.p_one]}
            for node, cpd in sorted(model.cpds.items())
        },
    }
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model_json(path: str | Path) -> BayesNetModel:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    with path.open(encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from exc
    try:
        edges = tuple(
            LaggedLink(
                source=e["source"],
                target=e["target"],
                lag=int(e["lag"]),
                weight=float(e["weight"]),
                p_value=float(e.get("p_value", 0.0)),
            )
            for e in payload["edges"]
        )
        dag = TemporalDag(tuple(payload["nodes"]), edges)
        cpds = {
            node: Cpd(node=node, parents=tuple(raw["parents"]), p_one=np.asarray(raw["p_one"]))
            for node, raw in payload["cpds"].items()
        }
        return BayesNetModel(dag=dag, cpds=cpds, ess=float(payload["ess"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: bad model JSON: {exc}") from exc
