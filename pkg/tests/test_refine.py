import networkx as nx
import numpy as np
import pytest
from scipy import stats

from anomalycd import (
    InputError,
    LaggedLink,
    SkeletonGraph,
    TemporalDag,
    enforce_dag,
    group_max,
    onset_precedence_stat,
    prune,
    resolve_bidirected,
)
from conftest import make_flags


def link(src, tgt, lag=0, w=0.5, p=0.01):
    return LaggedLink(source=src, target=tgt, lag=lag, weight=w, p_value=p)


def lead_lag_flags(gap=1, step=25, n=600):
    """A's single-sample onsets lead B's by ``gap`` samples."""
    a = np.zeros(n, np.uint8)
    b = np.zeros(n, np.uint8)
    onsets = np.arange(20, n - 20, step)
    a[onsets] = 1
    b[onsets + gap] = 1
    return make_flags(np.column_stack([a, b]), ("A", "B"))


class TestGroupMax:
    def test_max_weight_wins(self):
        edges = [link("A", "B", -1, 0.8), link("A", "B", -3, 0.5)]
        kept = group_max(edges)
        assert len(kept) == 1 and kept[0].lag == -1

    def test_weight_tie_keeps_earliest_lag(self):
        edges = [link("A", "B", -1, 0.5), link("A", "B", -3, 0.5)]
        kept = group_max(edges)
        assert kept[0].lag == -3

    def test_single_edge_unchanged(self):
        edges = [link("A", "B", -2, 0.7)]
        assert group_max(edges) == edges


class TestOnsetPrecedence:
    def test_matches_hand_contingency(self):
        flags = lead_lag_flags()
        stat, p = onset_precedence_stat(flags, "A", "B", 5)
        src = flags.channel_flags("A").astype(int)
        tgt = flags.channel_flags("B").astype(bool)
        onset = np.zeros(src.size, bool)
        onset[0] = src[0] == 1
        onset[1:] = (src[1:] == 1) & (src[:-1] == 0)
        preceded = np.array(
            [onset[max(0, t - 5) : t].any() for t in range(src.size)]
        )
        table = np.array(
            [
                [np.sum(~preceded & ~tgt), np.sum(~preceded & tgt)],
                [np.sum(preceded & ~tgt), np.sum(preceded & tgt)],
            ]
        )
        expected_stat, expected_p = stats.chi2_contingency(table, correction=False)[:2]
        assert stat == pytest.approx(expected_stat)
        assert p == pytest.approx(expected_p)

    def test_leader_scores_higher(self):
        flags = lead_lag_flags()
        stat_ab, _ = onset_precedence_stat(flags, "A", "B", 5)
        stat_ba, _ = onset_precedence_stat(flags, "B", "A", 5)
        assert stat_ab > stat_ba

    def test_degenerate_table(self):
        flags = make_flags(np.zeros((50, 2), np.uint8), ("A", "B"))
        assert onset_precedence_stat(flags, "A", "B", 5) == (0.0, 1.0)


class TestResolveBidirected:
    def test_weight_rule(self):
        edges = [link("A", "B", 0, 0.6), link("B", "A", 0, 0.4)]
        kept, undirected = resolve_bidirected(edges)
        assert [e.pair for e in kept] == [("A", "B")]
        assert undirected == []

    def test_lag_rule_on_weight_tie(self):
        edges = [link("A", "B", -2, 0.5), link("B", "A", 0, 0.5)]
        kept, undirected = resolve_bidirected(edges)
        assert [e.pair for e in kept] == [("A", "B")]
        assert kept[0].lag == -2

    def test_chi2_directs_full_tie(self):
        flags = lead_lag_flags()
        edges = [link("A", "B", 0, 0.5), link("B", "A", 0, 0.5)]
        kept, undirected = resolve_bidirected(edges, flags, tau_max=5)
        assert [e.pair for e in kept] == [("A", "B")]
        assert undirected == []

    def test_symmetric_tie_goes_undirected(self):
        col = np.zeros(200, np.uint8)
        col[np.arange(10, 190, 20)] = 1
        flags = make_flags(np.column_stack([col, col]), ("A", "B"))
        edges = [link("A", "B", 0, 0.5), link("B", "A", 0, 0.5)]
        kept, undirected = resolve_bidirected(edges, flags, tau_max=5)
        assert kept == []
        assert len(undirected) == 1

    def test_tie_without_chi2_goes_undirected(self):
        edges = [link("A", "B", 0, 0.5), link("B", "A", 0, 0.5)]
        kept, undirected = resolve_bidirected(edges, use_chi2=False)
        assert kept == []
        assert len(undirected) == 1

    def test_unpaired_edges_pass_through(self):
        edges = [link("A", "B", -1, 0.9), link("C", "B", 0, 0.2)]
        kept, undirected = resolve_bidirected(edges)
        assert len(kept) == 2 and undirected == []


class TestEnforceDag:
    def test_acyclic_identity(self):
        edges = [link("A", "B", -1, 0.9), link("B", "C", 0, 0.4)]
        dag = enforce_dag(edges)
        assert set(e.pair for e in dag.edges) == {("A", "B"), ("B", "C")}

    def test_three_cycle_drops_weakest(self):
        edges = [link("A", "B", 0, 0.9), link("B", "C", 0, 0.8), link("C", "A", 0, 0.2)]
        dag = enforce_dag(edges)
        assert ("C", "A") not in {e.pair for e in dag.edges}
        assert len(dag.edges) == 2

    def test_overlapping_cycles_share_weak_edge(self):
        edges = [
            link("A", "B", 0, 0.1),
            link("B", "C", 0, 0.8),
            link("C", "A", 0, 0.9),
            link("B", "D", 0, 0.7),
            link("D", "A", 0, 0.85),
        ]
        graph = nx.DiGraph([e.pair for e in edges])
        assert len(list(nx.simple_cycles(graph))) == 2
        dag = enforce_dag(edges)
        assert len(dag.edges) == 4
        assert ("A", "B") not in {e.pair for e in dag.edges}

    def test_rejects_ungrouped_input(self):
        edges = [link("A", "B", 0, 0.5), link("A", "B", -1, 0.4)]
        with pytest.raises(InputError):
            enforce_dag(edges)


def random_skeleton(rng, n_nodes=6, n_links=14):
    names = tuple(f"N{i}" for i in range(n_nodes))
    seen = set()
    links = []
    for _ in range(n_links):
        i, j = rng.integers(0, n_nodes, size=2)
        if i == j:
            continue
        lag = -int(rng.integers(0, 4))
        key = (names[i], names[j], lag)
        if key in seen:
            continue
        seen.add(key)
        links.append(link(names[i], names[j], lag, float(rng.random() * 0.9 + 0.05)))
    return SkeletonGraph(names, tuple(links))


def random_flags(rng, names, n=400):
    return make_flags((rng.random((n, len(names))) < 0.1).astype(np.uint8), names)


class TestPrune:
    def test_clean_dag_unchanged(self):
        skeleton = SkeletonGraph(
            ("A", "B", "C"),
            (link("A", "B", -1, 0.9), link("B", "C", -2, 0.6)),
        )
        flags = make_flags(np.zeros((100, 3), np.uint8), ("A", "B", "C"))
        dag = prune(skeleton, flags, tau_max=3)
        assert set(dag.edges) == set(skeleton.links)

    def test_lex_orientation_without_flags(self):
        skeleton = SkeletonGraph(
            ("A", "B"), (link("B", "A", 0, 0.5), link("A", "B", 0, 0.5))
        )
        dag = prune(skeleton, None, tau_max=3, t0_orient="lex")
        assert [e.pair for e in dag.edges] == [("A", "B")]

    def test_chi2_requires_flags(self):
        skeleton = SkeletonGraph(("A", "B"), (link("A", "B", 0, 0.5),))
        with pytest.raises(InputError):
            prune(skeleton, None, t0_orient="chi2")

    def test_invariants_on_random_skeletons(self):
        rng = np.random.default_rng(424242)
        for _ in range(60):
            skeleton = random_skeleton(rng)
            flags = random_flags(rng, skeleton.nodes)
            dag = prune(skeleton, flags, tau_max=3)
            # Constructing TemporalDag revalidates all three invariants.
            TemporalDag(dag.nodes, dag.edges)
            input_keys = {(e.source, e.target, e.lag, e.weight) for e in skeleton.links}
            for e in dag.edges:
                assert (e.source, e.target, e.lag, e.weight) in input_keys

    def test_idempotent(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            skeleton = random_skeleton(rng)
            flags = random_flags(rng, skeleton.nodes)
            once = prune(skeleton, flags, tau_max=3)
            twice = prune(SkeletonGraph(once.nodes, once.edges), flags, tau_max=3)
            assert once.edges == twice.edges

    def test_forced_bidirected_cluster(self):
        skeleton = SkeletonGraph(
            ("A", "B", "C"),
            (
                link("A", "B", 0, 0.5),
                link("B", "A", 0, 0.5),
                link("B", "C", 0, 0.5),
                link("C", "B", 0, 0.5),
                link("C", "A", 0, 0.9),
            ),
        )
        flags = random_flags(np.random.default_rng(3), ("A", "B", "C"))
        dag = prune(skeleton, flags, tau_max=3)
        pairs = {e.pair for e in dag.edges}
        assert all((t, s) not in pairs for s, t in pairs)
