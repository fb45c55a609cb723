import itertools

import numpy as np
import pytest

from anomalycd import (
    LaggedLink,
    SummaryGraph,
    TemporalDag,
    aprc,
    evaluate_graphs,
    graph_diff,
    shd,
    shdu,
    to_summary,
)


def sg(nodes, edges):
    """SummaryGraph from {(src, tgt): weight} or an iterable of pairs."""
    if not isinstance(edges, dict):
        edges = {pair: 1.0 for pair in edges}
    return SummaryGraph(tuple(nodes), dict(edges))


def random_summary(rng, nodes=("A", "B", "C", "D", "E", "F"), p=0.25):
    edges = {}
    for a, b in itertools.permutations(nodes, 2):
        if rng.random() < p:
            edges[(a, b)] = float(rng.random())
    return sg(nodes, edges)


def brute_shd(est, ref, nodes):
    """Elementwise ordered-adjacency comparison."""
    count = 0
    for a in nodes:
        for b in nodes:
            if a != b and (((a, b) in est.pairs) != ((a, b) in ref.pairs)):
                count += 1
    return count


def brute_pair_counts(est, ref, nodes):
    """Per unordered pair classification of skeleton and direction errors."""
    ue = um = rv = 0
    for a, b in itertools.combinations(nodes, 2):
        in_e = {(a, b), (b, a)} & est.pairs
        in_r = {(a, b), (b, a)} & ref.pairs
        if in_e and not in_r:
            ue += 1
        elif in_r and not in_e:
            um += 1
        elif in_e and in_r and in_e != in_r:
            rv += 1
    return ue, um, rv


class TestShd:
    def test_identical_graphs(self):
        g = sg("ABC", [("A", "B"), ("B", "C")])
        assert shd(g, g) == 0

    def test_single_reversed_edge_counts_two(self):
        ref = sg("ABC", [("A", "B"), ("B", "C")])
        est = sg("ABC", [("B", "A"), ("B", "C")])
        assert shd(est, ref) == 2

    def test_matches_brute_force_on_random_pairs(self):
        rng = np.random.default_rng(17)
        nodes = ("A", "B", "C", "D", "E", "F")
        for _ in range(50):
            est, ref = random_summary(rng), random_summary(rng)
            assert shd(est, ref) == brute_shd(est, ref, nodes)

    def test_symmetric_and_zero_on_self(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            g, h = random_summary(rng), random_summary(rng)
            assert shd(g, h) == shd(h, g)
            assert shd(g, g) == 0

    def test_triangle_inequality(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            g, h, k = (random_summary(rng) for _ in range(3))
            assert shd(g, k) <= shd(g, h) + shd(h, k)


class TestShduAndCounts:
    def test_single_reversed_edge_counts_once(self):
        nodes = tuple("ABCDEFGH")
        ref_edges = [("A", "B"), ("B", "C"), ("C", "D"), ("D", "E"),
                     ("E", "F"), ("F", "G"), ("G", "H"), ("A", "C"), ("B", "D")]
        assert len(ref_edges) == 9
        ref = sg(nodes, ref_edges)
        est_edges = [("B", "A")] + ref_edges[1:]
        est = sg(nodes, est_edges)
        diff = graph_diff(est, ref)
        assert diff.rv == 1
        assert shdu(est, ref) == 1
        assert shd(est, ref) == 2

    def test_matches_brute_force_pair_counts(self):
        rng = np.random.default_rng(23)
        nodes = ("A", "B", "C", "D", "E", "F")
        for _ in range(50):
            est, ref = random_summary(rng), random_summary(rng)
            diff = graph_diff(est, ref)
            assert (diff.ue, diff.um, diff.rv) == brute_pair_counts(est, ref, nodes)

    def test_shdu_never_exceeds_shd(self):
        rng = np.random.default_rng(29)
        for _ in range(50):
            est, ref = random_summary(rng), random_summary(rng)
            assert shdu(est, ref) <= shd(est, ref)

    def test_tp_fp_sum_to_estimated_edges(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            est, ref = random_summary(rng), random_summary(rng)
            diff = graph_diff(est, ref)
            assert diff.tp + diff.fp == len(est.pairs)


class TestPrecisionRecall:
    def test_perfect_estimate(self):
        g = sg("ABCD", [("A", "B"), ("C", "D"), ("B", "C")])
        report = evaluate_graphs(g, g)
        assert report.precision == 1.0
        assert report.recall == 1.0
        assert report.f1 == 1.0
        assert report.fpr == 0.0
        assert report.shdu == 0
        assert report.aprc == 1.0

    def test_bidirected_estimate_counts_both_directions(self):
        ref = sg("AB", [("A", "B")])
        est = sg("AB", [("A", "B"), ("B", "A")])
        diff = graph_diff(est, ref)
        assert diff.tp == 1 and diff.fp == 1

    def test_reversed_edge_in_fpr_numerator(self):
        nodes = ("A", "B", "C")
        ref = sg(nodes, [("A", "B")])
        est = sg(nodes, [("B", "A")])
        report = evaluate_graphs(est, ref)
        # One false positive that is also a reversal: numerator counts both.
        assert report.fpr == pytest.approx(2 / (4 + 1))

    def test_empty_against_empty(self):
        g = sg("AB", [])
        report = evaluate_graphs(g, g)
        assert report.precision == 1.0 and report.recall == 1.0


class TestAprc:
    def test_in_unit_interval(self):
        rng = np.random.default_rng(37)
        for _ in range(30):
            est, ref = random_summary(rng), random_summary(rng)
            assert 0.0 <= aprc(est, ref) <= 1.0

    def test_one_iff_true_edges_ranked_first(self):
        nodes = ("A", "B", "C", "D")
        ref = sg(nodes, [("A", "B"), ("B", "C")])
        est_good = sg(nodes, {("A", "B"): 0.9, ("B", "C"): 0.8, ("C", "D"): 0.2})
        assert aprc(est_good, ref) == pytest.approx(1.0)
        est_bad = sg(nodes, {("A", "B"): 0.9, ("C", "D"): 0.8, ("B", "C"): 0.2})
        assert aprc(est_bad, ref) < 1.0

    def test_missing_true_edge_caps_area(self):
        nodes = ("A", "B", "C")
        ref = sg(nodes, [("A", "B"), ("B", "C")])
        est = sg(nodes, {("A", "B"): 0.9})
        assert aprc(est, ref) == pytest.approx(0.5)


class TestToSummary:
    def test_collapses_lags_and_merges_duplicates(self):
        dag_links = (
            LaggedLink("A", "B", -1, 0.4, 0.01),
            LaggedLink("B", "C", 0, 0.6, 0.01),
        )
        dag = TemporalDag(("A", "B", "C"), dag_links)
        summary = to_summary(dag)
        assert summary.pairs == {("A", "B"), ("B", "C")}
        assert summary.edges[("A", "B")] == pytest.approx(0.4)

    def test_skeleton_multi_lag_takes_max_weight(self):
        from anomalycd import SkeletonGraph

        links = (
            LaggedLink("A", "B", -1, 0.4, 0.01),
            LaggedLink("A", "B", -3, 0.7, 0.01),
        )
        skeleton = SkeletonGraph(("A", "B"), links)
        summary = to_summary(skeleton)
        assert summary.edges[("A", "B")] == pytest.approx(0.7)
