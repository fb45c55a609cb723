import time


from anomalycd import (
    PriorLinkSet,
    SyntheticSpec,
    benchmark,
    generate_synthetic,
    learn_skeleton,
    to_summary,
)


def fixture(n_samples=4000, seed=3):
    spec = SyntheticSpec(
        n_nodes=5,
        max_lag=2,
        edge_probability=0.5,
        propagation_probability=0.9,
        base_rate=0.03,
        n_samples=n_samples,
        seed=seed,
    )
    return generate_synthetic(spec)


class TestBenchmark:
    def test_sizes_monotone_and_metrics_scored(self):
        flags, truth = fixture()
        rows = benchmark(
            flags, (5, 10, 20), tau_max=3, reference=to_summary(truth), repeats=2
        )
        sizes = [r.compressed_size for r in rows]
        assert sizes == sorted(sizes)
        assert all(r.wall_time_s > 0 for r in rows)
        assert all(r.metrics is not None for r in rows)
        assert all(0.0 <= r.metrics.f1 <= 1.0 for r in rows)

    def test_without_reference(self):
        flags, _ = fixture()
        rows = benchmark(flags, (5,), tau_max=3)
        assert rows[0].metrics is None

    def test_runtime_scales_at_most_linearly(self):
        # Same structure, 4x the samples: allow generous scheduler slack but
        # rule out super-linear growth in the sample count.
        flags_small, _ = fixture(n_samples=4000)
        flags_large, _ = fixture(n_samples=16000)
        priors_small = PriorLinkSet.full(flags_small.channels, 3)
        priors_large = PriorLinkSet.full(flags_large.channels, 3)

        def best_of(flags, priors, repeats=3):
            times = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                learn_skeleton(flags, 3, 0.05, priors)
                times.append(time.perf_counter() - t0)
            return min(times)

        t_small = best_of(flags_small, priors_small)
        t_large = best_of(flags_large, priors_large)
        assert t_large <= 10 * t_small, (t_small, t_large)
