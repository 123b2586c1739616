import numpy as np
import pytest

from activefdr.core import Instance, NoiseMode
from activefdr.sampling import (
    IndexStream,
    LabelOracle,
    RewardOracle,
    StreamExhausted,
    StreamMode,
    spawn_generators,
    stream_mode_for,
)


class TestIndexStream:
    @pytest.mark.parametrize("mode", list(StreamMode))
    def test_single_item(self, mode):
        stream = IndexStream(mode, 1, np.random.default_rng(0))
        assert stream.next_index() == 1

    def test_without_replacement_forced_last(self):
        stream = IndexStream("without_replacement", 3, np.random.default_rng(5))
        first = {stream.next_index(), stream.next_index()}
        assert stream.next_index() == ({1, 2, 3} - first).pop()
        assert stream.remaining == 0

    def test_without_replacement_exhausts(self):
        stream = IndexStream("without_replacement", 4, np.random.default_rng(1))
        drawn = stream.draw(4)
        assert sorted(drawn.tolist()) == [0, 1, 2, 3]
        np.testing.assert_array_equal(stream.drawn(), drawn)
        with pytest.raises(StreamExhausted):
            stream.next_index()

    def test_with_replacement_frequencies(self):
        n, draws = 10, 100_000
        stream = IndexStream("with_replacement", n, np.random.default_rng(11))
        counts = np.bincount(stream.draw(draws), minlength=n)
        sigma = np.sqrt(draws * 0.1 * 0.9)
        assert np.all(np.abs(counts - draws / n) <= 5 * sigma)

    def test_seed_determinism(self):
        a = IndexStream("with_replacement", 50, np.random.default_rng(9)).draw(200)
        b = IndexStream("with_replacement", 50, np.random.default_rng(9)).draw(200)
        np.testing.assert_array_equal(a, b)

    def test_hypergeometric_hit_mean(self):
        n, m, t, reps = 40, 12, 25, 4000
        region = np.zeros(n, dtype=bool)
        region[:m] = True
        rng = np.random.default_rng(2)
        hits = [region[IndexStream("without_replacement", n, rng).draw(t)].sum() for _ in range(reps)]
        se = np.std(hits, ddof=1) / np.sqrt(reps)
        assert abs(np.mean(hits) - t * m / n) <= 4 * se

    def test_mode_mapping(self):
        assert stream_mode_for(NoiseMode.PERSISTENT) is StreamMode.WITHOUT_REPLACEMENT
        assert stream_mode_for("stochastic") is StreamMode.WITH_REPLACEMENT


class TestLabelOracle:
    def test_deterministic_extremes(self):
        oracle = LabelOracle(Instance([1.0, 0.0]), np.random.default_rng(0))
        assert all(oracle.observe(1) == 1 for _ in range(20))
        assert all(oracle.observe(2) == 0 for _ in range(20))
        assert oracle.query_count == 40

    def test_bernoulli_mean(self):
        oracle = LabelOracle(Instance([0.3]), np.random.default_rng(4))
        labels = oracle.observe_many(np.zeros(10_000, dtype=int))
        assert abs(labels.mean() - 0.3) <= 0.02

    def test_persistent_fixed(self):
        inst = Instance.realize(np.full(30, 0.5), np.random.default_rng(8))
        oracle = LabelOracle(inst, np.random.default_rng(1))
        first = oracle.observe_many(np.arange(30))
        again = oracle.observe_many(np.arange(30))
        np.testing.assert_array_equal(first, again)
        np.testing.assert_array_equal(first, inst.fixed_labels())

    def test_out_of_range(self):
        oracle = LabelOracle(Instance([0.5, 0.5]))
        with pytest.raises(IndexError):
            oracle.observe(0)
        with pytest.raises(IndexError):
            oracle.observe(3)

    def test_mask_counts_only_observed(self):
        oracle = LabelOracle(Instance([1.0, 1.0, 1.0]), np.random.default_rng(0))
        out = oracle.observe_many(np.array([0, 1, 2, 0]), np.array([True, False, True, False]))
        assert oracle.query_count == 2
        np.testing.assert_array_equal(out, [1, 0, 1, 0])

    def test_mask_does_not_change_randomness(self):
        eta = Instance(np.full(5, 0.5))
        idx = np.arange(5).repeat(4)
        mask = np.arange(idx.size) % 3 == 0
        full = LabelOracle(eta, np.random.default_rng(3)).observe_many(idx)
        masked = LabelOracle(eta, np.random.default_rng(3)).observe_many(idx, mask)
        np.testing.assert_array_equal(full[mask], masked[mask])


class TestRewardOracle:
    def test_means_and_range(self):
        oracle = RewardOracle([[-1, 0, 1], [0.5, 0.5, 0.5]], [[0.2, 0.3, 0.5], [1 / 3, 1 / 3, 1 / 3]])
        np.testing.assert_allclose(oracle.means, [0.3, 0.5])
        draws = oracle.observe_many(np.zeros(20_000, dtype=int))
        assert set(np.unique(draws)) <= {-1.0, 0.0, 1.0}
        assert abs(draws.mean() - 0.3) < 0.03

    def test_rejects_bad_support(self):
        with pytest.raises(ValueError):
            RewardOracle([[2.0]], [[1.0]])
        with pytest.raises(ValueError):
            RewardOracle([[0.0, 1.0]], [[0.5, 0.6]])

    def test_persistent_returns_means(self):
        oracle = RewardOracle([[-1, 1]], [[0.25, 0.75]], mode="persistent")
        np.testing.assert_allclose(oracle.observe_many(np.zeros(3, dtype=int)), 0.5)


def test_spawned_generators_differ():
    a, b = spawn_generators(7, 2)
    assert a.random() != b.random()
    c, _ = spawn_generators(7, 2)
    assert np.random.default_rng(np.random.SeedSequence(7).spawn(2)[0]).random() == c.random()
