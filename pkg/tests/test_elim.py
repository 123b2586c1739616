import math

import numpy as np
import pytest

from activefdr.confidence import BoundConfig, BoundKind
from activefdr.core import Instance, NoiseMode, PolicyFamily
from activefdr.elim import ElimState, epoch_update, estimates, run_classify
from activefdr.metrics import best_policy, mu_values
from activefdr.results import CAP_HIT
from activefdr.sampling import RewardOracle


def hand_pair_radius(sd, v, n, t, delta):
    log = math.log(n / delta)
    return math.sqrt(8 * sd * n * v * log / t) + 4 * n * v * log / (3 * t)


def crafted_state(family, sums, t=8):
    active = np.arange(len(family))
    return ElimState(active=active, region=np.ones(family.n, dtype=bool), epoch=1, t=t,
                     item_sums=np.asarray(sums, dtype=float), delta=0.1)


class TestEpochUpdate:
    family = PolicyFamily("explicit", 4, [[1], [2], [3, 4]])
    cfg = BoundConfig("stochastic", n=4)

    def test_crafted_sums(self):
        state = epoch_update(crafted_state(self.family, [20, 0, 0, 0]), self.family, self.cfg)
        # estimates (n/t) * G over each policy: 10, 0, 0; delta_1 = 0.05
        r12 = hand_pair_radius(2, 1, 4, 8, 0.05)
        r13 = hand_pair_radius(3, 1, 4, 8, 0.05)
        assert 10 > r12 and 10 < r13
        assert state.active.tolist() == [0, 2]
        assert state.delta_k == pytest.approx(0.05)
        assert state.epoch == 2
        np.testing.assert_array_equal(state.region, [True, False, True, True])

    def test_nothing_crosses(self):
        state = epoch_update(crafted_state(self.family, [5, 0, 1, 0]), self.family, self.cfg)
        assert state.active.tolist() == [0, 1, 2]

    def test_snapshot_semantics(self):
        """A policy removed this epoch still eliminates others in the same epoch."""
        fam = PolicyFamily("explicit", 3, [[1], [2], [3]])
        cfg = BoundConfig("stochastic", n=3)
        r = hand_pair_radius(2, 1, 3, 4, 0.05)
        # estimates (3/4) * G: policy 0 beats 1 by r + 1, policy 1 beats 2 by r + 1
        g = np.array([2 * r + 2, r + 1, 0]) * 4 / 3
        state = epoch_update(crafted_state(fam, g, t=4), fam, cfg)
        assert state.active.tolist() == [0]

    def test_exact_mode(self):
        state = epoch_update(crafted_state(self.family, [1, 0, 0, 0]), self.family, self.cfg, exact=True)
        assert state.active.tolist() == [0]

    def test_estimator_identity(self):
        state = crafted_state(self.family, [3, -1, 2, 5])
        est = estimates(state, self.family)
        assert est[2] - est[0] == pytest.approx(4 / 8 * ((2 + 5) - 3))


class TestRunClassify:
    def test_single_policy(self):
        res = run_classify(Instance([0.3, 0.6]), PolicyFamily("explicit", 2, [[1]]), 0.1, seed=0)
        assert res.winner == 0 and res.labels_used == 0

    def test_step_thresholds(self):
        eta = np.where(np.arange(1, 21) <= 10, 0.9, 0.1)
        fam = PolicyFamily("thresholds", 20)
        wins = [run_classify(Instance(eta), fam, 0.1, seed=s).winner for s in range(10)]
        assert wins.count(fam.index_of(range(1, 11))) >= 9

    @pytest.mark.parametrize("seed", range(5))
    def test_persistent_exact_and_budget(self, seed):
        rng = np.random.default_rng(seed)
        labels = (rng.random(14) < 0.5).astype(float)
        fam = PolicyFamily("intervals", 14)
        inst = Instance(labels, NoiseMode.PERSISTENT)
        res = run_classify(inst, fam, 0.1, seed=seed)
        assert res.labels_used <= 14
        mu = mu_values(fam, inst)
        assert mu[res.winner] == mu.max()

    def test_persistent_without_exact_update_can_stop_early(self):
        inst = Instance([1, 1, 0, 0, 1, 0], NoiseMode.PERSISTENT)
        res = run_classify(inst, PolicyFamily("thresholds", 6), 0.1, seed=1, exact_at_exhaustion=False)
        assert res.t == 6 and all("exact" not in rec for rec in res.trace)

    def test_reproducible(self):
        inst = Instance(np.linspace(0.9, 0.1, 12))
        fam = PolicyFamily("intervals", 12)
        a = run_classify(inst, fam, 0.1, seed=42)
        b = run_classify(inst, fam, 0.1, seed=42)
        assert a.summary() == b.summary() and a.trace == b.trace

    def test_passive_dominates(self):
        inst = Instance(np.where(np.arange(1, 17) <= 6, 0.8, 0.2))
        fam = PolicyFamily("thresholds", 16)
        for seed in range(5):
            act = run_classify(inst, fam, 0.1, seed=seed)
            pas = run_classify(inst, fam, 0.1, seed=seed, passive=True)
            assert pas.labels_used >= act.labels_used
            assert pas.labels_used == pas.t

    def test_cap_flag(self):
        inst = Instance([0.5, 0.5, 0.5])
        fam = PolicyFamily("explicit", 3, [[1], [2]])
        res = run_classify(inst, fam, 0.1, seed=0, cap=2 ** 10)
        assert res.cap_hit and CAP_HIT in res.flags and res.t == 2 ** 10

    def test_threshold_bound(self):
        eta = np.where(np.arange(1, 33) <= 8, 0.95, 0.05)
        fam = PolicyFamily("thresholds", 32)
        cfg = BoundConfig("stochastic", BoundKind.THRESHOLD_SPECIAL, 32)
        res = run_classify(Instance(eta), fam, 0.1, cfg, seed=3)
        assert res.winner == fam.index_of(range(1, 9))

    def test_threshold_bound_needs_thresholds(self):
        cfg = BoundConfig("stochastic", BoundKind.THRESHOLD_SPECIAL, 4)
        with pytest.raises(ValueError):
            run_classify(Instance(np.full(4, 0.5)), PolicyFamily("intervals", 4), 0.1, cfg)

    def test_general_rewards(self):
        n = 8
        rng = np.random.default_rng(0)
        means = np.array([0.6, 0.5, 0.4, -0.5, -0.6, 0.5, -0.4, -0.7])
        values = np.tile([-1.0, 0.0, 1.0], (n, 1))
        probs = np.stack([(1 - means) / 2, np.zeros(n), (1 + means) / 2], axis=1)
        oracle = RewardOracle(values, probs, rng=rng)
        np.testing.assert_allclose(oracle.means, means)
        fam = PolicyFamily("intervals", n)
        res = run_classify(Instance(np.full(n, 0.5)), fam, 0.1, seed=4, rewards=oracle)
        assert res.winner == int(np.argmax(fam.policy_sums(np.arange(len(fam)), means)))

    def test_three_point_rewards(self):
        means = np.array([0.5, 0.3, -0.3, 0.4])
        values = np.tile([-1.0, 0.0, 1.0], (4, 1))
        p_plus = np.clip(means, 0, None) + 0.2
        p_minus = p_plus - means
        probs = np.stack([p_minus, 1 - p_plus - p_minus, p_plus], axis=1)
        oracle = RewardOracle(values, probs)
        fam = PolicyFamily("explicit", 4, [[1, 2], [1, 3], [4], [1, 2, 4]])
        res = run_classify(Instance(np.full(4, 0.5)), fam, 0.1, seed=2, rewards=oracle)
        assert res.winner == 3

    def test_fast_path_label_counts(self):
        eta = np.where(np.arange(1, 17) <= 5, 0.85, 0.15)
        fam = PolicyFamily("thresholds", 16)
        slow = [run_classify(Instance(eta), fam, 0.1, seed=s).labels_used for s in range(30)]
        fast = [run_classify(Instance(eta), fam, 0.1, seed=s, fast_path=True).labels_used for s in range(30)]
        se = math.sqrt(np.var(slow, ddof=1) / 30 + np.var(fast, ddof=1) / 30)
        assert abs(np.mean(slow) - np.mean(fast)) <= 4 * se

    def test_fast_path_rejects_persistent(self):
        with pytest.raises(ValueError):
            run_classify(Instance([1, 0], NoiseMode.PERSISTENT), PolicyFamily("thresholds", 2), 0.1, fast_path=True)

    def test_bad_delta(self):
        with pytest.raises(ValueError):
            run_classify(Instance([0.5]), PolicyFamily("thresholds", 1), 1.0)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            run_classify(Instance([0.5, 0.5]), PolicyFamily("thresholds", 3), 0.1)

    def test_trace_shape(self):
        inst = Instance(np.where(np.arange(1, 9) <= 4, 0.9, 0.1))
        res = run_classify(inst, PolicyFamily("thresholds", 8), 0.1, seed=0)
        assert [rec["t"] for rec in res.trace] == [2 ** k for k in range(1, len(res.trace) + 1)]
        assert all({"k", "t", "n_active", "n_region", "labels"} <= set(rec) for rec in res.trace)
        assert res.trace[-1]["n_region"] == 0
        assert res.trace_jsonl().count("\n") == len(res.trace)
        assert res.winner == best_policy(PolicyFamily("thresholds", 8), inst)
