import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from activefdr.core import (
    FamilyKind,
    Instance,
    NoiseMode,
    PolicyFamily,
    WeightMode,
    complexity_pair,
    complexity_single,
    enumerate_policies,
    symdiff_region,
    uncontrolled_union,
    union_bound_weight,
)


@st.composite
def explicit_families(draw, max_n=8, max_size=10):
    n = draw(st.integers(1, max_n))
    subsets = st.frozensets(st.integers(1, n), min_size=1)
    policies = draw(st.lists(subsets, min_size=1, max_size=max_size, unique=True))
    return PolicyFamily("explicit", n, [sorted(p) for p in policies])


class TestInstance:
    def test_stochastic_default(self):
        inst = Instance([0.2, 0.9])
        assert inst.noise_mode is NoiseMode.STOCHASTIC
        assert inst.n == 2

    def test_rejects_out_of_range_eta(self):
        with pytest.raises(ValueError):
            Instance([0.5, 1.2])

    def test_persistent_fractional_needs_realization(self):
        with pytest.raises(ValueError):
            Instance([0.5, 1.0], NoiseMode.PERSISTENT)

    def test_realize_is_binary_and_seeded(self):
        eta = np.linspace(0, 1, 50)
        a = Instance.realize(eta, np.random.default_rng(3))
        b = Instance.realize(eta, np.random.default_rng(3))
        assert a.noise_mode is NoiseMode.PERSISTENT
        assert set(np.unique(a.fixed_labels())) <= {0.0, 1.0}
        np.testing.assert_array_equal(a.fixed_labels(), b.fixed_labels())
        assert a.fixed_labels()[0] == 0 and a.fixed_labels()[-1] == 1


class TestEnumeration:
    def test_thresholds(self):
        fam = PolicyFamily("thresholds", 3)
        assert enumerate_policies(fam) == [{1}, {1, 2}, {1, 2, 3}]

    def test_explicit_keeps_order(self):
        fam = PolicyFamily("explicit", 3, [[2], [1, 3]])
        assert enumerate_policies(fam) == [{2}, {1, 3}]

    def test_intervals_n3(self):
        fam = PolicyFamily("intervals", 3)
        assert enumerate_policies(fam) == [{1}, {2}, {3}, {1, 2}, {2, 3}, {1, 2, 3}]

    @pytest.mark.parametrize("n", [1, 2, 5, 9])
    def test_intervals_match_brute_force(self, n):
        fam = PolicyFamily("intervals", n)
        brute = {frozenset(range(a, b + 1)) for a in range(1, n + 1) for b in range(a, n + 1)}
        assert len(fam) == n * (n + 1) // 2
        assert set(enumerate_policies(fam)) == brute

    def test_empty_policy_rejected(self):
        with pytest.raises(ValueError):
            PolicyFamily("explicit", 3, [[1], []])

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            PolicyFamily("explicit", 3, [[1, 2], [2, 1]])

    def test_out_of_range_items_rejected(self):
        with pytest.raises(ValueError):
            PolicyFamily("explicit", 3, [[0, 1]])
        with pytest.raises(ValueError):
            PolicyFamily("explicit", 3, [[4]])

    def test_index_of_and_resolve(self):
        fam = PolicyFamily("thresholds", 5)
        assert fam.index_of([1, 2, 3]) == 2
        assert fam.resolve({1, 2}) == 1
        assert fam.resolve(4) == 4
        with pytest.raises(ValueError):
            fam.index_of([2])
        with pytest.raises(ValueError):
            fam.resolve(5)

    def test_json_roundtrip(self):
        fam = PolicyFamily("explicit", 4, [[1, 2], [3], [2, 3, 4]])
        back = PolicyFamily.from_json(fam.to_json())
        assert enumerate_policies(back) == enumerate_policies(fam)
        assert back.weight_mode is WeightMode.SAUER_COUNT
        thr = PolicyFamily.from_dict(PolicyFamily("thresholds", 7).to_dict())
        assert thr.kind is FamilyKind.THRESHOLDS and len(thr) == 7


class TestRegions:
    def test_symdiff_pair(self):
        fam = PolicyFamily("explicit", 3, [[1, 2], [2, 3]])
        assert symdiff_region([0, 1], fam) == {1, 3}

    def test_symdiff_single(self):
        fam = PolicyFamily("explicit", 3, [[1, 2], [2, 3]])
        assert symdiff_region([0], fam) == frozenset()

    def test_symdiff_all_thresholds(self):
        fam = PolicyFamily("thresholds", 4)
        assert symdiff_region(range(4), fam) == {2, 3, 4}

    def test_symdiff_empty_active_errors(self):
        with pytest.raises(ValueError):
            symdiff_region([], PolicyFamily("thresholds", 4))

    def test_uncontrolled_union(self):
        fam = PolicyFamily("explicit", 3, [[1, 2], [3]])
        assert uncontrolled_union([0, 1], [1], fam) == {1, 2}
        assert uncontrolled_union([0, 1], [0, 1], fam) == frozenset()

    def test_uncontrolled_union_thresholds(self):
        fam = PolicyFamily("thresholds", 3)
        assert uncontrolled_union(range(3), [fam.index_of([1])], fam) == {1, 2, 3}

    def test_uncontrolled_union_rejects_foreign_controlled(self):
        fam = PolicyFamily("thresholds", 3)
        with pytest.raises(ValueError):
            uncontrolled_union([0, 1], [2], fam)

    @settings(max_examples=60, deadline=None)
    @given(explicit_families())
    def test_symdiff_inside_union(self, fam):
        ids = range(len(fam))
        assert symdiff_region(ids, fam) <= uncontrolled_union(ids, [], fam)

    @settings(max_examples=60, deadline=None)
    @given(explicit_families(), st.data())
    def test_symdiff_excludes_agreed_items(self, fam, data):
        ids = data.draw(st.lists(st.integers(0, len(fam) - 1), min_size=1, unique=True))
        sets = [fam.items(p) for p in ids]
        agreed = {i for i in range(1, fam.n + 1) if len({i in s for s in sets}) == 1}
        assert not (symdiff_region(ids, fam) & agreed)


class TestVectorAlgebra:
    @pytest.mark.parametrize("kind", ["thresholds", "intervals"])
    def test_interval_kinds_match_membership(self, kind):
        fam = PolicyFamily(kind, 7)
        m = fam.membership.astype(int)
        ids = np.arange(len(fam))
        vals = np.random.default_rng(0).normal(size=7)
        np.testing.assert_allclose(fam.policy_sums(ids, vals), m @ vals)
        np.testing.assert_array_equal(fam.intersections(ids, ids), m @ m.T)
        sd = m.sum(1)[:, None] + m.sum(1)[None, :] - 2 * (m @ m.T)
        np.testing.assert_array_equal(fam.symdiff_sizes(ids, ids), sd)
        np.testing.assert_array_equal(fam.coverage(ids[::2]), m[::2].sum(0))

    def test_strict_subset(self):
        fam = PolicyFamily("explicit", 4, [[1], [1, 2], [3, 4], [1, 2, 3]])
        sub = fam.strict_subset(range(4), range(4))
        assert sub[0, 1] and sub[0, 3] and sub[1, 3]
        assert not sub[0, 0] and not sub[2, 3] and not sub[3, 1]


class TestComplexityWeights:
    def test_threshold_single(self):
        fam = PolicyFamily("thresholds", 8)
        assert complexity_single(fam, [1, 2, 3, 4, 5]) == 1

    def test_intervals_single_capped(self):
        fam = PolicyFamily("intervals", 5)
        assert complexity_single(fam, [3]) == 1
        assert complexity_single(fam, [2, 3]) == 2

    def test_sauer_eight_sets_of_size_three(self):
        policies = list(itertools.combinations(range(1, 7), 3))[:8]
        fam = PolicyFamily("explicit", 6, policies)
        assert complexity_single(fam, policies[0]) == 3

    def test_singleton_weight_is_one(self):
        fam = PolicyFamily("explicit", 5, [[1], [2], [3], [4], [5], [1, 2]])
        assert complexity_single(fam, [4]) == 1

    def test_threshold_pair(self):
        fam = PolicyFamily("thresholds", 8)
        assert complexity_pair(fam, [1, 2], [1, 2, 3, 4, 5]) == 1

    def test_two_set_explicit_pair(self):
        fam = PolicyFamily("explicit", 5, [[1, 2, 3], [4, 5]])
        assert complexity_pair(fam, 0, 1) == 1

    def test_pair_same_policy_errors(self):
        with pytest.raises(ValueError):
            complexity_pair(PolicyFamily("thresholds", 4), 1, 1)

    def test_analytic_on_explicit_errors(self):
        with pytest.raises(ValueError):
            PolicyFamily("explicit", 3, [[1]], weight_mode="analytic_vc")

    @settings(max_examples=60, deadline=None)
    @given(explicit_families())
    def test_pair_symmetry_cap_floor(self, fam):
        ids = np.arange(len(fam))
        sd = fam.symdiff_sizes(ids, ids)
        v = fam.v_pair(ids, ids, sd)
        np.testing.assert_array_equal(v, v.T)
        off = sd > 0
        assert np.all(v[off] >= 1) and np.all(v[off] <= sd[off])
        assert np.all(fam.v_single >= 1) and np.all(fam.v_single <= fam.sizes)

    @settings(max_examples=60, deadline=None)
    @given(explicit_families())
    def test_union_bound_weight_dominated_by_surrogate(self, fam):
        n = fam.n
        delta = 0.1
        counts = np.bincount(fam.sizes, minlength=n + 1)
        for size in np.unique(fam.sizes):
            surrogate = fam.v_single[fam.sizes == size][0]
            count = int(counts[size])
            bound = 4 * surrogate * math.log(math.e * n / delta)
            assert union_bound_weight(n, count, delta) <= bound
