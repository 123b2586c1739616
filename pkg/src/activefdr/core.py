"""Instances, policy families and the set algebra the engines run on.

Items are 1-based at the public surface (``enumerate_policies``, JSON) and
0-based everywhere inside numpy arrays.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np


class NoiseMode(str, enum.Enum):
    STOCHASTIC = "stochastic"
    PERSISTENT = "persistent"


class FamilyKind(str, enum.Enum):
    THRESHOLDS = "thresholds"
    INTERVALS = "intervals"
    EXPLICIT = "explicit"


class WeightMode(str, enum.Enum):
    ANALYTIC_VC = "analytic_vc"
    SAUER_COUNT = "sauer_count"


@dataclass(frozen=True)
class Instance:
    """n items with Bernoulli means ``eta`` and a noise mode.

    In persistent mode the labels are fixed. They are ``realized_labels`` when
    given, otherwise ``eta`` itself, which must then be 0/1 valued.
    """

    eta: np.ndarray
    noise_mode: NoiseMode = NoiseMode.STOCHASTIC
    realized_labels: Optional[np.ndarray] = None

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        if eta.ndim != 1 or eta.size == 0:
            raise ValueError("eta must be a nonempty 1-d vector")
        if np.any(eta < 0) or np.any(eta > 1) or not np.all(np.isfinite(eta)):
            raise ValueError("eta entries must lie in [0, 1]")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "noise_mode", NoiseMode(self.noise_mode))
        labels = self.realized_labels
        if labels is not None:
            if self.noise_mode is not NoiseMode.PERSISTENT:
                raise ValueError("realized_labels only apply to persistent instances")
            labels = np.asarray(labels)
            if labels.shape != eta.shape or not np.all((labels == 0) | (labels == 1)):
                raise ValueError("realized_labels must be a 0/1 vector of length n")
            binary = (eta == 0) | (eta == 1)
            if np.any(labels[binary] != eta[binary]):
                raise ValueError("realized_labels must equal eta where eta is 0 or 1")
            object.__setattr__(self, "realized_labels", labels.astype(np.int8))
        elif self.noise_mode is NoiseMode.PERSISTENT and not np.all((eta == 0) | (eta == 1)):
            raise ValueError(
                "persistent instance with fractional eta needs realized_labels "
                "(see Instance.realize)"
            )

    @property
    def n(self) -> int:
        return int(self.eta.size)

    def fixed_labels(self) -> np.ndarray:
        """Persistent labels as a float 0/1 vector."""
        if self.noise_mode is not NoiseMode.PERSISTENT:
            raise ValueError("stochastic instances have no fixed labels")
        if self.realized_labels is not None:
            return self.realized_labels.astype(float)
        return self.eta.copy()

    @classmethod
    def realize(cls, eta, rng: np.random.Generator) -> "Instance":
        """Persistent instance whose labels are one Bernoulli(eta) draw."""
        eta = np.asarray(eta, dtype=float)
        labels = (rng.random(eta.size) < eta).astype(np.int8)
        return cls(eta, NoiseMode.PERSISTENT, labels)


PolicyLike = Union[int, Iterable[int]]


class PolicyFamily:
    """An enumerable collection of nonempty item sets.

    Thresholds are ``{[k] : 1 <= k <= n}``; intervals are all contiguous
    ranges ordered by length then start; explicit families keep the given
    order. Policy ids index that canonical order.
    """

    def __init__(
        self,
        kind: Union[FamilyKind, str],
        n: int,
        policies: Optional[Sequence[Iterable[int]]] = None,
        weight_mode: Union[WeightMode, str, None] = None,
    ):
        self.kind = FamilyKind(kind)
        if n < 1:
            raise ValueError("n must be positive")
        self.n = int(n)
        if weight_mode is None:
            weight_mode = (
                WeightMode.SAUER_COUNT if self.kind is FamilyKind.EXPLICIT else WeightMode.ANALYTIC_VC
            )
        self.weight_mode = WeightMode(weight_mode)
        if self.kind is FamilyKind.EXPLICIT and self.weight_mode is WeightMode.ANALYTIC_VC:
            raise ValueError("analytic VC weights are only defined for thresholds and intervals")

        self._lo = self._hi = None
        self._membership = None
        if self.kind is FamilyKind.THRESHOLDS:
            if policies is not None:
                raise ValueError("thresholds family is implicit; do not pass policies")
            self._lo = np.zeros(self.n, dtype=np.int64)
            self._hi = np.arange(1, self.n + 1, dtype=np.int64)
        elif self.kind is FamilyKind.INTERVALS:
            if policies is not None:
                raise ValueError("intervals family is implicit; do not pass policies")
            lo, hi = [], []
            for length in range(1, self.n + 1):
                for start in range(0, self.n - length + 1):
                    lo.append(start)
                    hi.append(start + length)
            self._lo = np.array(lo, dtype=np.int64)
            self._hi = np.array(hi, dtype=np.int64)
        else:
            if not policies:
                raise ValueError("explicit family needs at least one policy")
            rows = np.zeros((len(policies), self.n), dtype=bool)
            seen = set()
            for r, pol in enumerate(policies):
                items = sorted(int(i) for i in pol)
                if not items:
                    raise ValueError("empty policy is not allowed")
                if items[0] < 1 or items[-1] > self.n:
                    raise ValueError(f"policy {items} has items outside [1, {self.n}]")
                key = tuple(items)
                if key in seen:
                    raise ValueError(f"duplicate policy {items}")
                seen.add(key)
                rows[r, np.array(items) - 1] = True
            self._membership = rows

        if self._lo is not None:
            self.sizes = (self._hi - self._lo).astype(np.int64)
        else:
            self.sizes = self._membership.sum(axis=1).astype(np.int64)
        self._index = None
        self._b2_counts = None
        self.v_single = self._compute_v_single()

    # ------------------------------------------------------------------ basics
    def __len__(self) -> int:
        return int(self.sizes.size)

    def __repr__(self) -> str:
        return f"PolicyFamily(kind={self.kind.value!r}, n={self.n}, size={len(self)})"

    @property
    def is_interval_kind(self) -> bool:
        return self._lo is not None

    @property
    def membership(self) -> np.ndarray:
        """Boolean |Pi| x n matrix, built lazily for implicit kinds."""
        if self._membership is None:
            cols = np.arange(self.n)
            self._membership = (cols[None, :] >= self._lo[:, None]) & (cols[None, :] < self._hi[:, None])
        return self._membership

    def items(self, pid: int) -> frozenset:
        """1-based item set of policy ``pid``."""
        if self._lo is not None:
            return frozenset(range(int(self._lo[pid]) + 1, int(self._hi[pid]) + 1))
        return frozenset((np.flatnonzero(self._membership[pid]) + 1).tolist())

    def index_of(self, policy: Iterable[int]) -> int:
        if self._index is None:
            self._index = {self.items(p): p for p in range(len(self))}
        key = frozenset(int(i) for i in policy)
        try:
            return self._index[key]
        except KeyError:
            raise ValueError(f"policy {sorted(key)} is not in the family") from None

    def resolve(self, policy: PolicyLike) -> int:
        if isinstance(policy, (int, np.integer)):
            if not 0 <= policy < len(self):
                raise ValueError(f"policy id {policy} out of range")
            return int(policy)
        return self.index_of(policy)

    # ------------------------------------------------------- vectorised algebra
    def coverage(self, ids) -> np.ndarray:
        """How many of the policies ``ids`` contain each item."""
        ids = np.asarray(ids, dtype=np.int64)
        if self._lo is not None:
            diff = np.zeros(self.n + 1, dtype=np.int64)
            np.add.at(diff, self._lo[ids], 1)
            np.add.at(diff, self._hi[ids], -1)
            return np.cumsum(diff[:-1])
        return self._membership[ids].sum(axis=0)

    def policy_sums(self, ids, values: np.ndarray) -> np.ndarray:
        """Sum of ``values`` over the items of each policy in ``ids``."""
        ids = np.asarray(ids, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        if self._lo is not None:
            csum = np.concatenate(([0.0], np.cumsum(values)))
            return csum[self._hi[ids]] - csum[self._lo[ids]]
        return self._membership[ids].astype(float) @ values

    def intersections(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if self._lo is not None:
            lo = np.maximum(self._lo[rows][:, None], self._lo[cols][None, :])
            hi = np.minimum(self._hi[rows][:, None], self._hi[cols][None, :])
            return np.maximum(hi - lo, 0)
        m = self._membership
        return m[rows].astype(np.int64) @ m[cols].astype(np.int64).T

    def symdiff_sizes(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if self.kind is FamilyKind.THRESHOLDS:
            return np.abs(self._hi[rows][:, None] - self._hi[cols][None, :])
        inter = self.intersections(rows, cols)
        return self.sizes[rows][:, None] + self.sizes[cols][None, :] - 2 * inter

    def strict_subset(self, rows, cols) -> np.ndarray:
        """``out[a, b]`` is True when policy rows[a] is a proper subset of cols[b]."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        inter = self.intersections(rows, cols)
        size_r = self.sizes[rows][:, None]
        return (inter == size_r) & (size_r < self.sizes[cols][None, :])

    # ------------------------------------------------------- complexity weights
    def _compute_v_single(self) -> np.ndarray:
        if self.weight_mode is WeightMode.ANALYTIC_VC:
            base = 1.0 if self.kind is FamilyKind.THRESHOLDS else 2.0
            v = np.minimum(base, self.sizes.astype(float))
        else:
            counts = np.bincount(self.sizes, minlength=self.n + 1)[self.sizes]
            v = np.minimum(_sauer(counts), self.sizes.astype(float))
        return np.maximum(v, 1.0)

    def b2_counts(self) -> np.ndarray:
        """``out[p, k] = |{q in Pi : |p sym-diff q| = k}|``."""
        if self._b2_counts is None:
            size = len(self)
            out = np.zeros((size, self.n + 1), dtype=np.int64)
            everything = np.arange(size)
            chunk = max(1, 2_000_000 // max(size, 1))
            for start in range(0, size, chunk):
                rows = everything[start:start + chunk]
                d = self.symdiff_sizes(rows, everything)
                for r, row in enumerate(d):
                    out[rows[r]] = np.bincount(row, minlength=self.n + 1)
            self._b2_counts = out
        return self._b2_counts

    def v_pair(self, rows, cols, symdiff: Optional[np.ndarray] = None) -> np.ndarray:
        """Pairwise complexity weights; entries with empty symmetric difference are 1."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if symdiff is None:
            symdiff = self.symdiff_sizes(rows, cols)
        if self.weight_mode is WeightMode.ANALYTIC_VC:
            base = 1.0 if self.kind is FamilyKind.THRESHOLDS else 2.0
            v = np.minimum(base, symdiff.astype(float))
        else:
            counts = self.b2_counts()
            by_row = counts[rows[:, None], symdiff]
            by_col = counts[cols[None, :], symdiff]
            v = np.minimum(np.maximum(_sauer(by_row), _sauer(by_col)), symdiff.astype(float))
        return np.maximum(v, 1.0)

    # --------------------------------------------------------------- serialise
    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "n": self.n, "weight_mode": self.weight_mode.value}
        if self.kind is FamilyKind.EXPLICIT:
            out["policies"] = [sorted(self.items(p)) for p in range(len(self))]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PolicyFamily":
        return cls(data["kind"], data["n"], data.get("policies"), data.get("weight_mode"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "PolicyFamily":
        return cls.from_dict(json.loads(text))


def _sauer(counts) -> np.ndarray:
    counts = np.maximum(np.asarray(counts, dtype=float), 2.0)
    return np.ceil(np.log2(counts))


def enumerate_policies(family: PolicyFamily) -> list:
    """Canonical enumeration as a list of 1-based frozensets."""
    return [family.items(p) for p in range(len(family))]


def _region_masks(family: PolicyFamily, ids) -> tuple:
    ids = np.asarray(list(ids), dtype=np.int64)
    if ids.size == 0:
        raise ValueError("active collection must be nonempty")
    cov = family.coverage(ids)
    return cov > 0, cov == ids.size


def symdiff_mask(family: PolicyFamily, ids) -> np.ndarray:
    union, inter = _region_masks(family, ids)
    return union & ~inter


def union_mask(family: PolicyFamily, ids) -> np.ndarray:
    ids = np.asarray(list(ids), dtype=np.int64)
    if ids.size == 0:
        return np.zeros(family.n, dtype=bool)
    return family.coverage(ids) > 0


def symdiff_region(active, family: PolicyFamily) -> frozenset:
    """Items on which the active policies disagree (union minus intersection)."""
    ids = [family.resolve(p) for p in active]
    return frozenset((np.flatnonzero(symdiff_mask(family, ids)) + 1).tolist())


def uncontrolled_union(active, controlled, family: PolicyFamily) -> frozenset:
    """Union of the policies that are active but not yet FDR-controlled."""
    act = {family.resolve(p) for p in active}
    ctl = {family.resolve(p) for p in controlled}
    if not ctl <= act:
        raise ValueError("controlled policies must be a subset of the active ones")
    mask = union_mask(family, sorted(act - ctl))
    return frozenset((np.flatnonzero(mask) + 1).tolist())


def complexity_single(family: PolicyFamily, policy: PolicyLike) -> float:
    return float(family.v_single[family.resolve(policy)])


def complexity_pair(family: PolicyFamily, policy: PolicyLike, other: PolicyLike) -> float:
    a, b = family.resolve(policy), family.resolve(other)
    if a == b:
        raise ValueError("complexity_pair needs two distinct policies")
    return float(family.v_pair([a], [b])[0, 0])


def union_bound_weight(n: int, count: int, delta: float) -> float:
    """log(n |B| / delta): the plain union-bound term over a sub-family B."""
    return math.log(n * count / delta)
