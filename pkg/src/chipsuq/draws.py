"""Posterior partition draws and Monte Carlo subpartition probabilities.

Probabilities are kept as integer counts of consistent draws; a probability is
``count / M``. Comparisons that decide argmax steps are done on the counts so
floating point never creates or hides a tie.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .partition import Partition, Subpartition, canonicalize_rows


class DrawSet:
    """``M`` posterior draws of a partition of ``n`` items.

    Rows are canonicalized on construction and the stored matrix is
    read-only. Duplicate draws are kept; each row carries posterior weight.
    """

    def __init__(self, labels):
        arr = np.asarray(labels)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError("a DrawSet needs at least one draw over at least one item")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(arr, 1), 0)):
                raise ValueError("draw labels must be integers")
        canon = canonicalize_rows(arr.astype(np.int64))
        canon.setflags(write=False)
        self._labels = canon

    @classmethod
    def from_partitions(cls, partitions: Sequence[Partition]) -> DrawSet:
        return cls(np.array([p.labels for p in partitions]))

    @property
    def labels(self) -> np.ndarray:
        """The ``M x n`` canonical label matrix (1-based labels)."""
        return self._labels

    @property
    def M(self) -> int:
        return self._labels.shape[0]

    @property
    def n(self) -> int:
        return self._labels.shape[1]

    def draw(self, m: int) -> Partition:
        return Partition(tuple(self._labels[m].tolist()))

    @cached_property
    def _unique(self) -> tuple[np.ndarray, np.ndarray]:
        rows, counts = np.unique(self._labels, axis=0, return_counts=True)
        return rows, counts.astype(np.int64)

    def unique_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct draws and their multiplicities (sums to ``M``)."""
        return self._unique

    def frequency(self, p: Partition) -> int:
        """Number of draws equal to ``p``."""
        if p.n != self.n:
            raise ValueError(f"partition has n={p.n}, draws have n={self.n}")
        return int(np.all(self._labels == p.as_array(), axis=1).sum())

    def __len__(self) -> int:
        return self.M

    def __repr__(self) -> str:
        return f"DrawSet(M={self.M}, n={self.n})"


@dataclass(frozen=True)
class ConsistencyMask:
    """Which draws agree with a tracked subpartition."""

    bits: np.ndarray
    count: int

    @classmethod
    def from_bits(cls, bits: np.ndarray) -> ConsistencyMask:
        bits = np.asarray(bits, dtype=bool).copy()
        bits.setflags(write=False)
        return cls(bits, int(bits.sum()))


def _check_sub(ds: DrawSet, s: Subpartition):
    if max(s.order) >= ds.n:
        raise ValueError(f"subpartition refers to item {max(s.order)} but n={ds.n}")


def consistency_bits(ds: DrawSet, s: Subpartition) -> np.ndarray:
    """Boolean vector over draws: does draw ``m`` restrict to ``s``?

    Uses one representative per cluster of ``s``: a draw is consistent iff
    every item shares its representative's label and the representatives'
    labels are pairwise distinct.
    """
    _check_sub(ds, s)
    L = ds.labels
    reps = np.asarray(s.representatives())
    order = np.asarray(s.order)
    assign = np.asarray(s.assignment) - 1
    ok = np.all(L[:, order] == L[:, reps[assign]], axis=1)
    if len(reps) > 1:
        rep_labels = np.sort(L[:, reps], axis=1)
        ok &= np.all(np.diff(rep_labels, axis=1) != 0, axis=1)
    return ok


def mask_for(ds: DrawSet, s: Subpartition) -> ConsistencyMask:
    return ConsistencyMask.from_bits(consistency_bits(ds, s))


def consistent_count(ds: DrawSet, s: Subpartition) -> int:
    return int(consistency_bits(ds, s).sum())


def estimate_probability(ds: DrawSet, s: Subpartition) -> float:
    """Fraction of draws whose restriction to ``s.order`` equals ``s``."""
    if ds.M == 0:
        raise ValueError("empty DrawSet")
    return consistent_count(ds, s) / ds.M


def extend_mask(
    ds: DrawSet,
    mask: ConsistencyMask,
    s: Subpartition,
    new_item: int,
    placement: int,
) -> ConsistencyMask:
    """Mask for ``s.extend(new_item, placement)`` given the mask tracking ``s``.

    ``placement`` is a 1-based cluster id; ``s.k + 1`` means a new singleton.
    """
    if new_item in s.order:
        raise ValueError(f"item {new_item} already in subpartition")
    if not 0 <= new_item < ds.n:
        raise ValueError(f"item {new_item} out of range for n={ds.n}")
    if not 1 <= placement <= s.k + 1:
        raise ValueError(f"placement {placement} outside 1..{s.k + 1}")
    L = ds.labels
    reps = s.representatives()
    col = L[:, new_item]
    if placement <= s.k:
        hit = col == L[:, reps[placement - 1]]
    else:
        hit = np.all(col[:, None] != L[:, list(reps)], axis=1)
    return ConsistencyMask.from_bits(mask.bits & hit)


def cluster_count(ds: DrawSet, items: Sequence[int]) -> int:
    items = sorted(set(int(i) for i in items))
    if not items:
        raise ValueError("item set is empty")
    if items[0] < 0 or items[-1] >= ds.n:
        raise ValueError(f"item index out of range for n={ds.n}")
    L = ds.labels
    return int(np.all(L[:, items] == L[:, [items[0]]], axis=1).sum())


def cluster_probability(ds: DrawSet, items: Sequence[int]) -> float:
    """Posterior frequency with which all ``items`` share one cluster."""
    return cluster_count(ds, items) / ds.M


def coclustering_counts(ds: DrawSet) -> np.ndarray:
    """``n x n`` integer matrix of how often each pair is co-clustered.

    Computed once per DrawSet and returned read-only.
    """
    cached = getattr(ds, "_cocluster", None)
    if cached is None:
        cached = _coclustering_counts(ds)
        cached.setflags(write=False)
        ds._cocluster = cached
    return cached


def _coclustering_counts(ds: DrawSet) -> np.ndarray:
    rows, w = ds.unique_rows()
    n = ds.n
    # float64 matmul is exact for integer sums below 2**53
    acc = np.zeros((n, n))
    wf = w.astype(np.float64)[:, None]
    for lab in range(1, int(rows.max()) + 1):
        onehot = (rows == lab).astype(np.float64)
        acc += (onehot * wf).T @ onehot
    return np.rint(acc).astype(np.int64)
