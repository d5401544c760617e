"""Set partitions and subpartitions of items ``0..n-1``.

A :class:`Partition` is stored as a canonical label vector: labels start at 1
and appear in first-occurrence order, so two label vectors describe the same
set partition iff their canonical forms are equal. A :class:`Subpartition` is
the clustering of an ordered subset of items, e.g. the restriction of a
partition to the first ``l`` items of a permutation.

Item indices are 0-based throughout the library; file formats use 1-based
indices and convert at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


def canonical_labels(raw: Sequence[int]) -> tuple[int, ...]:
    """Relabel ``raw`` so labels appear in first-occurrence order from 1."""
    seen: dict[int, int] = {}
    out = []
    for lab in raw:
        lab = int(lab)
        if lab not in seen:
            seen[lab] = len(seen) + 1
        out.append(seen[lab])
    return tuple(out)


def canonicalize_rows(labels: np.ndarray) -> np.ndarray:
    """Canonicalize every row of an integer label matrix.

    Returns a new ``int32`` array of the same shape.
    """
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise ValueError("expected a 2-d label matrix")
    out = np.empty(labels.shape, dtype=np.int32)
    for m, row in enumerate(labels):
        uniq, first, inverse = np.unique(row, return_index=True, return_inverse=True)
        # rank of each distinct label by position of its first occurrence
        rank = np.empty(len(uniq), dtype=np.int32)
        rank[np.argsort(first, kind="stable")] = np.arange(1, len(uniq) + 1)
        out[m] = rank[inverse.reshape(-1)]
    return out


def _blocks(items: Iterable[int], labels: Iterable[int]) -> frozenset[frozenset[int]]:
    groups: dict[int, set[int]] = {}
    for item, lab in zip(items, labels):
        groups.setdefault(lab, set()).add(item)
    return frozenset(frozenset(g) for g in groups.values())


@dataclass(frozen=True)
class Partition:
    """A set partition of ``n`` items held as a canonical label vector."""

    labels: tuple[int, ...]

    def __post_init__(self):
        labels = tuple(int(x) for x in self.labels)
        if not labels:
            raise ValueError("a partition needs at least one item")
        if canonical_labels(labels) != labels:
            raise ValueError(
                f"labels {labels} are not canonical; build with canonicalize()"
            )
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def k(self) -> int:
        return max(self.labels)

    def clusters(self) -> list[tuple[int, ...]]:
        """Clusters as sorted item tuples, ordered by canonical label."""
        out: list[list[int]] = [[] for _ in range(self.k)]
        for item, lab in enumerate(self.labels):
            out[lab - 1].append(item)
        return [tuple(c) for c in out]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=np.int32)

    def __len__(self) -> int:
        return len(self.labels)


def canonicalize(raw_labels: Sequence[int]) -> Partition:
    """Build a :class:`Partition` from arbitrary integer cluster labels.

    >>> canonicalize([2, 2, 1, 3]).labels
    (1, 1, 2, 3)
    """
    raw = list(raw_labels)
    if not raw:
        raise ValueError("cannot canonicalize an empty label sequence")
    return Partition(canonical_labels(raw))


@dataclass(frozen=True, eq=False)
class Subpartition:
    """Clustering of an ordered subset of items.

    ``order`` lists the items in insertion order and ``assignment`` gives the
    cluster id of each, canonical in that order. Equality and hashing ignore
    both the order and the label names: two subpartitions are equal when they
    cover the same items with the same co-membership.
    """

    order: tuple[int, ...]
    assignment: tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        assignment = tuple(int(a) for a in self.assignment)
        if not order:
            raise ValueError("a subpartition needs at least one item")
        if len(order) != len(assignment):
            raise ValueError("order and assignment must have equal length")
        if len(set(order)) != len(order):
            raise ValueError(f"duplicate items in subpartition order {order}")
        if min(order) < 0:
            raise ValueError("item indices must be non-negative")
        if canonical_labels(assignment) != assignment:
            raise ValueError(f"assignment {assignment} is not canonical")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "assignment", assignment)

    @classmethod
    def from_labels(cls, items: Sequence[int], labels: Sequence[int]) -> Subpartition:
        """Subpartition of ``items`` with arbitrary (non-canonical) labels."""
        return cls(tuple(items), canonical_labels(labels))

    @property
    def size(self) -> int:
        return len(self.order)

    @property
    def k(self) -> int:
        return max(self.assignment)

    def blocks(self) -> frozenset[frozenset[int]]:
        return _blocks(self.order, self.assignment)

    def clusters(self) -> list[tuple[int, ...]]:
        """Items of each cluster in insertion order, indexed by cluster id - 1."""
        out: list[list[int]] = [[] for _ in range(self.k)]
        for item, a in zip(self.order, self.assignment):
            out[a - 1].append(item)
        return [tuple(c) for c in out]

    def representatives(self) -> tuple[int, ...]:
        """First-inserted item of each cluster, indexed by cluster id - 1."""
        return tuple(c[0] for c in self.clusters())

    def prefix(self, size: int) -> Subpartition:
        if not 1 <= size <= len(self.order):
            raise ValueError(f"prefix size {size} outside 1..{len(self.order)}")
        return Subpartition(self.order[:size], canonical_labels(self.assignment[:size]))

    def extend(self, item: int, placement: int) -> Subpartition:
        """Add ``item`` to cluster ``placement`` (``k + 1`` opens a new one)."""
        if item in self.order:
            raise ValueError(f"item {item} already in subpartition")
        if not 1 <= placement <= self.k + 1:
            raise ValueError(f"placement {placement} outside 1..{self.k + 1}")
        return Subpartition(self.order + (item,), self.assignment + (placement,))

    def __eq__(self, other):
        if not isinstance(other, Subpartition):
            return NotImplemented
        return self.blocks() == other.blocks()

    def __hash__(self):
        return hash(self.blocks())

    def __len__(self) -> int:
        return len(self.order)


def _check_items(items: Sequence[int], n: int) -> tuple[int, ...]:
    items = tuple(int(i) for i in items)
    if not items:
        raise ValueError("item subset is empty")
    for i in items:
        if not 0 <= i < n:
            raise ValueError(f"item index {i} out of range for n={n}")
    if len(set(items)) != len(items):
        raise ValueError(f"duplicate item indices in {items}")
    return items


def restrict(p: Partition, items: Sequence[int]) -> Subpartition:
    """Restrict ``p`` to ``items``, keeping their order.

    >>> restrict(canonicalize([1, 1, 2, 3]), (0, 1)).assignment
    (1, 1)
    """
    items = _check_items(items, p.n)
    return Subpartition.from_labels(items, [p.labels[i] for i in items])


def is_consistent(p: Partition, s: Subpartition) -> bool:
    """True iff ``p`` restricted to the items of ``s`` equals ``s``."""
    if max(s.order) >= p.n:
        raise ValueError(f"subpartition refers to items beyond n={p.n}")
    forward: dict[int, int] = {}
    backward: dict[int, int] = {}
    for item, a in zip(s.order, s.assignment):
        lab = p.labels[item]
        if forward.setdefault(a, lab) != lab or backward.setdefault(lab, a) != a:
            return False
    return True
