"""Point estimation: complete the credible subpartition to a full partition.

Items of the subpartition keep their co-membership. The remaining items are
placed by a small expected-loss search ("salso-lite"): sequential greedy
allocation in a random order, then one-item reassignment sweeps until no move
lowers the loss, repeated over several seeded restarts.

Binder loss is evaluated on integer co-clustering counts, so its comparisons
are exact. VI is in nats and uses floating point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .draws import DrawSet, coclustering_counts
from .partition import Partition, canonicalize
from .rng import STREAM_RESTART, derive_rng

DEFAULT_RESTARTS = 16
MAX_SWEEPS = 50
_VI_TOL = 1e-12

_LOSSES = ("binder", "vi")


@dataclass(frozen=True)
class LossSpec:
    kind: str = "binder"

    def __post_init__(self):
        if self.kind not in _LOSSES:
            raise ValueError(f"unknown loss {self.kind!r}; expected one of {_LOSSES}")


def _loss(loss) -> LossSpec:
    return loss if isinstance(loss, LossSpec) else LossSpec(str(loss))


def _xlogx(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def _joint_xlogx(a: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Sum of ``x log x`` over the contingency table of ``a`` with each row of ``B``."""
    ka = int(a.max()) + 1
    kb = int(B.max()) + 1
    codes = a[None, :] * kb + B
    out = np.empty(B.shape[0])
    for m, row in enumerate(codes):
        out[m] = _xlogx(np.bincount(row, minlength=ka * kb)).sum()
    return out


def vi_distance(a, b) -> float:
    """Variation of information between two label vectors, in nats."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("label vectors must be 1-d with equal length")
    a = np.unique(a, return_inverse=True)[1].reshape(-1)
    b = np.unique(b, return_inverse=True)[1].reshape(-1)
    n = a.size
    sa = _xlogx(np.bincount(a)).sum()
    sb = _xlogx(np.bincount(b)).sum()
    sab = _joint_xlogx(a, b[None, :])[0]
    return max((sa + sb - 2.0 * sab) / n, 0.0)


def binder_count(counts: np.ndarray, M: int, labels: np.ndarray) -> int:
    """``M`` times the expected Binder loss, as an exact integer."""
    same = labels[:, None] == labels[None, :]
    iu = np.triu_indices(len(labels), k=1)
    per_pair = np.where(same, M - counts, counts)
    return int(per_pair[iu].sum())


def expected_loss(ds: DrawSet, candidate: Partition, loss="binder") -> float:
    """Posterior expected loss of ``candidate`` estimated from the draws.

    Binder: sum over pairs of the probability of disagreeing with the
    candidate on co-clustering. VI: mean variation of information to the
    draws, in nats.
    """
    spec = _loss(loss)
    if candidate.n != ds.n:
        raise ValueError(f"candidate has n={candidate.n}, draws have n={ds.n}")
    labels = candidate.as_array()
    if spec.kind == "binder":
        return binder_count(coclustering_counts(ds), ds.M, labels) / ds.M
    rows, w = ds.unique_rows()
    n = ds.n
    sa = _xlogx(np.bincount(labels)).sum()
    sb = np.array([_xlogx(np.bincount(r)).sum() for r in rows])
    sab = _joint_xlogx(labels, rows)
    vi = (sa + sb - 2.0 * sab) / n
    return float(np.maximum(vi, 0.0) @ w / ds.M)


class _BinderScorer:
    """Relative cost of putting one item into each cluster, Binder loss."""

    exact = True

    def __init__(self, ds: DrawSet):
        self.M = ds.M
        self.counts = coclustering_counts(ds)

    def scores(self, item: int, assign: np.ndarray, k: int) -> np.ndarray:
        # cost of joining cluster c relative to a new singleton:
        # sum over members j of (M - N_ij) - N_ij
        members = np.flatnonzero(assign >= 0)
        members = members[members != item]
        contrib = self.M - 2 * self.counts[item, members]
        out = np.zeros(k + 1, dtype=np.int64)
        np.add.at(out, assign[members], contrib)
        return out

    def add(self, item: int, c: int):
        pass

    def remove(self, item: int, c: int):
        pass


class _VIScorer:
    """Relative cost of putting one item into each cluster, VI loss.

    Tracks cluster sizes and, per distinct draw, the contingency counts of
    each candidate cluster against the draw's labels.
    """

    exact = False

    def __init__(self, ds: DrawSet):
        rows, w = ds.unique_rows()
        self.rows = rows
        self.w = w.astype(np.float64) / ds.M
        self.width = int(rows.max()) + 1
        self.sizes: list[int] = []
        self.tables: list[np.ndarray] = []
        self._idx = np.arange(rows.shape[0])

    def _ensure(self, c: int):
        while len(self.sizes) <= c:
            self.sizes.append(0)
            self.tables.append(np.zeros((self.rows.shape[0], self.width), dtype=np.int64))

    def scores(self, item: int, assign: np.ndarray, k: int) -> np.ndarray:
        self._ensure(k)
        lab = self.rows[:, item]
        out = np.zeros(k + 1)
        for c in range(k):
            a = self.sizes[c]
            if a == 0:
                continue
            cell = self.tables[c][self._idx, lab]
            gain_a = _xlogx(a + 1) - _xlogx(a)
            gain_joint = self.w @ (_xlogx(cell + 1) - _xlogx(cell))
            out[c] = gain_a - 2.0 * gain_joint
        return out

    def add(self, item: int, c: int):
        self._ensure(c)
        self.sizes[c] += 1
        self.tables[c][self._idx, self.rows[:, item]] += 1

    def remove(self, item: int, c: int):
        self.sizes[c] -= 1
        self.tables[c][self._idx, self.rows[:, item]] -= 1


def _scorer(ds: DrawSet, spec: LossSpec):
    return _BinderScorer(ds) if spec.kind == "binder" else _VIScorer(ds)


def _place(scorer, item: int, assign: np.ndarray, k: int, sizes: list[int]) -> tuple[int, np.ndarray]:
    """Best cluster for ``item`` (``k`` means a new one); lowest index on ties."""
    scores = scorer.scores(item, assign, k)
    empty = [c for c in range(k) if sizes[c] == 0]
    if empty:
        scores = scores.astype(np.float64)
        scores[empty] = np.inf
    return int(np.argmin(scores)), scores


def _complete_once(ds, scorer, frozen_assign, free_items, rng, max_sweeps):
    n = ds.n
    assign = np.full(n, -1, dtype=np.int64)
    k = 0
    sizes: list[int] = []
    for item, c in frozen_assign.items():
        assign[item] = c
        while len(sizes) <= c:
            sizes.append(0)
        sizes[c] += 1
        scorer.add(item, c)
    k = len(sizes)

    order = list(rng.permutation(free_items))
    for item in order:
        c, _ = _place(scorer, item, assign, k, sizes)
        if c == k:
            sizes.append(0)
            k += 1
        assign[item] = c
        sizes[c] += 1
        scorer.add(item, c)

    tol = 0 if scorer.exact else _VI_TOL
    for _ in range(max_sweeps):
        moved = False
        for item in order:
            cur = int(assign[item])
            assign[item] = -1
            sizes[cur] -= 1
            scorer.remove(item, cur)
            c, scores = _place(scorer, item, assign, k, sizes)
            # staying put costs the current cluster's score, or a new
            # singleton's if the item was alone
            stay = scores[k] if sizes[cur] == 0 else scores[cur]
            if scores[c] < stay - tol:
                if c == k:
                    sizes.append(0)
                    k += 1
                moved = True
            else:
                c = cur
            assign[item] = c
            sizes[c] += 1
            scorer.add(item, c)
        if not moved:
            break
    return canonicalize(assign.tolist())


def complete_partition(
    ds: DrawSet,
    region,
    loss="binder",
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    max_sweeps: int = MAX_SWEEPS,
) -> Partition:
    """Extend the region's subpartition to all items by expected-loss search.

    Returns the best of ``restarts`` completions, canonicalized. Items in the
    subpartition are never moved relative to each other.
    """
    spec = _loss(loss)
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    s = region.subpartition
    if max(s.order) >= ds.n:
        raise ValueError("region refers to items beyond the DrawSet")
    frozen = {item: a - 1 for item, a in zip(s.order, s.assignment)}
    free = [i for i in range(ds.n) if i not in frozen]
    if not free:
        return canonicalize([frozen[i] for i in range(ds.n)])

    best, best_loss = None, None
    for r in range(restarts):
        rng = derive_rng(seed, STREAM_RESTART, r)
        cand = _complete_once(ds, _scorer(ds, spec), frozen, free, rng, max_sweeps)
        if best is not None and cand == best:
            continue
        value = expected_loss(ds, cand, spec)
        if best_loss is None or value < best_loss:
            best, best_loss = cand, value
    return best
