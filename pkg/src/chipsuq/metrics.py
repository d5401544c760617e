"""Global and unit-level clustering uncertainty summaries."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .chips import ChipsRegion, GreedyTrace
from .draws import DrawSet, cluster_count, consistency_bits


@dataclass(frozen=True)
class ChipsCurve:
    """Best prefix probability at each subpartition size, and its area.

    ``counts[l - 1]`` is the largest consistent-draw count among all traces'
    size-``l`` prefixes. ``auchips`` is the integral over ``t`` in (0, 1] of
    the step function ``values[ceil(n t)]``, i.e. the mean of ``values``.
    """

    counts: tuple[int, ...]
    M: int

    @property
    def n(self) -> int:
        return len(self.counts)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.float64) / self.M

    @property
    def auchips_exact(self) -> Fraction:
        return Fraction(sum(self.counts), self.n * self.M)

    @property
    def auchips(self) -> float:
        return float(self.auchips_exact)


def chips_curve(traces: Sequence[GreedyTrace]) -> ChipsCurve:
    if not traces:
        raise ValueError("chips_curve needs at least one trace")
    n, M = traces[0].n, traces[0].M
    for t in traces:
        if t.n != n or t.M != M:
            raise ValueError("all traces must share n and M")
    counts = np.max(np.array([t.counts for t in traces], dtype=np.int64), axis=0)
    return ChipsCurve(tuple(int(c) for c in counts), M)


@dataclass(frozen=True)
class UnitUncertainty:
    """Cost of adding one excluded item to the credible subpartition.

    ``best_placement`` is a 1-based cluster id of the subpartition, with
    ``k0 + 1`` meaning a new singleton. ``n_best`` counts placements tied at
    the maximum; the lowest id among them is reported.
    """

    item: int
    count: int
    M: int
    region_count: int
    best_placement: int
    n_best: int
    placement_counts: tuple[int, ...]

    @property
    def q_max(self) -> float:
        return self.count / self.M

    @property
    def drop(self) -> float:
        return (self.region_count - self.count) / self.M


def unit_uncertainty(ds: DrawSet, region: ChipsRegion) -> list[UnitUncertainty]:
    """Best single-item extension probability for every item outside the region."""
    s = region.subpartition
    if region.M != ds.M or max(s.order) >= ds.n:
        raise ValueError("region does not match the DrawSet dimensions")
    inside = set(s.order)
    base = consistency_bits(ds, s)
    if int(base.sum()) != region.count:
        raise ValueError("region count disagrees with the DrawSet")
    L = ds.labels[base]
    reps = list(s.representatives())
    rep_labels = L[:, reps]
    out = []
    for i in range(ds.n):
        if i in inside:
            continue
        match = L[:, [i]] == rep_labels
        counts = np.append(match.sum(axis=0), (~match.any(axis=1)).sum())
        best = int(counts.max())
        winners = np.flatnonzero(counts == best)
        out.append(
            UnitUncertainty(
                item=i,
                count=best,
                M=ds.M,
                region_count=region.count,
                best_placement=int(winners[0]) + 1,
                n_best=len(winners),
                placement_counts=tuple(int(c) for c in counts),
            )
        )
    return out


def cluster_probabilities(ds: DrawSet, region: ChipsRegion) -> list[float]:
    """Probability that each cluster of the region is contained in one cluster."""
    return [cluster_count(ds, c) / ds.M for c in region.subpartition.clusters()]
