"""Forward greedy construction of monotone subpartition sequences.

Each run starts from one item and repeatedly adds the (item, placement) pair
whose extended subpartition is consistent with the most draws. Every run
yields a permutation of the items, a full partition, and the nonincreasing
sequence of consistent-draw counts along its prefixes. The credible region is
the longest prefix over all runs whose probability reaches ``gamma``, with the
most probable such prefix winning.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .draws import DrawSet
from .partition import Partition, Subpartition, canonicalize
from .rng import (
    STREAM_RUN,
    STREAM_SELECT,
    STREAM_STABILITY,
    STREAM_STARTS,
    derive_rng,
    derive_seed,
)

DEFAULT_MAX_RUNS = 100


@dataclass(frozen=True)
class GreedyTrace:
    """One greedy run.

    ``order`` is the insertion order of all ``n`` items, ``assignment`` the
    cluster id given to each on insertion (canonical in that order), and
    ``counts[l - 1]`` the number of draws consistent with the size-``l``
    prefix. ``ties[l - 1]`` is how many (item, placement) pairs shared the
    winning count at that step.
    """

    start: int
    order: tuple[int, ...]
    assignment: tuple[int, ...]
    counts: tuple[int, ...]
    ties: tuple[int, ...]
    M: int

    @property
    def n(self) -> int:
        return len(self.order)

    @property
    def probs(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.float64) / self.M

    @property
    def final(self) -> Partition:
        labels = [0] * self.n
        for item, a in zip(self.order, self.assignment):
            labels[item] = a
        return canonicalize(labels)

    def prefix(self, size: int) -> Subpartition:
        """The subpartition formed by the first ``size`` inserted items."""
        return Subpartition(self.order, self.assignment).prefix(size)


@dataclass(frozen=True)
class ChipsRegion:
    """The selected credible region: a size-``n0`` prefix of one trace."""

    subpartition: Subpartition
    n0: int
    gamma: float
    count: int
    M: int
    trace_id: int
    n_tied: int = 1

    @property
    def probability(self) -> float:
        return self.count / self.M

    @property
    def k0(self) -> int:
        return self.subpartition.k


def _as_fraction(p) -> Fraction:
    if isinstance(p, Fraction):
        return p
    # str() keeps the decimal the caller typed, e.g. 0.95 -> 19/20
    return Fraction(str(p))


def _check_prob(name: str, value) -> Fraction:
    frac = _as_fraction(value)
    if not 0 < frac < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")
    return frac


def meets(count: int, M: int, gamma: Fraction) -> bool:
    """Exact test of ``count / M >= gamma``."""
    return count * gamma.denominator >= gamma.numerator * M


def greedy_run(ds: DrawSet, start: int, rng_seed: int) -> GreedyTrace:
    """Run the forward greedy search from item ``start``.

    Exact ties between candidate (item, placement) pairs are broken uniformly
    at random with a generator seeded from ``rng_seed``.
    """
    n = ds.n
    if not 0 <= start < n:
        raise ValueError(f"start item {start} out of range for n={n}")
    rng = derive_rng(rng_seed)
    rows, weights = ds.unique_rows()

    remaining = np.array([i for i in range(n) if i != start], dtype=np.intp)
    lab = rows[:, remaining]
    # code[m, c]: cluster (0-based) of the tracked subpartition whose
    # representative shares draw m's label with remaining item c, -1 if none
    code = np.where(lab == rows[:, [start]], 0, -1).astype(np.int32)
    wts = weights.astype(np.float64)
    k = 1

    order = [start]
    assignment = [1]
    counts = [ds.M]
    ties = [1]
    for _ in range(1, n):
        r = len(remaining)
        if wts.size:
            flat = (code + 1) * r + np.arange(r, dtype=np.int32)
            tally = np.bincount(
                flat.ravel(),
                weights=np.broadcast_to(wts[:, None], code.shape).ravel(),
                minlength=(k + 1) * r,
            )
            tally = np.rint(tally).astype(np.int64)
        else:
            tally = np.zeros((k + 1) * r, dtype=np.int64)
        best = tally.max()
        cand = np.flatnonzero(tally == best)
        pick = int(cand[rng.integers(len(cand))]) if len(cand) > 1 else int(cand[0])
        row, col = divmod(pick, r)
        item = int(remaining[col])

        keep = code[:, col] == row - 1
        code, lab, wts = code[keep], lab[keep], wts[keep]
        if row == 0:
            code[(code == -1) & (lab == lab[:, [col]])] = k
            k += 1
            placement = k
        else:
            placement = row
        code = np.delete(code, col, axis=1)
        lab = np.delete(lab, col, axis=1)
        remaining = np.delete(remaining, col)

        order.append(item)
        assignment.append(placement)
        counts.append(int(best))
        ties.append(len(cand))

    return GreedyTrace(
        start=start,
        order=tuple(order),
        assignment=tuple(assignment),
        counts=tuple(counts),
        ties=tuple(ties),
        M=ds.M,
    )


def default_starts(n: int, master_seed: int, n_runs: int | None = None) -> list[int]:
    """Starting items sampled with replacement; ``min(n, 100)`` by default."""
    if n_runs is None:
        n_runs = min(n, DEFAULT_MAX_RUNS)
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    rng = derive_rng(master_seed, STREAM_STARTS)
    return [int(i) for i in rng.integers(0, n, size=n_runs)]


def run_traces(
    ds: DrawSet, starts: Sequence[int], master_seed: int, threads: int = 1
) -> list[GreedyTrace]:
    """One greedy run per entry of ``starts``, seeded by list position."""
    seeds = [derive_seed(master_seed, STREAM_RUN, j) for j in range(len(starts))]
    jobs = list(zip(starts, seeds))
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda job: greedy_run(ds, *job), jobs))
    return [greedy_run(ds, s, seed) for s, seed in jobs]


def select_region(
    traces: Sequence[GreedyTrace], gamma, master_seed: int
) -> ChipsRegion:
    """Pick the largest prefix size reaching ``gamma``, then the most probable prefix."""
    if not traces:
        raise ValueError("no traces to select from")
    g = _check_prob("gamma", gamma)
    M = traces[0].M

    def reach(t: GreedyTrace) -> int:
        return max(l for l, c in enumerate(t.counts, start=1) if meets(c, M, g))

    n0 = max(reach(t) for t in traces)
    best = max(t.counts[n0 - 1] for t in traces)
    # distinct subpartitions attaining the best count, first trace id for each
    tied: dict[Subpartition, int] = {}
    for idx, t in enumerate(traces):
        if t.counts[n0 - 1] == best:
            tied.setdefault(t.prefix(n0), idx)
    options = list(tied.items())
    if len(options) > 1:
        choice = derive_rng(master_seed, STREAM_SELECT).integers(len(options))
    else:
        choice = 0
    sub, trace_id = options[int(choice)]
    return ChipsRegion(
        subpartition=sub,
        n0=n0,
        gamma=float(gamma),
        count=int(best),
        M=M,
        trace_id=trace_id,
        n_tied=len(options),
    )


def chips(
    ds: DrawSet,
    gamma=0.95,
    starts: Sequence[int] | None = None,
    master_seed: int = 0,
    threads: int = 1,
) -> tuple[ChipsRegion, list[GreedyTrace]]:
    """Compute the credible region at level ``gamma`` and all greedy traces.

    Args:
        ds: Posterior draws.
        gamma: Probability threshold in (0, 1).
        starts: Starting items (0-based, repeats allowed). Defaults to
            ``min(n, 100)`` items sampled with replacement.
        master_seed: Seed from which every run's tie-breaking stream and the
            final selection stream are derived.
        threads: Worker threads for the runs; results do not depend on it.

    Returns:
        The selected region and the list of traces, one per start.
    """
    _check_prob("gamma", gamma)
    if starts is None:
        starts = default_starts(ds.n, master_seed)
    starts = [int(s) for s in starts]
    if not starts:
        raise ValueError("starts must be nonempty")
    traces = run_traces(ds, starts, master_seed, threads=threads)
    return select_region(traces, gamma, master_seed), traces


@dataclass
class StabilityReport:
    """Outcome of repeating the search with independent start lists."""

    n_runs: int
    repeats: int
    subpartitions: list[Subpartition]
    region_probabilities: list[float]
    region_sizes: list[int]
    auchips: list[float]
    tied_repeats: int
    distinct: list[Subpartition] = field(default_factory=list)

    @property
    def n_distinct(self) -> int:
        return len(self.distinct)

    @property
    def auchips_mean(self) -> float:
        return float(np.mean(self.auchips))

    @property
    def auchips_std(self) -> float:
        return float(np.std(self.auchips))

    @property
    def auchips_range(self) -> tuple[float, float]:
        return float(min(self.auchips)), float(max(self.auchips))

    def summary(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "repeats": self.repeats,
            "n_distinct": self.n_distinct,
            "region_probabilities": list(self.region_probabilities),
            "region_sizes": list(self.region_sizes),
            "auchips": list(self.auchips),
            "auchips_mean": self.auchips_mean,
            "auchips_std": self.auchips_std,
            "auchips_min": self.auchips_range[0],
            "auchips_max": self.auchips_range[1],
            "tied_repeats": self.tied_repeats,
        }


def stability_report(
    ds: DrawSet,
    gamma,
    n_runs: int,
    repeats: int,
    master_seed: int = 0,
    threads: int = 1,
) -> StabilityReport:
    """Repeat :func:`chips` with fresh start lists and count distinct answers.

    Repeat ``r`` draws ``n_runs`` starts with replacement and uses its own
    derived master seed. More than one distinct region, or any repeat whose
    selection had tied candidates, signals too few draws or starts.
    """
    from .metrics import chips_curve

    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    if repeats < 2:
        raise ValueError("repeats must be at least 2")
    _check_prob("gamma", gamma)
    subs, probs, sizes, aucs = [], [], [], []
    tied = 0
    distinct: list[Subpartition] = []
    for r in range(repeats):
        starts = derive_rng(master_seed, STREAM_STABILITY, r).integers(0, ds.n, size=n_runs)
        seed = derive_seed(master_seed, STREAM_STABILITY, r)
        region, traces = chips(ds, gamma, [int(s) for s in starts], seed, threads=threads)
        subs.append(region.subpartition)
        probs.append(region.probability)
        sizes.append(region.n0)
        aucs.append(chips_curve(traces).auchips)
        tied += region.n_tied > 1
        if region.subpartition not in distinct:
            distinct.append(region.subpartition)
    return StabilityReport(
        n_runs=n_runs,
        repeats=repeats,
        subpartitions=subs,
        region_probabilities=probs,
        region_sizes=sizes,
        auchips=aucs,
        tied_repeats=tied,
        distinct=distinct,
    )
