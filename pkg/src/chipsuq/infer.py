"""Cluster-specific parameter inference conditional on the credible subpartition.

Given the region's subpartition, keep only the draws that agree with it. In
each such draw exactly one cluster contains the items of subpartition cluster
``j``; that cluster's parameter draw is a sample of the ``j``-th parameter.
A region holding a fraction ``alpha`` of these samples gives a joint
statement about partition and parameter with probability at least
``alpha * Pr(region)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .draws import DrawSet, consistency_bits

RIDGE_EPS = 1e-8


class ParamTable:
    """Parameter vectors keyed by ``(draw index, canonical cluster label)``.

    Draw indices are 0-based and labels are the canonical labels stored in
    the matching :class:`DrawSet` row.
    """

    def __init__(self, entries: Mapping[tuple[int, int], np.ndarray]):
        self._entries: dict[tuple[int, int], np.ndarray] = {}
        d = None
        for key, value in entries.items():
            vec = np.atleast_1d(np.asarray(value, dtype=np.float64))
            if vec.ndim != 1:
                raise ValueError(f"parameter for {key} must be a vector")
            if d is None:
                d = vec.shape[0]
            elif vec.shape[0] != d:
                raise ValueError(f"parameter for {key} has dimension {vec.shape[0]}, expected {d}")
            m, lab = int(key[0]), int(key[1])
            self._entries[(m, lab)] = vec
        self.d = d or 0

    def __getitem__(self, key: tuple[int, int]) -> np.ndarray:
        return self._entries[key]

    def __contains__(self, key) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def keys(self):
        return self._entries.keys()


def conditional_samples(ds: DrawSet, params: ParamTable, region, j: int) -> np.ndarray:
    """Parameter draws of the cluster containing subpartition cluster ``j``.

    ``j`` is a 1-based cluster id of ``region.subpartition``. Returns an
    array with one row per draw consistent with the subpartition.
    """
    s = region.subpartition
    if not 1 <= j <= s.k:
        raise ValueError(f"cluster index {j} outside 1..{s.k}")
    bits = consistency_bits(ds, s)
    draws = np.flatnonzero(bits)
    if draws.size == 0:
        raise ValueError("no draws are consistent with the subpartition")
    rep = s.representatives()[j - 1]
    labels = ds.labels[draws, rep]
    out = np.empty((draws.size, params.d))
    for row, (m, lab) in enumerate(zip(draws.tolist(), labels.tolist())):
        try:
            out[row] = params[(m, lab)]
        except KeyError:
            raise KeyError(f"no parameter for draw {m + 1}, cluster label {lab}") from None
    return out


@dataclass(frozen=True)
class ClusterCredibleRegion:
    """Box and ellipsoid credible regions for one cluster's parameter.

    The box holds per-coordinate equal-tailed intervals; the ellipsoid is
    ``{x : (x - center)' inv(covariance) (x - center) <= radius2}``.
    ``ellipsoid_ok`` is False when the covariance could not be inverted even
    after adding the ridge; the box is still valid in that case.
    """

    cluster_index: int
    samples: np.ndarray
    alpha: float
    lower: np.ndarray
    upper: np.ndarray
    center: np.ndarray
    covariance: np.ndarray
    radius2: float
    joint_bound: float
    ridge: float = 0.0
    ellipsoid_ok: bool = True

    def mahalanobis2(self, points: np.ndarray) -> np.ndarray:
        diff = np.atleast_2d(points) - self.center
        return np.einsum("ij,ij->i", diff, np.linalg.solve(self.covariance, diff.T).T)

    def in_ellipsoid(self, point) -> bool:
        if not self.ellipsoid_ok:
            raise ValueError("ellipsoid unavailable for a degenerate covariance")
        return bool(self.mahalanobis2(np.asarray(point, dtype=float))[0] <= self.radius2)

    def in_box(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all((self.lower <= p) & (p <= self.upper)))


def _equal_tailed(samples: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    N = samples.shape[0]
    cut = math.floor(N * (1.0 - alpha) / 2.0 + 1e-9)
    ordered = np.sort(samples, axis=0)
    return ordered[cut], ordered[N - 1 - cut]


def _regularized(cov: np.ndarray) -> tuple[np.ndarray, float, bool]:
    try:
        np.linalg.cholesky(cov)
        return cov, 0.0, True
    except np.linalg.LinAlgError:
        pass
    d = cov.shape[0]
    scale = np.trace(cov) / d
    ridge = RIDGE_EPS * (scale if scale > 0 else 1.0)
    fixed = cov + ridge * np.eye(d)
    try:
        np.linalg.cholesky(fixed)
        return fixed, ridge, True
    except np.linalg.LinAlgError:
        return fixed, ridge, False


def credible_region(
    samples,
    alpha: float,
    region_probability: float,
    cluster_index: int = 0,
) -> ClusterCredibleRegion:
    """Build box and ellipsoid regions holding at least ``alpha`` of ``samples``.

    The ellipsoid is centred at the sample mean with the sample covariance as
    shape, and its squared radius is the empirical ``alpha`` quantile of the
    samples' squared Mahalanobis distances.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    N, d = x.shape
    if N < 2:
        raise ValueError("at least two samples are needed")
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    lower, upper = _equal_tailed(x, alpha)
    center = x.mean(axis=0)
    cov = np.atleast_2d(np.cov(x, rowvar=False))
    cov, ridge, ok = _regularized(cov)
    if ok:
        diff = x - center
        d2 = np.einsum("ij,ij->i", diff, np.linalg.solve(cov, diff.T).T)
        rank = max(math.ceil(alpha * N - 1e-9), 1)
        radius2 = float(np.sort(d2)[rank - 1])
    else:
        radius2 = float("nan")
    return ClusterCredibleRegion(
        cluster_index=cluster_index,
        samples=x,
        alpha=alpha,
        lower=lower,
        upper=upper,
        center=center,
        covariance=cov,
        radius2=radius2,
        joint_bound=alpha * region_probability,
        ridge=ridge,
        ellipsoid_ok=ok,
    )


def cluster_regions(
    ds: DrawSet, params: ParamTable, region, alpha: float
) -> list[ClusterCredibleRegion]:
    """One credible region per cluster of the subpartition (``k0`` in total)."""
    return [
        credible_region(
            conditional_samples(ds, params, region, j),
            alpha,
            region.probability,
            cluster_index=j,
        )
        for j in range(1, region.subpartition.k + 1)
    ]
