"""Synthetic Gaussian mixture data and label draws with fixed atoms.

The benchmark places equal-sized bivariate Gaussian clusters at the four
corners ``(+-1, +-1)`` with covariance ``sigma2 * I`` and appends one point at
the origin, which is equally likely to belong to any cluster.

Label draws come from the "z" model: means, covariance, weights and the
number of components are fixed at their true values, so each label is drawn
independently from its categorical full conditional.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .draws import DrawSet
from .infer import ParamTable

CORNERS = ((-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0))


@dataclass(frozen=True)
class MixtureSpec:
    means: tuple[tuple[float, ...], ...] = CORNERS
    sigma2: float = 0.1
    weights: tuple[float, ...] | None = None
    per_cluster: int = 25
    extra_points: tuple[tuple[float, ...], ...] = ((0.0, 0.0),)

    def __post_init__(self):
        if not self.means:
            raise ValueError("at least one mean is required")
        d = len(self.means[0])
        if any(len(m) != d for m in self.means):
            raise ValueError("all means must share one dimension")
        if any(len(p) != d for p in self.extra_points):
            raise ValueError("extra points must match the mean dimension")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if self.per_cluster < 0:
            raise ValueError("per_cluster must be non-negative")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if len(w) != len(self.means) or np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
                raise ValueError("weights must be a positive simplex vector, one per mean")

    @property
    def K(self) -> int:
        return len(self.means)

    @property
    def d(self) -> int:
        return len(self.means[0])

    @property
    def weight_array(self) -> np.ndarray:
        if self.weights is None:
            return np.full(self.K, 1.0 / self.K)
        return np.asarray(self.weights, dtype=float)

    @property
    def mean_array(self) -> np.ndarray:
        return np.asarray(self.means, dtype=float)


def benchmark_spec(sigma2: float) -> MixtureSpec:
    """Four corner clusters of 25 points plus the origin (n = 101)."""
    return MixtureSpec(sigma2=sigma2)


@dataclass
class SyntheticData:
    data: np.ndarray
    true_labels: np.ndarray
    spec: MixtureSpec = field(repr=False)

    @property
    def n(self) -> int:
        return self.data.shape[0]


def generate_data(spec: MixtureSpec, seed: int) -> SyntheticData:
    """Draw ``per_cluster`` points around each mean, then append the extra points.

    True labels are 1..K for cluster points and 0 for extra points. The
    stream is NumPy's PCG64 seeded with ``seed``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    sd = np.sqrt(spec.sigma2)
    chunks, labels = [], []
    for k, mean in enumerate(spec.mean_array, start=1):
        chunks.append(mean + sd * rng.standard_normal((spec.per_cluster, spec.d)))
        labels.append(np.full(spec.per_cluster, k))
    if spec.extra_points:
        chunks.append(np.asarray(spec.extra_points, dtype=float))
        labels.append(np.zeros(len(spec.extra_points), dtype=int))
    data = np.concatenate(chunks).reshape(-1, spec.d)
    return SyntheticData(data, np.concatenate(labels).astype(int), spec)


def assignment_probabilities(data: np.ndarray, spec: MixtureSpec) -> np.ndarray:
    """``n x K`` full conditionals ``Pr(z_i = k)`` under the fixed-atom model."""
    data = np.asarray(data, dtype=float)
    sq = ((data[:, None, :] - spec.mean_array[None, :, :]) ** 2).sum(axis=-1)
    logp = np.log(spec.weight_array)[None, :] - sq / (2.0 * spec.sigma2)
    logp -= logp.max(axis=1, keepdims=True)
    p = np.exp(logp)
    return p / p.sum(axis=1, keepdims=True)


def sample_z_labels(data: np.ndarray, spec: MixtureSpec, M: int, seed: int) -> np.ndarray:
    """``M x n`` component labels in 1..K, one independent row per iteration."""
    if M < 1:
        raise ValueError("M must be at least 1")
    probs = assignment_probabilities(data, spec)
    cum = np.cumsum(probs, axis=1)
    cum[:, -1] = 1.0
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random((M, probs.shape[0]))
    z = (u[:, :, None] >= cum[None, :, :]).sum(axis=-1)
    return np.minimum(z, spec.K - 1).astype(np.int32) + 1


def sample_z_draws(data: np.ndarray, spec: MixtureSpec, M: int, seed: int) -> DrawSet:
    return DrawSet(sample_z_labels(data, spec, M, seed))


def sample_cluster_means(
    data: np.ndarray, draws: DrawSet, sigma2: float, seed: int
) -> ParamTable:
    """Per-draw cluster mean parameters given each draw's clusters.

    With known covariance ``sigma2 * I`` and a flat prior, the mean of a
    cluster ``C`` has posterior ``N(mean(y_C), sigma2 / |C| * I)``; one value is
    drawn per (draw, cluster).
    """
    data = np.asarray(data, dtype=float)
    rng = np.random.Generator(np.random.PCG64(seed))
    entries: dict[tuple[int, int], np.ndarray] = {}
    for m, row in enumerate(draws.labels):
        k = int(row.max())
        counts = np.bincount(row, minlength=k + 1)[1:]
        sums = np.zeros((k, data.shape[1]))
        np.add.at(sums, row - 1, data)
        centers = sums / counts[:, None]
        noise = rng.standard_normal(centers.shape) * np.sqrt(sigma2 / counts)[:, None]
        for lab in range(1, k + 1):
            entries[(m, lab)] = centers[lab - 1] + noise[lab - 1]
    return ParamTable(entries)

