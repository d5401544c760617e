from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chipsuq.chips import ChipsRegion, chips
from chipsuq.draws import DrawSet, cluster_probability
from chipsuq.metrics import chips_curve, cluster_probabilities, unit_uncertainty
from chipsuq.partition import Subpartition

from test_chips import random_rows, uniform_three


def test_curve_single_constant_trace():
    ds = DrawSet([[1, 2, 2]] * 3)
    _, traces = chips(ds, 0.5, starts=[1], master_seed=0)
    curve = chips_curve(traces)
    assert curve.auchips == 1.0


def test_curve_uniform_three_exact():
    ds = DrawSet(uniform_three())
    _, traces = chips(ds, 0.5, starts=[0, 1, 2, 0, 1, 2], master_seed=0)
    curve = chips_curve(traces)
    assert curve.counts == (5, 3, 1)
    assert curve.auchips_exact == Fraction(3, 5)
    assert curve.auchips == 0.6


def test_curve_rejects_empty():
    with pytest.raises(ValueError):
        chips_curve([])


def test_auchips_is_step_function_integral():
    ds = DrawSet(random_rows(2, 9, 25))
    _, traces = chips(ds, 0.5, master_seed=1)
    curve = chips_curve(traces)
    n = curve.n
    # midpoint rule on a fine grid is exact for a step function whose jumps
    # fall on the grid of multiples of 1/n
    t = (np.arange(n * 1000) + 0.5) / (n * 1000)
    integral = curve.values[np.ceil(n * t).astype(int) - 1].mean()
    assert curve.auchips == pytest.approx(integral, abs=1e-12)


@given(st.integers(0, 5000), st.integers(1, 8), st.integers(1, 30))
@settings(max_examples=40, deadline=None)
def test_curve_properties(seed, n, M):
    ds = DrawSet(random_rows(seed, n, M))
    _, traces = chips(ds, 0.5, master_seed=seed)
    curve = chips_curve(traces)
    v = curve.values
    assert v[0] == 1.0
    assert np.all(np.diff(v) <= 0)
    for t in traces:
        assert np.all(v >= t.probs)
    assert v[-1] - 1e-15 <= curve.auchips <= 1.0
    assert (curve.auchips == 1.0) == bool(np.all(v == 1.0))


def test_unit_uncertainty_hand_example():
    ds = DrawSet([[1, 1, 1], [1, 1, 2]])
    region = ChipsRegion(Subpartition((0, 1), (1, 1)), 2, 0.5, 2, 2, 0)
    (u,) = unit_uncertainty(ds, region)
    assert u.item == 2
    assert u.q_max == 0.5 and u.drop == 0.5
    assert u.placement_counts == (1, 1)
    assert u.n_best == 2 and u.best_placement == 1


def test_unit_uncertainty_identical_draws():
    ds = DrawSet([[1, 2, 1, 3]] * 5)
    region = ChipsRegion(Subpartition((0, 1, 2), (1, 2, 1)), 3, 0.9, 5, 5, 0)
    (u,) = unit_uncertainty(ds, region)
    assert u.item == 3 and u.q_max == 1.0 and u.drop == 0.0
    assert u.best_placement == 3


def test_unit_uncertainty_rejects_mismatched_region():
    ds = DrawSet([[1, 1, 1], [1, 1, 2]])
    region = ChipsRegion(Subpartition((0, 1), (1, 1)), 2, 0.5, 1, 2, 0)
    with pytest.raises(ValueError):
        unit_uncertainty(ds, region)


@given(st.integers(0, 5000), st.integers(2, 9), st.integers(1, 40), st.sampled_from([0.2, 0.5, 0.8]))
@settings(max_examples=40, deadline=None)
def test_unit_bounds(seed, n, M, gamma):
    ds = DrawSet(random_rows(seed, n, M))
    region, traces = chips(ds, gamma, master_seed=seed)
    for u in unit_uncertainty(ds, region):
        assert 0 <= u.q_max <= region.probability
        assert u.drop >= 0
        assert sum(u.placement_counts) == region.count
    for j, p in enumerate(cluster_probabilities(ds, region)):
        assert p >= region.probability
        assert p == cluster_probability(ds, region.subpartition.clusters()[j])


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_uncertain_item_divides_probability_by_k(k):
    # base subpartition: items 0..k-1 in separate clusters. Consistent draws
    # put item k with each cluster equally often; inconsistent draws put
    # items 0 and 1 together.
    n = k + 1
    rows = []
    for j in range(k):
        for _ in range(3):
            rows.append(list(range(1, k + 1)) + [j + 1])
    rows += [[1, 1] + list(range(3, n + 1))] * 5
    ds = DrawSet(rows)
    base_count = 3 * k
    region = ChipsRegion(Subpartition(tuple(range(k)), tuple(range(1, k + 1))), k, 0.5, base_count, ds.M, 0)
    (u,) = unit_uncertainty(ds, region)
    assert Fraction(u.count, ds.M) == Fraction(base_count, ds.M) / k
    assert u.placement_counts == (3,) * k + (0,)
