"""Mann-Whitney, Cliff's delta, log transform, and the MANOVA battery."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from devminer.errors import DegenerateDataError
from devminer.stats import (
    DEFECTIVE_GREATER,
    NEUTRAL_GREATER,
    cliffs_delta,
    interpret_delta,
    log1p_transform,
    mann_whitney_one_sided,
    omanova,
)
from tests.oracles import oracle_cliffs_delta, oracle_mann_whitney_greater


def test_identical_samples_fail_to_reject():
    result = mann_whitney_one_sided([1, 2, 3, 4], [1, 2, 3, 4])
    assert result.p_value >= 0.4
    assert result.significant is False


def test_exact_p_one_twentieth():
    result = mann_whitney_one_sided([4, 5, 6], [1, 2, 3], DEFECTIVE_GREATER)
    assert result.p_value == pytest.approx(1.0 / 20.0)
    assert result.method == "exact"


def test_direction_swap():
    greater = mann_whitney_one_sided([4, 5, 6], [1, 2, 3], DEFECTIVE_GREATER)
    lesser = mann_whitney_one_sided([4, 5, 6], [1, 2, 3], NEUTRAL_GREATER)
    assert greater.p_value < 0.1
    assert lesser.p_value > 0.9


def test_empty_sample_rejected():
    with pytest.raises(ValueError):
        mann_whitney_one_sided([], [1.0])
    with pytest.raises(ValueError):
        mann_whitney_one_sided([1.0], [])


def test_unknown_direction_rejected():
    with pytest.raises(ValueError):
        mann_whitney_one_sided([1.0], [2.0], "sideways")


def test_exact_path_equals_permutation_oracle():
    rng = random.Random(99)
    for n in range(1, 7):
        for m in range(1, 7):
            for _ in range(3):
                x = [rng.randint(0, 4) for _ in range(n)]
                y = [rng.randint(0, 4) for _ in range(m)]
                result = mann_whitney_one_sided(x, y, DEFECTIVE_GREATER)
                assert result.method == "exact"
                assert result.p_value == pytest.approx(
                    float(oracle_mann_whitney_greater(x, y)), abs=0.0
                )


def test_normal_approximation_close_to_permutation():
    rng = np.random.default_rng(7)
    for _ in range(3):
        x = rng.normal(0.4, 1.0, size=15)
        y = rng.normal(0.0, 1.0, size=15)
        result = mann_whitney_one_sided(x, y, DEFECTIVE_GREATER)
        assert result.method == "normal"
        perm = _permutation_p(x, y, 40_000, rng)
        assert abs(result.p_value - perm) < 0.01


def _permutation_p(x, y, draws, rng):
    combined = np.concatenate([x, y])
    order = np.argsort(np.argsort(combined, kind="mergesort"), kind="mergesort")
    ranks = np.empty(len(combined))
    sorted_vals = np.sort(combined)
    # midranks
    i = 0
    srt = np.argsort(combined, kind="mergesort")
    while i < len(combined):
        j = i
        while j + 1 < len(combined) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[srt[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    del order
    n = len(x)
    observed = ranks[:n].sum()
    keys = rng.random((draws, len(combined)))
    chosen = np.argsort(keys, axis=1)[:, :n]
    sums = ranks[chosen].sum(axis=1)
    return float(np.mean(sums >= observed - 1e-9))


@settings(max_examples=40, deadline=None)
@given(
    x=st.lists(st.integers(0, 50), min_size=2, max_size=6),
    y=st.lists(st.integers(0, 50), min_size=2, max_size=6),
)
def test_p_invariant_under_monotone_transform(x, y):
    base = mann_whitney_one_sided(x, y).p_value
    fx = [math.exp(v / 10.0) for v in x]
    fy = [math.exp(v / 10.0) for v in y]
    assert mann_whitney_one_sided(fx, fy).p_value == pytest.approx(base, abs=1e-12)


def test_cliffs_delta_total_dominance():
    effect = cliffs_delta([5, 6, 7], [1, 2, 3])
    assert effect.delta == 1.0
    assert effect.magnitude == "large"


def test_cliffs_delta_identical():
    effect = cliffs_delta([1, 2, 3], [1, 2, 3])
    assert effect.delta == 0.0
    assert effect.magnitude == "negligible"


def test_cliffs_delta_known_large_fixture():
    effect = cliffs_delta([2, 2, 1, 1, 1], [1, 1, 1, 0])
    assert effect.delta == pytest.approx(0.55)
    assert effect.magnitude == "large"


def test_cliffs_delta_antisymmetry_and_bounds():
    rng = random.Random(3)
    for _ in range(20):
        x = [rng.randint(0, 5) for _ in range(rng.randint(1, 10))]
        y = [rng.randint(0, 5) for _ in range(rng.randint(1, 10))]
        d_xy = cliffs_delta(x, y).delta
        d_yx = cliffs_delta(y, x).delta
        assert d_xy == pytest.approx(-d_yx)
        assert -1.0 <= d_xy <= 1.0
        assert d_xy == pytest.approx(float(oracle_cliffs_delta(x, y)))


def test_cliffs_all_ties():
    effect = cliffs_delta([2, 2], [2, 2, 2])
    assert effect.delta == 0.0
    assert effect.magnitude == "negligible"


@pytest.mark.parametrize(
    "delta,expected",
    [(0.10, "negligible"), (0.20, "small"), (0.40, "medium"), (0.50, "large")],
)
def test_romano_bins(delta, expected):
    assert interpret_delta(delta) == expected
    assert interpret_delta(-delta) == expected


def test_log1p_values():
    out = log1p_transform([0.0, math.e - 1.0, 3.0])
    assert out[0] == 0.0
    assert out[1] == pytest.approx(1.0)
    assert out[2] == pytest.approx(math.log(4.0))


def test_log1p_rejects_negative():
    with pytest.raises(ValueError):
        log1p_transform([-0.5])


def _balanced_data(rng, n=60):
    labels = np.array([i % 2 == 0 for i in range(n)])
    size = rng.gamma(2.0, 20.0, size=n)
    age = rng.gamma(1.5, 4.0, size=n)
    return labels, size, age


def test_omanova_class_indicator_metric():
    rng = np.random.default_rng(0)
    labels, size, age = _balanced_data(rng)
    metric = labels.astype(float) + rng.normal(0, 1e-3, size=len(labels))
    result = omanova(metric, size, age, labels)
    assert result.p_values["metric"] < 1e-6


def test_omanova_independent_metric_usually_insignificant():
    hits = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        labels, size, age = _balanced_data(rng)
        metric = rng.gamma(2.0, 3.0, size=len(labels))
        result = omanova(metric, size, age, labels)
        if result.p_values["metric"] > 0.01:
            hits += 1
    assert hits >= 19


def test_omanova_size_signal_only():
    rng = np.random.default_rng(5)
    labels = np.array([i % 2 == 0 for i in range(40)])
    size = labels * 30.0 + rng.normal(0, 1.0, size=40) + 40.0
    age = rng.gamma(1.5, 4.0, size=40)
    metric = np.full(40, 3.0) + rng.normal(0, 1e-6, size=40)
    result = omanova(metric, size, age, labels)
    assert result.p_values["size"] < 0.01
    assert result.p_values["metric"] > 0.1


def test_omanova_degenerate_metric_named():
    labels = np.array([True, True, False, False])
    with pytest.raises(DegenerateDataError) as err:
        omanova([1.0, 1.0, 1.0, 1.0], [1, 2, 3, 4], [1, 2, 1, 2], labels)
    assert "metric" in str(err.value)


def test_omanova_needs_two_per_class():
    with pytest.raises(ValueError):
        omanova([1, 2, 3], [1, 2, 3], [1, 2, 3], [True, False, False])


def test_omanova_relabel_symmetry():
    rng = np.random.default_rng(11)
    labels, size, age = _balanced_data(rng, n=30)
    metric = rng.gamma(2.0, 3.0, size=30)
    a = omanova(metric, size, age, labels)
    b = omanova(metric, size, age, ~labels)
    for key in ("size", "age", "metric"):
        assert a.p_values[key] == pytest.approx(b.p_values[key], rel=1e-9)


def test_omanova_transform_flag_on_skewed_variable():
    rng = np.random.default_rng(2)
    labels = np.array([i % 2 == 0 for i in range(50)])
    skewed = rng.lognormal(0.0, 1.5, size=50)
    symmetric = rng.normal(10.0, 1.0, size=50)
    result = omanova(skewed, symmetric, symmetric + rng.normal(0, 0.5, 50), labels)
    assert result.transform_applied["metric"] is True
    assert result.transform_applied["size"] is False


def test_omanova_pillai_exposed():
    rng = np.random.default_rng(4)
    labels, size, age = _balanced_data(rng, n=30)
    metric = rng.gamma(2.0, 3.0, size=30)
    result = omanova(metric, size, age, labels)
    assert 0.0 <= result.pillai_trace <= 3.0


def test_significance_flag_matches_alpha():
    result = mann_whitney_one_sided([10, 11, 12, 13], [1, 2, 3, 4])
    assert result.significant == (result.p_value < 0.01)
