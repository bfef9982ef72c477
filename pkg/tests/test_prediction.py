"""PCA, differential evolution, cross validation, and Scott-Knott ranking."""

from __future__ import annotations

import numpy as np
import pytest

from devminer.errors import DataError, DegenerateDataError
from devminer.prediction import (
    FeatureMatrix,
    _stratified_folds,
    activity_features,
    compare_feature_sets,
    cross_validate_10x10,
    de_tune,
    differential_evolution,
    pca_fit,
    pca_inverse,
    pca_transform,
    scott_knott_rank,
)
from devminer.metrics import metric_table
from devminer.stats import log1p_transform
from devminer.synth import SynthConfig, generate_dataset


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------


def test_pca_rank_one_retains_single_component():
    rng = np.random.default_rng(0)
    direction = np.array([1.0, 2.0, -0.5])
    X = np.outer(rng.normal(size=30), direction) + 4.0
    model = pca_fit(X)
    assert model.retained_count == 1


def test_pca_isotropic_needs_all_three():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(500, 3))
    model = pca_fit(X)
    assert model.retained_count == 3


def test_pca_cumulative_variance_target():
    rng = np.random.default_rng(2)
    for _ in range(10):
        X = rng.normal(size=(40, 6)) * rng.gamma(1.0, 2.0, size=6)
        model = pca_fit(X)
        assert sum(model.explained_variance_ratio[: model.retained_count]) >= 0.95 - 1e-12


def test_pca_components_orthonormal():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(50, 5)) * np.array([3.0, 2.0, 1.0, 0.5, 0.1])
    model = pca_fit(X)
    gram = model.components @ model.components.T
    assert np.allclose(gram, np.eye(model.retained_count), atol=1e-9)


def test_pca_inverse_reconstructs_rank_deficient_data():
    rng = np.random.default_rng(4)
    basis = rng.normal(size=(2, 5))
    X = rng.normal(size=(40, 2)) @ basis + 1.5
    model = pca_fit(X)
    assert model.retained_count == 2
    reduced = pca_transform(model, X)
    assert np.allclose(pca_inverse(model, reduced), X, atol=1e-6)


def test_pca_zero_variance_degenerate():
    with pytest.raises(DegenerateDataError):
        pca_fit(np.full((10, 3), 7.0))


def test_pca_needs_two_rows():
    with pytest.raises(ValueError):
        pca_fit(np.zeros((1, 3)))


def test_pca_activity_features_component_count():
    dataset = generate_dataset(SynthConfig(seed=2, n_scripts=120))
    table = metric_table(dataset.commits, dataset.classes)
    matrix = activity_features(table)
    model = pca_fit(log1p_transform(matrix.values))
    assert 2 <= model.retained_count <= 5


# ---------------------------------------------------------------------------
# Differential evolution
# ---------------------------------------------------------------------------


def test_de_finds_sphere_optimum():
    rng = np.random.default_rng(0)
    best, value = differential_evolution(
        lambda v: -float(v @ v),
        bounds=[(-5.0, 5.0), (-5.0, 5.0)],
        generations=50,
        rng=rng,
    )
    assert value >= -1e-2
    assert np.all(np.abs(best) <= 0.12)


def test_de_candidates_respect_bounds():
    seen = []

    def probe(v):
        seen.append(v.copy())
        return 0.0

    rng = np.random.default_rng(1)
    differential_evolution(probe, bounds=[(0.0, 1.0), (2.0, 3.0)], generations=1, rng=rng)
    stacked = np.array(seen)
    assert np.all(stacked[:, 0] >= 0.0) and np.all(stacked[:, 0] <= 1.0)
    assert np.all(stacked[:, 1] >= 2.0) and np.all(stacked[:, 1] <= 3.0)


def test_de_budget_validation():
    rng = np.random.default_rng(2)
    with pytest.raises(ValueError):
        differential_evolution(lambda v: 0.0, [(0, 1)], generations=0, rng=rng)


def _signal_matrix(rng, n=60):
    X = rng.normal(size=(n, 3))
    y = X[:, 0] > 0.0
    return X, y


def test_de_tune_seeded_repeatable():
    rng = np.random.default_rng(3)
    X, y = _signal_matrix(rng)
    a = de_tune("CART", X, y, budget=2, seed=11)
    b = de_tune("CART", X, y, budget=2, seed=11)
    assert a == b
    assert 1 <= a["max_depth"] <= 20
    assert 2 <= a["min_split"] <= 20


def test_de_tune_budget_validation():
    rng = np.random.default_rng(4)
    X, y = _signal_matrix(rng)
    with pytest.raises(ValueError):
        de_tune("LR", X, y, budget=0)


def test_de_tune_log_space_bounds():
    rng = np.random.default_rng(5)
    X, y = _signal_matrix(rng)
    params = de_tune("NB", X, y, budget=1, seed=3)
    assert 1e-12 <= params["var_smoothing"] <= 1e-3


# ---------------------------------------------------------------------------
# Cross validation
# ---------------------------------------------------------------------------


def test_folds_partition_rows():
    y = np.array([True] * 13 + [False] * 17)
    rng = np.random.default_rng(0)
    folds = _stratified_folds(y, rng, 10)
    flat = np.concatenate(folds)
    assert sorted(flat.tolist()) == list(range(30))
    assert len(set(flat.tolist())) == 30


def test_cv_separable_data_median_f1():
    rng = np.random.default_rng(1)
    X = np.vstack([rng.normal(0, 1, (40, 2)), rng.normal(8, 1, (40, 2))])
    y = np.array([False] * 40 + [True] * 40)
    for kind in ("CART", "LR", "NB", "RF"):
        cell = cross_validate_10x10(X, y, kind, seed=2)
        assert len(cell.f1) == 100
        assert cell.median("f1") >= 0.98


def test_cv_shuffled_labels_near_chance():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(80, 3))
    y = np.array([i % 2 == 0 for i in range(80)])
    cell = cross_validate_10x10(X, y, "CART", seed=3)
    assert abs(cell.median("f1") - 0.5) <= 0.1


def test_cv_requires_twenty_rows():
    X = np.zeros((10, 2))
    y = np.array([True, False] * 5)
    with pytest.raises(DataError):
        cross_validate_10x10(X, y, "CART")


def test_cv_requires_two_per_class():
    X = np.zeros((30, 2))
    y = np.array([True] + [False] * 29)
    with pytest.raises(DataError):
        cross_validate_10x10(X, y, "CART")


def test_cv_undefined_precision_flagged_as_zero():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 2))
    y = np.array([True, False] * 20)
    cell = cross_validate_10x10(X, y, "NB", seed=9)
    for fold_index in cell.undefined_precision_folds:
        assert cell.precision[fold_index] == 0.0


def test_cv_scores_in_unit_interval():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(50, 3))
    y = rng.random(50) < 0.4
    cell = cross_validate_10x10(X, y, "RF", seed=1)
    for measure in (cell.precision, cell.recall, cell.f1):
        assert all(0.0 <= v <= 1.0 for v in measure)
    for p, r, f in zip(cell.precision, cell.recall, cell.f1):
        if f == 0.0:
            assert p * r == 0.0
        else:
            assert f == pytest.approx(2 * p * r / (p + r))


# ---------------------------------------------------------------------------
# Scott-Knott
# ---------------------------------------------------------------------------


def test_sk_disjoint_constants_two_ranks():
    groups = {"hi": [1.0] * 30, "lo": [0.0] * 30}
    ranks = scott_knott_rank(groups, seed=0)
    assert ranks == {"hi": 1, "lo": 2}


def test_sk_same_distribution_usually_coranked():
    co_ranked = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        groups = {
            "a": rng.normal(0.7, 0.05, 30).tolist(),
            "b": rng.normal(0.7, 0.05, 30).tolist(),
        }
        ranks = scott_knott_rank(groups, seed=seed)
        if ranks["a"] == ranks["b"]:
            co_ranked += 1
    assert co_ranked >= 95


def test_sk_two_pairs_two_ranks():
    rng = np.random.default_rng(0)
    groups = {
        "h1": (0.900 + rng.normal(0, 0.05, 30)).tolist(),
        "h2": (0.895 + rng.normal(0, 0.05, 30)).tolist(),
        "l1": (0.500 + rng.normal(0, 0.05, 30)).tolist(),
        "l2": (0.505 + rng.normal(0, 0.05, 30)).tolist(),
    }
    ranks = scott_knott_rank(groups, seed=1)
    assert ranks["h1"] == ranks["h2"] == 1
    assert ranks["l1"] == ranks["l2"] == 2


def test_sk_rank_one_is_best_median():
    groups = {"good": [0.9, 0.91] * 15, "bad": [0.1, 0.12] * 15}
    ranks = scott_knott_rank(groups, seed=2)
    assert ranks["good"] == 1


def test_sk_name_permutation_invariance():
    rng = np.random.default_rng(3)
    values = {
        "x": rng.normal(0.9, 0.02, 30).tolist(),
        "y": rng.normal(0.5, 0.02, 30).tolist(),
        "z": rng.normal(0.51, 0.02, 30).tolist(),
    }
    ranks = scott_knott_rank(values, seed=4)
    renamed = {"z": values["x"], "x": values["y"], "y": values["z"]}
    ranks2 = scott_knott_rank(renamed, seed=4)
    assert ranks2["z"] == ranks["x"]
    assert ranks2["x"] == ranks["y"]
    assert ranks2["y"] == ranks["z"]


def test_sk_duplicate_group_coranks_with_twin():
    rng = np.random.default_rng(5)
    base = rng.normal(0.8, 0.03, 30).tolist()
    other = rng.normal(0.4, 0.03, 30).tolist()
    ranks = scott_knott_rank({"a": base, "b": other, "a2": list(base)}, seed=6)
    assert ranks["a"] == ranks["a2"]


def test_sk_single_group():
    assert scott_knott_rank({"only": [1.0, 2.0]}) == {"only": 1}


def test_sk_group_needs_two_values():
    with pytest.raises(ValueError):
        scott_knott_rank({"a": [1.0], "b": [1.0, 2.0]})


# ---------------------------------------------------------------------------
# compare_feature_sets
# ---------------------------------------------------------------------------


def _tiny_feature_sets(rng):
    n = 40
    y = np.array([i % 2 == 0 for i in range(n)])
    signal = np.abs(rng.normal(size=(n, 3))) + y[:, None] * 3.0
    noise = np.abs(rng.normal(size=(n, 4)))
    rows = tuple(f"s{i}.pp" for i in range(n))
    return {
        "signal": FeatureMatrix(rows, ("a", "b", "c"), signal, y),
        "noise": FeatureMatrix(rows, ("p", "q", "r", "s"), noise, y),
    }


def test_compare_feature_sets_cardinality_and_schema():
    rng = np.random.default_rng(0)
    report = compare_feature_sets(_tiny_feature_sets(rng), tune=False, seed=1)
    obj = report.to_json_obj()
    cells = [(fs, lr) for fs in obj for lr in obj[fs]]
    assert len(cells) == 2 * 4
    for fs in obj:
        for lr in obj[fs]:
            cell = obj[fs][lr]
            assert len(cell["precision"]) == 100
            assert len(cell["recall"]) == 100
            assert len(cell["f1"]) == 100
            assert set(cell["median"]) == {"precision", "recall", "f1"}
            assert set(cell["sk_rank"]) == {"precision", "recall", "f1"}


def test_compare_feature_sets_reproducible():
    rng = np.random.default_rng(0)
    sets = _tiny_feature_sets(rng)
    a = compare_feature_sets(sets, tune=False, seed=5).to_json()
    b = compare_feature_sets(sets, tune=False, seed=5).to_json()
    assert a == b


def test_cv_with_tuning_smoke():
    rng = np.random.default_rng(9)
    X = np.vstack([rng.normal(0, 1, (20, 2)), rng.normal(5, 1, (20, 2))])
    y = np.array([False] * 20 + [True] * 20)
    cell = cross_validate_10x10(X, y, "NB", tune=True, budget=1, seed=3)
    assert len(cell.f1) == 100
    assert cell.median("f1") >= 0.9


def test_feature_matrix_rejects_missing_values():
    with pytest.raises(ValueError):
        FeatureMatrix(
            ("a",), ("x",), np.array([[np.nan]]), np.array([True])
        )
