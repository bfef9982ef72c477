"""Defect-prediction pipeline: log transform, PCA, 10x10-fold cross
validation over four learners, differential-evolution tuning, and
Scott-Knott ranking of feature sets."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from devminer.errors import DataError, DegenerateDataError, TrainingError
from devminer.features import BowVector, CodeQualityVector
from devminer.learners import LEARNER_KINDS, predict, train
from devminer.metrics import METRIC_COLUMNS, MetricVector
from devminer.stats import cliffs_delta, log1p_transform

_LEARNER_IDS = {kind: i + 1 for i, kind in enumerate(LEARNER_KINDS)}

VARIANCE_TARGET = 0.95
MEASURES = ("precision", "recall", "f1")


# ---------------------------------------------------------------------------
# Feature matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureMatrix:
    rows: tuple[str, ...]
    columns: tuple[str, ...]
    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature matrix must not contain missing values")
        if len(self.rows) != len(self.values) or len(self.rows) != len(self.labels):
            raise ValueError("rows, values, and labels must align")


def activity_features(table: Sequence[MetricVector]) -> FeatureMatrix:
    """Seven activity metrics per script; rows with undefined ownership
    (empty final snapshot) are dropped."""
    usable = [r for r in table if r.highest_contrib_code is not None]
    values = np.array(
        [
            [
                r.developer_count,
                r.disjointness,
                r.highest_contrib_code,
                r.minor_contributors,
                r.norm_commit_size,
                r.scatteredness,
                r.unfocused_contribution,
            ]
            for r in usable
        ],
        dtype=float,
    )
    return FeatureMatrix(
        rows=tuple(r.script_path for r in usable),
        columns=METRIC_COLUMNS,
        values=values,
        labels=np.array([r.is_defective for r in usable], dtype=bool),
    )


def bow_features(vectors: Sequence[BowVector], labels: Mapping[str, bool]) -> FeatureMatrix:
    vocabulary = sorted({t for v in vectors for t in v.token_counts})
    index = {t: i for i, t in enumerate(vocabulary)}
    values = np.zeros((len(vectors), len(vocabulary)))
    for i, vec in enumerate(vectors):
        for token, count in vec.token_counts.items():
            values[i, index[token]] = count
    return FeatureMatrix(
        rows=tuple(v.script_path for v in vectors),
        columns=tuple(vocabulary),
        values=values,
        labels=np.array([labels[v.script_path] for v in vectors], dtype=bool),
    )


def quality_features(
    vectors: Sequence[CodeQualityVector], labels: Mapping[str, bool]
) -> FeatureMatrix:
    values = np.array(
        [
            [v.filelength, v.complexity, v.parameters, v.execs, v.lint_warnings, v.fan_in]
            for v in vectors
        ],
        dtype=float,
    )
    return FeatureMatrix(
        rows=tuple(v.script_path for v in vectors),
        columns=("filelength", "complexity", "parameters", "execs", "lint_warnings", "fan_in"),
        values=values,
        labels=np.array([labels[v.script_path] for v in vectors], dtype=bool),
    )


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (retained_count, d), orthonormal rows
    retained_count: int
    explained_variance_ratio: tuple[float, ...]


def pca_fit(matrix: np.ndarray, variance_target: float = VARIANCE_TARGET) -> PcaModel:
    """Eigendecomposition of the covariance; retain the smallest component
    count whose cumulative explained variance reaches the target."""
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2 or len(X) < 2:
        raise ValueError("PCA needs a 2-d matrix with at least two rows")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (len(X) - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = eigvecs[:, order]
    total = float(eigvals.sum())
    if total == 0.0:
        raise DegenerateDataError("matrix has zero variance in every direction")
    ratios = eigvals / total
    retained = int(np.searchsorted(np.cumsum(ratios), variance_target) + 1)
    retained = min(retained, len(ratios))
    components = eigvecs[:, :retained].T.copy()
    # fix component signs so refits of identical data are bit-stable
    for row in components:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    return PcaModel(
        mean=mean,
        components=components,
        retained_count=retained,
        explained_variance_ratio=tuple(float(r) for r in ratios),
    )


def pca_transform(model: PcaModel, matrix: np.ndarray) -> np.ndarray:
    return (np.asarray(matrix, dtype=float) - model.mean) @ model.components.T


def pca_inverse(model: PcaModel, reduced: np.ndarray) -> np.ndarray:
    return np.asarray(reduced, dtype=float) @ model.components + model.mean


# ---------------------------------------------------------------------------
# Differential evolution
# ---------------------------------------------------------------------------

# (name, low, high, kind); log bounds are expressed in base-10 exponents
SEARCH_SPACES: dict[str, tuple[tuple[str, float, float, str], ...]] = {
    "CART": (("max_depth", 1, 20, "int"), ("min_split", 2, 20, "int")),
    "RF": (("n_trees", 10, 150, "int"), ("feature_fraction", 0.1, 1.0, "float")),
    "LR": (("l2", -4, 2, "log"),),
    "NB": (("var_smoothing", -12, -3, "log"),),
}


def differential_evolution(
    objective: Callable[[np.ndarray], float],
    bounds: Sequence[tuple[float, float]],
    *,
    pop_size: int = 10,
    weight: float = 0.75,
    crossover: float = 0.3,
    generations: int = 10,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float]:
    """DE/rand/1/bin maximizer; candidates are clamped to the bounds."""
    if generations < 1:
        raise ValueError("generations must be at least 1")
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    dim = len(bounds)
    population = lo + rng.random((pop_size, dim)) * (hi - lo)
    fitness = np.array([objective(ind) for ind in population])
    for _ in range(generations):
        for i in range(pop_size):
            others = [j for j in range(pop_size) if j != i]
            r1, r2, r3 = rng.choice(others, size=3, replace=False)
            mutant = population[r1] + weight * (population[r2] - population[r3])
            mutant = np.clip(mutant, lo, hi)
            cross = rng.random(dim) < crossover
            cross[rng.integers(dim)] = True
            trial = np.where(cross, mutant, population[i])
            score = objective(trial)
            if score >= fitness[i]:
                population[i] = trial
                fitness[i] = score
    best = int(np.argmax(fitness))
    return population[best].copy(), float(fitness[best])


def _decode(learner_kind: str, vector: np.ndarray) -> dict[str, float]:
    params: dict[str, float] = {}
    for (name, _, _, kind), value in zip(SEARCH_SPACES[learner_kind], vector):
        if kind == "int":
            params[name] = int(round(value))
        elif kind == "log":
            params[name] = float(10.0**value)
        else:
            params[name] = float(value)
    return params


def _stratified_folds(
    y: np.ndarray, rng: np.random.Generator, n_folds: int
) -> list[np.ndarray]:
    pos = np.flatnonzero(y)
    neg = np.flatnonzero(~y)
    pos = rng.permutation(pos)
    neg = rng.permutation(neg)
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    for i, idx in enumerate(pos):
        folds[i % n_folds].append(int(idx))
    for i, idx in enumerate(neg):
        folds[(i + len(pos)) % n_folds].append(int(idx))
    return [np.array(sorted(f), dtype=int) for f in folds]


def _fold_scores(actual: np.ndarray, predicted: np.ndarray) -> tuple[float, float, float, bool]:
    tp = int(np.count_nonzero(predicted & actual))
    fp = int(np.count_nonzero(predicted & ~actual))
    fn = int(np.count_nonzero(~predicted & actual))
    undefined = (tp + fp) == 0
    precision = 0.0 if undefined else tp / (tp + fp)
    recall = 0.0 if (tp + fn) == 0 else tp / (tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1, undefined


def de_tune(
    learner_kind: str,
    train_features: np.ndarray,
    train_labels: np.ndarray,
    budget: int = 10,
    seed: int = 0,
) -> dict[str, float]:
    """Tune one learner's hyperparameters by DE against the median F-measure
    of a 3-fold cross validation run inside the training split."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    space = SEARCH_SPACES[learner_kind]
    X = np.asarray(train_features, dtype=float)
    y = np.asarray(train_labels, dtype=bool)
    rng = np.random.default_rng(np.random.SeedSequence([seed, _LEARNER_IDS[learner_kind]]))
    inner = _stratified_folds(y, rng, n_folds=3)
    all_idx = np.arange(len(y))

    def objective(vector: np.ndarray) -> float:
        params = _decode(learner_kind, vector)
        scores = []
        for fold in inner:
            mask = np.isin(all_idx, fold)
            try:
                model = train(learner_kind, X[~mask], y[~mask], params, seed=seed)
                _, _, f1, _ = _fold_scores(y[mask], predict(model, X[mask]))
            except TrainingError:
                f1 = 0.0
            scores.append(f1)
        return float(np.median(scores))

    bounds = [(low, high) for _, low, high, _ in space]
    best, _ = differential_evolution(objective, bounds, generations=budget, rng=rng)
    return _decode(learner_kind, best)


# ---------------------------------------------------------------------------
# 10x10-fold cross validation
# ---------------------------------------------------------------------------


@dataclass
class CellResult:
    precision: list[float]
    recall: list[float]
    f1: list[float]
    undefined_precision_folds: list[int]

    def median(self, measure: str) -> float:
        return float(np.median(getattr(self, measure)))


def cross_validate_10x10(
    features: np.ndarray,
    labels: np.ndarray,
    learner_kind: str,
    *,
    tune: bool = False,
    seed: int = 0,
    budget: int = 10,
    n_repeats: int = 10,
    n_folds: int = 10,
) -> CellResult:
    """Ten seeded shuffles of ten stratified folds; precision, recall, and
    F-measure on each held-out fold with the defective class positive."""
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=bool)
    if len(y) < 2 * n_folds:
        raise DataError(f"need at least {2 * n_folds} rows, got {len(y)}")
    if int(y.sum()) < 2 or int((~y).sum()) < 2:
        raise DataError("both classes need at least two rows for stratified folds")
    learner_id = _LEARNER_IDS[learner_kind]
    result = CellResult([], [], [], [])
    all_idx = np.arange(len(y))
    for repeat in range(n_repeats):
        fold_rng = np.random.default_rng(np.random.SeedSequence([seed, repeat]))
        folds = _stratified_folds(y, fold_rng, n_folds)
        for fold_no, fold in enumerate(folds):
            mask = np.isin(all_idx, fold)
            fold_seed = int(
                np.random.SeedSequence([seed, learner_id, repeat, fold_no]).generate_state(1)[0]
            )
            params = (
                de_tune(learner_kind, X[~mask], y[~mask], budget=budget, seed=fold_seed)
                if tune
                else None
            )
            model = train(learner_kind, X[~mask], y[~mask], params, seed=fold_seed)
            p, r, f1, undefined = _fold_scores(y[mask], predict(model, X[mask]))
            if undefined:
                result.undefined_precision_folds.append(repeat * n_folds + fold_no)
            result.precision.append(p)
            result.recall.append(r)
            result.f1.append(f1)
    return result


# ---------------------------------------------------------------------------
# Scott-Knott ranking
# ---------------------------------------------------------------------------


def scott_knott_rank(
    groups: Mapping[str, Sequence[float]],
    *,
    alpha: float = 0.05,
    effect_threshold: float = 0.147,
    n_boot: int = 1000,
    seed: int = 0,
) -> dict[str, int]:
    """Cluster score distributions into ranks (1 = best median).

    A candidate split (the one maximizing between-group sum of squares) is
    kept only when a bootstrap difference-of-means test is significant at
    alpha AND Cliff's delta across the split is non-negligible.
    """
    names = list(groups)
    if len(names) < 2:
        return {n: 1 for n in names}
    for name in names:
        if len(groups[name]) < 2:
            raise ValueError(f"group {name} needs at least two values")
    rng = np.random.default_rng(seed)
    arrays = {n: np.asarray(groups[n], dtype=float) for n in names}

    def sort_key(name: str):
        vals = arrays[name]
        return (-float(np.median(vals)), -float(vals.mean()), tuple(np.sort(vals)))

    ordered = sorted(names, key=sort_key)
    ranks: dict[str, int] = {}

    def split_position(segment: list[str]) -> int | None:
        flat = [arrays[n] for n in segment]
        totals = np.concatenate(flat)
        grand = totals.mean()
        best_pos, best_ss = None, -1.0
        for pos in range(1, len(segment)):
            left = np.concatenate(flat[:pos])
            right = np.concatenate(flat[pos:])
            ss = len(left) * (left.mean() - grand) ** 2 + len(right) * (right.mean() - grand) ** 2
            if ss > best_ss:
                best_pos, best_ss = pos, ss
        left = np.concatenate(flat[:best_pos])
        right = np.concatenate(flat[best_pos:])
        if abs(cliffs_delta(left, right).delta) < effect_threshold:
            return None
        observed = abs(left.mean() - right.mean())
        pool = np.concatenate([left, right])
        draws_l = rng.choice(pool, size=(n_boot, len(left)), replace=True).mean(axis=1)
        draws_r = rng.choice(pool, size=(n_boot, len(right)), replace=True).mean(axis=1)
        p_boot = float(np.mean(np.abs(draws_l - draws_r) >= observed))
        if p_boot >= alpha:
            return None
        return best_pos

    def assign(segment: list[str], rank: int) -> int:
        if len(segment) == 1:
            ranks[segment[0]] = rank
            return rank
        pos = split_position(segment)
        if pos is None:
            for n in segment:
                ranks[n] = rank
            return rank
        last = assign(segment[:pos], rank)
        return assign(segment[pos:], last + 1)

    assign(ordered, 1)
    return ranks


# ---------------------------------------------------------------------------
# Feature-set comparison
# ---------------------------------------------------------------------------


@dataclass
class EvalReport:
    cells: dict[str, dict[str, CellResult]]
    sk_ranks: dict[str, dict[str, dict[str, int]]]
    retained_components: dict[str, int]
    seed: int

    def to_json_obj(self) -> dict:
        out: dict = {}
        for feature_set, learners in self.cells.items():
            out[feature_set] = {}
            for learner, cell in learners.items():
                out[feature_set][learner] = {
                    "precision": cell.precision,
                    "recall": cell.recall,
                    "f1": cell.f1,
                    "median": {m: cell.median(m) for m in MEASURES},
                    "sk_rank": self.sk_ranks[feature_set][learner],
                    "undefined_precision_folds": cell.undefined_precision_folds,
                }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True, indent=2) + "\n"


def compare_feature_sets(
    feature_sets: Mapping[str, FeatureMatrix],
    *,
    tune: bool = True,
    seed: int = 0,
    budget: int = 10,
    learners: Sequence[str] = LEARNER_KINDS,
) -> EvalReport:
    """Evaluate every (feature set, learner) pair and Scott-Knott rank the
    cells per measure."""
    cells: dict[str, dict[str, CellResult]] = {}
    retained: dict[str, int] = {}
    for name in sorted(feature_sets):
        matrix = feature_sets[name]
        transformed = log1p_transform(matrix.values)
        model = pca_fit(transformed)
        reduced = pca_transform(model, transformed)
        retained[name] = model.retained_count
        cells[name] = {}
        for learner in learners:
            cells[name][learner] = cross_validate_10x10(
                reduced, matrix.labels, learner, tune=tune, seed=seed, budget=budget
            )
    sk_ranks: dict[str, dict[str, dict[str, int]]] = {
        name: {learner: {} for learner in learners} for name in cells
    }
    for measure in MEASURES:
        grouped = {
            f"{name}/{learner}": getattr(cells[name][learner], measure)
            for name in cells
            for learner in learners
        }
        ranking = scott_knott_rank(grouped, seed=seed)
        for key, rank in ranking.items():
            name, learner = key.split("/", 1)
            sk_ranks[name][learner][measure] = rank
    return EvalReport(cells=cells, sk_ranks=sk_ranks, retained_components=retained, seed=seed)
