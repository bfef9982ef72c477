"""Four statistical learners: Gini decision tree (CART), L2 logistic
regression (LR), Gaussian Naive Bayes (NB), and a bagged random forest (RF).

All learners predict booleans (defective = positive) and are deterministic
given their seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from devminer.errors import TrainingError

LEARNER_KINDS = ("CART", "LR", "NB", "RF")

DEFAULT_HYPERPARAMS: dict[str, dict[str, float]] = {
    "CART": {"max_depth": 12, "min_split": 2},
    "LR": {"l2": 1.0},
    "NB": {"var_smoothing": 1e-9},
    "RF": {"n_trees": 30, "feature_fraction": 1.0, "max_depth": 12, "min_split": 2},
}


@dataclass
class _TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None
    prediction: bool = False

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _best_split(X: np.ndarray, y: np.ndarray, columns: np.ndarray) -> tuple[int, float] | None:
    """Lowest weighted-Gini split over the candidate columns, or None.

    Zero-gain splits are allowed as long as a threshold separates distinct
    values, so consistently labeled data is always driven to pure leaves.
    """
    n = len(y)
    sub = X[:, columns]
    order = np.argsort(sub, axis=0, kind="mergesort")
    sorted_vals = np.take_along_axis(sub, order, axis=0)
    sorted_pos = np.cumsum(y[order], axis=0, dtype=float)
    total_pos = sorted_pos[-1, :]

    left_n = np.arange(1, n, dtype=float)[:, None]
    right_n = n - left_n
    left_pos = sorted_pos[:-1, :]
    right_pos = total_pos[None, :] - left_pos
    gini_left = 1.0 - (left_pos / left_n) ** 2 - ((left_n - left_pos) / left_n) ** 2
    gini_right = 1.0 - (right_pos / right_n) ** 2 - ((right_n - right_pos) / right_n) ** 2
    weighted = (left_n * gini_left + right_n * gini_right) / n
    weighted[sorted_vals[1:, :] <= sorted_vals[:-1, :]] = np.inf

    flat = int(np.argmin(weighted))
    if not np.isfinite(weighted.flat[flat]):
        return None
    row, col = divmod(flat, weighted.shape[1])
    feature = int(columns[col])
    threshold = float((sorted_vals[row, col] + sorted_vals[row + 1, col]) / 2.0)
    return feature, threshold


@dataclass
class CartModel:
    max_depth: int | None = None
    min_split: int = 2
    feature_fraction: float = 1.0
    _root: _TreeNode | None = field(default=None, repr=False)

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator | None = None) -> "CartModel":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=bool)
        self._rng = rng
        self._n_features = X.shape[1]
        self._root = self._grow(X, y, depth=0)
        return self

    def _candidate_columns(self) -> np.ndarray:
        d = self._n_features
        k = max(1, int(round(self.feature_fraction * d)))
        if k >= d or self._rng is None:
            return np.arange(d)
        return np.sort(self._rng.choice(d, size=k, replace=False))

    def _grow(self, X: np.ndarray, y: np.ndarray, depth: int) -> _TreeNode:
        pos = int(y.sum())
        node = _TreeNode(prediction=pos * 2 > len(y))
        impure = 0 < pos < len(y)
        depth_ok = self.max_depth is None or depth < self.max_depth
        if not impure or not depth_ok or len(y) < self.min_split:
            return node
        split = _best_split(X, y, self._candidate_columns())
        if split is None:
            return node
        node.feature, node.threshold = split
        mask = X[:, node.feature] <= node.threshold
        node.left = self._grow(X[mask], y[mask], depth + 1)
        node.right = self._grow(X[~mask], y[~mask], depth + 1)
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.zeros(len(X), dtype=bool)
        self._route(self._root, X, np.arange(len(X)), out)
        return out

    def _route(self, node: _TreeNode, X: np.ndarray, idx: np.ndarray, out: np.ndarray) -> None:
        if node.is_leaf:
            out[idx] = node.prediction
            return
        mask = X[idx, node.feature] <= node.threshold
        self._route(node.left, X, idx[mask], out)
        self._route(node.right, X, idx[~mask], out)


@dataclass
class LogisticModel:
    l2: float = 1.0
    max_iter: int = 1000
    tol: float = 1e-8

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LogisticModel":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        self._mean = X.mean(axis=0)
        std = X.std(axis=0)
        self._std = np.where(std == 0, 1.0, std)
        Xs = np.column_stack([np.ones(len(X)), (X - self._mean) / self._std])
        n, d = Xs.shape
        # step bounded by the logistic Hessian Lipschitz constant
        lam_max = self._power_iteration(Xs)
        step = 1.0 / (0.25 * lam_max + self.l2 / n + 1e-12)
        w = np.zeros(d)
        for _ in range(self.max_iter):
            p = 1.0 / (1.0 + np.exp(-Xs @ w))
            grad = Xs.T @ (y - p) / n - self.l2 * w / n
            w += step * grad
            if float(np.abs(grad).max()) < self.tol:
                break
        self._w = w
        return self

    @staticmethod
    def _power_iteration(X: np.ndarray, iters: int = 20) -> float:
        gram = X.T @ X / len(X)
        v = np.ones(gram.shape[0]) / np.sqrt(gram.shape[0])
        for _ in range(iters):
            nv = gram @ v
            norm = float(np.linalg.norm(nv))
            if norm == 0:
                return 1.0
            v = nv / norm
        return float(v @ gram @ v)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        Xs = np.column_stack(
            [np.ones(len(X)), (np.asarray(X, dtype=float) - self._mean) / self._std]
        )
        return 1.0 / (1.0 + np.exp(-Xs @ self._w))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.predict_proba(X) > 0.5


@dataclass
class NaiveBayesModel:
    var_smoothing: float = 1e-9

    def fit(self, X: np.ndarray, y: np.ndarray) -> "NaiveBayesModel":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=bool)
        max_var = float(np.var(X, axis=0).max())
        smoothing = self.var_smoothing * max_var if max_var > 0 else self.var_smoothing
        self._params = {}
        for cls in (False, True):
            sel = X[y == cls]
            self._params[cls] = (
                np.log(len(sel) / len(X)),
                sel.mean(axis=0),
                sel.var(axis=0) + smoothing,
            )
        return self

    def _log_posterior(self, X: np.ndarray, cls: bool) -> np.ndarray:
        prior, mean, var = self._params[cls]
        log_lik = -0.5 * (np.log(2.0 * np.pi * var) + (X - mean) ** 2 / var)
        return prior + log_lik.sum(axis=1)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return self._log_posterior(X, True) > self._log_posterior(X, False)


@dataclass
class RandomForestModel:
    n_trees: int = 30
    feature_fraction: float = 1.0
    max_depth: int | None = 12
    min_split: int = 2
    bootstrap: bool = True
    seed: int = 0

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RandomForestModel":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=bool)
        rng = np.random.default_rng(self.seed)
        self._trees = []
        for _ in range(self.n_trees):
            if self.bootstrap:
                idx = rng.integers(0, len(y), size=len(y))
                Xb, yb = X[idx], y[idx]
            else:
                Xb, yb = X, y
            tree = CartModel(
                max_depth=self.max_depth,
                min_split=self.min_split,
                feature_fraction=self.feature_fraction,
            )
            tree.fit(Xb, yb, rng=rng)
            self._trees.append(tree)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        votes = np.zeros(len(X), dtype=int)
        for tree in self._trees:
            votes += tree.predict(X)
        return votes * 2 > self.n_trees


Model = CartModel | LogisticModel | NaiveBayesModel | RandomForestModel


def train(
    learner_kind: str,
    features: np.ndarray,
    labels: np.ndarray,
    hyperparams: Mapping[str, float] | None = None,
    seed: int = 0,
) -> Model:
    """Fit one learner; raises TrainingError on a single-class training set."""
    y = np.asarray(labels, dtype=bool)
    if y.all() or not y.any():
        raise TrainingError("training data must contain both classes")
    if learner_kind not in LEARNER_KINDS:
        raise ValueError(f"unknown learner kind: {learner_kind}")
    params = dict(DEFAULT_HYPERPARAMS[learner_kind])
    params.update(hyperparams or {})
    X = np.asarray(features, dtype=float)
    if learner_kind == "CART":
        model = CartModel(
            max_depth=None if params["max_depth"] is None else int(params["max_depth"]),
            min_split=int(params["min_split"]),
        )
        return model.fit(X, y)
    if learner_kind == "LR":
        return LogisticModel(l2=float(params["l2"])).fit(X, y)
    if learner_kind == "NB":
        return NaiveBayesModel(var_smoothing=float(params["var_smoothing"])).fit(X, y)
    model = RandomForestModel(
        n_trees=int(params["n_trees"]),
        feature_fraction=float(params["feature_fraction"]),
        max_depth=None if params.get("max_depth") is None else int(params["max_depth"]),
        min_split=int(params.get("min_split", 2)),
        bootstrap=bool(params.get("bootstrap", True)),
        seed=seed,
    )
    return model.fit(X, y)


def predict(model: Model, features: np.ndarray) -> np.ndarray:
    return model.predict(np.asarray(features, dtype=float))
