"""Distribution comparison battery: one-sided Mann-Whitney U, Cliff's delta
with Romano magnitude bins, and one-way MANOVA with size/age controls."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np
from scipy.special import betainc

from devminer.errors import DegenerateDataError

ALPHA = 0.01
EXACT_LIMIT = 8  # exact enumeration when both samples are at most this size

DEFECTIVE_GREATER = "defective_greater"
NEUTRAL_GREATER = "neutral_greater"


@dataclass(frozen=True)
class TestResult:
    metric_name: str
    p_value: float
    direction: str
    significant: bool
    sample_sizes: tuple[int, int]
    method: str  # "exact" | "normal"


@dataclass(frozen=True)
class EffectSize:
    metric_name: str
    delta: float
    magnitude: str


@dataclass(frozen=True)
class OmanovaResult:
    p_values: Mapping[str, float]  # keys: size, age, metric
    transform_applied: Mapping[str, bool]
    pillai_trace: float


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=float)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _u_statistic(ranks: np.ndarray, x_indices: Sequence[int], n: int) -> float:
    return float(sum(ranks[i] for i in x_indices)) - n * (n + 1) / 2.0


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney_one_sided(
    x: Sequence[float],
    y: Sequence[float],
    direction: str = DEFECTIVE_GREATER,
    metric_name: str = "",
) -> TestResult:
    """One-sided Mann-Whitney U test of the defective sample x against the
    neutral sample y.

    Exact enumeration over all group assignments when both samples have at
    most 8 values; otherwise a normal approximation with midrank ties,
    tie-corrected variance, and continuity correction.
    """
    if len(x) == 0 or len(y) == 0:
        raise ValueError("both samples must be non-empty")
    if direction not in (DEFECTIVE_GREATER, NEUTRAL_GREATER):
        raise ValueError(f"unknown direction: {direction}")
    a = np.asarray(x, dtype=float)
    b = np.asarray(y, dtype=float)
    if direction == NEUTRAL_GREATER:
        a, b = b, a
    n, m = len(a), len(b)
    combined = np.concatenate([a, b])
    ranks = _midranks(combined)
    u_obs = _u_statistic(ranks, range(n), n)

    if max(n, m) <= EXACT_LIMIT:
        total = 0
        at_least = 0
        for chosen in combinations(range(n + m), n):
            total += 1
            if _u_statistic(ranks, chosen, n) >= u_obs - 1e-9:
                at_least += 1
        p = at_least / total
        method = "exact"
    else:
        big_n = n + m
        mean = n * m / 2.0
        _, tie_counts = np.unique(combined, return_counts=True)
        tie_term = float(np.sum(tie_counts**3 - tie_counts))
        variance = n * m / 12.0 * ((big_n + 1) - tie_term / (big_n * (big_n - 1)))
        if variance <= 0:
            p = 0.5
        else:
            z = (u_obs - mean - 0.5) / math.sqrt(variance)
            p = _normal_sf(z)
        method = "normal"

    return TestResult(
        metric_name=metric_name,
        p_value=p,
        direction=direction,
        significant=p < ALPHA,
        sample_sizes=(len(x), len(y)),
        method=method,
    )


ROMANO_BINS = ((0.47, "large"), (0.33, "medium"), (0.14, "small"))


def interpret_delta(delta: float) -> str:
    magnitude = "negligible"
    for cutoff, name in ROMANO_BINS:
        if abs(delta) >= cutoff:
            return name
    return magnitude


def cliffs_delta(x: Sequence[float], y: Sequence[float], metric_name: str = "") -> EffectSize:
    """Normalized dominance: (#pairs x>y - #pairs x<y) / (|x|*|y|)."""
    if len(x) == 0 or len(y) == 0:
        raise ValueError("both samples must be non-empty")
    a = np.asarray(x, dtype=float)[:, None]
    b = np.asarray(y, dtype=float)[None, :]
    greater = int(np.count_nonzero(a > b))
    less = int(np.count_nonzero(a < b))
    delta = (greater - less) / (len(x) * len(y))
    return EffectSize(metric_name=metric_name, delta=delta, magnitude=interpret_delta(delta))


def log1p_transform(values: Sequence[float]) -> np.ndarray:
    """Elementwise natural log of (1 + x); rejects negative inputs."""
    arr = np.asarray(values, dtype=float)
    if np.any(arr < 0):
        raise ValueError("log1p transform requires non-negative values")
    return np.log1p(arr)


def _skewness(values: np.ndarray) -> float:
    centered = values - values.mean()
    m2 = float(np.mean(centered**2))
    if m2 == 0:
        return 0.0
    m3 = float(np.mean(centered**3))
    return m3 / m2**1.5


def _f_sf(f_stat: float, df1: int, df2: int) -> float:
    if f_stat <= 0:
        return 1.0
    x = df2 / (df2 + df1 * f_stat)
    return float(betainc(df2 / 2.0, df1 / 2.0, x))


def _univariate_f_p(values: np.ndarray, groups: np.ndarray) -> float:
    n = len(values)
    grand = values.mean()
    ss_between = 0.0
    ss_within = 0.0
    for g in (False, True):
        sel = values[groups == g]
        ss_between += len(sel) * (sel.mean() - grand) ** 2
        ss_within += float(np.sum((sel - sel.mean()) ** 2))
    df2 = n - 2
    if ss_within <= 0:
        return 0.0 if ss_between > 0 else 1.0
    f_stat = ss_between / (ss_within / df2)
    return _f_sf(f_stat, 1, df2)


def _pillai_trace(responses: np.ndarray, groups: np.ndarray) -> float:
    grand = responses.mean(axis=0)
    p = responses.shape[1]
    between = np.zeros((p, p))
    within = np.zeros((p, p))
    for g in (False, True):
        sel = responses[groups == g]
        diff = (sel.mean(axis=0) - grand)[:, None]
        between += len(sel) * diff @ diff.T
        centered = sel - sel.mean(axis=0)
        within += centered.T @ centered
    try:
        eigvals = np.linalg.eigvals(np.linalg.solve(within, between))
    except np.linalg.LinAlgError:
        return float("nan")
    real = np.real(eigvals)
    real = real[real > 1e-12]
    return float(np.sum(real / (1.0 + real)))


def omanova(
    metric: Sequence[float],
    size: Sequence[float],
    age: Sequence[float],
    class_labels: Sequence[bool],
    skew_threshold: float = 1.0,
) -> OmanovaResult:
    """One-way MANOVA of (size, age, metric) against the defect class.

    Responses whose absolute sample skewness exceeds the threshold are
    log1p-transformed first. Reported p-values are the per-response
    univariate F tests; Pillai's trace is exposed alongside.
    """
    groups = np.asarray(class_labels, dtype=bool)
    named = {"size": size, "age": age, "metric": metric}
    if any(len(v) != len(groups) for v in named.values()):
        raise ValueError("all variables must match the label vector length")
    if int(groups.sum()) < 2 or int((~groups).sum()) < 2:
        raise ValueError("each class needs at least two observations")

    transformed: dict[str, np.ndarray] = {}
    applied: dict[str, bool] = {}
    for name, values in named.items():
        arr = np.asarray(values, dtype=float)
        if abs(_skewness(arr)) > skew_threshold:
            arr = log1p_transform(arr)
            applied[name] = True
        else:
            applied[name] = False
        if float(np.var(arr)) == 0.0:
            raise DegenerateDataError(f"response {name} has no variance")
        transformed[name] = arr

    p_values = {name: _univariate_f_p(arr, groups) for name, arr in transformed.items()}
    stacked = np.column_stack([transformed["size"], transformed["age"], transformed["metric"]])
    return OmanovaResult(
        p_values=p_values,
        transform_applied=applied,
        pillai_trace=_pillai_trace(stacked, groups),
    )
