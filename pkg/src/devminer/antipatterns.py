"""Anti-pattern flagging against observation-derived thresholds.

Count thresholds (developers, minor contributors, ownership share) are
absolute; the disjointness and unfocused-contribution thresholds are
dataset-relative quantiles because only relative observations exist for
them — they are configurable, not fixed cutoffs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from devminer.metrics import MetricVector

PATTERNS = ("boss_not_around", "many_cooks", "minors_spoilers", "silos", "unfocused")


@dataclass(frozen=True)
class ThresholdConfig:
    max_developers: int = 11
    max_minors: int = 7
    min_highest_contrib: float = 0.8
    disjointness_quantile: float = 0.75
    unfocused_quantile: float = 0.75

    def __post_init__(self):
        if self.max_developers < 0 or self.max_minors < 0:
            raise ValueError("count thresholds must be non-negative")
        for q in (self.disjointness_quantile, self.unfocused_quantile):
            if not 0.0 < q < 1.0:
                raise ValueError("quantiles must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class AntiPatternFlag:
    script_path: str
    pattern: str
    triggered: bool
    value: float
    threshold: float


def flag_antipatterns(
    table: Sequence[MetricVector], config: ThresholdConfig | None = None
) -> list[AntiPatternFlag]:
    """Five flags per script. Quantile-based patterns compare strictly, so a
    table of identical values triggers nothing."""
    if not table:
        raise ValueError("metric table must be non-empty")
    cfg = config or ThresholdConfig()
    disjointness_cut = float(
        np.quantile([r.disjointness for r in table], cfg.disjointness_quantile)
    )
    unfocused_cut = float(
        np.quantile([r.unfocused_contribution for r in table], cfg.unfocused_quantile)
    )
    flags: list[AntiPatternFlag] = []
    for row in table:
        if row.highest_contrib_code is None:
            boss_value, boss_hit = math.nan, False
        else:
            boss_value = row.highest_contrib_code
            boss_hit = boss_value < cfg.min_highest_contrib
        minors = row.minor_contributors
        flags.extend(
            [
                AntiPatternFlag(
                    row.script_path, "boss_not_around", boss_hit,
                    boss_value, cfg.min_highest_contrib,
                ),
                AntiPatternFlag(
                    row.script_path, "many_cooks",
                    row.developer_count > cfg.max_developers,
                    float(row.developer_count), float(cfg.max_developers),
                ),
                AntiPatternFlag(
                    row.script_path, "minors_spoilers",
                    minors is not None and minors > cfg.max_minors,
                    math.nan if minors is None else float(minors),
                    float(cfg.max_minors),
                ),
                AntiPatternFlag(
                    row.script_path, "silos",
                    row.disjointness > disjointness_cut,
                    row.disjointness, disjointness_cut,
                ),
                AntiPatternFlag(
                    row.script_path, "unfocused",
                    row.unfocused_contribution > unfocused_cut,
                    row.unfocused_contribution, unfocused_cut,
                ),
            ]
        )
    return flags
