"""Statistical battery over a metric table: Mann-Whitney, Cliff's delta,
and MANOVA with size/age controls for each of the seven activity metrics."""

from __future__ import annotations

from typing import Mapping, Sequence

from devminer.errors import DegenerateDataError
from devminer.metrics import METRIC_COLUMNS, MetricVector
from devminer.report import MetricAnalysis
from devminer.stats import (
    DEFECTIVE_GREATER,
    NEUTRAL_GREATER,
    EffectSize,
    OmanovaResult,
    TestResult,
    cliffs_delta,
    mann_whitney_one_sided,
    omanova,
)

# the ownership share is hypothesized larger for neutral scripts; everything
# else larger for defective scripts
_DIRECTIONS = {name: DEFECTIVE_GREATER for name in METRIC_COLUMNS}
_DIRECTIONS["highest_contrib"] = NEUTRAL_GREATER

_FIELD_BY_COLUMN = {
    "developers": "developer_count",
    "disjointness": "disjointness",
    "highest_contrib": "highest_contrib_code",
    "minors": "minor_contributors",
    "norm_commit_size": "norm_commit_size",
    "scatteredness": "scatteredness",
    "unfocused": "unfocused_contribution",
}


def analyze_table(rows: Sequence[MetricVector]) -> dict[str, MetricAnalysis]:
    """Run the full battery for every metric with both classes present.

    Rows lacking a value for a metric (undefined ownership) are skipped for
    that metric only.
    """
    results: dict[str, MetricAnalysis] = {}
    for column in METRIC_COLUMNS:
        field = _FIELD_BY_COLUMN[column]
        usable = [r for r in rows if getattr(r, field) is not None]
        defective = [float(getattr(r, field)) for r in usable if r.is_defective]
        neutral = [float(getattr(r, field)) for r in usable if not r.is_defective]
        if not defective or not neutral:
            continue
        direction = _DIRECTIONS[column]
        test = mann_whitney_one_sided(defective, neutral, direction, metric_name=column)
        effect = cliffs_delta(defective, neutral, metric_name=column)
        controlled: OmanovaResult | None
        try:
            controlled = omanova(
                metric=[float(getattr(r, field)) for r in usable],
                size=[float(r.size_loc) for r in usable],
                age=[r.age_months for r in usable],
                class_labels=[r.is_defective for r in usable],
            )
        except (DegenerateDataError, ValueError):
            controlled = None
        results[column] = MetricAnalysis(test=test, effect=effect, omanova=controlled)
    return results


def analysis_to_json_obj(bundles: Mapping[str, MetricAnalysis]) -> dict:
    out: dict = {}
    for name in sorted(bundles):
        bundle = bundles[name]
        entry = {
            "mann_whitney": {
                "p_value": bundle.test.p_value,
                "direction": bundle.test.direction,
                "significant": bundle.test.significant,
                "sample_sizes": list(bundle.test.sample_sizes),
                "method": bundle.test.method,
            },
            "effect_size": {
                "delta": bundle.effect.delta,
                "magnitude": bundle.effect.magnitude,
            },
        }
        if bundle.omanova is not None:
            entry["omanova"] = {
                "p_values": dict(bundle.omanova.p_values),
                "transform_applied": dict(bundle.omanova.transform_applied),
                "pillai_trace": bundle.omanova.pillai_trace,
            }
        out[name] = entry
    return out


def analysis_from_json_obj(obj: Mapping) -> dict[str, MetricAnalysis]:
    bundles: dict[str, MetricAnalysis] = {}
    for name, entry in obj.items():
        mw = entry["mann_whitney"]
        test = TestResult(
            metric_name=name,
            p_value=mw["p_value"],
            direction=mw["direction"],
            significant=mw["significant"],
            sample_sizes=tuple(mw["sample_sizes"]),
            method=mw["method"],
        )
        es = entry["effect_size"]
        effect = EffectSize(metric_name=name, delta=es["delta"], magnitude=es["magnitude"])
        controlled = None
        if "omanova" in entry:
            om = entry["omanova"]
            controlled = OmanovaResult(
                p_values=dict(om["p_values"]),
                transform_applied=dict(om["transform_applied"]),
                pillai_trace=om["pillai_trace"],
            )
        bundles[name] = MetricAnalysis(test=test, effect=effect, omanova=controlled)
    return bundles
