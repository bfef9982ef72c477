"""Human-readable and JSON reporting, plus survey Likert tallies."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from devminer.antipatterns import AntiPatternFlag
from devminer.errors import LabelImportError
from devminer.stats import EffectSize, OmanovaResult, TestResult


@dataclass(frozen=True)
class MetricAnalysis:
    """Bundle of statistical results for one metric."""

    test: TestResult
    effect: EffectSize
    omanova: OmanovaResult | None = None


@dataclass(frozen=True)
class SurveyTally:
    metric: str
    responses: int
    agree_pct: float  # share of agree (4) + strongly agree (5)


def survey_tally(path: str | Path) -> list[SurveyTally]:
    """Aggregate a survey CSV (respondent,metric,likert with likert 1..5)."""
    counts: dict[str, list[int]] = {}
    with Path(path).open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        required = {"respondent", "metric", "likert"}
        if not required.issubset(reader.fieldnames or []):
            raise LabelImportError(f"survey header must contain {sorted(required)}", 1)
        for rowno, row in enumerate(reader, start=2):
            try:
                likert = int(row["likert"])
            except (TypeError, ValueError):
                raise LabelImportError("likert must be an integer", rowno) from None
            if not 1 <= likert <= 5:
                raise LabelImportError(f"likert must be 1..5, got {likert}", rowno)
            counts.setdefault(row["metric"], []).append(likert)
    return [
        SurveyTally(
            metric=metric,
            responses=len(values),
            agree_pct=100.0 * sum(1 for v in values if v >= 4) / len(values),
        )
        for metric, values in sorted(counts.items())
    ]


def _bar(pct: float, width: int = 30) -> str:
    filled = int(round(pct / 100.0 * width))
    return "#" * filled + "." * (width - filled)


def _fmt_value(value: float) -> str:
    if isinstance(value, float) and math.isnan(value):
        return "n/a"
    return f"{value:.6g}"


def render_report(
    stats: Mapping[str, MetricAnalysis] | None = None,
    flags: Sequence[AntiPatternFlag] | None = None,
    eval_json_obj: Mapping | None = None,
    survey: Sequence[SurveyTally] | None = None,
) -> tuple[str, dict]:
    """Compose the final text report and its JSON mirror."""
    lines: list[str] = ["devminer analysis report", "=" * 40]
    obj: dict = {}

    if stats is not None:
        lines.append("")
        lines.append("metric statistics")
        lines.append("-" * 40)
        obj["stats"] = {}
        for name in sorted(stats):
            bundle = stats[name]
            verdict = "significant" if bundle.test.significant else "not significant"
            lines.append(
                f"{name}: p={bundle.test.p_value:.3e} ({verdict}, {bundle.test.direction}), "
                f"delta={bundle.effect.delta:+.3f} ({bundle.effect.magnitude})"
            )
            entry = {
                "p_value": bundle.test.p_value,
                "significant": bundle.test.significant,
                "direction": bundle.test.direction,
                "delta": bundle.effect.delta,
                "magnitude": bundle.effect.magnitude,
            }
            if bundle.omanova is not None:
                entry["controlled_p_values"] = dict(bundle.omanova.p_values)
                entry["transform_applied"] = dict(bundle.omanova.transform_applied)
                entry["pillai_trace"] = bundle.omanova.pillai_trace
                controlled = bundle.omanova.p_values["metric"]
                lines.append(
                    f"  with size/age controls: metric p={controlled:.3e}, "
                    f"size p={bundle.omanova.p_values['size']:.3e}, "
                    f"age p={bundle.omanova.p_values['age']:.3e}"
                )
            obj["stats"][name] = entry

    if flags is not None:
        lines.append("")
        lines.append("anti-pattern flags")
        lines.append("-" * 40)
        lines.append(
            "silos/unfocused use dataset-relative quantile thresholds "
            "(configurable), not absolute cutoffs"
        )
        triggered = [f for f in flags if f.triggered]
        if not triggered:
            lines.append("no anti-patterns triggered")
        else:
            for flag in triggered:
                lines.append(
                    f"{flag.script_path}: {flag.pattern} "
                    f"(value={_fmt_value(flag.value)}, threshold={_fmt_value(flag.threshold)})"
                )
        obj["flags"] = [
            {
                "script": f.script_path,
                "pattern": f.pattern,
                "triggered": f.triggered,
                "value": None if math.isnan(f.value) else f.value,
                "threshold": f.threshold,
            }
            for f in flags
        ]

    if eval_json_obj is not None:
        lines.append("")
        lines.append("prediction performance (median over 10x10 folds)")
        lines.append("-" * 40)
        obj["prediction"] = eval_json_obj
        for feature_set in sorted(eval_json_obj):
            for learner in sorted(eval_json_obj[feature_set]):
                cell = eval_json_obj[feature_set][learner]
                med = cell["median"]
                ranks = cell["sk_rank"]
                lines.append(
                    f"{feature_set}/{learner}: P={med['precision']:.2f} R={med['recall']:.2f} "
                    f"F={med['f1']:.2f} | ranks P={ranks['precision']} "
                    f"R={ranks['recall']} F={ranks['f1']}"
                )

    if survey is not None:
        lines.append("")
        lines.append("practitioner survey agreement (agree + strongly agree)")
        lines.append("-" * 40)
        obj["survey"] = {}
        for tally in survey:
            lines.append(f"{tally.metric:<24} {_bar(tally.agree_pct)} {tally.agree_pct:5.1f}%")
            obj["survey"][tally.metric] = {
                "responses": tally.responses,
                "agree_pct": tally.agree_pct,
            }

    return "\n".join(lines) + "\n", obj


def write_report(text: str, obj: dict, text_path: str | Path, json_path: str | Path) -> None:
    Path(text_path).write_text(text, encoding="utf-8")
    Path(json_path).write_text(
        json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
