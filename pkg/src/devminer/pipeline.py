"""Config-driven orchestration: ingest, label, metrics, analyze, features,
predict, report. Each stage writes its artifact to disk, so any stage can be
re-run in isolation from the previous stage's output."""

from __future__ import annotations

import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from devminer import analysis, features, ingest, labeling, metrics, prediction, report
from devminer.antipatterns import ThresholdConfig, flag_antipatterns
from devminer.errors import ConfigError, DevminerError, IngestError, PipelineStageError

STAGES = ("ingest", "label", "metrics", "analyze", "features", "predict", "report")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_STAGE = 3
EXIT_VALIDATION = 4


@dataclass
class PipelineConfig:
    base_dir: Path
    raw: dict[str, Any]

    def section(self, name: str) -> dict[str, Any]:
        value = self.raw.get(name, {})
        if not isinstance(value, dict):
            raise ConfigError(f"section [{name}] must be a table")
        return value

    def path(self, section: str, key: str, default: str | None = None) -> Path | None:
        value = self.section(section).get(key, default)
        if value in (None, ""):
            return None
        return self.base_dir / str(value)


def load_config(config_path: str | Path) -> PipelineConfig:
    path = Path(config_path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    return PipelineConfig(base_dir=path.parent.resolve(), raw=raw)


def _require(cfg: PipelineConfig, section: str, key: str) -> Path:
    value = cfg.path(section, key)
    if value is None:
        raise ConfigError(f"[{section}] {key} is required")
    return value


def run_pipeline(config_path: str | Path, overrides: dict[str, dict[str, Any]] | None = None) -> int:
    """Execute every stage in order; returns the process exit code."""
    try:
        cfg = load_config(config_path)
        if overrides:
            for section, values in overrides.items():
                cfg.raw.setdefault(section, {}).update(values)
        _execute(cfg)
    except ConfigError as exc:
        print(f"devminer run: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except PipelineStageError as exc:
        print(f"devminer run: {exc}", file=sys.stderr)
        if isinstance(exc.cause, (IngestError, FileNotFoundError)):
            return EXIT_INPUT
        return EXIT_STAGE
    return EXIT_OK


def _stage(name: str):
    def decorate(fn):
        def wrapper(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except ConfigError:
                raise
            except (DevminerError, OSError, ValueError) as exc:
                raise PipelineStageError(name, exc) from exc

        return wrapper

    return decorate


@_stage("ingest")
def _run_ingest(cfg: PipelineConfig):
    section = cfg.section("ingest")
    source = _require(cfg, "ingest", "source")
    fmt = section.get("format", "jsonl")
    exts = tuple(section.get("iac_ext", [".pp"]))
    alias_path = cfg.path("ingest", "alias_map")
    alias = ingest.load_alias_map(alias_path) if alias_path else None
    summary = ingest.ingest_repository(source, fmt=fmt, iac_extensions=exts, alias_map=alias)
    out = _require(cfg, "ingest", "out")
    out.parent.mkdir(parents=True, exist_ok=True)
    ingest.write_log_export(summary.commits, out)
    return summary, exts


@_stage("label")
def _run_label(cfg: PipelineConfig, summary: ingest.RepositorySummary):
    rules_path = cfg.path("label", "rules")
    ruleset = labeling.load_ruleset(rules_path) if rules_path else None
    issues_path = cfg.path("label", "issues")
    issues = labeling.load_issue_store(issues_path) if issues_path else {}
    import_path = cfg.path("label", "import")
    if import_path:
        labels = labeling.import_labels(import_path)
    else:
        labels = [
            labeling.classify_ecm(labeling.build_ecm(c, issues), ruleset)
            for c in summary.commits
        ]
    out = _require(cfg, "label", "out")
    out.parent.mkdir(parents=True, exist_ok=True)
    labeling.write_labels_jsonl(labels, out)
    return labels


@_stage("metrics")
def _run_metrics(cfg: PipelineConfig, summary, labels, exts):
    scripts = sorted(
        {
            fc.path
            for c in summary.commits
            for fc in c.changes
            if ingest.is_iac_script(fc.path, exts)
        }
    )
    classes = labeling.label_scripts(labels, list(summary.commits), scripts)
    table = metrics.metric_table(list(summary.commits), classes)
    out = _require(cfg, "metrics", "out")
    out.parent.mkdir(parents=True, exist_ok=True)
    metrics.write_metric_table(table, out)
    return table, classes


@_stage("analyze")
def _run_analyze(cfg: PipelineConfig, table):
    bundles = analysis.analyze_table(table)
    out = _require(cfg, "analyze", "out")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(
        json.dumps(analysis.analysis_to_json_obj(bundles), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    return bundles


@_stage("features")
def _run_features(cfg: PipelineConfig):
    scripts_dir = _require(cfg, "features", "scripts_dir")
    if not scripts_dir.is_dir():
        raise IngestError(f"scripts directory not found: {scripts_dir}")
    texts = features.load_scripts_dir(scripts_dir)
    lint_path = cfg.path("features", "lint")
    lint = _read_lint_csv(lint_path) if lint_path else None
    bow = [features.bow_extract(text, path) for path, text in sorted(texts.items())]
    quality = features.QualityScanner(texts, lint).scan_all()
    bow_out = _require(cfg, "features", "bow_out")
    bow_out.parent.mkdir(parents=True, exist_ok=True)
    features.write_bow_csv(bow, bow_out)
    quality_out = _require(cfg, "features", "quality_out")
    features.write_quality_csv(quality, quality_out)
    return bow, quality


def _read_lint_csv(path: Path) -> dict[str, int]:
    with path.open(encoding="utf-8", newline="") as handle:
        return {row["script"]: int(row["lint_warnings"]) for row in csv.DictReader(handle)}


@_stage("predict")
def _run_predict(cfg: PipelineConfig, table, bow, quality):
    section = cfg.section("predict")
    seed = int(section.get("seed", 0))
    tune = str(section.get("tune", "off")).lower() == "on"
    budget = int(section.get("budget", 10))
    labels = {
        row.script_path: row.is_defective
        for row in table
    }
    # feature files index scripts by path relative to the scripts dir;
    # metric rows use repository paths — align on basename-insensitive match
    sets = _assemble_feature_sets(table, bow, quality, labels)
    eval_report = prediction.compare_feature_sets(sets, tune=tune, seed=seed, budget=budget)
    out = _require(cfg, "predict", "out")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(eval_report.to_json(), encoding="utf-8")
    return eval_report


def _match_labels(paths, labels: dict[str, bool]) -> dict[str, bool]:
    by_name = {Path(p).name: v for p, v in labels.items()}
    matched = {}
    for path in paths:
        if path in labels:
            matched[path] = labels[path]
        elif Path(path).name in by_name:
            matched[path] = by_name[Path(path).name]
    return matched


def _assemble_feature_sets(table, bow, quality, labels):
    sets: dict[str, prediction.FeatureMatrix] = {
        "activity": prediction.activity_features(table)
    }
    bow_labels = _match_labels([v.script_path for v in bow], labels)
    bow_rows = [v for v in bow if v.script_path in bow_labels]
    if bow_rows:
        sets["bow"] = prediction.bow_features(bow_rows, bow_labels)
    quality_labels = _match_labels([v.script_path for v in quality], labels)
    quality_rows = [v for v in quality if v.script_path in quality_labels]
    if quality_rows:
        sets["quality"] = prediction.quality_features(quality_rows, quality_labels)
    return sets


@_stage("report")
def _run_report(cfg: PipelineConfig, bundles, table, eval_report):
    section = cfg.section("thresholds")
    thresholds = ThresholdConfig(
        max_developers=int(section.get("max_developers", 11)),
        max_minors=int(section.get("max_minors", 7)),
        min_highest_contrib=float(section.get("min_highest_contrib", 0.8)),
        disjointness_quantile=float(section.get("disjointness_quantile", 0.75)),
        unfocused_quantile=float(section.get("unfocused_quantile", 0.75)),
    )
    flags = flag_antipatterns(table, thresholds)
    survey_path = cfg.path("report", "survey")
    survey = report.survey_tally(survey_path) if survey_path else None
    text, obj = report.render_report(
        stats=bundles,
        flags=flags,
        eval_json_obj=eval_report.to_json_obj(),
        survey=survey,
    )
    text_out = _require(cfg, "report", "out_text")
    json_out = _require(cfg, "report", "out_json")
    text_out.parent.mkdir(parents=True, exist_ok=True)
    report.write_report(text, obj, text_out, json_out)
    return flags


def _execute(cfg: PipelineConfig) -> None:
    summary, exts = _run_ingest(cfg)
    labels = _run_label(cfg, summary)
    table, _classes = _run_metrics(cfg, summary, labels, exts)
    bundles = _run_analyze(cfg, table)
    bow, quality = _run_features(cfg)
    eval_report = _run_predict(cfg, table, bow, quality)
    _run_report(cfg, bundles, table, eval_report)
