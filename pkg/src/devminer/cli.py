"""devminer command line: stage subcommands plus the end-to-end runner."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from devminer import analysis, features, ingest, labeling, metrics, networks, prediction
from devminer import pipeline as pipeline_mod
from devminer import report as report_mod
from devminer import synth as synth_mod
from devminer.antipatterns import ThresholdConfig, flag_antipatterns
from devminer.errors import (
    ConfigError,
    DevminerError,
    EncodingError,
    IngestError,
    LabelConflictError,
    LabelImportError,
    LogParseError,
    PipelineStageError,
)

EXIT_OK = pipeline_mod.EXIT_OK
EXIT_INPUT = pipeline_mod.EXIT_INPUT
EXIT_STAGE = pipeline_mod.EXIT_STAGE
EXIT_VALIDATION = pipeline_mod.EXIT_VALIDATION


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="devminer",
        description="Mine repository history, compute activity metrics, flag "
        "development anti-patterns, and train defect-prediction models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="read history into the JSONL commit export")
    p.add_argument("path")
    p.add_argument("--format", choices=("git", "jsonl", "auto"), default="auto")
    p.add_argument("--iac-ext", action="append", default=None,
                   help="IaC extension (repeatable; default .pp)")
    p.add_argument("--alias-map", default=None, help="JSON alias -> canonical identity map")
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("label", help="classify commits as defect-related")
    p.add_argument("--commits", required=True)
    p.add_argument("--rules", default=None, help="JSON keyword ruleset")
    p.add_argument("--import", dest="import_csv", default=None, help="human-rated label CSV")
    p.add_argument("--issues", default=None, help="JSON issue store")
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("metrics", help="compute the per-script metric table")
    p.add_argument("--commits", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--iac-ext", action="append", default=None)
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("graph", help="dump a network as JSON")
    p.add_argument("--commits", required=True)
    p.add_argument("--kind", choices=("dev", "contrib"), required=True)
    p.add_argument("--iac-ext", action="append", default=None)
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("analyze", help="statistical battery over a metric table")
    p.add_argument("--metrics", required=True)
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("features", help="extract baseline feature sets")
    p.add_argument("--kind", choices=("bow", "quality"), required=True)
    p.add_argument("--scripts", required=True, help="directory of IaC scripts")
    p.add_argument("--lint", default=None, help="CSV of imported lint warning counts")
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("predict", help="train and evaluate defect-prediction models")
    p.add_argument("--metrics", required=True)
    p.add_argument("--bow", default=None)
    p.add_argument("--quality", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tune", choices=("on", "off"), default="off")
    p.add_argument("--budget", type=int, default=10, help="DE generations when tuning")
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("report", help="render the combined text/JSON report")
    p.add_argument("--metrics", required=True)
    p.add_argument("--stats", default=None)
    p.add_argument("--eval", dest="eval_json", default=None)
    p.add_argument("--survey", default=None)
    p.add_argument("--max-developers", type=int, default=11)
    p.add_argument("--max-minors", type=int, default=7)
    p.add_argument("--min-highest-contrib", type=float, default=0.8)
    p.add_argument("--disjointness-quantile", type=float, default=0.75)
    p.add_argument("--unfocused-quantile", type=float, default=0.75)
    p.add_argument("--out-text", required=True)
    p.add_argument("--out-json", required=True)

    p = sub.add_parser("synth", help="generate the bundled synthetic repository")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scripts", type=int, default=40)
    p.add_argument("--violators", type=int, default=0)
    p.add_argument("--profile", choices=("default", "small-team"), default="default")

    p = sub.add_parser("run", help="execute the whole pipeline from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override [predict] seed")
    p.add_argument("--tune", choices=("on", "off"), default=None,
                   help="override [predict] tune")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="SECTION.KEY=VALUE",
                   help="override any config entry (repeatable)")

    return parser


def _iac_exts(values: list[str] | None) -> tuple[str, ...]:
    if not values:
        return tuple(ingest.DEFAULT_IAC_EXTENSIONS)
    return tuple(v if v.startswith(".") else f".{v}" for v in values)


def _cmd_ingest(args) -> int:
    fmt = args.format
    if fmt == "auto":
        fmt = "git" if Path(args.path).is_dir() else "jsonl"
    alias = ingest.load_alias_map(args.alias_map) if args.alias_map else None
    summary = ingest.ingest_repository(
        args.path, fmt=fmt, iac_extensions=_iac_exts(args.iac_ext), alias_map=alias
    )
    ingest.write_log_export(summary.commits, args.out)
    verdict = ingest.apply_selection_criteria(summary)
    print(
        f"ingested {len(summary.commits)} commits "
        f"({summary.iac_files}/{summary.total_files} IaC files); "
        f"criteria: c1={verdict.criterion_1} c2={verdict.criterion_2} "
        f"c3={verdict.criterion_3} final={verdict.final}"
    )
    return EXIT_OK


def _cmd_label(args) -> int:
    commits = ingest.read_log_export(args.commits)
    if args.import_csv:
        labels = labeling.import_labels(args.import_csv)
    else:
        ruleset = labeling.load_ruleset(args.rules) if args.rules else None
        issues = labeling.load_issue_store(args.issues) if args.issues else {}
        labels = [
            labeling.classify_ecm(labeling.build_ecm(c, issues), ruleset) for c in commits
        ]
    labeling.write_labels_jsonl(labels, args.out)
    defect_count = sum(1 for label in labels if label.is_defect_related)
    print(f"labeled {len(labels)} commits ({defect_count} defect-related)")
    return EXIT_OK


def _load_table_inputs(args):
    commits = ingest.read_log_export(args.commits)
    labels = labeling.read_labels_jsonl(args.labels)
    scripts = sorted(
        {
            fc.path
            for c in commits
            for fc in c.changes
            if ingest.is_iac_script(fc.path, _iac_exts(args.iac_ext))
        }
    )
    classes = labeling.label_scripts(labels, commits, scripts)
    return commits, classes


def _cmd_metrics(args) -> int:
    commits, classes = _load_table_inputs(args)
    table = metrics.metric_table(commits, classes)
    metrics.write_metric_table(table, args.out)
    print(f"wrote {len(table)} metric rows to {args.out}")
    return EXIT_OK


def _cmd_graph(args) -> int:
    commits = ingest.read_log_export(args.commits)
    scripts = {
        fc.path
        for c in commits
        for fc in c.changes
        if ingest.is_iac_script(fc.path, _iac_exts(args.iac_ext))
    }
    if args.kind == "dev":
        dump = networks.network_dump(dev_net=networks.build_developer_network(commits, scripts))
    else:
        dump = networks.network_dump(
            contrib_net=networks.build_contribution_network(commits, scripts)
        )
    Path(args.out).write_text(json.dumps(dump, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {args.kind} network dump to {args.out}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    table = metrics.read_metric_table(args.metrics)
    bundles = analysis.analyze_table(table)
    Path(args.out).write_text(
        json.dumps(analysis.analysis_to_json_obj(bundles), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    print(f"analyzed {len(bundles)} metrics")
    return EXIT_OK


def _cmd_features(args) -> int:
    texts = features.load_scripts_dir(args.scripts)
    if args.kind == "bow":
        vectors = [features.bow_extract(text, path) for path, text in sorted(texts.items())]
        features.write_bow_csv(vectors, args.out)
    else:
        lint = pipeline_mod._read_lint_csv(Path(args.lint)) if args.lint else None
        features.write_quality_csv(features.QualityScanner(texts, lint).scan_all(), args.out)
    print(f"extracted {args.kind} features for {len(texts)} scripts")
    return EXIT_OK


def _cmd_predict(args) -> int:
    table = metrics.read_metric_table(args.metrics)
    labels = {row.script_path: row.is_defective for row in table}
    sets = {"activity": prediction.activity_features(table)}
    if args.bow:
        vectors = features.read_bow_csv(args.bow)
        matched = pipeline_mod._match_labels([v.script_path for v in vectors], labels)
        rows = [v for v in vectors if v.script_path in matched]
        if rows:
            sets["bow"] = prediction.bow_features(rows, matched)
    if args.quality:
        vectors = features.read_quality_csv(args.quality)
        matched = pipeline_mod._match_labels([v.script_path for v in vectors], labels)
        rows = [v for v in vectors if v.script_path in matched]
        if rows:
            sets["quality"] = prediction.quality_features(rows, matched)
    eval_report = prediction.compare_feature_sets(
        sets, tune=args.tune == "on", seed=args.seed, budget=args.budget
    )
    Path(args.out).write_text(eval_report.to_json(), encoding="utf-8")
    print(f"evaluated {len(sets)} feature sets; report at {args.out}")
    return EXIT_OK


def _cmd_report(args) -> int:
    table = metrics.read_metric_table(args.metrics)
    thresholds = ThresholdConfig(
        max_developers=args.max_developers,
        max_minors=args.max_minors,
        min_highest_contrib=args.min_highest_contrib,
        disjointness_quantile=args.disjointness_quantile,
        unfocused_quantile=args.unfocused_quantile,
    )
    flags = flag_antipatterns(table, thresholds)
    bundles = None
    if args.stats:
        obj = json.loads(Path(args.stats).read_text(encoding="utf-8"))
        bundles = analysis.analysis_from_json_obj(obj)
    eval_obj = None
    if args.eval_json:
        eval_obj = json.loads(Path(args.eval_json).read_text(encoding="utf-8"))
    survey = report_mod.survey_tally(args.survey) if args.survey else None
    text, obj = report_mod.render_report(
        stats=bundles, flags=flags, eval_json_obj=eval_obj, survey=survey
    )
    report_mod.write_report(text, obj, args.out_text, args.out_json)
    print(f"report written to {args.out_text}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    if args.profile == "small-team":
        config = synth_mod.small_team_config(seed=args.seed, n_scripts=args.scripts)
        config.violators = args.violators
    else:
        config = synth_mod.SynthConfig(
            seed=args.seed, n_scripts=args.scripts, violators=args.violators
        )
    dataset = synth_mod.generate_dataset(config)
    root = synth_mod.write_dataset(dataset, args.out)
    print(
        f"synthetic repository at {root}: {len(dataset.commits)} commits, "
        f"{len(dataset.script_texts)} scripts, {len(dataset.violators)} violators"
    )
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "label": _cmd_label,
    "metrics": _cmd_metrics,
    "graph": _cmd_graph,
    "analyze": _cmd_analyze,
    "features": _cmd_features,
    "predict": _cmd_predict,
    "report": _cmd_report,
    "synth": _cmd_synth,
}


def _coerce(value: str):
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for caster in (int, float):
        try:
            return caster(value)
        except ValueError:
            continue
    return value


def _run_overrides(args) -> dict:
    overrides: dict = {}
    if args.seed is not None:
        overrides.setdefault("predict", {})["seed"] = args.seed
    if args.tune is not None:
        overrides.setdefault("predict", {})["tune"] = args.tune
    for item in args.overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.partition(".")
        if not sep or not dot or not section or not name:
            raise ConfigError(f"bad --set {item!r}, expected SECTION.KEY=VALUE")
        overrides.setdefault(section, {})[name] = _coerce(value)
    return overrides


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        try:
            overrides = _run_overrides(args)
        except ConfigError as exc:
            print(f"devminer run: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        return pipeline_mod.run_pipeline(args.config, overrides)
    handler = _COMMANDS[args.command]
    try:
        return handler(args)
    except FileNotFoundError as exc:
        print(f"devminer {args.command}: input not found: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (IngestError, LogParseError) as exc:
        print(f"devminer {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (LabelImportError, LabelConflictError, EncodingError, ConfigError, ValueError) as exc:
        print(f"devminer {args.command}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except PipelineStageError as exc:
        print(f"devminer {args.command}: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except DevminerError as exc:
        print(f"devminer {args.command}: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
