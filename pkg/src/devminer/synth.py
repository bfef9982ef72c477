"""Seeded synthetic repository generator.

Produces a commit stream with exactly controlled per-script developer and
minor-contributor counts, matching script texts made of class-independent
random tokens, and commit messages that reproduce the intended defect
classes through the keyword heuristic. Used by the test suite and by
``devminer synth`` to build a self-contained end-to-end dataset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from devminer.ingest import CommitRecord, FileChange, write_log_export
from devminer.labeling import ScriptClass

_VOCAB = (
    "ensure", "present", "absent", "service", "package", "file", "mode",
    "owner", "group", "source", "content", "notify", "subscribe", "running",
    "enabled", "latest", "installed", "path", "target", "backup", "purge",
    "recurse", "force", "provider", "command", "creates", "unless", "onlyif",
    "timeout", "tries", "user", "home", "shell", "comment", "managehome",
    "password", "uid", "gid", "members", "system",
)

_DAY = 86400


@dataclass
class SynthConfig:
    seed: int = 0
    n_scripts: int = 40
    author_pool: int = 16
    neutral_dev_range: tuple[int, int] = (1, 5)
    defective_dev_range: tuple[int, int] = (4, 9)
    neutral_minor_range: tuple[int, int] = (0, 2)
    defective_minor_range: tuple[int, int] = (2, 6)
    neutral_main_share: tuple[float, float] = (0.80, 0.95)
    defective_main_share: tuple[float, float] = (0.40, 0.70)
    defect_rate: float = 0.5
    label_noise: float = 0.0
    violators: int = 0  # defective scripts forced past the neutral bounds
    violator_dev_count: int = 13
    violator_minor_count: int = 9
    base_loc: int = 40
    start_ts: int = 1_600_000_000
    repo_id: str = "synthetic"


@dataclass
class SynthDataset:
    commits: list[CommitRecord]
    script_texts: dict[str, str]
    classes: list[ScriptClass]
    violators: list[str]
    issues: dict[str, str]
    config: SynthConfig = field(repr=False, default_factory=SynthConfig)


def small_team_config(seed: int = 0, n_scripts: int = 60) -> SynthConfig:
    """Small-team profile: defective/neutral developer counts peak at 9 and 3."""
    return SynthConfig(
        seed=seed,
        n_scripts=n_scripts,
        neutral_dev_range=(1, 3),
        defective_dev_range=(1, 9),
        neutral_minor_range=(0, 1),
        defective_minor_range=(0, 2),
    )


def _script_text(rng: np.random.Generator, name: str, loc: int) -> str:
    lines = [f"class {name} {{"]
    body_lines = max(loc - 2, 1)
    for _ in range(body_lines):
        a, b = rng.choice(len(_VOCAB), size=2, replace=True)
        lines.append(f"  {_VOCAB[a]} => '{_VOCAB[b]}',")
    lines.append("}")
    return "\n".join(lines[: max(loc, 1)]) + "\n"


def generate_dataset(config: SynthConfig | None = None) -> SynthDataset:
    cfg = config or SynthConfig()
    rng = np.random.default_rng(cfg.seed)
    pool = [f"dev{i:02d}@example.org" for i in range(max(cfg.author_pool, 20))]

    commits: list[CommitRecord] = []
    texts: dict[str, str] = {}
    classes: list[ScriptClass] = []
    violators: list[str] = []
    issues: dict[str, str] = {}
    commit_no = 0

    defective_intents = rng.random(cfg.n_scripts) < cfg.defect_rate
    violator_slots = set([i for i, d in enumerate(defective_intents) if d][: cfg.violators])
    pinned = {True: False, False: False}  # first script of each intent hits its max

    for i in range(cfg.n_scripts):
        name = f"mod{i:03d}"
        path = f"manifests/{name}.pp"
        intent = bool(defective_intents[i])
        dev_lo, dev_hi = cfg.defective_dev_range if intent else cfg.neutral_dev_range
        min_lo, min_hi = cfg.defective_minor_range if intent else cfg.neutral_minor_range
        dev_count = int(rng.integers(dev_lo, dev_hi + 1))
        minors = min(int(rng.integers(min_lo, min_hi + 1)), max(dev_count - 1, 0))
        if not pinned[intent]:
            dev_count = dev_hi
            pinned[intent] = True

        if i in violator_slots:
            if len(violators) % 2 == 0:
                dev_count = cfg.violator_dev_count
                minors = min(minors, dev_count - 1)
            else:
                minors = cfg.violator_minor_count
                dev_count = max(dev_count, minors + 1)
            violators.append(path)

        # class = intent with optional label noise; messages follow the class
        defective = intent if rng.random() >= cfg.label_noise else not intent
        classes.append(ScriptClass(script_path=path, is_defective=defective))

        # line allocation: minors own one tail line each, non-minors own
        # contiguous chunks of the prefix, all chunks strictly above the
        # 5% ownership cutoff; the first author's share is class-dependent
        non_minors = max(dev_count - minors, 1)
        loc = max(20, 8 * non_minors, cfg.base_loc)
        while loc - minors < (int(0.05 * loc) + 1) * non_minors:
            loc += 20
        share_lo, share_hi = cfg.defective_main_share if intent else cfg.neutral_main_share
        share = float(rng.uniform(share_lo, share_hi))
        prefix = loc - minors
        if non_minors == 1:
            chunk_sizes = [prefix]
        else:
            other_min = int(0.05 * loc) + 1
            main_lines = int(round(share * prefix))
            main_lines = min(main_lines, prefix - other_min * (non_minors - 1))
            main_lines = max(main_lines, other_min)
            rest = prefix - main_lines
            base = rest // (non_minors - 1)
            rem = rest % (non_minors - 1)
            chunk_sizes = [main_lines] + [
                base + (1 if k < rem else 0) for k in range(non_minors - 1)
            ]

        authors = [pool[int(a)] for a in rng.choice(len(pool), size=dev_count, replace=False)]
        main = authors[0]
        non_minor_authors = authors[:non_minors]
        minor_authors = authors[non_minors:]

        ts = cfg.start_ts + i * 3 * _DAY

        def emit(author: str, add: int, dele: int, lines: set[int], message: str):
            nonlocal commit_no, ts
            commits.append(
                CommitRecord(
                    commit_id=f"c{commit_no:05d}",
                    author_id=author,
                    timestamp=ts,
                    message=message,
                    changes=(
                        FileChange(
                            path=path,
                            lines_added=add,
                            lines_deleted=dele,
                            modified_line_indices=frozenset(lines),
                        ),
                    ),
                )
            )
            commit_no += 1
            ts += _DAY

        emit(main, loc, 0, set(range(1, loc + 1)), f"add {name} module")
        offset = chunk_sizes[0]
        for k, author in enumerate(non_minor_authors[1:], start=1):
            span = set(range(offset + 1, offset + chunk_sizes[k] + 1))
            emit(author, chunk_sizes[k], chunk_sizes[k], span, f"rework {name} block {k}")
            offset += chunk_sizes[k]
        for k, author in enumerate(minor_authors):
            line = loc - k
            emit(author, 1, 1, {line}, f"tweak {name} line {line}")
        # final churn stays inside the main author's own chunk
        touched = int(rng.integers(1, min(5, chunk_sizes[0]) + 1))
        if defective:
            issue_id = str(1000 + i)
            issues[issue_id] = f"{name} breaks on reload"
            emit(main, touched, touched, set(range(1, touched + 1)),
                 f"fix crash in {name} #{issue_id}")
        else:
            emit(main, touched, touched, set(range(1, touched + 1)),
                 f"extend {name} defaults")

        texts[path] = _script_text(rng, name, loc)

    return SynthDataset(
        commits=commits,
        script_texts=texts,
        classes=classes,
        violators=violators,
        issues=issues,
        config=cfg,
    )


_RUN_CONFIG_TEMPLATE = """\
[ingest]
source = "commits.jsonl"
format = "jsonl"
iac_ext = [".pp"]
out = "artifacts/commits.jsonl"

[label]
issues = "issues.json"
out = "artifacts/labels.jsonl"

[metrics]
out = "artifacts/metrics.csv"

[analyze]
out = "artifacts/stats.json"

[features]
scripts_dir = "scripts"
bow_out = "artifacts/bow.csv"
quality_out = "artifacts/quality.csv"

[thresholds]
max_developers = 11
max_minors = 7
min_highest_contrib = 0.8
disjointness_quantile = 0.75
unfocused_quantile = 0.75

[predict]
seed = {seed}
tune = "off"
out = "artifacts/prediction.json"

[report]
out_text = "artifacts/report.txt"
out_json = "artifacts/report.json"
"""


def write_dataset(dataset: SynthDataset, out_dir: str | Path) -> Path:
    """Materialize the dataset: commits.jsonl, scripts/, issues.json,
    truth.csv, and a ready-to-run pipeline config."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    write_log_export(dataset.commits, root / "commits.jsonl")
    scripts_dir = root / "scripts"
    scripts_dir.mkdir(exist_ok=True)
    for path, text in dataset.script_texts.items():
        target = scripts_dir / path
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
    (root / "issues.json").write_text(
        json.dumps(dataset.issues, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    with (root / "truth.csv").open("w", encoding="utf-8", newline="") as handle:
        handle.write("script,defective\n")
        for cls in dataset.classes:
            handle.write(f"{cls.script_path},{1 if cls.is_defective else 0}\n")
    (root / "run.toml").write_text(
        _RUN_CONFIG_TEMPLATE.format(seed=dataset.config.seed), encoding="utf-8"
    )
    return root
