"""The seven development-activity metrics plus size/age controls.

Ownership comes from a last-writer-wins replay of each script's commit
history: every post-image line touched by a commit is attributed to that
commit's author, and the final snapshot determines contribution shares.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from devminer.errors import ReplayError, UndefinedMetricError
from devminer.ingest import CommitRecord, FileChange
from devminer.labeling import ScriptClass
from devminer.networks import (
    ContributionNetwork,
    DeveloperNetwork,
    betweenness_centrality,
    betweenness_centrality_all,
    build_contribution_network,
    build_developer_network,
    edge_betweenness,
    max_edge_betweenness_for_script,
)

SECONDS_PER_MONTH = 30.44 * 86400.0
MINOR_OWNERSHIP_CUTOFF = 0.05

METRIC_COLUMNS = (
    "developers",
    "disjointness",
    "highest_contrib",
    "minors",
    "norm_commit_size",
    "scatteredness",
    "unfocused",
)

CSV_HEADER = ("script",) + METRIC_COLUMNS + ("size_loc", "age_months", "defective")


@dataclass(frozen=True)
class ScriptHistory:
    """Commits touching one script, ordered by (timestamp, commit_id)."""

    script_path: str
    entries: tuple[tuple[CommitRecord, FileChange], ...]

    @property
    def commit_count(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class LineAttribution:
    """Final-snapshot authorship: index i (0-based) -> author of line i+1."""

    script_path: str
    per_line_author: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.per_line_author)


@dataclass(frozen=True)
class MetricVector:
    """One script's activity metrics, controls, and defect class.

    Ownership metrics are None for scripts whose final snapshot is empty.
    """

    script_path: str
    developer_count: int
    disjointness: float
    highest_contrib_code: float | None
    minor_contributors: int | None
    norm_commit_size: float
    scatteredness: float
    unfocused_contribution: float
    size_loc: int
    age_months: float
    is_defective: bool


def script_histories(
    commits: Sequence[CommitRecord], scripts: Iterable[str]
) -> dict[str, ScriptHistory]:
    """Slice the commit stream per script, in canonical replay order."""
    wanted = set(scripts)
    ordered = sorted(commits, key=lambda c: (c.timestamp, c.commit_id))
    entries: dict[str, list[tuple[CommitRecord, FileChange]]] = {}
    for commit in ordered:
        for change in commit.changes:
            if change.path in wanted:
                entries.setdefault(change.path, []).append((commit, change))
    return {
        path: ScriptHistory(script_path=path, entries=tuple(items))
        for path, items in entries.items()
    }


def attribute_lines(history: ScriptHistory) -> LineAttribution:
    """Replay the history; each touched post-image line takes the commit's author."""
    snapshot: list[str] = []
    for commit, change in history.entries:
        new_len = len(snapshot) + change.lines_added - change.lines_deleted
        if new_len < 0:
            raise ReplayError(
                f"deletions exceed tracked length {len(snapshot)}", commit.commit_id
            )
        bad = [i for i in change.modified_line_indices if i < 1 or i > new_len]
        if bad:
            raise ReplayError(
                f"hunk index {min(bad)} outside post-image length {new_len}",
                commit.commit_id,
            )
        author = commit.author_id
        snapshot = [
            author
            if (i + 1) in change.modified_line_indices or i >= len(snapshot)
            else snapshot[i]
            for i in range(new_len)
        ]
    return LineAttribution(script_path=history.script_path, per_line_author=tuple(snapshot))


def _ownership(attr: LineAttribution) -> dict[str, float]:
    total = len(attr)
    if total == 0:
        raise UndefinedMetricError(
            f"ownership undefined for empty script {attr.script_path}"
        )
    counts: dict[str, int] = {}
    for author in attr.per_line_author:
        counts[author] = counts.get(author, 0) + 1
    return {a: c / total for a, c in counts.items()}


def highest_contrib_code(attr: LineAttribution) -> float:
    """Largest share of final lines owned by a single author."""
    return max(_ownership(attr).values())


def minor_contributors(attr: LineAttribution, history: ScriptHistory) -> int:
    """Developers with commits to the script owning at most 5% of its lines."""
    shares = _ownership(attr)
    authors = {commit.author_id for commit, _ in history.entries}
    return sum(1 for a in authors if shares.get(a, 0.0) <= MINOR_OWNERSHIP_CUTOFF)


def developer_count(history: ScriptHistory) -> int:
    return len({commit.author_id for commit, _ in history.entries})


def norm_commit_size(history: ScriptHistory) -> float:
    """Added plus deleted lines per commit, over the script's own changes."""
    if not history.entries:
        raise ValueError("history must contain at least one commit")
    churn = sum(ch.lines_added + ch.lines_deleted for _, ch in history.entries)
    return churn / history.commit_count


def scatteredness(history: ScriptHistory) -> float:
    """Entropy-style spread of changes: -sum(x_i * log2(x_i)) where x_i is
    the fraction of the script's commits that touched line i."""
    if not history.entries:
        raise ValueError("history must contain at least one commit")
    counts: dict[int, int] = {}
    for _, change in history.entries:
        for index in change.modified_line_indices:
            counts[index] = counts.get(index, 0) + 1
    total = history.commit_count
    result = 0.0
    for touched in counts.values():
        x = touched / total
        if 0.0 < x < 1.0:
            result -= x * math.log2(x)
        # x == 1.0 contributes 0; x == 0 cannot occur
    return result


def disjointness(net: DeveloperNetwork, script: str, betweenness=None) -> float:
    """Maximum edge betweenness over the script's co-modification edges."""
    return max_edge_betweenness_for_script(net, script, betweenness)


def unfocused_contribution(net: ContributionNetwork, script: str) -> float:
    """Betweenness centrality of the script node in the contribution network."""
    return betweenness_centrality(net, script)


def size_and_age(history: ScriptHistory, attr: LineAttribution) -> tuple[int, float]:
    """Final line count and months between first and last commit."""
    if not history.entries:
        raise ValueError("history must contain at least one commit")
    stamps = [commit.timestamp for commit, _ in history.entries]
    age = (max(stamps) - min(stamps)) / SECONDS_PER_MONTH
    return len(attr), age


def metric_table(
    commits: Sequence[CommitRecord],
    classes: Sequence[ScriptClass],
) -> list[MetricVector]:
    """One MetricVector per classified script with at least one commit."""
    scripts = [c.script_path for c in classes]
    defective = {c.script_path: c.is_defective for c in classes}
    histories = script_histories(commits, scripts)
    dev_net = build_developer_network(commits, scripts)
    contrib_net = build_contribution_network(commits, scripts)
    edge_scores = edge_betweenness(dev_net) if dev_net.edges else {}
    centrality = betweenness_centrality_all(contrib_net)

    rows: list[MetricVector] = []
    for path in sorted(histories):
        history = histories[path]
        attr = attribute_lines(history)
        if len(attr) > 0:
            highest = highest_contrib_code(attr)
            minors = minor_contributors(attr, history)
        else:
            highest, minors = None, None
        size, age = size_and_age(history, attr)
        rows.append(
            MetricVector(
                script_path=path,
                developer_count=developer_count(history),
                disjointness=disjointness(dev_net, path, edge_scores),
                highest_contrib_code=highest,
                minor_contributors=minors,
                norm_commit_size=norm_commit_size(history),
                scatteredness=scatteredness(history),
                unfocused_contribution=centrality[path],
                size_loc=size,
                age_months=age,
                is_defective=defective[path],
            )
        )
    return rows


def _fmt(value: float | int | None) -> str:
    if value is None:
        return ""
    return f"{float(value):.6f}"


def write_metric_table(rows: Sequence[MetricVector], path: str | Path) -> None:
    """Export the metric table CSV (numeric fields at 6 decimal places)."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow(
                [
                    row.script_path,
                    _fmt(row.developer_count),
                    _fmt(row.disjointness),
                    _fmt(row.highest_contrib_code),
                    _fmt(row.minor_contributors),
                    _fmt(row.norm_commit_size),
                    _fmt(row.scatteredness),
                    _fmt(row.unfocused_contribution),
                    _fmt(row.size_loc),
                    _fmt(row.age_months),
                    "1" if row.is_defective else "0",
                ]
            )


def read_metric_table(path: str | Path) -> list[MetricVector]:
    """Parse a metric table CSV back into MetricVector rows."""
    rows: list[MetricVector] = []
    with Path(path).open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        for record in reader:
            def opt(field: str) -> float | None:
                raw = record[field]
                return None if raw == "" else float(raw)

            highest = opt("highest_contrib")
            minors = opt("minors")
            rows.append(
                MetricVector(
                    script_path=record["script"],
                    developer_count=int(float(record["developers"])),
                    disjointness=float(record["disjointness"]),
                    highest_contrib_code=highest,
                    minor_contributors=None if minors is None else int(minors),
                    norm_commit_size=float(record["norm_commit_size"]),
                    scatteredness=float(record["scatteredness"]),
                    unfocused_contribution=float(record["unfocused"]),
                    size_loc=int(float(record["size_loc"])),
                    age_months=float(record["age_months"]),
                    is_defective=record["defective"].strip() == "1",
                )
            )
    return rows
