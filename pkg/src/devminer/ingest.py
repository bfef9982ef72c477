"""Version-control history ingestion and repository selection criteria.

The canonical internal representation is the JSON-Lines log export: one
object per commit with per-file line churn and the post-image line numbers
touched by the commit's hunks. A live git repository is converted into the
same stream by shelling out to ``git log`` (first-parent traversal).
"""

from __future__ import annotations

import json
import re
import shutil
import subprocess
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from statistics import median
from typing import Iterable, Mapping, Sequence

from devminer.errors import IngestError, LogParseError

DEFAULT_IAC_EXTENSIONS = frozenset({".pp"})


@dataclass(frozen=True)
class FileChange:
    """Line churn of one file inside one commit.

    ``modified_line_indices`` holds post-image line numbers (1-based) that
    the commit's hunks added or rewrote. Pure deletions shrink the file but
    contribute no indices, so replay never re-attributes surviving lines.
    """

    path: str
    lines_added: int
    lines_deleted: int
    modified_line_indices: frozenset[int]

    def __post_init__(self):
        if self.lines_added < 0 or self.lines_deleted < 0:
            raise ValueError("line counts must be non-negative")
        if len(self.modified_line_indices) > self.lines_added + self.lines_deleted:
            raise ValueError("more modified line indices than changed lines")


@dataclass(frozen=True)
class CommitRecord:
    """One commit: identity, author, time, message, and per-file changes."""

    commit_id: str
    author_id: str
    timestamp: int
    message: str
    changes: tuple[FileChange, ...]


@dataclass(frozen=True)
class RepositorySummary:
    """A repository's commit stream plus the counts the selection criteria need."""

    repo_id: str
    total_files: int
    iac_files: int
    commit_months: tuple[tuple[int, int, int], ...]
    commits: tuple[CommitRecord, ...]


@dataclass(frozen=True)
class CriteriaVerdict:
    """Per-criterion outcome of the repository selection rules."""

    criterion_1: bool
    criterion_2: bool
    criterion_3: bool
    iac_ratio: float
    zero_denominator: bool
    median_monthly_commits: float

    @property
    def final(self) -> bool:
        return self.criterion_1 and self.criterion_2 and self.criterion_3


def is_iac_script(path: str, extensions: Iterable[str] = DEFAULT_IAC_EXTENSIONS) -> bool:
    """True iff the path's terminal extension is in the configured IaC set."""
    return Path(path).suffix in set(extensions)


def normalize_author(raw: str, alias_map: Mapping[str, str] | None = None) -> str:
    """Lowercase the identity and apply the optional alias map."""
    ident = raw.strip().lower()
    if alias_map:
        ident = alias_map.get(ident, ident)
    return ident


def _commit_months(commits: Sequence[CommitRecord]) -> tuple[tuple[int, int, int], ...]:
    """Monthly commit counts covering first through last commit inclusive."""
    if not commits:
        return ()
    stamps = sorted(c.timestamp for c in commits)
    first = datetime.fromtimestamp(stamps[0], tz=timezone.utc)
    last = datetime.fromtimestamp(stamps[-1], tz=timezone.utc)
    counts: dict[tuple[int, int], int] = {}
    year, month = first.year, first.month
    while (year, month) <= (last.year, last.month):
        counts[(year, month)] = 0
        month += 1
        if month == 13:
            year, month = year + 1, 1
    for commit in commits:
        dt = datetime.fromtimestamp(commit.timestamp, tz=timezone.utc)
        counts[(dt.year, dt.month)] += 1
    return tuple((y, m, n) for (y, m), n in sorted(counts.items()))


def summarize(
    repo_id: str,
    commits: Sequence[CommitRecord],
    iac_extensions: Iterable[str] = DEFAULT_IAC_EXTENSIONS,
) -> RepositorySummary:
    """Assemble a RepositorySummary from an already-parsed commit stream."""
    paths = {fc.path for c in commits for fc in c.changes}
    iac = {p for p in paths if is_iac_script(p, iac_extensions)}
    return RepositorySummary(
        repo_id=repo_id,
        total_files=len(paths),
        iac_files=len(iac),
        commit_months=_commit_months(commits),
        commits=tuple(commits),
    )


def apply_selection_criteria(
    summary: RepositorySummary,
    min_iac_ratio: float = 0.11,
    min_monthly_commits: float = 2.0,
) -> CriteriaVerdict:
    """Evaluate the three repository selection criteria.

    Criterion-1 is readability (always true once a summary exists),
    Criterion-2 the IaC file ratio, Criterion-3 the median monthly commit
    count over the active span.
    """
    zero_denominator = summary.total_files == 0
    ratio = 0.0 if zero_denominator else summary.iac_files / summary.total_files
    c2 = (not zero_denominator) and ratio >= min_iac_ratio
    monthly = [n for _, _, n in summary.commit_months]
    med = float(median(monthly)) if monthly else 0.0
    c3 = bool(monthly) and med >= min_monthly_commits
    return CriteriaVerdict(
        criterion_1=True,
        criterion_2=c2,
        criterion_3=c3,
        iac_ratio=ratio,
        zero_denominator=zero_denominator,
        median_monthly_commits=med,
    )


# ---------------------------------------------------------------------------
# JSON-Lines log export
# ---------------------------------------------------------------------------


def commit_to_export_obj(commit: CommitRecord) -> dict:
    return {
        "id": commit.commit_id,
        "author": commit.author_id,
        "ts": commit.timestamp,
        "msg": commit.message,
        "changes": [
            {
                "path": fc.path,
                "add": fc.lines_added,
                "del": fc.lines_deleted,
                "lines": sorted(fc.modified_line_indices),
            }
            for fc in commit.changes
        ],
    }


def serialize_log_export(commits: Iterable[CommitRecord]) -> str:
    """Render the canonical JSONL export: one commit per LF-terminated line."""
    lines = [
        json.dumps(commit_to_export_obj(c), ensure_ascii=False, separators=(",", ":"))
        for c in commits
    ]
    return "".join(line + "\n" for line in lines)


def write_log_export(commits: Iterable[CommitRecord], path: str | Path) -> None:
    Path(path).write_text(serialize_log_export(commits), encoding="utf-8")


def _parse_export_obj(obj: dict, line_number: int, alias_map: Mapping[str, str] | None) -> CommitRecord:
    try:
        changes = tuple(
            FileChange(
                path=ch["path"],
                lines_added=int(ch["add"]),
                lines_deleted=int(ch["del"]),
                modified_line_indices=frozenset(int(i) for i in ch["lines"]),
            )
            for ch in obj["changes"]
        )
        return CommitRecord(
            commit_id=str(obj["id"]),
            author_id=normalize_author(str(obj["author"]), alias_map),
            timestamp=int(obj["ts"]),
            message=str(obj["msg"]),
            changes=changes,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise LogParseError(f"bad commit object: {exc}", line_number) from exc


def parse_log_export(lines: Iterable[str], alias_map: Mapping[str, str] | None = None) -> list[CommitRecord]:
    """Parse JSONL export lines; malformed lines raise with their line number."""
    commits = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LogParseError(f"invalid JSON: {exc.msg}", lineno) from exc
        commit = _parse_export_obj(obj, lineno, alias_map)
        if commit.commit_id in seen:
            raise LogParseError(f"duplicate commit id {commit.commit_id}", lineno)
        seen.add(commit.commit_id)
        commits.append(commit)
    return commits


def read_log_export(path: str | Path, alias_map: Mapping[str, str] | None = None) -> list[CommitRecord]:
    """Parse a JSONL log export file."""
    source = Path(path)
    if not source.is_file():
        raise IngestError(f"log export not readable: {source}")
    with source.open(encoding="utf-8") as handle:
        return parse_log_export(handle, alias_map)


# ---------------------------------------------------------------------------
# Live git repository
# ---------------------------------------------------------------------------

_COMMIT_MARK = "\x01commit\x01"
_HUNK_RE = re.compile(r"^@@ -\d+(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


def _run_git(repo: Path, args: list[str]) -> str:
    if shutil.which("git") is None:
        raise IngestError("git executable not on PATH; use the jsonl format instead")
    proc = subprocess.run(
        ["git", "-C", str(repo), *args],
        capture_output=True,
        text=True,
        encoding="utf-8",
        errors="replace",
    )
    if proc.returncode != 0:
        raise IngestError(f"git {' '.join(args[:2])} failed: {proc.stderr.strip()}")
    return proc.stdout


def read_git_repository(path: str | Path, alias_map: Mapping[str, str] | None = None) -> list[CommitRecord]:
    """Extract the first-parent commit stream of a local git repository.

    Hunks are taken from zero-context unified diffs; added line ranges become
    the post-image modified indices. Merge commits are traversed first-parent
    and contribute changes only when their first-parent diff is non-empty.
    """
    repo = Path(path)
    if not repo.is_dir():
        raise IngestError(f"repository not readable: {repo}")
    fmt = f"{_COMMIT_MARK}%H\x02%ae\x02%at\x02%B\x03"
    try:
        out = _run_git(
            repo,
            ["log", "--first-parent", "--reverse", "--no-renames", "-p", "-U0",
             f"--pretty=format:{fmt}"],
        )
    except IngestError as exc:
        if "does not have any commits" in str(exc):
            return []
        raise
    commits: list[CommitRecord] = []
    for block in out.split(_COMMIT_MARK):
        if not block.strip():
            continue
        header, _, patch = block.partition("\x03")
        commit_id, author, ts, message = header.split("\x02", 3)
        changes = _parse_patch(patch)
        commits.append(
            CommitRecord(
                commit_id=commit_id,
                author_id=normalize_author(author, alias_map),
                timestamp=int(ts),
                message=message.strip("\n"),
                changes=changes,
            )
        )
    return commits


def _parse_patch(patch: str) -> tuple[FileChange, ...]:
    changes: list[FileChange] = []
    current: str | None = None
    pre_path: str | None = None
    added = deleted = 0
    indices: set[int] = set()

    def flush():
        nonlocal current, added, deleted, indices
        if current is not None:
            changes.append(FileChange(current, added, deleted, frozenset(indices)))
        current, added, deleted, indices = None, 0, 0, set()

    for line in patch.splitlines():
        if line.startswith("diff --git "):
            flush()
            pre_path = None
            continue
        if line.startswith("--- "):
            source = line[4:].strip()
            pre_path = None if source == "/dev/null" else source.removeprefix("a/")
            continue
        if line.startswith("+++ "):
            target = line[4:].strip()
            # a deleted file keeps its pre-image path so churn is not lost
            current = pre_path if target == "/dev/null" else target.removeprefix("b/")
            continue
        match = _HUNK_RE.match(line)
        if match and current is not None:
            new_start = int(match.group(2))
            new_count = int(match.group(3)) if match.group(3) is not None else 1
            indices.update(range(new_start, new_start + new_count))
            continue
        if current is not None:
            if line.startswith("+") and not line.startswith("+++"):
                added += 1
            elif line.startswith("-") and not line.startswith("---"):
                deleted += 1
    flush()
    return tuple(changes)


def ingest_repository(
    source: str | Path,
    fmt: str = "jsonl",
    iac_extensions: Iterable[str] = DEFAULT_IAC_EXTENSIONS,
    alias_map: Mapping[str, str] | None = None,
    repo_id: str | None = None,
) -> RepositorySummary:
    """Read a repository path or log-export file into a RepositorySummary."""
    src = Path(source)
    if fmt == "jsonl":
        commits = read_log_export(src, alias_map)
    elif fmt == "git":
        commits = read_git_repository(src, alias_map)
    else:
        raise IngestError(f"unknown ingest format: {fmt}")
    return summarize(repo_id or src.stem, commits, iac_extensions)


def load_alias_map(path: str | Path) -> dict[str, str]:
    """Read a JSON object mapping alias identity -> canonical identity."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestError(f"alias map not readable: {exc}") from exc
    if not isinstance(raw, dict):
        raise IngestError("alias map must be a JSON object")
    return {str(k).strip().lower(): str(v).strip().lower() for k, v in raw.items()}
