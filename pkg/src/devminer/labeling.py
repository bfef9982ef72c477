"""Extended commit messages, defect labels, and rater agreement."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from devminer.errors import DanglingCommitError, LabelConflictError, LabelImportError
from devminer.ingest import CommitRecord

DEFAULT_KEYWORDS = (
    "bug", "fix", "fixes", "fixed", "defect", "error", "fail", "failure",
    "crash", "wrong", "incorrect", "fault", "patch", "revert",
)

# issue-id patterns: "#123", JIRA-style "ABC-123", and "bug 123" variants
_ISSUE_PATTERNS = (
    re.compile(r"#(\d+)"),
    re.compile(r"\b([A-Z][A-Z0-9]*-\d+)\b"),
    re.compile(r"\bbug[ :#]*(\d+)", re.IGNORECASE),
)


@dataclass(frozen=True)
class ExtendedCommitMessage:
    """Commit message concatenated with any resolvable issue summaries."""

    commit_id: str
    text: str
    issue_ids: tuple[str, ...]


@dataclass(frozen=True)
class DefectLabel:
    """Defect verdict for one commit, with its provenance."""

    commit_id: str
    is_defect_related: bool
    source: str  # "heuristic" | "imported"
    matched_keywords: tuple[str, ...] = ()
    rater_votes: Mapping[str, bool] | None = None

    def __post_init__(self):
        if self.source not in ("heuristic", "imported"):
            raise ValueError(f"unknown label source: {self.source}")


@dataclass(frozen=True)
class ScriptClass:
    script_path: str
    is_defective: bool


@dataclass
class KeywordRuleset:
    """Word-boundary keyword rules with optional negation phrases.

    A negation phrase is removed from the text before matching, so keywords
    inside it cannot trigger (e.g. "fix typo in comment").
    """

    keywords: tuple[str, ...] = DEFAULT_KEYWORDS
    negations: tuple[str, ...] = ()
    _compiled: list[tuple[str, re.Pattern]] = field(init=False, repr=False)

    def __post_init__(self):
        if not self.keywords:
            raise ValueError("ruleset must contain at least one keyword")
        self._compiled = [
            (kw, re.compile(rf"\b{re.escape(kw)}\b", re.IGNORECASE))
            for kw in self.keywords
        ]

    def matches(self, text: str) -> tuple[str, ...]:
        cleaned = text
        for phrase in self.negations:
            cleaned = re.sub(re.escape(phrase), " ", cleaned, flags=re.IGNORECASE)
        return tuple(kw for kw, pat in self._compiled if pat.search(cleaned))


def extract_issue_ids(message: str) -> tuple[str, ...]:
    """All issue identifiers found by the configured patterns, in match order."""
    found: list[str] = []
    for pattern in _ISSUE_PATTERNS:
        for match in pattern.finditer(message):
            ident = match.group(1)
            if ident not in found:
                found.append(ident)
    return tuple(found)


def build_ecm(commit: CommitRecord, issue_store: Mapping[str, str] | None = None) -> ExtendedCommitMessage:
    """Append each resolvable issue's summary to the commit message.

    Unresolvable ids stay listed in ``issue_ids`` with no text change.
    """
    store = issue_store or {}
    ids = extract_issue_ids(commit.message)
    parts = [commit.message]
    for ident in ids:
        summary = store.get(ident)
        if summary:
            parts.append(summary)
    return ExtendedCommitMessage(commit_id=commit.commit_id, text="\n".join(parts), issue_ids=ids)


def classify_ecm(ecm: ExtendedCommitMessage, ruleset: KeywordRuleset | None = None) -> DefectLabel:
    """Heuristic defect classification of one extended commit message."""
    rules = ruleset or KeywordRuleset()
    matched = rules.matches(ecm.text)
    return DefectLabel(
        commit_id=ecm.commit_id,
        is_defect_related=bool(matched),
        source="heuristic",
        matched_keywords=matched,
    )


_VOTE_VALUES = {"yes": True, "no": False}


def import_labels(path: str | Path) -> list[DefectLabel]:
    """Read human-rated labels from CSV (commit_id, rater_1, rater_2, resolver).

    Rater disagreement requires a resolver vote; conflicting duplicate rows
    for one commit are rejected.
    """
    source = Path(path)
    labels: dict[str, DefectLabel] = {}
    with source.open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        fields = reader.fieldnames or []
        required = {"commit_id", "rater_1", "rater_2"}
        if not required.issubset(fields):
            raise LabelImportError(f"header must contain {sorted(required)}", 1)
        has_resolver = "resolver" in fields
        for rowno, row in enumerate(reader, start=2):
            commit_id = (row.get("commit_id") or "").strip()
            if not commit_id:
                raise LabelImportError("empty commit_id", rowno)
            votes = {}
            for col in ("rater_1", "rater_2"):
                value = (row.get(col) or "").strip().lower()
                if value not in _VOTE_VALUES:
                    raise LabelImportError(f"{col} must be yes/no, got {value!r}", rowno)
                votes[col] = _VOTE_VALUES[value]
            if votes["rater_1"] == votes["rater_2"]:
                verdict = votes["rater_1"]
            else:
                resolver = (row.get("resolver") or "").strip().lower() if has_resolver else ""
                if resolver not in _VOTE_VALUES:
                    raise LabelImportError(
                        "raters disagree and no resolver verdict is present", rowno
                    )
                verdict = _VOTE_VALUES[resolver]
                votes["resolver"] = verdict
            label = DefectLabel(
                commit_id=commit_id,
                is_defect_related=verdict,
                source="imported",
                rater_votes=votes,
            )
            previous = labels.get(commit_id)
            if previous is not None and previous.is_defect_related != verdict:
                raise LabelConflictError(
                    f"conflicting duplicate rows for commit {commit_id}"
                )
            labels[commit_id] = label
    return list(labels.values())


def cohens_kappa(ratings_a: Sequence[bool], ratings_b: Sequence[bool]) -> float:
    """Two-category Cohen's kappa; 1.0 when both observed and expected agreement are perfect."""
    if len(ratings_a) != len(ratings_b):
        raise ValueError("rating vectors must have equal length")
    n = len(ratings_a)
    if n == 0:
        raise ValueError("rating vectors must be non-empty")
    observed = sum(a == b for a, b in zip(ratings_a, ratings_b)) / n
    pa = sum(ratings_a) / n
    pb = sum(ratings_b) / n
    expected = pa * pb + (1 - pa) * (1 - pb)
    if expected == 1.0:
        return 1.0 if observed == 1.0 else 0.0
    return (observed - expected) / (1 - expected)


def label_scripts(
    labels: Iterable[DefectLabel],
    commits: Sequence[CommitRecord],
    scripts: Iterable[str] | None = None,
) -> list[ScriptClass]:
    """Mark a script defective iff any defect-related commit touches it.

    ``scripts`` restricts the result (e.g. to IaC paths); default is every
    path touched by at least one commit.
    """
    by_id = {c.commit_id: c for c in commits}
    defect_ids = set()
    for label in labels:
        if label.commit_id not in by_id:
            raise DanglingCommitError(f"label references unknown commit {label.commit_id}")
        if label.is_defect_related:
            defect_ids.add(label.commit_id)
    touched: dict[str, bool] = {}
    for commit in commits:
        is_defect = commit.commit_id in defect_ids
        for change in commit.changes:
            touched[change.path] = touched.get(change.path, False) or is_defect
    universe = set(scripts) if scripts is not None else set(touched)
    return [
        ScriptClass(script_path=p, is_defective=touched.get(p, False))
        for p in sorted(universe & set(touched))
    ]


def load_issue_store(path: str | Path) -> dict[str, str]:
    """Read the file-backed issue store: JSON object id -> summary."""
    import json

    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise LabelImportError("issue store must be a JSON object", 1)
    return {str(k): str(v) for k, v in raw.items()}


def write_labels_jsonl(labels: Iterable[DefectLabel], path: str | Path) -> None:
    import json

    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        for label in labels:
            obj = {
                "commit_id": label.commit_id,
                "defect": label.is_defect_related,
                "source": label.source,
                "keywords": list(label.matched_keywords),
            }
            if label.rater_votes is not None:
                obj["rater_votes"] = dict(label.rater_votes)
            handle.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")) + "\n")


def read_labels_jsonl(path: str | Path) -> list[DefectLabel]:
    import json

    labels: list[DefectLabel] = []
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            obj = json.loads(line)
            labels.append(
                DefectLabel(
                    commit_id=obj["commit_id"],
                    is_defect_related=obj["defect"],
                    source=obj["source"],
                    matched_keywords=tuple(obj.get("keywords", ())),
                    rater_votes=obj.get("rater_votes"),
                )
            )
    return labels


def load_ruleset(path: str | Path) -> KeywordRuleset:
    """Read a ruleset file: JSON object with "keywords" and optional "negations"."""
    import json

    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(raw, list):
        return KeywordRuleset(keywords=tuple(raw))
    return KeywordRuleset(
        keywords=tuple(raw.get("keywords", DEFAULT_KEYWORDS)),
        negations=tuple(raw.get("negations", ())),
    )
